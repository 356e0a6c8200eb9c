#pragma once

#include <optional>
#include <stdexcept>

namespace lcs {

/// Critical / standard / maximum trust ranks.
struct TrustLadder {
    int tr_c = 2;
    int tr_s = 3;
    int tr_m = 5;

    bool valid() const { return tr_c >= 0 && tr_c < tr_s && tr_s < tr_m; }
    bool contains(int trust) const { return trust >= tr_c && trust <= tr_m; }
};

enum class EntityClass { normal_edge, normal_circle, rebel, square };

/// Initial trust for a newly created entity.
///
/// Normal edges and circles start halfway between the critical and standard
/// ranks (rounded half-up), squares at the standard rank and rebels one above
/// it since they are harder to re-acquire.
inline int trust_init(EntityClass cls, const TrustLadder& ladder)
{
    if (!ladder.valid()) throw std::invalid_argument("trust ladder must satisfy 0 <= tr_c < tr_s < tr_m");
    switch (cls) {
    case EntityClass::normal_edge:
    case EntityClass::normal_circle:
        // floor((c + s + 1) / 2) == round-half-up of (c + s) / 2 for non-negative ints
        return (ladder.tr_c + ladder.tr_s + 1) / 2;
    case EntityClass::square:
        return ladder.tr_s;
    case EntityClass::rebel:
        return ladder.tr_s + 1;
    }
    return ladder.tr_s;
}

/// Applies a +1/-1 classification outcome. Returns nullopt when the entity
/// falls below the critical rank and must be pruned.
inline std::optional<int> trust_commit(int trust, int delta, const TrustLadder& ladder)
{
    int next = trust + delta;
    if (next > ladder.tr_m) next = ladder.tr_m;
    if (next < ladder.tr_c) return std::nullopt;
    return next;
}

}  // namespace lcs
