#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "lcs/circle_expert.hpp"
#include "lcs/config.hpp"
#include "lcs/kinematics.hpp"
#include "lcs/line_expert.hpp"
#include "lcs/spatial_index.hpp"
#include "lcs/square_expert.hpp"
#include "lcs/trust.hpp"
#include "lcs/types.hpp"

namespace lcs {

class SequencingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Candidate counts per filter parameter matrix.
struct DimensionalityReport {
    std::size_t chi = 0;
    std::size_t e_n = 0;
    std::size_t e_r = 0;
    std::size_t c_n = 0;
    std::size_t c_r = 0;
    std::size_t s = 0;
    std::size_t psi = 0;
    std::size_t alpha = 0;

    std::size_t total() const { return chi + e_n + e_r + c_n + c_r + s + psi + alpha; }
    friend bool operator==(const DimensionalityReport&, const DimensionalityReport&) = default;
};

inline DimensionalityReport dimensionality(const FilterState& s)
{
    return {s.chi.size(),          s.normal_edges.size(), s.rebel_edges.size(), s.normal_circles.size(),
            s.rebel_circles.size(), s.squares.size(),      s.psi.size(),         s.alpha.size()};
}

struct Frame {
    std::int64_t index = 0;
    std::vector<PixelPoint> edges;
};

struct StepStats {
    /// Comparisons made by the circle expert's association and grouping loops.
    std::uint64_t circle_comparisons = 0;
    std::size_t dropped_by_psi = 0;
    std::size_t new_rebels = 0;
    std::size_t rebel_candidates = 0;
    std::size_t predicted_edges = 0;
    std::size_t frozen_edges = 0;
    std::size_t matched_edges = 0;
    /// Observations per classification outcome, indexed by XiClass.
    std::array<std::size_t, 6> xi_counts{};
};

struct StepOutput {
    FilterState state;
    DimensionalityReport report;
    StepStats stats;
};

namespace detail {

inline bool inside_any(PixelPoint p, std::span<const IgnoranceRegion> regions)
{
    return std::any_of(regions.begin(), regions.end(), [&](const IgnoranceRegion& r) { return r.contains(p); });
}

/// Greedy one-to-one assignment over candidate pairs, closest first; ties by
/// prediction then observation index.
struct Pair {
    double d2 = 0.0;
    std::size_t pred = 0;
    std::size_t obs = 0;
};

inline void assign_pairs(std::vector<Pair>& pairs, std::vector<std::optional<std::size_t>>& pred_match,
                         std::vector<bool>& consumed, OpCounter& counter)
{
    std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
        ++counter.comparisons;
        return std::tie(a.d2, a.pred, a.obs) < std::tie(b.d2, b.pred, b.obs);
    });
    for (const auto& p : pairs) {
        if (pred_match[p.pred] || consumed[p.obs]) continue;
        pred_match[p.pred] = p.obs;
        consumed[p.obs] = true;
    }
}

inline Circle predict_circle(const Circle& c, const ImuSample& imu, const FilterConfig& config)
{
    Circle out = c;
    const CameraModel& cam = config.camera;
    const PixelPoint dir =
        c.kind == CircleKind::normal ? unit(c.loc - cam.principal) : direction_deg(c.beta);
    out.loc = rotate_absolute(c.loc, cam, imu.omega, config.use_verbatim_eq1) +
              (config.px_per_cm * c.vel * imu.t_f) * dir;
    if (c.kind == CircleKind::rebel) out.origin = rotate_absolute(c.origin, cam, imu.omega, config.use_verbatim_eq1);
    return out;
}

struct MeanCircle {
    Circle circle;
    std::vector<PixelPoint> member_locs;
};

/// Greedy seeded grouping: each unassigned edge (ascending) seeds a mean circle
/// from the still-unassigned edges that satisfy the membership condition.
template <typename Edge, typename Member, typename Build>
std::vector<MeanCircle> group_circles(std::span<const Edge> edges, const FilterConfig& config, Member&& member,
                                      Build&& build, OpCounter& counter)
{
    std::vector<PixelPoint> locs;
    locs.reserve(edges.size());
    for (const auto& e : edges) locs.push_back(e.loc);
    const CellIndex index(locs, config.circle_reach, &counter);
    std::vector<bool> assigned(edges.size(), false);
    std::vector<MeanCircle> out;
    for (std::size_t seed = 0; seed < edges.size(); ++seed) {
        if (assigned[seed]) continue;
        std::vector<Edge> members{edges[seed]};
        assigned[seed] = true;
        for (std::size_t i : index.within(edges[seed].loc, config.circle_reach)) {
            if (assigned[i]) continue;
            ++counter.comparisons;
            if (member(edges[seed], edges[i])) {
                members.push_back(edges[i]);
                assigned[i] = true;
            }
        }
        MeanCircle m{build(members), {}};
        for (const auto& e : members) m.member_locs.push_back(e.loc);
        out.push_back(std::move(m));
    }
    return out;
}

/// Associates predicted circles with mean circles by best overlap (>= rho_c),
/// estimates matched ones and spawns new circles from the rest.
template <typename Gate>
std::vector<Circle> track_circles(std::span<const Circle> predicted, std::vector<MeanCircle> means,
                                  const FilterConfig& config, EntityId& next_id, Gate&& gate, OpCounter& counter)
{
    using circle::estimate_trusted;
    const TrustLadder& ladder = config.circle_trust;
    std::vector<PixelPoint> centers;
    double max_radius = 0.0;
    for (const auto& m : means) {
        centers.push_back(m.circle.loc);
        max_radius = std::max(max_radius, m.circle.radius);
    }
    const CellIndex index(centers, std::max(config.circle_reach, 1.0), &counter);
    std::vector<bool> taken(means.size(), false);
    std::vector<Circle> out;

    for (const auto& p : predicted) {
        std::optional<std::size_t> best;
        double best_overlap = -1.0;
        for (std::size_t m : index.within(p.loc, p.radius + max_radius)) {
            if (taken[m]) continue;
            ++counter.comparisons;
            const double overlap = circle::circle_overlap_percentage(means[m].member_locs, p);
            if (overlap >= config.rho_c && overlap > best_overlap) {
                best_overlap = overlap;
                best = m;
            }
        }
        int delta = -1;
        Circle next = p;
        if (best) {
            taken[*best] = true;
            const MeanCircle& mean = means[*best];
            if (gate(p, mean)) delta = 1;
            next.loc = estimate_trusted(p.loc, mean.circle.loc, p.trust, ladder.tr_c);
            next.radius = estimate_trusted(p.radius, mean.circle.radius, p.trust, ladder.tr_c);
            next.vel = estimate_trusted(p.vel, mean.circle.vel, p.trust, ladder.tr_c);
            next.beta = circle::estimate_trusted_angle(p.beta, mean.circle.beta, p.trust, ladder.tr_c);
            if (p.kind == CircleKind::rebel)
                next.origin = estimate_trusted(p.origin, mean.circle.origin, p.trust, ladder.tr_c);
            next.members = mean.circle.members;
        }
        if (const auto t = trust_commit(p.trust, delta, ladder)) {
            next.trust = *t;
            out.push_back(std::move(next));
        }
    }
    for (std::size_t m = 0; m < means.size(); ++m) {
        if (taken[m]) continue;
        Circle c = std::move(means[m].circle);
        c.id = next_id++;
        c.trust = trust_init(EntityClass::normal_circle, ladder);
        out.push_back(std::move(c));
    }
    return out;
}

inline IgnoranceRegion region_from(const Circle& c, int lifetime)
{
    return {c.loc, RegionType::circular, {c.radius, c.radius}, lifetime};
}

inline IgnoranceRegion region_from(const Square& s, int lifetime)
{
    return {s.loc, RegionType::rectangular, s.radii, lifetime};
}

/// Square expert grouping loop over all circles (normal then rebel).
inline std::vector<Square> collect_mean_squares(std::span<const Circle> circles, const FilterConfig& config)
{
    using namespace square;
    const std::size_t n = circles.size();
    std::vector<bool> used(n, false);
    std::vector<Square> means;
    const double d_t0 = config.camera.diagonal();

    for (std::size_t a = 0; a < n; ++a) {
        if (used[a]) continue;
        const Circle& ca = circles[a];
        double d_t = d_t0;
        std::optional<std::size_t> couple;
        for (;;) {
            std::optional<std::size_t> best;
            double best_d = -1.0;
            for (std::size_t b = 0; b < n; ++b) {
                if (b == a || used[b] || !match_couple_case1(ca, circles[b], d_t, config)) continue;
                const double d = distance(ca.loc, circles[b].loc);
                if (d > best_d) {
                    best_d = d;
                    best = b;
                }
            }
            if (!best) break;
            bool shrunk = false;
            for (std::size_t bp = 0; bp < n; ++bp) {
                if (bp == a || bp == *best || used[bp]) continue;
                if (const auto next = shrink_dt(ca, circles[*best], circles[bp], d_t)) {
                    d_t = *next;
                    shrunk = true;
                }
            }
            if (!shrunk || best_d < d_t) {
                couple = best;
                break;
            }
        }

        std::vector<std::size_t> group;
        if (couple) group.push_back(*couple);
        for (std::size_t b = 0; b < n; ++b) {
            if (b == a || used[b] || (couple && b == *couple)) continue;
            if (match_case2(ca, circles[b], config) && distance(ca.loc, circles[b].loc) < d_t) group.push_back(b);
        }
        if (group.empty()) continue;

        auto build = [&] {
            std::vector<Circle> members;
            for (std::size_t b : group) members.push_back(circles[b]);
            return build_mean_square(ca, members, config.mu_0);
        };
        Square mean = build();
        bool grew = false;
        for (std::size_t c = 0; c < n; ++c) {
            if (c == a || used[c] || std::find(group.begin(), group.end(), c) != group.end()) continue;
            if (include_minor_circle(mean, circles[c], config)) {
                group.push_back(c);
                grew = true;
            }
        }
        if (grew) mean = build();
        used[a] = true;
        for (std::size_t b : group) used[b] = true;
        means.push_back(mean);
    }
    return means;
}

}  // namespace detail

/// Advances the filter by one frame: ignorance and grouping (Line), edge
/// classification/estimation, rebel alignment and circling (Circle), layer
/// construction and tracking (Square), then ignorance emission.
inline StepOutput step(const FilterState& prev, const Frame& frame, const ImuSample& imu, const FilterConfig& config)
{
    using namespace detail;
    if (frame.index <= prev.frame_index)
        throw SequencingError("frame " + std::to_string(frame.index) + " does not follow frame " +
                              std::to_string(prev.frame_index));
    if (!(imu.t_f > 0.0)) throw std::invalid_argument("imu t_f must be > 0");

    const CameraModel& cam = config.camera;
    const TrustLadder& ct = config.circle_trust;
    const bool verbatim = config.use_verbatim_eq1;
    OpCounter counter;
    StepStats stats;

    FilterState s;
    s.frame_index = frame.index;
    s.next_id = prev.next_id;
    s.last_v_v = imu.v_v;
    const double dv = prev.last_v_v ? imu.v_v - *prev.last_v_v : 0.0;

    // Line expert: ignorance then grouping.
    std::vector<IgnoranceRegion> active;
    for (const auto& r : prev.psi)
        if (r.remaining_frames > 0) active.push_back(r);
    auto ignored = line::apply_ignorance(frame.edges, active);
    stats.dropped_by_psi = ignored.dropped_count;
    auto grouping = line::group_edges(ignored.kept, config.mu_0);
    s.chi = std::move(grouping.chi);
    s.collectors = std::move(grouping.collectors);
    for (auto r : active) {
        if (--r.remaining_frames > 0) s.psi.push_back(r);
    }

    // Circle expert, edge part: predictions.
    std::vector<NormalEdge> pred_n;
    std::vector<bool> frozen_n;
    for (const auto& e : prev.normal_edges) {
        NormalEdge p = predict_normal_edge(e, imu, cam, config.px_per_cm, verbatim);
        if (!cam.contains(p.loc)) continue;
        frozen_n.push_back(inside_any(p.loc, active));
        pred_n.push_back(p);
    }
    std::vector<RebelEdge> pred_r;
    std::vector<bool> frozen_r;
    for (const auto& e : prev.rebel_edges) {
        RebelEdge p = predict_rebel_edge(e, imu, cam, config.px_per_cm, verbatim);
        if (!cam.contains(p.loc)) continue;
        frozen_r.push_back(inside_any(p.loc, active));
        pred_r.push_back(p);
    }

    std::vector<PixelPoint> obs;
    obs.reserve(s.chi.size());
    for (const auto& g : s.chi) obs.push_back(g.loc);
    std::vector<bool> consumed(obs.size(), false);
    double max_mu = config.mu_0;
    for (const auto& p : pred_n) max_mu = std::max(max_mu, p.mu);
    const CellIndex obs_index(obs, std::max({config.mu_0, config.assoc_reach, 1.0}), &counter);

    // Rebels claim their observations first.
    std::vector<std::optional<std::size_t>> rebel_match(pred_r.size());
    {
        std::vector<Pair> pairs;
        for (std::size_t i = 0; i < pred_r.size(); ++i) {
            if (frozen_r[i]) continue;
            obs_index.for_each_within(pred_r[i].loc, config.mu_0, [&](std::size_t j, double d2) {
                if (circle::matches_rebel(obs[j], pred_r[i], config)) pairs.push_back({d2, i, j});
            });
        }
        assign_pairs(pairs, rebel_match, consumed, counter);
    }
    std::vector<std::optional<std::size_t>> normal_match(pred_n.size());
    {
        std::vector<Pair> pairs;
        for (std::size_t i = 0; i < pred_n.size(); ++i) {
            if (frozen_n[i]) continue;
            obs_index.for_each_within(pred_n[i].loc, pred_n[i].mu, [&](std::size_t j, double d2) {
                if (!consumed[j]) pairs.push_back({d2, i, j});
            });
        }
        assign_pairs(pairs, normal_match, consumed, counter);
    }

    stats.predicted_edges = pred_n.size() + pred_r.size();
    stats.frozen_edges = static_cast<std::size_t>(std::count(frozen_n.begin(), frozen_n.end(), true) +
                                                  std::count(frozen_r.begin(), frozen_r.end(), true));
    stats.matched_edges = static_cast<std::size_t>(std::count(consumed.begin(), consumed.end(), true));
    for (std::size_t i = 0; i < pred_n.size(); ++i) {
        NormalEdge next = pred_n[i];
        int delta = frozen_n[i] ? 0 : -1;
        if (normal_match[i]) {
            const std::size_t j = *normal_match[i];
            const auto xi = circle::classify_edge(obs[j], pred_n[i], config, imu);
            ++stats.xi_counts[static_cast<std::size_t>(xi)];
            delta = xi == circle::XiClass::xi2 ? 1 : -1;
            next = circle::estimate_normal_edge(pred_n[i], obs[j], s.chi[j].count, imu, config);
        }
        if (const auto t = trust_commit(pred_n[i].trust, delta, ct)) {
            next.trust = *t;
            s.normal_edges.push_back(next);
        }
    }
    for (std::size_t i = 0; i < pred_r.size(); ++i) {
        RebelEdge next = pred_r[i];
        int delta = frozen_r[i] ? 0 : -1;
        if (rebel_match[i]) {
            next = circle::estimate_rebel_edge(pred_r[i], obs[*rebel_match[i]], imu, config);
            ++stats.xi_counts[static_cast<std::size_t>(circle::XiClass::xi_r)];
            delta = 1;
        }
        if (const auto t = trust_commit(pred_r[i].trust, delta, ct)) {
            next.trust = *t;
            s.rebel_edges.push_back(next);
        }
    }

    // Leftover observations: classify against the nearest prediction in reach.
    std::vector<PixelPoint> pred_locs;
    for (const auto& p : pred_n) pred_locs.push_back(p.loc);
    const CellIndex pred_index(pred_locs, std::max(config.assoc_reach, 1.0), &counter);
    std::vector<PixelPoint> candidates;
    auto spawn_normal = [&](PixelPoint p) {
        NormalEdge e;
        e.id = s.next_id++;
        e.loc = p;
        e.vel = imu.v_v;
        e.beta = angle_of(p, cam.principal);
        e.mu = config.mu_0;
        e.trust = trust_init(EntityClass::normal_edge, ct);
        s.normal_edges.push_back(e);
    };
    for (std::size_t j = 0; j < obs.size(); ++j) {
        if (consumed[j]) continue;
        std::optional<std::size_t> nearest;
        double nearest_d2 = std::numeric_limits<double>::infinity();
        pred_index.for_each_within(obs[j], config.assoc_reach, [&](std::size_t i, double d2) {
            if (d2 < nearest_d2 || (d2 == nearest_d2 && i < *nearest)) {
                nearest_d2 = d2;
                nearest = i;
            }
        });
        if (!nearest) {
            spawn_normal(obs[j]);
            candidates.push_back(obs[j]);
            continue;
        }
        const auto xi = circle::classify_edge(obs[j], pred_n[*nearest], config, imu);
        ++stats.xi_counts[static_cast<std::size_t>(xi)];
        switch (xi) {
        case circle::XiClass::xi1: spawn_normal(obs[j]); break;
        case circle::XiClass::xi4:
        case circle::XiClass::xi5: candidates.push_back(obs[j]); break;
        default: break;  // inside an already matched prediction's radius: absorbed
        }
    }
    stats.rebel_candidates = candidates.size();

    auto aligned = circle::update_rebel_alignment(prev.alpha, candidates, frame.index, config, imu, &counter);
    s.alpha = std::move(aligned.alpha);
    stats.new_rebels = aligned.new_rebels.size();
    for (auto& r : aligned.new_rebels) {
        r.id = s.next_id++;
        s.rebel_edges.push_back(r);
    }

    // Circle expert, circling part. Edges carried through ignored regions still
    // belong to their layers.
    auto normal_means = group_circles<NormalEdge>(
        s.normal_edges, config,
        [&](const NormalEdge& seed, const NormalEdge& e) { return circle::normal_member(seed, e, config, imu.v_v); },
        [&](const std::vector<NormalEdge>& m) { return circle::circle_from_normal_edges(m, config); }, counter);
    auto rebel_means = group_circles<RebelEdge>(
        s.rebel_edges, config,
        [&](const RebelEdge& seed, const RebelEdge& e) { return circle::rebel_member(seed, e, config, imu.v_v); },
        [&](const std::vector<RebelEdge>& m) { return circle::circle_from_rebel_edges(m, config); }, counter);

    std::vector<Circle> pred_cn;
    for (auto c : prev.normal_circles) {
        c.vel += dv;
        c = predict_circle(c, imu, config);
        if (cam.contains(c.loc)) pred_cn.push_back(c);
    }
    std::vector<Circle> pred_cr;
    for (auto c : prev.rebel_circles) {
        c = predict_circle(c, imu, config);
        if (cam.contains(c.loc)) pred_cr.push_back(c);
    }
    s.normal_circles = track_circles(
        pred_cn, std::move(normal_means), config, s.next_id,
        [&](const Circle& p, const MeanCircle& m) { return circle::match_normal_circle(p, m.circle, m.member_locs, config); },
        counter);
    s.rebel_circles = track_circles(
        pred_cr, std::move(rebel_means), config, s.next_id,
        [&](const Circle& p, const MeanCircle& m) {
            return circle::match_rebel_circle(p, m.circle, m.member_locs, config, imu.v_v);
        },
        counter);
    stats.circle_comparisons = counter.comparisons;

    // Square expert.
    std::vector<Circle> all_circles = s.normal_circles;
    all_circles.insert(all_circles.end(), s.rebel_circles.begin(), s.rebel_circles.end());
    auto means = collect_mean_squares(all_circles, config);
    std::vector<bool> taken(means.size(), false);
    const TrustLadder& st = config.square_trust;
    for (auto sq : prev.squares) {
        sq.vel += dv;
        const Square p = square::predict_square(sq, imu, cam, config.px_per_cm, verbatim);
        if (!cam.contains(p.loc)) continue;
        std::optional<std::size_t> best;
        double best_rho = config.rho_c;
        for (std::size_t m = 0; m < means.size(); ++m) {
            if (taken[m]) continue;
            const auto ov = square::square_overlap_rho(p, means[m]);
            if (!ov.degenerate && ov.rho > best_rho) {
                best_rho = ov.rho;
                best = m;
            }
        }
        if (best && square::match_square(p, means[*best], config, imu.v_v)) {
            taken[*best] = true;
            if (auto next = square::estimate_square(p, means[*best], st, config)) s.squares.push_back(*next);
            continue;
        }
        if (const auto t = trust_commit(p.trust, -1, st)) {
            Square next = p;
            next.trust = *t;
            s.squares.push_back(next);
        }
    }
    for (std::size_t m = 0; m < means.size(); ++m) {
        if (taken[m]) continue;
        Square sq = means[m];
        sq.id = s.next_id++;
        sq.trust = trust_init(EntityClass::square, st);
        s.squares.push_back(sq);
    }

    // Ignorance emission for fully trusted circles and squares.
    for (const auto& c : s.normal_circles)
        if (c.trust >= ct.tr_m) s.psi.push_back(region_from(c, config.psi_lifetime));
    for (const auto& c : s.rebel_circles)
        if (c.trust >= ct.tr_m) s.psi.push_back(region_from(c, config.psi_lifetime));
    for (const auto& sq : s.squares)
        if (sq.trust >= st.tr_m) s.psi.push_back(region_from(sq, config.psi_lifetime));

    StepOutput out{std::move(s), {}, stats};
    out.report = dimensionality(out.state);
    return out;
}

/// Stateful convenience wrapper around step().
class Filter {
public:
    explicit Filter(FilterConfig config) : config_(std::move(config)) { config_.validate(); }

    const StepOutput& process(const Frame& frame, const ImuSample& imu)
    {
        last_ = step(state_, frame, imu, config_);
        state_ = last_.state;
        return last_;
    }

    const FilterState& state() const { return state_; }
    const FilterConfig& config() const { return config_; }

private:
    FilterConfig config_;
    FilterState state_;
    StepOutput last_;
};

enum class BaselineMode { accumulative, last_k };

/// Memory of naive edge collectors: the running total of raw edges, or the
/// sum over the trailing k frames.
inline std::vector<std::size_t> baseline_store(BaselineMode mode, std::span<const std::size_t> raw_counts,
                                               std::size_t k = 1)
{
    if (mode == BaselineMode::last_k && k < 1) throw std::invalid_argument("last_k requires k >= 1");
    std::vector<std::size_t> out;
    out.reserve(raw_counts.size());
    std::size_t sum = 0;
    for (std::size_t i = 0; i < raw_counts.size(); ++i) {
        sum += raw_counts[i];
        if (mode == BaselineMode::last_k && i >= k) sum -= raw_counts[i - k];
        out.push_back(sum);
    }
    return out;
}

}  // namespace lcs
