#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lcs/types.hpp"

namespace lcs {

/// Counts key/distance comparisons made by the association and grouping loops.
struct OpCounter {
    std::uint64_t comparisons = 0;
};

/// Static point set sorted by (cell column, cell row). A radius query binary
/// searches one contiguous run per covered column, so a build is O(n log n)
/// and each query is O(columns * log n + hits).
class CellIndex {
public:
    CellIndex(std::span<const PixelPoint> points, double cell_size, OpCounter* counter = nullptr)
        : points_(points.begin(), points.end()), cell_(cell_size > 0.0 ? cell_size : 1.0), counter_(counter)
    {
        entries_.reserve(points_.size());
        for (std::size_t i = 0; i < points_.size(); ++i) entries_.push_back({key_of(points_[i]), i});
        std::sort(entries_.begin(), entries_.end(), [this](const Entry& a, const Entry& b) {
            tick();
            if (a.key != b.key) return a.key < b.key;
            return a.index < b.index;
        });
    }

    std::size_t size() const { return points_.size(); }
    const PixelPoint& point(std::size_t i) const { return points_[i]; }

    /// Calls fn(index, squared_distance) for every point within `radius` of `c` (inclusive).
    template <typename Fn>
    void for_each_within(PixelPoint c, double radius, Fn&& fn) const
    {
        if (entries_.empty() || !(radius >= 0.0)) return;
        const double r2 = radius * radius;
        const auto cx0 = cell_coord(c.x - radius);
        const auto cx1 = cell_coord(c.x + radius);
        const auto cy0 = cell_coord(c.y - radius);
        const auto cy1 = cell_coord(c.y + radius);
        for (auto cx = cx0; cx <= cx1; ++cx) {
            auto lo = std::lower_bound(entries_.begin(), entries_.end(), Key{cx, cy0}, [this](const Entry& e, const Key& k) {
                tick();
                return e.key < k;
            });
            for (auto it = lo; it != entries_.end() && it->key.col == cx && it->key.row <= cy1; ++it) {
                tick();
                const double d2 = squared_distance(points_[it->index], c);
                if (d2 <= r2) fn(it->index, d2);
            }
        }
    }

    /// Indices of points within `radius`, ascending.
    std::vector<std::size_t> within(PixelPoint c, double radius) const
    {
        std::vector<std::size_t> out;
        for_each_within(c, radius, [&](std::size_t i, double) { out.push_back(i); });
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    struct Key {
        std::int64_t col = 0;
        std::int64_t row = 0;
        friend auto operator<=>(const Key&, const Key&) = default;
    };
    struct Entry {
        Key key;
        std::size_t index = 0;
    };

    std::int64_t cell_coord(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
    Key key_of(PixelPoint p) const { return {cell_coord(p.x), cell_coord(p.y)}; }
    void tick() const
    {
        if (counter_) ++counter_->comparisons;
    }

    std::vector<PixelPoint> points_;
    std::vector<Entry> entries_;
    double cell_;
    OpCounter* counter_;
};

}  // namespace lcs
