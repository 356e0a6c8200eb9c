#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "lcs/types.hpp"

namespace lcs::line {

struct IgnoranceResult {
    std::vector<PixelPoint> kept;
    std::size_t dropped_count = 0;
};

/// Drops every edge that falls inside any active ignorance region (boundary inclusive).
inline IgnoranceResult apply_ignorance(std::span<const PixelPoint> raw_edges, std::span<const IgnoranceRegion> psi)
{
    IgnoranceResult out;
    out.kept.reserve(raw_edges.size());
    for (const auto& p : raw_edges) {
        const bool inside = std::any_of(psi.begin(), psi.end(), [&](const IgnoranceRegion& r) { return r.contains(p); });
        if (inside)
            ++out.dropped_count;
        else
            out.kept.push_back(p);
    }
    return out;
}

struct Grouping {
    std::vector<GroupedEdge> chi;
    std::vector<Collector> collectors;
    /// Collector index each input edge was assigned to.
    std::vector<std::size_t> assignment;
};

/// Greedy single pass in input order. An edge joins the earliest-created
/// collector whose current centre is closer than mu_0 (running centroid
/// update), otherwise it seeds a new collector.
inline Grouping group_edges(std::span<const PixelPoint> kept, double mu_0)
{
    Grouping g;
    g.assignment.reserve(kept.size());
    std::vector<PixelPoint> sums;

    if (!(mu_0 > 0.0)) {
        for (const auto& p : kept) {
            g.assignment.push_back(g.collectors.size());
            g.collectors.push_back({p, mu_0, 1});
        }
    } else {
        using CellKey = std::uint64_t;
        auto cell_of = [mu_0](PixelPoint p) {
            return std::pair{static_cast<std::int64_t>(std::floor(p.x / mu_0)),
                             static_cast<std::int64_t>(std::floor(p.y / mu_0))};
        };
        auto pack = [](std::int64_t cx, std::int64_t cy) -> CellKey {
            return (static_cast<CellKey>(static_cast<std::uint32_t>(cx)) << 32) | static_cast<std::uint32_t>(cy);
        };
        std::unordered_map<CellKey, std::vector<std::size_t>> grid;
        std::vector<CellKey> home;

        for (const auto& p : kept) {
            const auto [cx, cy] = cell_of(p);
            std::size_t best = g.collectors.size();
            for (std::int64_t dx = -1; dx <= 1; ++dx) {
                for (std::int64_t dy = -1; dy <= 1; ++dy) {
                    const auto it = grid.find(pack(cx + dx, cy + dy));
                    if (it == grid.end()) continue;
                    for (std::size_t c : it->second)
                        if (c < best && distance(g.collectors[c].center, p) < mu_0) best = c;
                }
            }
            if (best == g.collectors.size()) {
                g.collectors.push_back({p, mu_0, 1});
                sums.push_back(p);
                home.push_back(pack(cx, cy));
                grid[home.back()].push_back(best);
            } else {
                auto& col = g.collectors[best];
                sums[best] = sums[best] + p;
                col.count += 1;
                col.center = (1.0 / col.count) * sums[best];
                const auto [nx, ny] = cell_of(col.center);
                const CellKey nk = pack(nx, ny);
                if (nk != home[best]) {
                    auto& bucket = grid[home[best]];
                    bucket.erase(std::find(bucket.begin(), bucket.end(), best));
                    grid[nk].push_back(best);
                    home[best] = nk;
                }
            }
            g.assignment.push_back(best);
        }
    }

    g.chi.reserve(g.collectors.size());
    for (const auto& c : g.collectors) g.chi.push_back({c.center, c.count});
    return g;
}

}  // namespace lcs::line
