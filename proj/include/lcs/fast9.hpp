#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "lcs/types.hpp"

namespace lcs {

/// 8-bit grayscale raster, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill)
    {
        if (w < 0 || h < 0) throw std::invalid_argument("negative image size");
    }

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

namespace fast {

/// Radius-3 Bresenham circle, clockwise from 12 o'clock.
inline constexpr std::array<std::array<int, 2>, 16> kCircle{{{0, -3},
                                                             {1, -3},
                                                             {2, -2},
                                                             {3, -1},
                                                             {3, 0},
                                                             {3, 1},
                                                             {2, 2},
                                                             {1, 3},
                                                             {0, 3},
                                                             {-1, 3},
                                                             {-2, 2},
                                                             {-3, 1},
                                                             {-3, 0},
                                                             {-3, -1},
                                                             {-2, -2},
                                                             {-1, -3}}};

inline constexpr int kArc = 9;
inline constexpr int kBorder = 3;

/// Segment-test score at (x, y): the largest sum of |I_c - I_p| over a
/// contiguous run of at least nine circle pixels that are all brighter than
/// I_p + t or all darker than I_p - t. Zero when there is no such run.
inline int corner_score(const GrayImage& img, int x, int y, int threshold)
{
    const int p = img.at(x, y);
    std::array<int, 16> ring{};
    for (std::size_t i = 0; i < 16; ++i) ring[i] = img.at(x + kCircle[i][0], y + kCircle[i][1]);

    int best = 0;
    for (int sign : {+1, -1}) {
        std::array<bool, 16> pass{};
        int passing = 0;
        for (std::size_t i = 0; i < 16; ++i) {
            pass[i] = sign > 0 ? ring[i] > p + threshold : ring[i] < p - threshold;
            passing += pass[i] ? 1 : 0;
        }
        if (passing < kArc) continue;
        if (passing == 16) {
            int sum = 0;
            for (int v : ring) sum += std::abs(v - p);
            best = std::max(best, sum);
            continue;
        }
        // Walk maximal runs starting right after a failing pixel so wrap-around runs stay whole.
        std::size_t start = 0;
        while (pass[start]) ++start;
        int run = 0;
        int sum = 0;
        for (std::size_t k = 1; k <= 16; ++k) {
            const std::size_t i = (start + k) % 16;
            if (pass[i]) {
                ++run;
                sum += std::abs(ring[i] - p);
            } else {
                if (run >= kArc) best = std::max(best, sum);
                run = 0;
                sum = 0;
            }
        }
    }
    return best;
}

}  // namespace fast

/// FAST-9 corners with 3x3 non-maximum suppression on the score. Equal
/// neighbouring scores keep the first pixel in raster order.
inline std::vector<PixelPoint> detect_fast9(const GrayImage& img, int threshold = 20)
{
    std::vector<PixelPoint> out;
    if (img.width < 2 * fast::kBorder + 1 || img.height < 2 * fast::kBorder + 1) return out;

    std::vector<int> score(img.pixels.size(), 0);
    for (int y = fast::kBorder; y < img.height - fast::kBorder; ++y)
        for (int x = fast::kBorder; x < img.width - fast::kBorder; ++x)
            score[static_cast<std::size_t>(y) * img.width + x] = fast::corner_score(img, x, y, threshold);

    auto at = [&](int x, int y) { return score[static_cast<std::size_t>(y) * img.width + x]; };
    for (int y = fast::kBorder; y < img.height - fast::kBorder; ++y) {
        for (int x = fast::kBorder; x < img.width - fast::kBorder; ++x) {
            const int s = at(x, y);
            if (s == 0) continue;
            bool keep = true;
            for (int dy = -1; dy <= 1 && keep; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int n = at(x + dx, y + dy);
                    const bool earlier = dy < 0 || (dy == 0 && dx < 0);
                    if (n > s || (n == s && earlier)) {
                        keep = false;
                        break;
                    }
                }
            }
            if (keep) out.push_back({static_cast<double>(x), static_cast<double>(y)});
        }
    }
    return out;
}

}  // namespace lcs
