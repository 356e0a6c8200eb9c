#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "lcs/circle_expert.hpp"
#include "lcs/config.hpp"
#include "lcs/kinematics.hpp"
#include "lcs/trust.hpp"
#include "lcs/types.hpp"

namespace lcs::square {

namespace detail {

inline bool angle_within(double a, double center, double half_width)
{
    return std::abs(wrap_deg(a - center)) <= half_width + kAngleSlackDeg;
}

inline bool velocity_close(double va, double vb, double eps_v) { return vb - eps_v <= va && va <= vb + eps_v; }

}  // namespace detail

/// Case 1: a corner couple at +-delta_beta_1 with similar speed, closer than d_t.
inline bool match_couple_case1(const Circle& a, const Circle& b, double d_t, const FilterConfig& config)
{
    if (!detail::velocity_close(a.vel, b.vel, config.eps_v)) return false;
    const bool plus = detail::angle_within(a.beta, b.beta + config.delta_beta_1, config.eps_beta);
    const bool minus = detail::angle_within(a.beta, b.beta - config.delta_beta_1, config.eps_beta);
    return (plus || minus) && distance(a.loc, b.loc) < d_t;
}

/// Case 2: roughly aligned circles moving at similar speed.
inline bool match_case2(const Circle& a, const Circle& b, const FilterConfig& config)
{
    return detail::velocity_close(a.vel, b.vel, config.eps_v) &&
           detail::angle_within(a.beta, b.beta, config.delta_beta_2 + config.eps_beta);
}

/// Angles used by the d_t shrink test, all in degrees.
struct ShrinkGeometry {
    PixelPoint tangent_left;
    PixelPoint tangent_right;
    double beta_tl = 0.0;
    double beta_tr = 0.0;
    double beta_m = 0.0;
    double d_ab = 0.0;
    double d_ab_prime = 0.0;
    double d_bb_prime = 0.0;
};

/// Tangent points of circle b seen from a's centre and the angle at a between
/// b and b'. Empty when b' coincides with a or b, or a coincides with b.
inline std::optional<ShrinkGeometry> shrink_geometry(const Circle& a, const Circle& b, const Circle& b_prime)
{
    ShrinkGeometry g;
    g.d_ab = distance(a.loc, b.loc);
    g.d_ab_prime = distance(a.loc, b_prime.loc);
    g.d_bb_prime = distance(b.loc, b_prime.loc);
    if (g.d_ab == 0.0 || g.d_ab_prime == 0.0 || g.d_bb_prime == 0.0) return std::nullopt;

    const double ratio = std::min(1.0, b.radius / g.d_ab);
    const double half = std::asin(ratio);
    const double tangent_len = std::sqrt(std::max(0.0, g.d_ab * g.d_ab - b.radius * b.radius));
    const PixelPoint u = unit(b.loc - a.loc);
    auto rotated = [&](double ang) {
        return PixelPoint{u.x * std::cos(ang) - u.y * std::sin(ang), u.x * std::sin(ang) + u.y * std::cos(ang)};
    };
    g.tangent_left = a.loc + tangent_len * rotated(half);
    g.tangent_right = a.loc + tangent_len * rotated(-half);
    g.beta_tl = std::asin(std::min(1.0, distance(g.tangent_left, b.loc) / g.d_ab)) * kDegPerRad;
    g.beta_tr = std::asin(std::min(1.0, distance(g.tangent_right, b.loc) / g.d_ab)) * kDegPerRad;

    const double cos_m = (g.d_ab * g.d_ab + g.d_ab_prime * g.d_ab_prime - g.d_bb_prime * g.d_bb_prime) /
                         (2.0 * g.d_ab * g.d_ab_prime);
    g.beta_m = std::acos(std::clamp(cos_m, -1.0, 1.0)) * kDegPerRad;
    return g;
}

/// Returns the reduced temporary distance when b' triggers the shrink
/// condition, otherwise nullopt (d_t unchanged).
inline std::optional<double> shrink_dt(const Circle& a, const Circle& b, const Circle& b_prime, double d_t)
{
    const auto g = shrink_geometry(a, b, b_prime);
    if (!g) return std::nullopt;
    const bool slower = b_prime.vel <= a.vel;
    // The two tangent angles agree in exact arithmetic; compare with slack.
    constexpr double slack = 1e-9;
    const bool angles = std::abs(g->beta_tr) <= std::abs(g->beta_tl) + slack &&
                        std::abs(g->beta_tl) <= std::abs(g->beta_m) + slack;
    if (slower && angles && g->d_ab < d_t) return std::max(0.0, d_t - g->d_bb_prime);
    return std::nullopt;
}

/// Rectangle spanning the couple and its group, moving with their mean kinematics.
inline Square build_mean_square(const Circle& a, std::span<const Circle> b_group, double mu_0)
{
    Square s;
    PixelPoint origin_sum;
    double vel_sum = 0.0;
    PixelPoint lo = a.loc;
    PixelPoint hi = a.loc;
    for (const auto& b : b_group) {
        origin_sum = origin_sum + b.origin;
        vel_sum += b.vel;
        lo = {std::min(lo.x, b.loc.x), std::min(lo.y, b.loc.y)};
        hi = {std::max(hi.x, b.loc.x), std::max(hi.y, b.loc.y)};
    }
    const double l = static_cast<double>(std::max<std::size_t>(b_group.size(), 1));
    s.origin = 0.5 * (a.origin + (1.0 / l) * origin_sum);
    s.vel = 0.5 * (a.vel + vel_sum / l);
    s.loc = 0.5 * (hi + lo);
    s.radii = {std::max(0.5 * (hi.x - lo.x), 0.5 * mu_0), std::max(0.5 * (hi.y - lo.y), 0.5 * mu_0)};
    s.beta = angle_of(s.loc, s.origin);
    return s;
}

inline bool include_minor_circle(const Square& square, const Circle& candidate, const FilterConfig& config)
{
    const bool vel_ok = square.vel - config.eps_v <= candidate.vel && candidate.vel <= square.vel + config.eps_v;
    const bool angle_ok = detail::angle_within(candidate.beta, square.beta, config.eps_beta);
    const PixelPoint lo = square.lower();
    const PixelPoint hi = square.upper();
    const bool inside = candidate.loc.x >= lo.x && candidate.loc.x <= hi.x && candidate.loc.y >= lo.y &&
                        candidate.loc.y <= hi.y;
    return vel_ok && angle_ok && inside;
}

/// Tangent point on the ellipse inscribed in the square, touching the line
/// through the square's origin. Picks the solution with larger y (then larger
/// x). Empty when the origin lies inside or on the ellipse.
inline std::optional<PixelPoint> ellipse_tangent_point(const Square& s)
{
    const double rx = s.radii.x;
    const double ry = s.radii.y;
    if (!(rx > 0.0 && ry > 0.0)) return std::nullopt;
    // Map the ellipse to the unit circle; tangency and incidence survive the affine map.
    const double px = (s.origin.x - s.loc.x) / rx;
    const double py = (s.origin.y - s.loc.y) / ry;
    const double p2 = px * px + py * py;
    if (!(p2 > 1.0)) return std::nullopt;
    const double h = std::sqrt(p2 - 1.0);
    const PixelPoint q1{(px - h * py) / p2, (py + h * px) / p2};
    const PixelPoint q2{(px + h * py) / p2, (py - h * px) / p2};
    const PixelPoint t1{s.loc.x + rx * q1.x, s.loc.y + ry * q1.y};
    const PixelPoint t2{s.loc.x + rx * q2.x, s.loc.y + ry * q2.y};
    if (t1.y != t2.y) return t1.y > t2.y ? t1 : t2;
    return t1.x >= t2.x ? t1 : t2;
}

/// On-ellipse residual of a candidate tangent point.
inline double ellipse_residual(const Square& s, PixelPoint t)
{
    const double dx = (t.x - s.loc.x) / s.radii.x;
    const double dy = (t.y - s.loc.y) / s.radii.y;
    return dy * dy + dx * dx - 1.0;
}

/// Tangency residual (line through the origin touches the ellipse at t),
/// normalised by the squared radii so it is scale free.
inline double tangency_residual(const Square& s, PixelPoint t)
{
    const double rx2 = s.radii.x * s.radii.x;
    const double ry2 = s.radii.y * s.radii.y;
    return (rx2 * (s.origin.y - t.y) * (t.y - s.loc.y) + ry2 * (s.origin.x - t.x) * (t.x - s.loc.x)) / (rx2 * ry2);
}

/// Angle between the origin->centre and origin->tangent directions, from the
/// ratio of the two distances (larger in the denominator). Radians.
inline double tangent_gamma(double dist_center, double dist_tangent)
{
    if (dist_center <= 0.0 || dist_tangent <= 0.0) return 0.0;
    const double ratio = dist_center > dist_tangent ? dist_tangent / dist_center : dist_center / dist_tangent;
    return std::acos(std::clamp(ratio, -1.0, 1.0));
}

/// Distance the tangent point travels when the centre recedes by delta_r from
/// the origin. The second branch is taken relative to its zero-motion value
/// so that a stationary square stays put; both reduce to delta_r * cos(gamma).
inline double travel_distance(double dist_center, double dist_tangent, double delta_r)
{
    const double cos_g = std::cos(tangent_gamma(dist_center, dist_tangent));
    if (dist_center > dist_tangent) return (dist_center + delta_r) * cos_g - dist_tangent;
    return (dist_center + delta_r) * cos_g - dist_center * cos_g;
}

/// Radii of the axis-aligned ellipse centred at `center`, passing through
/// `tangent`, whose tangent there passes through `origin`. Empty when the
/// configuration is degenerate.
inline std::optional<Radii> radii_from_tangent(PixelPoint origin, PixelPoint tangent, PixelPoint center)
{
    const double ox_tx = origin.x - tangent.x;
    const double oy_ty = origin.y - tangent.y;
    const double tx_sx = tangent.x - center.x;
    const double ty_sy = tangent.y - center.y;
    const double scale = std::max({std::abs(ox_tx), std::abs(oy_ty), std::abs(tx_sx), std::abs(ty_sy), 1.0});
    const double tiny = 1e-9 * scale * scale;
    if (std::abs(ox_tx) * scale < tiny || std::abs(oy_ty * ty_sy) < tiny) return std::nullopt;
    const double ry2 = std::abs((ox_tx * ty_sy * ty_sy - oy_ty * tx_sx * ty_sy) / ox_tx);
    const double rx2 = std::abs(ry2 * ox_tx * tx_sx / (oy_ty * ty_sy));
    const Radii r{std::sqrt(rx2), std::sqrt(ry2)};
    if (!(std::isfinite(r.x) && std::isfinite(r.y) && r.x > 0.0 && r.y > 0.0)) return std::nullopt;
    return r;
}

/// Advances a square one frame: the centre moves by the motion field plus
/// radial travel from the origin, the tangent point moves along its own ray by
/// the travel distance, and the radii are re-solved from the moved tangent.
inline Square predict_square(const Square& s, const ImuSample& imu, const CameraModel& camera, double px_per_cm,
                             bool verbatim = false)
{
    if (s.origin == s.loc) return s;
    Square out = s;
    const PixelPoint radial = unit(s.loc - s.origin);
    out.loc = rotate_absolute(s.loc, camera, imu.omega, verbatim) + (s.vel * imu.t_f * px_per_cm) * radial;
    const double delta_r = distance(s.loc, out.loc);
    const double dist_center = distance(s.origin, s.loc);

    auto homothety = [&] {
        const double k = (dist_center + delta_r) / dist_center;
        out.radii = {s.radii.x * k, s.radii.y * k};
        return out;
    };

    const auto tangent = ellipse_tangent_point(s);
    if (!tangent) return homothety();
    const double dist_tangent = distance(s.origin, *tangent);
    const double d_r = travel_distance(dist_center, dist_tangent, delta_r);
    const PixelPoint moved = rotate_absolute(*tangent, camera, imu.omega, verbatim) + d_r * unit(*tangent - s.origin);
    const auto radii = radii_from_tangent(s.origin, moved, out.loc);
    if (!radii) return homothety();
    out.radii = *radii;
    return out;
}

/// Tangent point of the predicted square, for ray-membership checks.
inline std::optional<PixelPoint> predicted_tangent_point(const Square& s, const ImuSample& imu,
                                                         const CameraModel& camera, double px_per_cm,
                                                         bool verbatim = false)
{
    if (s.origin == s.loc) return std::nullopt;
    const auto tangent = ellipse_tangent_point(s);
    if (!tangent) return std::nullopt;
    const PixelPoint loc = rotate_absolute(s.loc, camera, imu.omega, verbatim) +
                           (s.vel * imu.t_f * px_per_cm) * unit(s.loc - s.origin);
    const double d_r = travel_distance(distance(s.origin, s.loc), distance(s.origin, *tangent), distance(s.loc, loc));
    return rotate_absolute(*tangent, camera, imu.omega, verbatim) + d_r * unit(*tangent - s.origin);
}

struct SquareOverlap {
    double rho = 0.0;  // percent
    bool degenerate = false;
};

/// Intersection area over four times the smaller half-extent product, in percent.
inline SquareOverlap square_overlap_rho(const Square& pred, const Square& mean)
{
    const double denom = 4.0 * std::min(pred.radii.x * pred.radii.y, mean.radii.x * mean.radii.y);
    if (!(denom > 0.0)) return {0.0, true};
    const double lx = std::min(pred.loc.x + pred.radii.x, mean.loc.x + mean.radii.x) -
                      std::max(pred.loc.x - pred.radii.x, mean.loc.x - mean.radii.x);
    const double ly = std::min(pred.loc.y + pred.radii.y, mean.loc.y + mean.radii.y) -
                      std::max(pred.loc.y - pred.radii.y, mean.loc.y - mean.radii.y);
    const double area = std::max(0.0, lx) * std::max(0.0, ly);
    return {std::min(100.0, 100.0 * area / denom), false};
}

inline bool match_square(const Square& pred, const Square& mean, const FilterConfig& config, double v_v)
{
    const bool vel_ok = std::abs(mean.vel - pred.vel) <= config.eps_v_s * std::abs(v_v);
    const bool angle_ok = detail::angle_within(mean.beta, pred.beta, config.eps_beta_s);
    return vel_ok && angle_ok && square_overlap_rho(pred, mean).rho > config.rho_c;
}

/// Trust-weighted update of a matched square. Trust moves +1 when the
/// directions agree within eps_beta_s, -1 otherwise; nullopt means pruned.
inline std::optional<Square> estimate_square(const Square& pred, const Square& mean, const TrustLadder& ladder,
                                             const FilterConfig& config)
{
    using circle::estimate_trusted;
    Square out = pred;
    const int tr = pred.trust;
    out.loc = estimate_trusted(pred.loc, mean.loc, tr, ladder.tr_c);
    const PixelPoint r = estimate_trusted(PixelPoint{pred.radii.x, pred.radii.y}, PixelPoint{mean.radii.x, mean.radii.y},
                                          tr, ladder.tr_c);
    out.radii = {r.x, r.y};
    out.vel = estimate_trusted(pred.vel, mean.vel, tr, ladder.tr_c);
    out.beta = circle::estimate_trusted_angle(pred.beta, mean.beta, tr, ladder.tr_c);
    out.origin = estimate_trusted(pred.origin, mean.origin, tr, ladder.tr_c);
    const int delta = detail::angle_within(mean.beta, pred.beta, config.eps_beta_s) ? 1 : -1;
    const auto next = trust_commit(tr, delta, ladder);
    if (!next) return std::nullopt;
    out.trust = *next;
    return out;
}

}  // namespace lcs::square
