#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lcs/config.hpp"
#include "lcs/kinematics.hpp"
#include "lcs/spatial_index.hpp"
#include "lcs/trust.hpp"
#include "lcs/types.hpp"

namespace lcs::circle {

/// Outcome of comparing one observation against one prediction.
enum class XiClass { xi1, xi2, xi3, xi4, xi5, xi_r };

inline std::string_view to_string(XiClass c)
{
    switch (c) {
    case XiClass::xi1: return "xi1";
    case XiClass::xi2: return "xi2";
    case XiClass::xi3: return "xi3";
    case XiClass::xi4: return "xi4";
    case XiClass::xi5: return "xi5";
    case XiClass::xi_r: return "xi_r";
    }
    return "?";
}

/// True when the observation's implied radial speed is within the normal
/// velocity tolerance of the prediction's.
inline bool radial_magnitude_consistent(PixelPoint obs, const NormalEdge& predicted, const FilterConfig& config,
                                        const ImuSample& imu)
{
    const PixelPoint o = config.camera.principal;
    const double radial_error = std::abs(distance(obs, o) - distance(predicted.loc, o));
    return radial_error <= config.px_per_cm * imu.t_f * config.normal_velocity_tolerance(imu.v_v);
}

/// Decision tree over (inside mu, inside delta_v cone, radial magnitude).
inline XiClass classify_edge(PixelPoint obs, const NormalEdge& predicted, const FilterConfig& config, const ImuSample& imu)
{
    const bool inside = distance(obs, predicted.loc) <= predicted.mu;
    const bool in_span = within_error_span(obs, config.camera.principal, predicted.beta, config.delta_v);
    const bool magnitude_ok = radial_magnitude_consistent(obs, predicted, config, imu);
    if (inside) return (in_span && magnitude_ok) ? XiClass::xi2 : XiClass::xi3;
    if (in_span) return magnitude_ok ? XiClass::xi1 : XiClass::xi4;
    return XiClass::xi5;
}

/// Trust-weighted blend: ((tr - tr_c) * prior + measurement) / ((tr - tr_c) + 1).
template <typename V>
V estimate_trusted(const V& prior, const V& measurement, int trust, int tr_c)
{
    const double w = static_cast<double>(std::max(trust - tr_c, 0));
    return (1.0 / (w + 1.0)) * (w * prior + measurement);
}

template <>
inline double estimate_trusted<double>(const double& prior, const double& measurement, int trust, int tr_c)
{
    const double w = static_cast<double>(std::max(trust - tr_c, 0));
    return (w * prior + measurement) / (w + 1.0);
}

/// estimate_trusted for angles in degrees, blending along the shorter arc.
inline double estimate_trusted_angle(double prior, double measurement, int trust, int tr_c)
{
    const double delta = wrap_deg(measurement - prior);
    return wrap_deg(prior + estimate_trusted(0.0, delta, trust, tr_c));
}

/// Arithmetic mean of angles taken relative to the first one, so equal inputs
/// return exactly themselves and a cluster straddling +-180 averages correctly.
inline double mean_angle(std::span<const double> angles)
{
    if (angles.empty()) return 0.0;
    const double ref = angles.front();
    double acc = 0.0;
    for (double a : angles) acc += wrap_deg(a - ref);
    return wrap_deg(ref + acc / static_cast<double>(angles.size()));
}

/// Location/velocity/radius/direction update of a matched normal edge.
/// `pred` is the advanced prediction (its vel is V~); trust is left untouched.
inline NormalEdge estimate_normal_edge(const NormalEdge& pred, PixelPoint matched_obs, int match_count,
                                       const ImuSample& imu, const FilterConfig& config)
{
    const CameraModel& cam = config.camera;
    const double scale = config.px_per_cm * imu.t_f;
    NormalEdge out = pred;
    out.loc = estimate_trusted(pred.loc, matched_obs, pred.trust, config.circle_trust.tr_c);
    const double residual = distance(pred.loc, matched_obs);
    const double sign = distance(matched_obs, cam.principal) > distance(pred.loc, cam.principal) ? 1.0 : -1.0;
    out.vel = std::abs(imu.v_v + sign * residual / scale);
    const double correlation = static_cast<double>(std::max(match_count, 1));
    out.mu = std::max(0.5 * (std::abs(imu.v_v - pred.vel) * scale / correlation + pred.mu), config.mu_min);
    out.beta = angle_of(out.loc, cam.principal);
    return out;
}

/// xi_r: inside the rebel's angular cone (delta_v widened by its deviation
/// angle) as seen from its origin, and within mu_0 of its prediction.
inline bool matches_rebel(PixelPoint obs, const RebelEdge& predicted, const FilterConfig& config)
{
    return distance(obs, predicted.loc) <= config.mu_0 &&
           within_error_span(obs, predicted.origin, predicted.beta, config.delta_v + predicted.mu);
}

inline RebelEdge estimate_rebel_edge(const RebelEdge& pred, PixelPoint matched_obs, const ImuSample& imu,
                                     const FilterConfig& config)
{
    const double scale = config.px_per_cm * imu.t_f;
    const int tr_c = config.circle_trust.tr_c;
    RebelEdge out = pred;
    out.loc = estimate_trusted(pred.loc, matched_obs, pred.trust, tr_c);
    const double residual = distance(pred.loc, matched_obs);
    const double sign = distance(matched_obs, pred.origin) > distance(pred.loc, pred.origin) ? 1.0 : -1.0;
    out.vel = std::abs(pred.vel + sign * residual / scale);
    const double observed = angle_of(matched_obs, pred.origin);
    out.mu = std::abs(wrap_deg(observed - pred.beta));
    out.beta = estimate_trusted_angle(pred.beta, observed, pred.trust, tr_c);
    return out;
}

/// Largest admissible frame-to-frame displacement for chaining rebel candidates.
inline double alignment_reach(const FilterConfig& config, const ImuSample& imu)
{
    return config.mu_0 + config.rebel_velocity_tolerance(imu.v_v) * config.px_per_cm * imu.t_f;
}

/// Builds a rebel from a complete three-frame chain.
inline RebelEdge rebel_from_chain(const RebelAlignmentRow& row, const ImuSample& imu, const FilterConfig& config)
{
    const PixelPoint l0 = row.chain[0].loc;
    const PixelPoint l1 = row.chain[1].loc;
    const PixelPoint l2 = row.chain[2].loc;
    RebelEdge r;
    r.origin = l0;
    r.loc = l2;
    r.vel = distance(l2, l1) / (config.px_per_cm * imu.t_f);
    r.beta = angle_of(l2, l0);
    r.mu = std::abs(wrap_deg(angle_of(l2, l0) - angle_of(l1, l0)));
    r.trust = trust_init(EntityClass::rebel, config.circle_trust);
    return r;
}

struct AlignmentUpdate {
    std::vector<RebelAlignmentRow> alpha;
    std::vector<RebelEdge> new_rebels;
};

/// Extends every previous-frame row within reach of each candidate, seeds a
/// fresh row per candidate, converts length-3 chains to rebels (one per
/// candidate, smallest deviation angle first) and drops rows from older frames.
inline AlignmentUpdate update_rebel_alignment(std::span<const RebelAlignmentRow> alpha,
                                              std::span<const PixelPoint> candidates, std::int64_t frame_index,
                                              const FilterConfig& config, const ImuSample& imu,
                                              OpCounter* counter = nullptr)
{
    AlignmentUpdate out;
    const double reach = alignment_reach(config, imu);

    std::vector<std::size_t> live;
    std::vector<PixelPoint> tails;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const auto& chain = alpha[i].chain;
        if (!chain.empty() && chain.size() < 3 && chain.back().frame == frame_index - 1) {
            live.push_back(i);
            tails.push_back(chain.back().loc);
        }
    }
    const CellIndex index(tails, reach, counter);

    for (const auto& c : candidates) {
        // A candidate completing several chains yields one rebel: the straightest.
        std::optional<RebelEdge> best;
        for (std::size_t t : index.within(c, reach)) {
            RebelAlignmentRow row = alpha[live[t]];
            row.chain.push_back({frame_index, c});
            if (row.chain.size() < 3) {
                out.alpha.push_back(std::move(row));
                continue;
            }
            RebelEdge r = rebel_from_chain(row, imu, config);
            if (!best || r.mu < best->mu) best = r;
        }
        if (best) out.new_rebels.push_back(*best);
        out.alpha.push_back({{{frame_index, c}}});
    }
    return out;
}

/// Builds a circle from member positions: centroid, farthest member distance
/// (floored at mu_0), mean velocity and mean direction.
inline Circle make_circle(CircleKind kind, std::span<const PixelPoint> locs, std::span<const double> vels,
                          std::span<const double> betas, PixelPoint origin, double mu_0)
{
    Circle c;
    c.kind = kind;
    c.origin = origin;
    PixelPoint sum;
    double vsum = 0.0;
    for (std::size_t i = 0; i < locs.size(); ++i) {
        sum = sum + locs[i];
        vsum += std::abs(vels[i]);
    }
    const double n = static_cast<double>(std::max<std::size_t>(locs.size(), 1));
    c.loc = (1.0 / n) * sum;
    c.vel = vsum / n;
    c.beta = mean_angle(betas);
    double r = 0.0;
    for (const auto& p : locs) r = std::max(r, distance(p, c.loc));
    c.radius = std::max(r, mu_0);
    return c;
}

/// Membership condition around a seed normal edge (strict angle window).
inline bool normal_member(const NormalEdge& seed, const NormalEdge& e, const FilterConfig& config, double v_v)
{
    return std::abs(wrap_deg(e.beta - seed.beta)) < config.eps_beta_n &&
           std::abs(seed.vel) <= std::abs(e.vel) + config.normal_velocity_tolerance(v_v) &&
           distance(e.loc, seed.loc) <= config.circle_reach;
}

/// Rebel membership compares heading plus deviation angle.
inline bool rebel_member(const RebelEdge& seed, const RebelEdge& e, const FilterConfig& config, double v_v)
{
    return std::abs(wrap_deg((e.beta + e.mu) - (seed.beta + seed.mu))) < config.eps_beta_r &&
           std::abs(seed.vel) <= std::abs(e.vel) + config.rebel_velocity_tolerance(v_v) &&
           distance(e.loc, seed.loc) <= config.circle_reach;
}

inline Circle circle_from_normal_edges(std::span<const NormalEdge> members, const FilterConfig& config)
{
    std::vector<PixelPoint> locs;
    std::vector<double> vels;
    std::vector<double> betas;
    for (const auto& e : members) {
        locs.push_back(e.loc);
        vels.push_back(e.vel);
        betas.push_back(e.beta);
    }
    Circle c = make_circle(CircleKind::normal, locs, vels, betas, config.camera.principal, config.mu_0);
    for (const auto& e : members) c.members.push_back(e.id);
    return c;
}

inline Circle circle_from_rebel_edges(std::span<const RebelEdge> members, const FilterConfig& config)
{
    std::vector<PixelPoint> locs;
    std::vector<double> vels;
    std::vector<double> betas;
    PixelPoint origin_sum;
    for (const auto& e : members) {
        locs.push_back(e.loc);
        vels.push_back(e.vel);
        betas.push_back(e.beta + e.mu);
        origin_sum = origin_sum + e.origin;
    }
    const double n = static_cast<double>(std::max<std::size_t>(members.size(), 1));
    Circle c = make_circle(CircleKind::rebel, locs, vels, betas, (1.0 / n) * origin_sum, config.mu_0);
    for (const auto& e : members) c.members.push_back(e.id);
    return c;
}

/// Mean circle around pool[seed]: the seed plus every pool edge satisfying normal_member.
inline Circle group_normal_circle(std::size_t seed, std::span<const NormalEdge> pool, const FilterConfig& config,
                                  const ImuSample& imu)
{
    std::vector<NormalEdge> members{pool[seed]};
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (i != seed && normal_member(pool[seed], pool[i], config, imu.v_v)) members.push_back(pool[i]);
    return circle_from_normal_edges(members, config);
}

/// Percentage of member locations strictly inside the predicted circle.
inline double circle_overlap_percentage(std::span<const PixelPoint> member_locs, const Circle& predicted)
{
    if (member_locs.empty()) return 0.0;
    const auto inside = std::count_if(member_locs.begin(), member_locs.end(),
                                      [&](PixelPoint p) { return distance(p, predicted.loc) < predicted.radius; });
    return 100.0 * static_cast<double>(inside) / static_cast<double>(member_locs.size());
}

inline bool match_normal_circle(const Circle& predicted, const Circle& mean, std::span<const PixelPoint> member_locs,
                                const FilterConfig& config)
{
    const bool angle_ok = std::abs(wrap_deg(predicted.beta - mean.beta)) < config.eps_beta_n;
    const bool vel_ok = std::abs(mean.vel - predicted.vel) <= config.eps_v * std::abs(predicted.vel);
    return angle_ok && vel_ok && circle_overlap_percentage(member_locs, predicted) >= config.rho_c;
}

/// Rebel circle gate: heading-plus-deviation mean within eps_beta_r, one-sided
/// velocity bound, and the same overlap requirement as normal circles.
inline bool match_rebel_circle(const Circle& predicted, const Circle& mean, std::span<const PixelPoint> member_locs,
                               const FilterConfig& config, double v_v)
{
    const bool angle_ok = std::abs(wrap_deg(predicted.beta - mean.beta)) < config.eps_beta_r;
    const bool vel_ok = mean.vel <= predicted.vel + config.rebel_velocity_tolerance(v_v);
    return angle_ok && vel_ok && circle_overlap_percentage(member_locs, predicted) >= config.rho_c;
}

struct RebelCircleResult {
    Circle circle;
    bool matched = false;
};

inline RebelCircleResult group_and_match_rebel_circle(std::size_t seed, std::span<const RebelEdge> pool,
                                                      const std::optional<Circle>& predicted,
                                                      const FilterConfig& config, const ImuSample& imu)
{
    std::vector<RebelEdge> members{pool[seed]};
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (i != seed && rebel_member(pool[seed], pool[i], config, imu.v_v)) members.push_back(pool[i]);
    RebelCircleResult out{circle_from_rebel_edges(members, config), false};
    if (predicted) {
        std::vector<PixelPoint> locs;
        for (const auto& m : members) locs.push_back(m.loc);
        out.matched = match_rebel_circle(*predicted, out.circle, locs, config, imu.v_v);
    }
    return out;
}

}  // namespace lcs::circle
