#pragma once

#include <cmath>

#include "lcs/types.hpp"

namespace lcs {

/// Angular slack for inclusive angle gates; absorbs atan2 round-off at the boundary.
inline constexpr double kAngleSlackDeg = 1e-9;

/// Applies the small-rotation motion-field update to a location given relative
/// to the frame origin and returns the absolute pixel location.
///
/// `verbatim` reproduces the printed y-row whose last factor repeats omega_y;
/// the default uses omega_x there, which is the standard decoupled form.
inline PixelPoint rotate_motion_field(PixelPoint rel, const CameraModel& camera, const AngularVelocity& w,
                                      bool verbatim = false)
{
    const double f = camera.f;
    const double x = rel.x;
    const double y = rel.y;
    const double last = verbatim ? w.y : w.x;
    return {x + camera.principal.x + f * w.y + y * w.z + (x * y * w.x - x * x * w.y) / f,
            y + camera.principal.y + f * w.x + x * w.z + (x * y * w.y - y * y * last) / f};
}

/// Same as rotate_motion_field but takes and returns absolute coordinates.
inline PixelPoint rotate_absolute(PixelPoint abs, const CameraModel& camera, const AngularVelocity& w,
                                  bool verbatim = false)
{
    return rotate_motion_field(abs - camera.principal, camera, w, verbatim);
}

struct AngleOf {
    double deg = 0.0;
    bool degenerate = false;

    operator double() const { return deg; }  // NOLINT(google-explicit-constructor)
};

/// Four-quadrant direction of (p - origin) in degrees, wrapped to (-180, 180].
inline AngleOf angle_of(PixelPoint p, PixelPoint origin)
{
    const PixelPoint d = p - origin;
    if (d.x == 0.0 && d.y == 0.0) return {0.0, true};
    return {wrap_deg(std::atan2(d.y, d.x) * kDegPerRad), false};
}

/// True when `candidate` lies inside the angular cone of half-width `delta_v`
/// about direction `entity_beta` as seen from `entity_origin` (inclusive).
inline bool within_error_span(PixelPoint candidate, PixelPoint entity_origin, double entity_beta, double delta_v)
{
    const AngleOf a = angle_of(candidate, entity_origin);
    if (a.degenerate) return true;
    return std::abs(wrap_deg(a.deg - entity_beta)) <= delta_v + kAngleSlackDeg;
}

/// Predicted velocity of a normal edge: halfway between its own and the vehicle's.
inline double predicted_normal_velocity(double edge_vel, double v_v) { return 0.5 * (edge_vel + v_v); }

/// Rotational flow then radial displacement away from O_I by px_per_cm * V~ * t_f.
inline NormalEdge predict_normal_edge(const NormalEdge& e, const ImuSample& imu, const CameraModel& camera,
                                      double px_per_cm, bool verbatim = false)
{
    NormalEdge out = e;
    out.vel = predicted_normal_velocity(e.vel, imu.v_v);
    const PixelPoint dir = unit(e.loc - camera.principal);
    out.loc = rotate_absolute(e.loc, camera, imu.omega, verbatim) + (px_per_cm * out.vel * imu.t_f) * dir;
    return out;
}

/// Rebels keep their own heading: advance along beta by px_per_cm * V * t_f.
inline RebelEdge predict_rebel_edge(const RebelEdge& e, const ImuSample& imu, const CameraModel& camera,
                                    double px_per_cm, bool verbatim = false)
{
    RebelEdge out = e;
    out.loc = rotate_absolute(e.loc, camera, imu.omega, verbatim) +
              (px_per_cm * e.vel * imu.t_f) * direction_deg(e.beta);
    out.origin = rotate_absolute(e.origin, camera, imu.omega, verbatim);
    return out;
}

}  // namespace lcs
