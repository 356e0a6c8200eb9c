#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

namespace lcs {

using EntityId = std::uint64_t;

/// Frame-local pixel coordinate (x to the right, y down).
struct PixelPoint {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

inline PixelPoint operator+(PixelPoint a, PixelPoint b) { return {a.x + b.x, a.y + b.y}; }
inline PixelPoint operator-(PixelPoint a, PixelPoint b) { return {a.x - b.x, a.y - b.y}; }
inline PixelPoint operator*(double s, PixelPoint p) { return {s * p.x, s * p.y}; }
inline PixelPoint operator*(PixelPoint p, double s) { return {s * p.x, s * p.y}; }

inline double norm(PixelPoint p) { return std::hypot(p.x, p.y); }
inline double distance(PixelPoint a, PixelPoint b) { return norm(a - b); }
inline double squared_distance(PixelPoint a, PixelPoint b)
{
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

/// Unit vector along p, or zero when p is the zero vector.
inline PixelPoint unit(PixelPoint p)
{
    const double n = norm(p);
    if (n == 0.0) return {0.0, 0.0};
    return {p.x / n, p.y / n};
}

inline constexpr double kDegPerRad = 180.0 / std::numbers::pi;
inline constexpr double kRadPerDeg = std::numbers::pi / 180.0;

/// Wraps an angle in degrees into (-180, 180].
inline double wrap_deg(double deg)
{
    double w = std::fmod(deg, 360.0);
    if (w <= -180.0) w += 360.0;
    if (w > 180.0) w -= 360.0;
    return w;
}

/// Unit vector pointing at `deg` degrees.
inline PixelPoint direction_deg(double deg)
{
    const double r = deg * kRadPerDeg;
    return {std::cos(r), std::sin(r)};
}

struct CameraModel {
    double f = 500.0;
    PixelPoint principal{320.0, 240.0};
    double width = 640.0;
    double height = 480.0;

    bool contains(PixelPoint p) const
    {
        return p.x >= 0.0 && p.y >= 0.0 && p.x <= width && p.y <= height;
    }
    double diagonal() const { return std::hypot(width, height); }
};

struct AngularVelocity {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const AngularVelocity&, const AngularVelocity&) = default;
};

/// Per-frame motion sample. Speeds in cm/s, rotations in radians per frame interval.
struct ImuSample {
    double v_v = 0.0;
    double a_v = 0.0;
    AngularVelocity omega;
    double t_f = 1.0;

    friend bool operator==(const ImuSample&, const ImuSample&) = default;
};

struct NormalEdge {
    EntityId id = 0;
    PixelPoint loc;
    double vel = 0.0;   // cm/s
    double beta = 0.0;  // degrees, direction from O_I
    double mu = 0.0;    // detection radius, pixels
    int trust = 0;
};

struct RebelEdge {
    EntityId id = 0;
    PixelPoint loc;
    double vel = 0.0;
    double beta = 0.0;
    double mu = 0.0;  // deviation angle, degrees
    PixelPoint origin;
    int trust = 0;
};

enum class CircleKind { normal, rebel };

struct Circle {
    EntityId id = 0;
    CircleKind kind = CircleKind::normal;
    PixelPoint loc;
    double radius = 0.0;
    double vel = 0.0;
    double beta = 0.0;
    PixelPoint origin;
    int trust = 0;
    std::vector<EntityId> members;
};

struct Radii {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Radii&, const Radii&) = default;
};

/// Axis-aligned rectangular layer; `radii` are half-extents.
struct Square {
    EntityId id = 0;
    PixelPoint loc;
    Radii radii;
    double vel = 0.0;
    double beta = 0.0;
    PixelPoint origin;
    int trust = 0;

    PixelPoint lower() const { return {loc.x - radii.x, loc.y - radii.y}; }
    PixelPoint upper() const { return {loc.x + radii.x, loc.y + radii.y}; }
};

enum class RegionType : int { circular = 1, rectangular = 2 };

struct IgnoranceRegion {
    PixelPoint loc;
    RegionType ty = RegionType::circular;
    Radii extent;  // circular uses extent.x as R_psi
    int remaining_frames = 1;

    bool contains(PixelPoint p) const
    {
        if (ty == RegionType::circular) return distance(p, loc) <= extent.x;
        return std::abs(p.x - loc.x) <= extent.x && std::abs(p.y - loc.y) <= extent.y;
    }
};

struct Collector {
    PixelPoint center;
    double radius = 0.0;
    int count = 0;
};

struct GroupedEdge {
    PixelPoint loc;
    int count = 1;
};

struct AlignmentEntry {
    std::int64_t frame = 0;
    PixelPoint loc;
};

/// One chain of rebel candidates over consecutive frames (at most three).
struct RebelAlignmentRow {
    std::vector<AlignmentEntry> chain;
};

struct FilterState {
    std::int64_t frame_index = -1;
    std::vector<GroupedEdge> chi;
    std::vector<Collector> collectors;
    std::vector<IgnoranceRegion> psi;
    std::vector<RebelAlignmentRow> alpha;
    std::vector<NormalEdge> normal_edges;
    std::vector<RebelEdge> rebel_edges;
    std::vector<Circle> normal_circles;
    std::vector<Circle> rebel_circles;
    std::vector<Square> squares;
    EntityId next_id = 1;
    std::optional<double> last_v_v;
};

}  // namespace lcs
