#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "lcs/pipeline.hpp"
#include "lcs/types.hpp"

namespace lcs::synth {

/// Object moving in image space independently of the camera motion.
struct RebelObjectSpec {
    std::int64_t first_frame = 0;
    std::int64_t frames = 3;
    PixelPoint start;
    PixelPoint velocity;  // pixels per frame
};

/// Shape of the static point count over the run: `hump` rises from edges_min
/// to edges_max and back, `ramp` rises monotonically.
enum class CountProfile { hump, ramp };

struct SceneSpec {
    std::int64_t frames = 10;
    CameraModel camera;
    /// Static points are kept between these counts following `profile`;
    /// points leaving the view are respawned.
    std::size_t edges_min = 0;
    std::size_t edges_max = 0;
    CountProfile profile = CountProfile::hump;
    double depth_min = 20.0;  // cm, depth of a freshly spawned point
    double depth_max = 60.0;
    double near_clip = 5.0;
    /// When hi > 0, a spawned point's depth is chosen so its first-frame
    /// radial flow lies in [lo, hi] pixels (clamped to the depth range).
    double spawn_flow_lo = 0.0;
    double spawn_flow_hi = 0.0;
    double v_v = 3.0;   // cm/s
    double a_v = 0.0;   // cm/s^2
    double t_f = 1.0;   // s
    double omega_sigma = 0.0;  // rad per frame, per axis
    double noise_px = 0.0;
    /// Static points closer than this to a rebel's current, previous or next
    /// position are not emitted.
    double rebel_clearance = 0.0;
    /// When nonzero, spawned static points satisfy dot(px - O_I, keep_out_dir) <= -keep_out_offset.
    PixelPoint keep_out_dir;
    double keep_out_offset = 0.0;
    /// World points (cm) that are never respawned.
    std::vector<std::array<double, 3>> fixed_points;
    std::vector<RebelObjectSpec> rebels;

    void validate() const
    {
        if (frames < 1) throw std::invalid_argument("scene needs at least one frame");
        if (!(depth_min > 0.0) || depth_max < depth_min) throw std::invalid_argument("depth range must be positive");
        if (!(near_clip > 0.0)) throw std::invalid_argument("near_clip must be positive");
        if (edges_max < edges_min) throw std::invalid_argument("edges_max < edges_min");
        if (spawn_flow_hi > 0.0 && !(spawn_flow_lo > 0.0 && spawn_flow_lo <= spawn_flow_hi))
            throw std::invalid_argument("spawn flow band must satisfy 0 < lo <= hi");
        if (!(t_f > 0.0)) throw std::invalid_argument("t_f must be positive");
        for (const auto& r : rebels)
            if (r.frames < 1) throw std::invalid_argument("rebel object needs at least one frame");
    }
};

enum class EdgeKind { normal, rebel };

struct EdgeLabel {
    EdgeKind kind = EdgeKind::normal;
    std::uint64_t object = 0;  // static point id, or rebel spec index
};

struct CameraPose {
    std::array<double, 3> position{};
    std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // world to camera, row-major
};

struct SceneTruth {
    std::vector<Frame> frames;
    std::vector<std::vector<EdgeLabel>> labels;
    std::vector<ImuSample> imu;
    std::vector<CameraPose> trajectory;
};

namespace detail {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;

inline Vec3 mul(const Mat3& m, const Vec3& v)
{
    return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2], m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
            m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

inline Vec3 mul_transposed(const Mat3& m, const Vec3& v)
{
    return {m[0] * v[0] + m[3] * v[1] + m[6] * v[2], m[1] * v[0] + m[4] * v[1] + m[7] * v[2],
            m[2] * v[0] + m[5] * v[1] + m[8] * v[2]};
}

inline Mat3 mul(const Mat3& a, const Mat3& b)
{
    Mat3 out{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            for (int k = 0; k < 3; ++k) out[r * 3 + c] += a[r * 3 + k] * b[k * 3 + c];
    return out;
}

/// Rotation of camera-frame points whose generator shifts x by w.y * Z and y
/// by w.x * Z, matching the first-order image shift f*w.y, f*w.x.
inline Mat3 rotation(const AngularVelocity& w)
{
    // skew K such that K * P = (-wz*Y + wy*Z, wz*X + wx*Z, -wy*X - wx*Y)
    const Mat3 k{0, -w.z, w.y, w.z, 0, w.x, -w.y, -w.x, 0};
    const double theta = std::sqrt(w.x * w.x + w.y * w.y + w.z * w.z);
    Mat3 out{1, 0, 0, 0, 1, 0, 0, 0, 1};
    if (theta == 0.0) return out;
    const Mat3 k2 = mul(k, k);
    const double a = std::sin(theta) / theta;
    const double b = (1.0 - std::cos(theta)) / (theta * theta);
    for (int i = 0; i < 9; ++i) out[i] += a * k[i] + b * k2[i];
    return out;
}

struct Projection {
    PixelPoint pixel;
    bool visible = false;
};

inline Projection project(const Vec3& world, const CameraPose& pose, const SceneSpec& spec)
{
    const Vec3 rel{world[0] - pose.position[0], world[1] - pose.position[1], world[2] - pose.position[2]};
    const Vec3 pc = mul(pose.rotation, rel);
    if (pc[2] < spec.near_clip) return {};
    const PixelPoint px{spec.camera.principal.x + spec.camera.f * pc[0] / pc[2],
                        spec.camera.principal.y + spec.camera.f * pc[1] / pc[2]};
    return {px, spec.camera.contains(px)};
}

inline Vec3 back_project(PixelPoint px, double depth, const CameraPose& pose, const SceneSpec& spec)
{
    const Vec3 pc{(px.x - spec.camera.principal.x) / spec.camera.f * depth,
                  (px.y - spec.camera.principal.y) / spec.camera.f * depth, depth};
    const Vec3 rel = mul_transposed(pose.rotation, pc);
    return {pose.position[0] + rel[0], pose.position[1] + rel[1], pose.position[2] + rel[2]};
}

inline double segment_distance(PixelPoint p, PixelPoint a, PixelPoint b)
{
    const PixelPoint ab = b - a;
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    if (len2 == 0.0) return distance(p, a);
    const PixelPoint ap = p - a;
    const double t = std::clamp((ap.x * ab.x + ap.y * ab.y) / len2, 0.0, 1.0);
    return distance(p, a + t * ab);
}

}  // namespace detail

inline bool rebel_active(const RebelObjectSpec& r, std::int64_t frame)
{
    return frame >= r.first_frame && frame < r.first_frame + r.frames;
}

inline PixelPoint rebel_position(const RebelObjectSpec& r, std::int64_t frame)
{
    return r.start + static_cast<double>(frame - r.first_frame) * r.velocity;
}

/// Number of static points wanted at `frame`.
inline std::size_t target_edges(const SceneSpec& spec, std::int64_t frame)
{
    if (spec.frames <= 1) return spec.edges_max;
    const double phase = static_cast<double>(frame) / static_cast<double>(spec.frames - 1);
    const double turns = spec.profile == CountProfile::hump ? 2.0 : 1.0;
    const double t = 0.5 - 0.5 * std::cos(turns * std::numbers::pi * phase);
    const double span = static_cast<double>(spec.edges_max - spec.edges_min);
    return spec.edges_min + static_cast<std::size_t>(std::lround(t * span));
}

inline SceneTruth generate(std::uint64_t seed, const SceneSpec& spec)
{
    using namespace detail;
    spec.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, spec.camera.width);
    std::uniform_real_distribution<double> uy(0.0, spec.camera.height);
    std::uniform_real_distribution<double> udepth(spec.depth_min, spec.depth_max);
    std::normal_distribution<double> gauss(0.0, 1.0);

    struct Point {
        Vec3 world;
        std::uint64_t id;
    };
    std::vector<Point> points;
    std::uint64_t next_id = spec.fixed_points.size();

    SceneTruth truth;
    CameraPose pose;
    double v = spec.v_v;

    for (std::int64_t k = 0; k < spec.frames; ++k) {
        ImuSample imu;
        imu.v_v = v;
        imu.a_v = spec.a_v;
        imu.t_f = spec.t_f;
        if (k > 0) {
            const ImuSample& last = truth.imu.back();
            if (spec.omega_sigma > 0.0)
                imu.omega = {spec.omega_sigma * gauss(rng), spec.omega_sigma * gauss(rng), spec.omega_sigma * gauss(rng)};
            const double advance = last.v_v * spec.t_f + 0.5 * spec.a_v * spec.t_f * spec.t_f;
            const Vec3 forward = mul_transposed(pose.rotation, {0.0, 0.0, advance});
            for (int i = 0; i < 3; ++i) pose.position[i] += forward[i];
            pose.rotation = mul(rotation(imu.omega), pose.rotation);
            v += spec.a_v * spec.t_f;
            imu.v_v = v;
        }

        // Respawn points that left the view, then resize to the target count.
        const double step_cm = v * spec.t_f + 0.5 * spec.a_v * spec.t_f * spec.t_f;
        const bool keep_out = spec.keep_out_dir.x != 0.0 || spec.keep_out_dir.y != 0.0;
        auto spawn = [&]() -> Point {
            PixelPoint px{ux(rng), uy(rng)};
            for (int tries = 0; keep_out; ++tries) {
                const PixelPoint rel = px - spec.camera.principal;
                if (rel.x * spec.keep_out_dir.x + rel.y * spec.keep_out_dir.y <= -spec.keep_out_offset) break;
                if (tries > 100000) throw std::invalid_argument("keep-out region covers the whole image");
                px = {ux(rng), uy(rng)};
            }
            double depth = udepth(rng);
            if (spec.spawn_flow_hi > 0.0) {
                // flow = r * d / (Z - d)  =>  Z = d * (r + flow) / flow
                const double flow = std::uniform_real_distribution<double>(spec.spawn_flow_lo, spec.spawn_flow_hi)(rng);
                const double r = distance(px, spec.camera.principal);
                depth = std::clamp(step_cm * (r + flow) / flow, spec.depth_min, spec.depth_max);
            }
            return {back_project(px, depth, pose, spec), next_id++};
        };
        for (auto& p : points)
            if (!project(p.world, pose, spec).visible) p = spawn();
        const std::size_t want = target_edges(spec, k);
        if (points.size() > want) points.resize(want);
        while (points.size() < want) points.push_back(spawn());

        Frame frame{k, {}};
        std::vector<EdgeLabel> labels;
        auto emit = [&](PixelPoint px, EdgeLabel label) {
            if (spec.noise_px > 0.0) px = px + PixelPoint{spec.noise_px * gauss(rng), spec.noise_px * gauss(rng)};
            frame.edges.push_back(px);
            labels.push_back(label);
        };
        auto clear_of_rebels = [&](PixelPoint px) {
            if (!(spec.rebel_clearance > 0.0)) return true;
            for (const auto& r : spec.rebels) {
                if (!rebel_active(r, k - 1) && !rebel_active(r, k) && !rebel_active(r, k + 1)) continue;
                const PixelPoint a = rebel_position(r, std::max(k - 1, r.first_frame));
                const PixelPoint b = rebel_position(r, std::min(k + 1, r.first_frame + r.frames - 1));
                if (segment_distance(px, a, b) < spec.rebel_clearance) return false;
            }
            return true;
        };

        for (std::size_t i = 0; i < spec.fixed_points.size(); ++i) {
            const auto pr = project(spec.fixed_points[i], pose, spec);
            if (pr.visible && clear_of_rebels(pr.pixel)) emit(pr.pixel, {EdgeKind::normal, i});
        }
        for (const auto& p : points) {
            const auto pr = project(p.world, pose, spec);
            if (pr.visible && clear_of_rebels(pr.pixel)) emit(pr.pixel, {EdgeKind::normal, p.id});
        }
        for (std::size_t r = 0; r < spec.rebels.size(); ++r) {
            if (!rebel_active(spec.rebels[r], k)) continue;
            const PixelPoint px = rebel_position(spec.rebels[r], k);
            if (spec.camera.contains(px)) emit(px, {EdgeKind::rebel, r});
        }

        truth.frames.push_back(std::move(frame));
        truth.labels.push_back(std::move(labels));
        truth.imu.push_back(imu);
        truth.trajectory.push_back(pose);
    }
    return truth;
}

/// Indoor crowd: 37 frames with the edge count rising from 75 to 200.
inline SceneSpec lab_preset()
{
    SceneSpec s;
    s.frames = 37;
    s.edges_min = 75;
    s.edges_max = 195;
    s.profile = CountProfile::ramp;
    s.v_v = 3.0;
    s.a_v = 0.05;
    s.depth_min = 6.0;
    s.depth_max = 400.0;
    s.spawn_flow_lo = 5.0;
    s.spawn_flow_hi = 10.0;
    s.rebels = {{6, 6, {520, 140}, {-22, 8}}, {18, 5, {140, 380}, {20, -12}}, {27, 6, {470, 400}, {-18, -14}}};
    return s;
}

/// Outdoor run: 200 frames, about 700 edges per frame.
inline SceneSpec car_preset()
{
    SceneSpec s;
    s.frames = 200;
    s.edges_min = 680;
    s.edges_max = 720;
    s.v_v = 3.0;
    s.a_v = 0.0;
    s.depth_min = 25.0;
    s.depth_max = 80.0;
    for (std::int64_t k = 10; k < 190; k += 15) s.rebels.push_back({k, 5, {80.0 + 3.0 * k, 80.0}, {6.0, 25.0}});
    return s;
}

/// One object moving towards O_I against the field over `frames` frames,
/// starting at a random position on a ring around O_I.
inline SceneSpec rebel_test_preset(std::uint64_t seed, std::int64_t first_frame = 3, std::int64_t frames = 5)
{
    SceneSpec s;
    s.frames = first_frame + frames;
    s.edges_min = 60;
    s.edges_max = 60;
    s.depth_min = 6.0;
    s.depth_max = 400.0;
    s.spawn_flow_lo = 5.0;
    s.spawn_flow_hi = 10.0;
    s.rebel_clearance = 70.0;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    const double a = angle(rng);
    const PixelPoint dir{std::cos(a), std::sin(a)};
    const PixelPoint start = s.camera.principal + PixelPoint{200.0 * dir.x, 160.0 * dir.y};
    const PixelPoint toward = unit(s.camera.principal - start);
    s.keep_out_dir = dir;
    s.keep_out_offset = 40.0;
    s.rebels = {{first_frame, frames, start, 25.0 * toward}};
    return s;
}

}  // namespace lcs::synth
