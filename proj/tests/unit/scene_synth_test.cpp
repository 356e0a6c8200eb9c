#include <map>

#include <gtest/gtest.h>

#include "lcs/scene_synth.hpp"

using namespace lcs;
using namespace lcs::synth;

namespace {

SceneSpec static_scene()
{
    SceneSpec s = lab_preset();
    s.rebels.clear();
    return s;
}

/// Pixel of each static point id, per frame.
std::vector<std::map<std::uint64_t, PixelPoint>> tracks(const SceneTruth& t)
{
    std::vector<std::map<std::uint64_t, PixelPoint>> out(t.frames.size());
    for (std::size_t k = 0; k < t.frames.size(); ++k)
        for (std::size_t i = 0; i < t.labels[k].size(); ++i)
            if (t.labels[k][i].kind == EdgeKind::normal) out[k][t.labels[k][i].object] = t.frames[k].edges[i];
    return out;
}

}  // namespace

TEST(Project, OnAxisPointHitsPrincipalPoint)
{
    const SceneSpec s;
    for (double z : {6.0, 50.0, 1000.0}) {
        const auto p = synth::detail::project({0, 0, z}, {}, s);
        EXPECT_TRUE(p.visible);
        EXPECT_EQ(p.pixel, s.camera.principal);
    }
}

TEST(Project, BehindNearClipIsInvisible)
{
    const SceneSpec s;
    EXPECT_FALSE(synth::detail::project({0, 0, 1.0}, {}, s).visible);
    EXPECT_FALSE(synth::detail::project({0, 0, -10.0}, {}, s).visible);
}

TEST(Project, BackProjectionRoundTrips)
{
    const SceneSpec s;
    CameraPose pose;
    pose.position = {3, -2, 10};
    pose.rotation = synth::detail::rotation({0.01, -0.02, 0.005});
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ux(0, 640), uy(0, 480), uz(6, 300);
    for (int i = 0; i < 500; ++i) {
        const PixelPoint px{ux(rng), uy(rng)};
        const auto p = synth::detail::project(synth::detail::back_project(px, uz(rng), pose, s), pose, s);
        EXPECT_NEAR(p.pixel.x, px.x, 1e-9);
        EXPECT_NEAR(p.pixel.y, px.y, 1e-9);
    }
}

TEST(Generate, StaticPointsMoveOutwardAlongRays)
{
    const auto t = generate(2, static_scene());
    const auto tr = tracks(t);
    const PixelPoint o = SceneSpec{}.camera.principal;
    std::size_t checked = 0;
    for (std::size_t k = 1; k < tr.size(); ++k)
        for (const auto& [id, p1] : tr[k]) {
            auto it = tr[k - 1].find(id);
            if (it == tr[k - 1].end()) continue;
            const PixelPoint a = it->second - o;
            const PixelPoint b = p1 - o;
            EXPECT_GT(norm(b), norm(a));
            EXPECT_NEAR(a.x * b.y - a.y * b.x, 0.0, 1e-6 * norm(a) * norm(b));
            ++checked;
        }
    EXPECT_GT(checked, 1000u);
}

TEST(Generate, SpawnedFlowLiesInBand)
{
    const SceneSpec spec = static_scene();
    const auto t = generate(3, spec);
    const auto tr = tracks(t);
    std::size_t inside = 0, total = 0;
    for (std::size_t k = 1; k < tr.size(); ++k)
        for (const auto& [id, p1] : tr[k]) {
            if (k >= 2 && tr[k - 2].count(id)) continue;
            auto it = tr[k - 1].find(id);
            if (it == tr[k - 1].end()) continue;
            const double flow = distance(it->second, p1);
            ++total;
            inside += flow >= spec.spawn_flow_lo - 1e-9 && flow <= spec.spawn_flow_hi + 1e-9;
        }
    ASSERT_GT(total, 100u);
    EXPECT_GE(static_cast<double>(inside), 0.95 * static_cast<double>(total));
}

TEST(Generate, StaticCountFollowsTarget)
{
    const SceneSpec spec = static_scene();
    const auto t = generate(4, spec);
    for (std::int64_t k = 0; k < spec.frames; ++k)
        EXPECT_EQ(t.frames[k].edges.size(), target_edges(spec, k)) << k;
    EXPECT_EQ(target_edges(spec, 0), spec.edges_min);
    EXPECT_EQ(target_edges(spec, spec.frames - 1), spec.edges_max);
}

TEST(Generate, HumpProfilePeaksMidRun)
{
    SceneSpec s;
    s.frames = 21;
    s.edges_min = 10;
    s.edges_max = 50;
    EXPECT_EQ(target_edges(s, 0), 10u);
    EXPECT_EQ(target_edges(s, 10), 50u);
    EXPECT_EQ(target_edges(s, 20), 10u);
}

TEST(Generate, RebelMovesAgainstTheField)
{
    const FilterConfig cfg;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const SceneSpec spec = rebel_test_preset(seed);
        const auto& r = spec.rebels[0];
        const PixelPoint o = spec.camera.principal;
        for (std::int64_t k = r.first_frame; k + 1 < r.first_frame + r.frames; ++k) {
            const PixelPoint p0 = rebel_position(r, k);
            const PixelPoint p1 = rebel_position(r, k + 1);
            const double radial = angle_of(p0, o);
            const double moved = angle_of(p1, p0);
            EXPECT_GT(std::abs(wrap_deg(moved - radial)), cfg.delta_v) << seed;
        }
    }
}

TEST(Generate, RebelEdgesLabelledAtTheirPositions)
{
    const SceneSpec spec = rebel_test_preset(7);
    const auto t = generate(7, spec);
    const auto& r = spec.rebels[0];
    for (std::int64_t k = 0; k < spec.frames; ++k) {
        std::size_t rebels = 0;
        for (std::size_t i = 0; i < t.labels[k].size(); ++i) {
            if (t.labels[k][i].kind != EdgeKind::rebel) continue;
            ++rebels;
            EXPECT_EQ(t.frames[k].edges[i], rebel_position(r, k));
        }
        EXPECT_EQ(rebels, rebel_active(r, k) && spec.camera.contains(rebel_position(r, k)) ? 1u : 0u);
    }
}

TEST(Generate, ReproducibleForSeed)
{
    const SceneSpec spec = lab_preset();
    const auto a = generate(11, spec);
    const auto b = generate(11, spec);
    const auto c = generate(12, spec);
    ASSERT_EQ(a.frames.size(), b.frames.size());
    for (std::size_t k = 0; k < a.frames.size(); ++k) {
        EXPECT_EQ(a.frames[k].edges, b.frames[k].edges);
        EXPECT_EQ(a.imu[k], b.imu[k]);
    }
    EXPECT_NE(a.frames[0].edges, c.frames[0].edges);
}

TEST(Generate, ImuSpeedIntegratesAcceleration)
{
    const SceneSpec spec = lab_preset();
    const auto t = generate(1, spec);
    for (std::size_t k = 0; k < t.imu.size(); ++k) {
        EXPECT_NEAR(t.imu[k].v_v, spec.v_v + spec.a_v * spec.t_f * static_cast<double>(k), 1e-12);
        EXPECT_DOUBLE_EQ(t.imu[k].t_f, spec.t_f);
    }
}

TEST(Generate, ZeroRotationKeepsCameraOnAxis)
{
    const auto t = generate(1, static_scene());
    for (const auto& pose : t.trajectory) {
        EXPECT_EQ(pose.position[0], 0.0);
        EXPECT_EQ(pose.position[1], 0.0);
    }
}

TEST(SceneSpec, RejectsInvalid)
{
    SceneSpec s;
    s.frames = 0;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = SceneSpec{};
    s.edges_min = 5;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = SceneSpec{};
    s.t_f = 0.0;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = SceneSpec{};
    s.spawn_flow_lo = 8;
    s.spawn_flow_hi = 4;
    EXPECT_THROW(s.validate(), std::invalid_argument);
}
