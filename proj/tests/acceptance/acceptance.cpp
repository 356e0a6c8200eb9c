#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "lcs/lcs.hpp"
#include "oracles.hpp"

#ifndef LCS_CLI_PATH
#error "LCS_CLI_PATH must name the lcs_cli executable"
#endif

using namespace lcs;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Result {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(int n, const std::function<Result()>& criterion)
{
    Result r;
    try {
        r = criterion();
    } catch (const std::exception& e) {
        r = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d: %s %s\n", n, r.pass ? "PASS" : "FAIL", r.detail.c_str());
    std::fflush(stdout);
    failures += r.pass ? 0 : 1;
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<std::size_t> raw_counts(const synth::SceneTruth& t)
{
    std::vector<std::size_t> out;
    for (const auto& f : t.frames) out.push_back(f.edges.size());
    return out;
}

Result rebel_latency()
{
    const auto t0 = Clock::now();
    int hits = 0;
    std::string misses;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto spec = synth::rebel_test_preset(seed);
        const auto truth = synth::generate(seed, spec);
        const auto& obj = spec.rebels[0];
        Filter f{FilterConfig{}};
        std::int64_t first = -1;
        for (std::size_t k = 0; k < truth.frames.size(); ++k) {
            const auto& s = f.process(truth.frames[k], truth.imu[k]).state;
            const auto at = synth::rebel_position(obj, static_cast<std::int64_t>(k));
            for (const auto& r : s.rebel_edges)
                if (first < 0 && distance(r.loc, at) < 5.0) first = static_cast<std::int64_t>(k);
        }
        if (first == obj.first_frame + 2)
            ++hits;
        else
            misses += fmt(" seed%llu@%lld", static_cast<unsigned long long>(seed), static_cast<long long>(first));
    }
    const double secs = seconds_since(t0);
    return {hits == 50 && secs < 1.0, fmt("%d/50 detected on third frame, %.3f s", hits, secs) + misses};
}

Result lab_dimensionality()
{
    const auto t0 = Clock::now();
    const auto truth = synth::generate(1, synth::lab_preset());
    const auto last5 = baseline_store(BaselineMode::last_k, raw_counts(truth), 5);
    Filter f{FilterConfig{}};
    double sum = 0.0, worst = 0.0;
    std::int64_t worst_k = -1;
    for (std::size_t k = 0; k < truth.frames.size(); ++k) {
        const double total = static_cast<double>(f.process(truth.frames[k], truth.imu[k]).report.total());
        sum += total;
        if (k > 10) {
            const double ratio = total / static_cast<double>(last5[k]);
            if (ratio > worst) worst = ratio, worst_k = static_cast<std::int64_t>(k);
        }
    }
    const double avg = sum / static_cast<double>(truth.frames.size());
    const double secs = seconds_since(t0);
    return {worst <= 0.5 && avg >= 50 && avg <= 300 && secs < 10.0,
            fmt("average total %.1f, worst total/last-5 %.3f at frame %lld, %.2f s", avg, worst,
                static_cast<long long>(worst_k), secs)};
}

Result car_consistency()
{
    const auto t0 = Clock::now();
    const auto truth = synth::generate(1, synth::car_preset());
    const auto last8 = baseline_store(BaselineMode::last_k, raw_counts(truth), 8);
    Filter f{FilterConfig{}};
    double worst = 0.0, sum = 0.0;
    for (std::size_t k = 0; k < truth.frames.size(); ++k) {
        const double total = static_cast<double>(f.process(truth.frames[k], truth.imu[k]).report.total());
        sum += total;
        if (k >= 8) worst = std::max(worst, total / static_cast<double>(last8[k]));
    }
    return {worst < 1.0, fmt("worst total/last-8 after frame 8 is %.3f, average total %.1f, %.2f s", worst,
                             sum / static_cast<double>(truth.frames.size()), seconds_since(t0))};
}

Result estimator_properties()
{
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u(-1000, 1000);
    std::uniform_int_distribution<int> ut(0, 8);
    int bad = 0;
    for (int i = 0; i < 10000; ++i) {
        const int tr_c = 1 + ut(rng) % 3;
        const int tr = tr_c + ut(rng);
        const double prior = u(rng), meas = u(rng);
        const double e = circle::estimate_trusted(prior, meas, tr, tr_c);
        const double lo = std::min(prior, meas), hi = std::max(prior, meas);
        bad += e < lo - 1e-9 || e > hi + 1e-9;
        double x = prior, gap = std::abs(prior - meas);
        for (int k = 0; k < 20; ++k) {
            x = circle::estimate_trusted(x, meas, tr, tr_c);
            const double g = std::abs(x - meas);
            bad += g > gap + 1e-9;
            gap = g;
        }
        const PixelPoint pp{u(rng), u(rng)}, pm{u(rng), u(rng)};
        bad += circle::estimate_trusted(pp, pm, tr_c, tr_c) != pm;
        bad += circle::estimate_trusted(prior, meas, tr_c, tr_c) != meas;
    }
    return {bad == 0, fmt("%d violations over 10000 cases", bad)};
}

Square square_at(PixelPoint loc, Radii r, PixelPoint origin = {0, 0})
{
    Square s;
    s.loc = loc;
    s.radii = r;
    s.origin = origin;
    s.beta = angle_of(loc, origin);
    return s;
}

Result geometry()
{
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> uc(-300, 300), ur(1, 120), uo(-800, 800);
    double worst_residual = 0.0;
    int ellipses = 0;
    while (ellipses < 1000) {
        const Square s = square_at({uc(rng), uc(rng)}, {ur(rng), ur(rng)}, {uo(rng), uo(rng)});
        const auto t = square::ellipse_tangent_point(s);
        if (!t) continue;
        ++ellipses;
        worst_residual = std::max({worst_residual, std::abs(square::ellipse_residual(s, *t)),
                                   std::abs(square::tangency_residual(s, *t))});
    }
    double circle_err = 0.0;
    std::uniform_real_distribution<double> ua(-oracle::kPi, oracle::kPi), uk(1.05, 20);
    for (int i = 0; i < 1000; ++i) {
        const double r = ur(rng), a = ua(rng), d = r * uk(rng);
        const PixelPoint c{uc(rng), uc(rng)};
        const PixelPoint o = c + PixelPoint{d * std::cos(a), d * std::sin(a)};
        const auto t = square::ellipse_tangent_point(square_at(c, {r, r}, o));
        if (!t) {
            circle_err = 1e300;
            continue;
        }
        // Both analytic tangent points of a circle seen from o.
        const double half = std::acos(r / d);
        const double base = std::atan2(o.y - c.y, o.x - c.x);
        double best = 1e300;
        for (double s : {-1.0, 1.0}) {
            const PixelPoint q = c + PixelPoint{r * std::cos(base + s * half), r * std::sin(base + s * half)};
            best = std::min(best, distance(q, *t));
        }
        circle_err = std::max(circle_err, best / std::max(1.0, r));
    }
    double worst_rho = 0.0;
    std::uniform_real_distribution<double> pc(0, 100), pr(5, 50);
    for (int i = 0; i < 1000; ++i) {
        const Square a = square_at({pc(rng), pc(rng)}, {pr(rng), pr(rng)});
        const Square b = square_at({pc(rng), pc(rng)}, {pr(rng), pr(rng)});
        worst_rho = std::max(worst_rho,
                             std::abs(square::square_overlap_rho(a, b).rho - oracle::monte_carlo_rho(a, b, rng, 100000)));
    }
    double worst_beta = 0.0;
    std::uniform_real_distribution<double> ux(0, 640);
    for (int i = 0; i < 1000; ++i) {
        Circle a, b, bp;
        a.loc = {ux(rng), ux(rng)};
        b.loc = {ux(rng), ux(rng)};
        bp.loc = {ux(rng), ux(rng)};
        b.radius = 10;
        const auto g = square::shrink_geometry(a, b, bp);
        if (!g) continue;
        worst_beta = std::max(worst_beta, std::abs(g->beta_m - oracle::law_of_cosines(a.loc, b.loc, bp.loc)));
    }
    const bool pass = worst_residual < 1e-9 && circle_err < 1e-9 && worst_rho <= 1.0 && worst_beta < 1e-9;
    return {pass, fmt("ellipse residual %.2e, circle case %.2e, overlap vs Monte-Carlo %.3f pp, beta_m %.2e",
                      worst_residual, circle_err, worst_rho, worst_beta)};
}

Result brute_force()
{
    const FilterConfig c;
    std::mt19937_64 rng(66);
    std::uniform_real_distribution<double> ux(0, 640), uy(0, 480), uv(0, 8), ub(-180, 180), um(0, 40);
    std::uniform_real_distribution<double> cv(2, 3.5), cr(10, 40);
    std::uniform_int_distribution<int> un(1, 200);
    int mismatched = 0;
    OpCounter counter;
    for (int frame = 0; frame < 100; ++frame) {
        const int n = un(rng);
        std::vector<NormalEdge> normals;
        std::vector<RebelEdge> rebels;
        for (int i = 0; i < n; ++i) {
            NormalEdge e;
            e.id = static_cast<EntityId>(i);
            e.loc = {ux(rng), uy(rng)};
            e.vel = uv(rng);
            e.mu = 10;
            e.beta = angle_of(e.loc, c.camera.principal);
            normals.push_back(e);
            RebelEdge r;
            r.id = static_cast<EntityId>(i);
            r.loc = {ux(rng), uy(rng)};
            r.vel = uv(rng);
            r.beta = ub(rng);
            r.mu = um(rng);
            rebels.push_back(r);
        }
        const double v = 3.0;
        auto same = [](const auto& got, const auto& want, const auto& edges) {
            if (got.size() != want.size()) return false;
            for (std::size_t g = 0; g < want.size(); ++g) {
                std::vector<EntityId> ids;
                for (auto i : want[g]) ids.push_back(edges[i].id);
                if (got[g].circle.members != ids) return false;
            }
            return true;
        };
        const auto got_n = lcs::detail::group_circles<NormalEdge>(
            normals, c, [&](const NormalEdge& s, const NormalEdge& e) { return circle::normal_member(s, e, c, v); },
            [&](std::span<const NormalEdge> m) { return circle::circle_from_normal_edges(m, c); }, counter);
        const auto want_n = oracle::group_all_pairs(
            normals, [&](const NormalEdge& s, const NormalEdge& e) { return oracle::normal_member(s, e, c, v); });
        const auto got_r = lcs::detail::group_circles<RebelEdge>(
            rebels, c, [&](const RebelEdge& s, const RebelEdge& e) { return circle::rebel_member(s, e, c, v); },
            [&](std::span<const RebelEdge> m) { return circle::circle_from_rebel_edges(m, c); }, counter);
        const auto want_r = oracle::group_all_pairs(
            rebels, [&](const RebelEdge& s, const RebelEdge& e) { return oracle::rebel_member(s, e, c, v); });
        mismatched += !same(got_n, want_n, normals) || !same(got_r, want_r, rebels);

        // Squares are built from the frame's circles.
        std::vector<Circle> cs;
        for (int i = 0; i < std::min(n, 60); ++i) {
            Circle k;
            k.loc = {ux(rng), uy(rng)};
            k.vel = cv(rng);
            k.beta = 15.0 * std::round(ub(rng) / 15.0);
            k.radius = cr(rng);
            k.origin = c.camera.principal;
            cs.push_back(k);
        }
        const auto got_s = lcs::detail::collect_mean_squares(cs, c);
        const auto want_s = oracle::mean_squares(cs, c);
        bool ok = got_s.size() == want_s.size();
        for (std::size_t k = 0; ok && k < got_s.size(); ++k)
            ok = distance(got_s[k].loc, want_s[k].loc) < 1e-9 && std::abs(got_s[k].radii.x - want_s[k].radii.x) < 1e-9 &&
                 std::abs(got_s[k].radii.y - want_s[k].radii.y) < 1e-9;
        mismatched += !ok;
    }
    return {mismatched == 0, fmt("%d of 100 frames differ from exhaustive evaluation", mismatched)};
}

Result scaling()
{
    std::vector<double> counts;
    for (int n : {400, 800, 1600}) {
        std::uint64_t total = 0;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            // Constant density: the image area grows with n.
            const double scale = std::sqrt(n / 400.0);
            synth::SceneSpec s;
            s.frames = 12;
            s.edges_min = s.edges_max = static_cast<std::size_t>(n);
            s.camera.width *= scale;
            s.camera.height *= scale;
            s.camera.f *= scale;
            s.camera.principal = {s.camera.width / 2, s.camera.height / 2};
            s.depth_min = 6;
            s.depth_max = 400;
            s.spawn_flow_lo = 5;
            s.spawn_flow_hi = 10;
            const auto truth = synth::generate(seed, s);
            FilterConfig cfg;
            cfg.camera = s.camera;
            Filter f{cfg};
            for (std::size_t k = 0; k < truth.frames.size(); ++k)
                total += f.process(truth.frames[k], truth.imu[k]).stats.circle_comparisons;
        }
        counts.push_back(static_cast<double>(total));
    }
    const double r1 = counts[1] / counts[0], r2 = counts[2] / counts[1];
    return {r1 <= 2.4 && r2 <= 2.4, fmt("comparison growth %.3f (400->800), %.3f (800->1600)", r1, r2)};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Result determinism()
{
    const fs::path dir = fs::temp_directory_path() / "lcs_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cli = std::string("\"") + LCS_CLI_PATH + "\" ";
    auto sh = [](const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); };
    if (sh(cli + "synth --preset lab --seed 7 --out " + (dir / "data").string()) != 0) return {false, "synth failed"};
    for (const char* out : {"a", "b"})
        if (sh(cli + "run --frames " + (dir / "data/frames.jsonl").string() + " --imu " +
               (dir / "data/imu.jsonl").string() + " --out " + (dir / out).string()) != 0)
            return {false, "run failed"};
    const bool states = slurp(dir / "a/state.jsonl") == slurp(dir / "b/state.jsonl");
    const bool metrics = slurp(dir / "a/metrics.csv") == slurp(dir / "b/metrics.csv");
    const bool nonempty = !slurp(dir / "a/state.jsonl").empty();
    fs::remove_all(dir);
    return {states && metrics && nonempty,
            fmt("state.jsonl %s, metrics.csv %s", states ? "identical" : "differs", metrics ? "identical" : "differs")};
}

Result kinematic_identities()
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-400, 400), uc(0, 640), ur(5, 80);
    const CameraModel cam;
    double worst_rot = 0.0, worst_sq = 0.0, worst_axis = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const PixelPoint rel{u(rng), u(rng)};
        worst_rot = std::max(worst_rot, distance(rotate_motion_field(rel, cam, {}), rel + cam.principal));
        Square s = square_at({uc(rng), uc(rng)}, {ur(rng), ur(rng)}, {uc(rng), uc(rng)});
        const Square p = square::predict_square(s, {0.0, 0.0, {}, 1.0}, cam, FilterConfig{}.px_per_cm);
        worst_sq = std::max({worst_sq, distance(p.loc, s.loc), std::abs(p.radii.x - s.radii.x) / s.radii.x,
                             std::abs(p.radii.y - s.radii.y) / s.radii.y});
    }
    synth::SceneSpec spec;
    spec.frames = 50;
    spec.fixed_points = {{0.0, 0.0, 400.0}};
    const auto truth = synth::generate(3, spec);
    bool all_frames = true;
    for (std::size_t k = 0; k < truth.frames.size(); ++k) {
        all_frames = all_frames && truth.frames[k].edges.size() == 1;
        if (!truth.frames[k].edges.empty())
            worst_axis = std::max(worst_axis, distance(truth.frames[k].edges[0], spec.camera.principal));
    }
    const bool pass = worst_rot < 1e-9 && worst_sq < 1e-6 && worst_axis == 0.0 && all_frames;
    return {pass, fmt("rotation %.2e, square %.2e, on-axis %.2e over %zu frames", worst_rot, worst_sq, worst_axis,
                      truth.frames.size())};
}

}  // namespace

int main()
{
    report(1, rebel_latency);
    report(2, lab_dimensionality);
    report(3, car_consistency);
    report(4, estimator_properties);
    report(5, geometry);
    report(6, brute_force);
    report(7, scaling);
    report(8, determinism);
    report(9, kinematic_identities);
    return failures == 0 ? 0 : 1;
}
