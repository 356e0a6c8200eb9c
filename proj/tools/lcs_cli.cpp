#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lcs/lcs.hpp"

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

/// Companion images are named frame_<k>.pgm.
std::vector<std::pair<std::int64_t, fs::path>> list_images(const std::string& dir)
{
    static const std::regex name(R"(frame_(-?\d+)\.pgm)");
    std::vector<std::pair<std::int64_t, fs::path>> out;
    if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string file = entry.path().filename().string();
        if (std::regex_match(file, m, name)) out.emplace_back(std::stoll(m[1].str()), entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<lcs::Frame> load_frames(const std::string& frames_path, const std::string& images_dir, int threshold)
{
    std::vector<lcs::Frame> frames;
    if (!frames_path.empty()) {
        auto in = open_in(frames_path);
        frames = lcs::io::parse_frames(in);
    }
    if (images_dir.empty()) return frames;

    const auto images = list_images(images_dir);
    if (frames_path.empty()) {
        for (const auto& [k, path] : images) frames.push_back({k, lcs::detect_fast9(lcs::io::read_pgm(path.string()), threshold)});
        return frames;
    }
    for (auto& f : frames) {
        const auto it = std::find_if(images.begin(), images.end(), [&](const auto& e) { return e.first == f.index; });
        if (it != images.end()) f.edges = lcs::detect_fast9(lcs::io::read_pgm(it->second.string()), threshold);
    }
    return frames;
}

lcs::FilterConfig load_config(const std::string& path, bool verbatim)
{
    lcs::FilterConfig cfg = path.empty() ? lcs::FilterConfig{} : lcs::load_config(path);
    if (verbatim) cfg.use_verbatim_eq1 = true;
    cfg.validate();
    return cfg;
}

struct Inputs {
    std::vector<lcs::Frame> frames;
    std::vector<lcs::ImuSample> imu;
};

Inputs load_inputs(const std::string& frames_path, const std::string& images_dir, const std::string& imu_path,
                   int threshold)
{
    if (frames_path.empty() && images_dir.empty()) throw UsageError("one of --frames or --images is required");
    Inputs in;
    in.frames = load_frames(frames_path, images_dir, threshold);
    auto imu_in = open_in(imu_path);
    in.imu = lcs::io::align_imu(lcs::io::parse_imu(imu_in), in.frames, warn);
    return in;
}

int cmd_run(const std::string& frames_path, const std::string& images_dir, const std::string& imu_path,
            const std::string& config_path, const std::string& out_dir, int threshold, bool verbatim)
{
    const auto cfg = load_config(config_path, verbatim);
    const auto in = load_inputs(frames_path, images_dir, imu_path, threshold);
    fs::create_directories(out_dir);
    auto states = open_out(fs::path(out_dir) / "state.jsonl");
    auto metrics = open_out(fs::path(out_dir) / "metrics.csv");
    metrics << lcs::io::kMetricsHeader << '\n';
    lcs::Filter filter(cfg);
    for (std::size_t k = 0; k < in.frames.size(); ++k) {
        const auto& out = filter.process(in.frames[k], in.imu[k]);
        states << lcs::io::state_record(out.state) << '\n';
        metrics << lcs::io::metrics_row(in.frames[k].index, out.report) << '\n';
    }
    return 0;
}

lcs::synth::SceneSpec scene_spec(const std::string& spec_path, const std::string& preset, std::uint64_t seed)
{
    if (!spec_path.empty()) {
        auto in = open_in(spec_path);
        return lcs::io::scene_spec_from_json(lcs::io::Json::parse(in), seed);
    }
    return lcs::io::scene_spec_from_json(lcs::io::Json{{"preset", preset}}, seed);
}

int cmd_synth(const std::string& spec_path, const std::string& preset, std::uint64_t seed, const std::string& out_dir)
{
    const auto spec = scene_spec(spec_path, preset, seed);
    const auto truth = lcs::synth::generate(seed, spec);
    fs::create_directories(out_dir);
    auto frames = open_out(fs::path(out_dir) / "frames.jsonl");
    lcs::io::write_frames(frames, truth.frames);
    auto imu = open_out(fs::path(out_dir) / "imu.jsonl");
    lcs::io::write_imu(imu, lcs::io::imu_records(truth));
    auto labels = open_out(fs::path(out_dir) / "truth.jsonl");
    for (std::size_t k = 0; k < truth.frames.size(); ++k)
        labels << lcs::io::truth_record(truth.frames[k], truth.labels[k]) << '\n';
    return 0;
}

int cmd_render(const std::string& states_path, const std::string& config_path, const std::string& out_dir)
{
    const auto cfg = load_config(config_path, false);
    auto in = open_in(states_path);
    const auto states = lcs::io::parse_states(in);
    fs::create_directories(out_dir);
    for (const auto& s : states) {
        char name[64];
        std::snprintf(name, sizeof name, "frame_%04lld.svg", static_cast<long long>(s.frame_index));
        auto out = open_out(fs::path(out_dir) / name);
        out << lcs::render::frame_svg(s, cfg.camera);
    }
    return 0;
}

int cmd_bench(const std::string& frames_path, const std::string& images_dir, const std::string& imu_path,
              const std::string& config_path, const std::string& preset, std::uint64_t seed, const std::string& out_path,
              int threshold, std::size_t window)
{
    auto cfg = load_config(config_path, false);
    Inputs in;
    if (!preset.empty()) {
        const auto spec = scene_spec("", preset, seed);
        auto truth = lcs::synth::generate(seed, spec);
        cfg.camera = spec.camera;
        in.frames = std::move(truth.frames);
        in.imu = std::move(truth.imu);
    } else {
        if (imu_path.empty()) throw UsageError("--imu is required without --preset");
        in = load_inputs(frames_path, images_dir, imu_path, threshold);
    }

    std::vector<std::size_t> raw;
    for (const auto& f : in.frames) raw.push_back(f.edges.size());
    const auto acc = lcs::baseline_store(lcs::BaselineMode::accumulative, raw);
    const auto last = lcs::baseline_store(lcs::BaselineMode::last_k, raw, window);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty() && out_path != "-") {
        file = open_out(out_path);
        out = &file;
    }
    *out << "frame,raw,lcs,accumulative,last_" << window << '\n';
    lcs::Filter filter(cfg);
    for (std::size_t k = 0; k < in.frames.size(); ++k) {
        const auto& step = filter.process(in.frames[k], in.imu[k]);
        *out << in.frames[k].index << ',' << raw[k] << ',' << step.report.total() << ',' << acc[k] << ',' << last[k]
             << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Line-Circle-Square landmark filter"};
    app.require_subcommand(1);

    std::string frames_path, images_dir, imu_path, config_path, out_dir;
    std::uint64_t seed = 1;
    int threshold = 20;
    bool verbatim = false;

    auto* run = app.add_subcommand("run", "filter a frame stream, writing state.jsonl and metrics.csv");
    run->add_option("--frames", frames_path, "frame records (JSONL)");
    run->add_option("--images", images_dir, "directory of frame_<k>.pgm images for corner detection");
    run->add_option("--imu", imu_path, "IMU records (JSONL)")->required();
    run->add_option("--config", config_path, "key=value parameter file");
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--seed", seed, "accepted for symmetry with synth; the filter is deterministic");
    run->add_option("--threshold", threshold, "FAST-9 intensity threshold")->check(CLI::NonNegativeNumber);
    run->add_flag("--verbatim-eq1", verbatim, "use the printed y-row of the rotational motion field");

    std::string spec_path, preset = "lab";
    auto* syn = app.add_subcommand("synth", "generate a synthetic dataset");
    syn->add_option("--spec", spec_path, "scene description (JSON)");
    syn->add_option("--preset", preset, "lab, car or rebel")->check(CLI::IsMember({"lab", "car", "rebel"}));
    syn->add_option("--seed", seed, "random seed");
    syn->add_option("--out", out_dir, "output directory")->required();

    std::string states_path;
    auto* ren = app.add_subcommand("render", "draw per-frame SVG overlays from a state stream");
    ren->add_option("--states", states_path, "state records (JSONL)")->required();
    ren->add_option("--config", config_path, "key=value parameter file (camera size)");
    ren->add_option("--out", out_dir, "output directory")->required();

    std::string bench_preset;
    std::size_t window = 5;
    auto* ben = app.add_subcommand("bench", "compare filter dimensionality with naive edge stores");
    ben->add_option("--frames", frames_path, "frame records (JSONL)");
    ben->add_option("--images", images_dir, "directory of frame_<k>.pgm images");
    ben->add_option("--imu", imu_path, "IMU records (JSONL)");
    ben->add_option("--config", config_path, "key=value parameter file");
    ben->add_option("--preset", bench_preset, "generate the input instead: lab, car or rebel")
        ->check(CLI::IsMember({"lab", "car", "rebel"}));
    ben->add_option("--seed", seed, "seed for --preset");
    ben->add_option("--window", window, "trailing window of the last-k store")->check(CLI::PositiveNumber);
    ben->add_option("--out", out_dir, "CSV path, - for stdout");
    ben->add_option("--threshold", threshold, "FAST-9 intensity threshold")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*run) return cmd_run(frames_path, images_dir, imu_path, config_path, out_dir, threshold, verbatim);
        if (*syn) return cmd_synth(spec_path, preset, seed, out_dir);
        if (*ren) return cmd_render(states_path, config_path, out_dir);
        if (*ben)
            return cmd_bench(frames_path, images_dir, imu_path, config_path, bench_preset, seed, out_dir, threshold,
                             window);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
