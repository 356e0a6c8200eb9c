#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcs/fast9.hpp"
#include "lcs/pipeline.hpp"
#include "lcs/scene_synth.hpp"
#include "lcs/types.hpp"

namespace lcs::io {

using Json = nlohmann::ordered_json;

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

[[noreturn]] inline void fail_at(const std::string& what, int line, const std::string& msg)
{
    throw ParseError(what + " line " + std::to_string(line) + ": " + msg);
}

inline bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

inline double number(const Json& j, const char* key)
{
    if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number()) throw ParseError(std::string("field '") + key + "' is not a number");
    return v.get<double>();
}

inline std::int64_t integer(const Json& j, const char* key)
{
    if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw ParseError(std::string("field '") + key + "' is not an integer");
    return v.get<std::int64_t>();
}

inline Json point(PixelPoint p) { return Json::array({p.x, p.y}); }

inline PixelPoint point(const Json& j)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError("expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

// Frames: one JSON object per line, {"frame":k,"edges":[[x,y],...]}.

inline std::vector<Frame> parse_frames(std::istream& in)
{
    std::vector<Frame> frames;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank(line)) continue;
        Frame f;
        try {
            const Json j = Json::parse(line);
            if (!j.is_object()) throw ParseError("record is not an object");
            f.index = detail::integer(j, "frame");
            if (!j.contains("edges") || !j.at("edges").is_array()) throw ParseError("missing 'edges' array");
            for (const auto& e : j.at("edges")) f.edges.push_back(detail::point(e));
        } catch (const ParseError& e) {
            detail::fail_at("frames", lineno, e.what());
        } catch (const Json::exception& e) {
            detail::fail_at("frames", lineno, e.what());
        }
        if (!frames.empty() && f.index <= frames.back().index)
            throw SequencingError("frames line " + std::to_string(lineno) + ": frame " + std::to_string(f.index) +
                                  " does not follow frame " + std::to_string(frames.back().index));
        frames.push_back(std::move(f));
    }
    return frames;
}

inline std::string frame_record(const Frame& f)
{
    Json edges = Json::array();
    for (const auto& p : f.edges) edges.push_back(detail::point(p));
    Json j;
    j["frame"] = f.index;
    j["edges"] = std::move(edges);
    return j.dump();
}

inline void write_frames(std::ostream& out, const std::vector<Frame>& frames)
{
    for (const auto& f : frames) out << frame_record(f) << '\n';
}

// IMU: {"frame":k,"v_v":..,"a_v":..,"wx":..,"wy":..,"wz":..,"t_f":..} per line.

struct ImuRecord {
    std::int64_t frame = 0;
    ImuSample sample;
};

inline std::vector<ImuRecord> parse_imu(std::istream& in)
{
    std::vector<ImuRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank(line)) continue;
        ImuRecord r;
        try {
            const Json j = Json::parse(line);
            if (!j.is_object()) throw ParseError("record is not an object");
            r.frame = detail::integer(j, "frame");
            r.sample.v_v = detail::number(j, "v_v");
            r.sample.a_v = detail::number(j, "a_v");
            r.sample.omega = {detail::number(j, "wx"), detail::number(j, "wy"), detail::number(j, "wz")};
            r.sample.t_f = detail::number(j, "t_f");
            if (!(r.sample.t_f > 0.0)) throw ParseError("t_f must be > 0");
        } catch (const ParseError& e) {
            detail::fail_at("imu", lineno, e.what());
        } catch (const Json::exception& e) {
            detail::fail_at("imu", lineno, e.what());
        }
        if (!out.empty() && r.frame <= out.back().frame)
            throw SequencingError("imu line " + std::to_string(lineno) + ": frame " + std::to_string(r.frame) +
                                  " does not follow frame " + std::to_string(out.back().frame));
        out.push_back(r);
    }
    if (out.empty()) throw ParseError("imu: no records");
    return out;
}

inline std::string imu_record(std::int64_t frame, const ImuSample& s)
{
    Json j;
    j["frame"] = frame;
    j["v_v"] = s.v_v;
    j["a_v"] = s.a_v;
    j["wx"] = s.omega.x;
    j["wy"] = s.omega.y;
    j["wz"] = s.omega.z;
    j["t_f"] = s.t_f;
    return j.dump();
}

inline void write_imu(std::ostream& out, const std::vector<ImuRecord>& records)
{
    for (const auto& r : records) out << imu_record(r.frame, r.sample) << '\n';
}

/// One sample per frame index. A frame without its own record reuses the most
/// recent earlier one (or the first record when none precedes it) and reports
/// the gap through `warn`.
inline std::vector<ImuSample> align_imu(const std::vector<ImuRecord>& records, const std::vector<Frame>& frames,
                                        const std::function<void(const std::string&)>& warn = {})
{
    if (records.empty()) throw ParseError("imu: no records");
    std::vector<ImuSample> out;
    out.reserve(frames.size());
    std::size_t next = 0;
    std::optional<ImuSample> last;
    for (const auto& f : frames) {
        while (next < records.size() && records[next].frame <= f.index) last = records[next++].sample;
        if (next > 0 && records[next - 1].frame == f.index) {
            out.push_back(records[next - 1].sample);
            continue;
        }
        const ImuSample held = last ? *last : records.front().sample;
        if (warn) warn("imu: no record for frame " + std::to_string(f.index) + ", holding last sample");
        out.push_back(held);
    }
    return out;
}

// Filter state, one JSON object per frame.

inline Json to_json(const FilterState& s)
{
    Json j;
    j["frame"] = s.frame_index;
    Json chi = Json::array();
    for (const auto& g : s.chi) chi.push_back(Json::array({g.loc.x, g.loc.y, g.count}));
    j["chi"] = std::move(chi);
    Json col = Json::array();
    for (const auto& c : s.collectors)
        col.push_back(Json{{"center", detail::point(c.center)}, {"radius", c.radius}, {"count", c.count}});
    j["collectors"] = std::move(col);
    Json psi = Json::array();
    for (const auto& r : s.psi)
        psi.push_back(Json{{"loc", detail::point(r.loc)},
                           {"ty", static_cast<int>(r.ty)},
                           {"extent", Json::array({r.extent.x, r.extent.y})},
                           {"remaining", r.remaining_frames}});
    j["psi"] = std::move(psi);
    Json alpha = Json::array();
    for (const auto& row : s.alpha) {
        Json chain = Json::array();
        for (const auto& e : row.chain) chain.push_back(Json::array({e.frame, e.loc.x, e.loc.y}));
        alpha.push_back(std::move(chain));
    }
    j["alpha"] = std::move(alpha);
    Json en = Json::array();
    for (const auto& e : s.normal_edges)
        en.push_back(Json{{"id", e.id},
                          {"loc", detail::point(e.loc)},
                          {"vel", e.vel},
                          {"beta", e.beta},
                          {"mu", e.mu},
                          {"trust", e.trust}});
    j["normal_edges"] = std::move(en);
    Json er = Json::array();
    for (const auto& e : s.rebel_edges)
        er.push_back(Json{{"id", e.id},
                          {"loc", detail::point(e.loc)},
                          {"vel", e.vel},
                          {"beta", e.beta},
                          {"mu", e.mu},
                          {"origin", detail::point(e.origin)},
                          {"trust", e.trust}});
    j["rebel_edges"] = std::move(er);
    auto circles = [](const std::vector<Circle>& cs) {
        Json arr = Json::array();
        for (const auto& c : cs)
            arr.push_back(Json{{"id", c.id},
                               {"loc", detail::point(c.loc)},
                               {"radius", c.radius},
                               {"vel", c.vel},
                               {"beta", c.beta},
                               {"origin", detail::point(c.origin)},
                               {"trust", c.trust},
                               {"members", c.members}});
        return arr;
    };
    j["normal_circles"] = circles(s.normal_circles);
    j["rebel_circles"] = circles(s.rebel_circles);
    Json sq = Json::array();
    for (const auto& q : s.squares)
        sq.push_back(Json{{"id", q.id},
                          {"loc", detail::point(q.loc)},
                          {"radii", Json::array({q.radii.x, q.radii.y})},
                          {"vel", q.vel},
                          {"beta", q.beta},
                          {"origin", detail::point(q.origin)},
                          {"trust", q.trust}});
    j["squares"] = std::move(sq);
    j["next_id"] = s.next_id;
    j["last_v_v"] = s.last_v_v ? Json(*s.last_v_v) : Json(nullptr);
    return j;
}

inline FilterState state_from_json(const Json& j)
{
    FilterState s;
    s.frame_index = j.at("frame").get<std::int64_t>();
    for (const auto& g : j.at("chi")) s.chi.push_back({{g.at(0).get<double>(), g.at(1).get<double>()}, g.at(2).get<int>()});
    for (const auto& c : j.at("collectors"))
        s.collectors.push_back({detail::point(c.at("center")), c.at("radius").get<double>(), c.at("count").get<int>()});
    for (const auto& r : j.at("psi")) {
        IgnoranceRegion reg;
        reg.loc = detail::point(r.at("loc"));
        const int ty = r.at("ty").get<int>();
        if (ty != 1 && ty != 2) throw ParseError("psi ty must be 1 or 2");
        reg.ty = static_cast<RegionType>(ty);
        reg.extent = {r.at("extent").at(0).get<double>(), r.at("extent").at(1).get<double>()};
        reg.remaining_frames = r.at("remaining").get<int>();
        s.psi.push_back(reg);
    }
    for (const auto& row : j.at("alpha")) {
        RebelAlignmentRow out;
        for (const auto& e : row)
            out.chain.push_back({e.at(0).get<std::int64_t>(), {e.at(1).get<double>(), e.at(2).get<double>()}});
        s.alpha.push_back(std::move(out));
    }
    for (const auto& e : j.at("normal_edges"))
        s.normal_edges.push_back({e.at("id").get<EntityId>(), detail::point(e.at("loc")), e.at("vel").get<double>(),
                                  e.at("beta").get<double>(), e.at("mu").get<double>(), e.at("trust").get<int>()});
    for (const auto& e : j.at("rebel_edges"))
        s.rebel_edges.push_back({e.at("id").get<EntityId>(), detail::point(e.at("loc")), e.at("vel").get<double>(),
                                 e.at("beta").get<double>(), e.at("mu").get<double>(), detail::point(e.at("origin")),
                                 e.at("trust").get<int>()});
    auto circles = [](const Json& arr, CircleKind kind) {
        std::vector<Circle> out;
        for (const auto& c : arr) {
            Circle x;
            x.id = c.at("id").get<EntityId>();
            x.kind = kind;
            x.loc = detail::point(c.at("loc"));
            x.radius = c.at("radius").get<double>();
            x.vel = c.at("vel").get<double>();
            x.beta = c.at("beta").get<double>();
            x.origin = detail::point(c.at("origin"));
            x.trust = c.at("trust").get<int>();
            x.members = c.at("members").get<std::vector<EntityId>>();
            out.push_back(std::move(x));
        }
        return out;
    };
    s.normal_circles = circles(j.at("normal_circles"), CircleKind::normal);
    s.rebel_circles = circles(j.at("rebel_circles"), CircleKind::rebel);
    for (const auto& q : j.at("squares")) {
        Square x;
        x.id = q.at("id").get<EntityId>();
        x.loc = detail::point(q.at("loc"));
        x.radii = {q.at("radii").at(0).get<double>(), q.at("radii").at(1).get<double>()};
        x.vel = q.at("vel").get<double>();
        x.beta = q.at("beta").get<double>();
        x.origin = detail::point(q.at("origin"));
        x.trust = q.at("trust").get<int>();
        s.squares.push_back(x);
    }
    s.next_id = j.at("next_id").get<EntityId>();
    if (!j.at("last_v_v").is_null()) s.last_v_v = j.at("last_v_v").get<double>();
    return s;
}

inline std::string state_record(const FilterState& s) { return to_json(s).dump(); }

inline std::vector<FilterState> parse_states(std::istream& in)
{
    std::vector<FilterState> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank(line)) continue;
        try {
            out.push_back(state_from_json(Json::parse(line)));
        } catch (const ParseError& e) {
            detail::fail_at("state", lineno, e.what());
        } catch (const Json::exception& e) {
            detail::fail_at("state", lineno, e.what());
        }
    }
    return out;
}

// Metrics CSV.

inline constexpr const char* kMetricsHeader = "frame,chi,e_n,e_r,c_n,c_r,s,psi,total";

inline std::string metrics_row(std::int64_t frame, const DimensionalityReport& r)
{
    std::ostringstream os;
    os << frame << ',' << r.chi << ',' << r.e_n << ',' << r.e_r << ',' << r.c_n << ',' << r.c_r << ',' << r.s << ','
       << r.psi << ',' << r.total();
    return os.str();
}

// Binary PGM (P5), 8-bit.

namespace detail {

inline int pgm_token(std::istream& in)
{
    for (;;) {
        const int c = in.peek();
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            in.get();
        } else {
            break;
        }
    }
    int v = -1;
    if (!(in >> v)) throw ParseError("pgm: bad header");
    return v;
}

}  // namespace detail

inline GrayImage read_pgm(std::istream& in)
{
    std::string magic(2, '\0');
    if (!in.read(magic.data(), 2) || magic != "P5") throw ParseError("pgm: expected P5 magic");
    const int w = detail::pgm_token(in);
    const int h = detail::pgm_token(in);
    const int maxval = detail::pgm_token(in);
    if (w <= 0 || h <= 0) throw ParseError("pgm: non-positive size");
    if (maxval <= 0 || maxval > 255) throw ParseError("pgm: only 8-bit images are supported");
    in.get();  // single whitespace before the raster
    GrayImage img(w, h);
    if (!in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size())))
        throw ParseError("pgm: truncated raster");
    return img;
}

inline GrayImage read_pgm(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open image: " + path);
    return read_pgm(in);
}

inline void write_pgm(std::ostream& out, const GrayImage& img)
{
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

// Synthetic scenes.

/// Reads a scene description. `"preset"` (lab, car or rebel) picks the base;
/// other keys override its fields.
inline synth::SceneSpec scene_spec_from_json(const Json& j, std::uint64_t seed = 0)
{
    synth::SceneSpec s;
    const std::string preset = j.value("preset", std::string());
    if (preset == "lab")
        s = synth::lab_preset();
    else if (preset == "car")
        s = synth::car_preset();
    else if (preset == "rebel")
        s = synth::rebel_test_preset(seed);
    else if (!preset.empty())
        throw ParseError("unknown preset '" + preset + "'");

    for (const auto& [key, v] : j.items()) {
        if (key == "preset") continue;
        if (key == "frames") s.frames = v.get<std::int64_t>();
        else if (key == "edges_min") s.edges_min = v.get<std::size_t>();
        else if (key == "edges_max") s.edges_max = v.get<std::size_t>();
        else if (key == "profile") {
            const auto p = v.get<std::string>();
            if (p == "hump") s.profile = synth::CountProfile::hump;
            else if (p == "ramp") s.profile = synth::CountProfile::ramp;
            else throw ParseError("unknown profile '" + p + "'");
        }
        else if (key == "f") s.camera.f = v.get<double>();
        else if (key == "width") s.camera.width = v.get<double>();
        else if (key == "height") s.camera.height = v.get<double>();
        else if (key == "o_i") s.camera.principal = detail::point(v);
        else if (key == "depth_min") s.depth_min = v.get<double>();
        else if (key == "depth_max") s.depth_max = v.get<double>();
        else if (key == "near_clip") s.near_clip = v.get<double>();
        else if (key == "spawn_flow_lo") s.spawn_flow_lo = v.get<double>();
        else if (key == "spawn_flow_hi") s.spawn_flow_hi = v.get<double>();
        else if (key == "v_v") s.v_v = v.get<double>();
        else if (key == "a_v") s.a_v = v.get<double>();
        else if (key == "t_f") s.t_f = v.get<double>();
        else if (key == "omega_sigma") s.omega_sigma = v.get<double>();
        else if (key == "noise_px") s.noise_px = v.get<double>();
        else if (key == "rebel_clearance") s.rebel_clearance = v.get<double>();
        else if (key == "keep_out_dir") s.keep_out_dir = detail::point(v);
        else if (key == "keep_out_offset") s.keep_out_offset = v.get<double>();
        else if (key == "fixed_points") s.fixed_points = v.get<std::vector<std::array<double, 3>>>();
        else if (key == "rebels") {
            s.rebels.clear();
            for (const auto& r : v)
                s.rebels.push_back({r.at("first_frame").get<std::int64_t>(), r.at("frames").get<std::int64_t>(),
                                    detail::point(r.at("start")), detail::point(r.at("velocity"))});
        }
        else throw ParseError("unknown scene key '" + key + "'");
    }
    s.validate();
    return s;
}

inline std::string truth_record(const Frame& f, const std::vector<synth::EdgeLabel>& labels)
{
    Json arr = Json::array();
    for (const auto& l : labels) arr.push_back(Json::array({l.kind == synth::EdgeKind::rebel ? "rebel" : "normal", l.object}));
    Json j;
    j["frame"] = f.index;
    j["labels"] = std::move(arr);
    return j.dump();
}

inline std::vector<ImuRecord> imu_records(const synth::SceneTruth& t)
{
    std::vector<ImuRecord> out;
    for (std::size_t k = 0; k < t.frames.size(); ++k) out.push_back({t.frames[k].index, t.imu[k]});
    return out;
}

}  // namespace lcs::io
