#pragma once

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "lcs/trust.hpp"
#include "lcs/types.hpp"

namespace lcs {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filter parameters. Defaults reproduce the lab experiment table.
///
/// Angles are degrees. `eps_v_n` and `eps_v_r` are percentages of the vehicle
/// speed; `eps_v` and `eps_v_s` are plain fractions; `rho_c` is a percentage.
struct FilterConfig {
    CameraModel camera;
    TrustLadder circle_trust{2, 3, 5};
    TrustLadder square_trust{3, 5, 7};

    double delta_v = 9.0;
    double delta_beta_1 = 90.0;
    double delta_beta_2 = 15.0;
    double mu_0 = 25.0;
    double rho_c = 40.0;

    double eps_beta_n = 20.0;
    double eps_beta_r = 50.0;
    double eps_beta_s = 20.0;
    double eps_beta = 20.0;

    double eps_v_n = 40.0;
    double eps_v_r = 100.0;
    double eps_v = 0.7;
    double eps_v_s = 0.7;

    int psi_lifetime = 1;
    bool use_verbatim_eq1 = false;

    /// Image-plane pixels per cm of travel used to turn velocities into displacements.
    double px_per_cm = 2.5;
    /// Radius within which an unmatched observation is classified against a prediction.
    double assoc_reach = 50.0;
    /// Spatial gate for circle membership around the seed edge.
    double circle_reach = 200.0;
    /// Lower bound on a normal edge's detection radius after an update.
    double mu_min = 10.0;

    /// Normal-edge velocity tolerance in cm/s for the given vehicle speed.
    double normal_velocity_tolerance(double v_v) const { return eps_v_n / 100.0 * std::abs(v_v); }
    /// Rebel velocity tolerance in cm/s for the given vehicle speed.
    double rebel_velocity_tolerance(double v_v) const { return eps_v_r / 100.0 * std::abs(v_v); }

    void validate() const
    {
        auto fail = [](const std::string& what) { throw ConfigError("invalid config: " + what); };
        if (!(camera.f > 0.0)) fail("f must be > 0");
        if (camera.principal.x < 0.0 || camera.principal.x > camera.width || camera.principal.y < 0.0 ||
            camera.principal.y > camera.height)
            fail("principal point outside the image");
        if (!circle_trust.valid()) fail("circle trust ladder");
        if (!square_trust.valid()) fail("square trust ladder");
        for (double v : {delta_v, delta_beta_1, delta_beta_2, mu_0, eps_beta_n, eps_beta_r, eps_beta_s, eps_beta,
                         eps_v_n, eps_v_r, eps_v, eps_v_s, assoc_reach, circle_reach, mu_min})
            if (!(v >= 0.0)) fail("tolerances must be >= 0");
        if (!(rho_c > 0.0 && rho_c <= 100.0)) fail("rho_c must be in (0, 100]");
        if (psi_lifetime < 1) fail("psi_lifetime must be >= 1");
        if (!(px_per_cm > 0.0)) fail("px_per_cm must be > 0");
    }
};

namespace detail {

struct ConfigField {
    std::function<std::string(const FilterConfig&)> get;
    std::function<void(FilterConfig&, std::string_view)> set;
};

inline double parse_double(std::string_view key, std::string_view text)
{
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError("bad number for '" + std::string(key) + "': " + std::string(text));
    return v;
}

inline int parse_int(std::string_view key, std::string_view text)
{
    int v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError("bad integer for '" + std::string(key) + "': " + std::string(text));
    return v;
}

inline bool parse_bool(std::string_view key, std::string_view text)
{
    if (text == "1" || text == "true") return true;
    if (text == "0" || text == "false") return false;
    throw ConfigError("bad boolean for '" + std::string(key) + "': " + std::string(text));
}

inline std::string format_double(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline const std::map<std::string, ConfigField, std::less<>>& config_fields()
{
    static const auto fields = [] {
        std::map<std::string, ConfigField, std::less<>> f;
        auto real = [&](const char* key, auto accessor) {
            f[key] = {[accessor](const FilterConfig& c) { return format_double(accessor(const_cast<FilterConfig&>(c))); },
                      [accessor, key](FilterConfig& c, std::string_view v) { accessor(c) = parse_double(key, v); }};
        };
        auto integer = [&](const char* key, auto accessor) {
            f[key] = {[accessor](const FilterConfig& c) { return std::to_string(accessor(const_cast<FilterConfig&>(c))); },
                      [accessor, key](FilterConfig& c, std::string_view v) { accessor(c) = parse_int(key, v); }};
        };
        real("f", [](FilterConfig& c) -> double& { return c.camera.f; });
        real("o_i_x", [](FilterConfig& c) -> double& { return c.camera.principal.x; });
        real("o_i_y", [](FilterConfig& c) -> double& { return c.camera.principal.y; });
        real("width", [](FilterConfig& c) -> double& { return c.camera.width; });
        real("height", [](FilterConfig& c) -> double& { return c.camera.height; });
        integer("tr_c_c", [](FilterConfig& c) -> int& { return c.circle_trust.tr_c; });
        integer("tr_c_s", [](FilterConfig& c) -> int& { return c.circle_trust.tr_s; });
        integer("tr_c_m", [](FilterConfig& c) -> int& { return c.circle_trust.tr_m; });
        integer("tr_s_c", [](FilterConfig& c) -> int& { return c.square_trust.tr_c; });
        integer("tr_s_s", [](FilterConfig& c) -> int& { return c.square_trust.tr_s; });
        integer("tr_s_m", [](FilterConfig& c) -> int& { return c.square_trust.tr_m; });
        real("delta_v", [](FilterConfig& c) -> double& { return c.delta_v; });
        real("delta_beta_1", [](FilterConfig& c) -> double& { return c.delta_beta_1; });
        real("delta_beta_2", [](FilterConfig& c) -> double& { return c.delta_beta_2; });
        real("mu_0", [](FilterConfig& c) -> double& { return c.mu_0; });
        real("rho_c", [](FilterConfig& c) -> double& { return c.rho_c; });
        real("eps_beta_n", [](FilterConfig& c) -> double& { return c.eps_beta_n; });
        real("eps_beta_r", [](FilterConfig& c) -> double& { return c.eps_beta_r; });
        real("eps_beta_s", [](FilterConfig& c) -> double& { return c.eps_beta_s; });
        real("eps_beta", [](FilterConfig& c) -> double& { return c.eps_beta; });
        real("eps_v_n", [](FilterConfig& c) -> double& { return c.eps_v_n; });
        real("eps_v_r", [](FilterConfig& c) -> double& { return c.eps_v_r; });
        real("eps_v", [](FilterConfig& c) -> double& { return c.eps_v; });
        real("eps_v_s", [](FilterConfig& c) -> double& { return c.eps_v_s; });
        integer("psi_lifetime", [](FilterConfig& c) -> int& { return c.psi_lifetime; });
        f["use_verbatim_eq1"] = {[](const FilterConfig& c) { return std::string(c.use_verbatim_eq1 ? "1" : "0"); },
                                 [](FilterConfig& c, std::string_view v) { c.use_verbatim_eq1 = parse_bool("use_verbatim_eq1", v); }};
        real("px_per_cm", [](FilterConfig& c) -> double& { return c.px_per_cm; });
        real("assoc_reach", [](FilterConfig& c) -> double& { return c.assoc_reach; });
        real("mu_min", [](FilterConfig& c) -> double& { return c.mu_min; });
        real("circle_reach", [](FilterConfig& c) -> double& { return c.circle_reach; });
        return f;
    }();
    return fields;
}

inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace detail

/// Parses `key=value` lines. Blank lines and `#` comments are ignored; keys not
/// present keep their defaults. Unknown keys are an error.
inline FilterConfig parse_config(std::istream& in)
{
    FilterConfig cfg;
    const auto& fields = detail::config_fields();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto text = detail::trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        const auto key = detail::trim(text.substr(0, eq));
        const auto value = detail::trim(text.substr(eq + 1));
        const auto it = fields.find(key);
        if (it == fields.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + std::string(key) + "'");
        it->second.set(cfg, value);
    }
    cfg.validate();
    return cfg;
}

inline FilterConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

/// Writes every key in a stable (sorted) order.
inline void write_config(std::ostream& out, const FilterConfig& cfg)
{
    for (const auto& [key, field] : detail::config_fields()) out << key << '=' << field.get(cfg) << '\n';
}

}  // namespace lcs
