#pragma once

#include <sstream>
#include <string>

#include "lcs/types.hpp"

namespace lcs::render {

/// Panel colours.
struct Palette {
    const char* chi = "yellow";
    const char* ignored = "yellow";
    const char* ignored_edge = "red";
    const char* collector = "white";
    const char* normal_edge = "blue";
    const char* rebel_edge = "red";
    const char* normal_circle = "green";
    const char* rebel_circle = "red";
    const char* square = "magenta";
    const char* background = "#202020";
};

namespace detail {

inline std::string num(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

inline void marker(std::ostream& os, PixelPoint p, double half, const char* fill)
{
    os << "<rect x=\"" << num(p.x - half) << "\" y=\"" << num(p.y - half) << "\" width=\"" << num(2 * half)
       << "\" height=\"" << num(2 * half) << "\" fill=\"" << fill << "\"/>\n";
}

inline void ring(std::ostream& os, PixelPoint c, double r, const char* stroke, bool dashed = false)
{
    os << "<circle cx=\"" << num(c.x) << "\" cy=\"" << num(c.y) << "\" r=\"" << num(r) << "\" fill=\"none\" stroke=\""
       << stroke << "\" stroke-width=\"1.5\"" << (dashed ? " stroke-dasharray=\"4 3\"" : "") << "/>\n";
}

inline void box(std::ostream& os, PixelPoint c, Radii r, const char* stroke, bool dashed = false)
{
    os << "<rect x=\"" << num(c.x - r.x) << "\" y=\"" << num(c.y - r.y) << "\" width=\"" << num(2 * r.x)
       << "\" height=\"" << num(2 * r.y) << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\""
       << (dashed ? " stroke-dasharray=\"4 3\"" : "") << "/>\n";
}

inline void region(std::ostream& os, const IgnoranceRegion& r, const char* stroke)
{
    if (r.ty == RegionType::circular)
        ring(os, r.loc, r.extent.x, stroke, true);
    else
        box(os, r.loc, r.extent, stroke, true);
}

}  // namespace detail

/// Four panels in a 2x2 grid:
///   top left     detected edges and collectors, ignorance regions;
///   top right    normal and rebel edges;
///   bottom left  normal and rebel circles, circular ignorance regions;
///   bottom right squares, rectangular ignorance regions.
inline std::string frame_svg(const FilterState& s, const CameraModel& camera, const Palette& pal = {})
{
    using detail::num;
    const double w = camera.width;
    const double h = camera.height;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(2 * w) << "\" height=\"" << num(2 * h)
       << "\" viewBox=\"0 0 " << num(2 * w) << ' ' << num(2 * h) << "\">\n";
    os << "<title>frame " << s.frame_index << "</title>\n";

    auto panel = [&](int col, int row, const char* id, auto&& body) {
        os << "<g id=\"" << id << "\" transform=\"translate(" << num(col * w) << ',' << num(row * h) << ")\">\n";
        os << "<rect x=\"0\" y=\"0\" width=\"" << num(w) << "\" height=\"" << num(h) << "\" fill=\"" << pal.background
           << "\" stroke=\"black\"/>\n";
        body();
        os << "</g>\n";
    };

    panel(0, 0, "line", [&] {
        for (const auto& c : s.collectors) detail::ring(os, c.center, c.radius, pal.collector);
        for (const auto& r : s.psi) detail::region(os, r, pal.ignored_edge);
        for (const auto& g : s.chi)
            os << "<circle cx=\"" << num(g.loc.x) << "\" cy=\"" << num(g.loc.y) << "\" r=\"2\" fill=\"" << pal.chi
               << "\"/>\n";
    });
    panel(1, 0, "edges", [&] {
        for (const auto& e : s.normal_edges) detail::marker(os, e.loc, 2.5, pal.normal_edge);
        for (const auto& e : s.rebel_edges) detail::marker(os, e.loc, 2.5, pal.rebel_edge);
    });
    panel(0, 1, "circles", [&] {
        for (const auto& c : s.normal_circles) detail::ring(os, c.loc, c.radius, pal.normal_circle);
        for (const auto& c : s.rebel_circles) detail::ring(os, c.loc, c.radius, pal.rebel_circle);
        for (const auto& r : s.psi)
            if (r.ty == RegionType::circular) detail::region(os, r, pal.ignored);
    });
    panel(1, 1, "squares", [&] {
        for (const auto& q : s.squares) detail::box(os, q.loc, q.radii, pal.square);
        for (const auto& r : s.psi)
            if (r.ty == RegionType::rectangular) detail::region(os, r, pal.ignored);
    });
    os << "</svg>\n";
    return os.str();
}

}  // namespace lcs::render
