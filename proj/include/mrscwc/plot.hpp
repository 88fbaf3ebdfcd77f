#pragma once

// Static SVG of one trial: terrain height contours, the six robot tracks
// and markers where the leader joint's stiffness changes.

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrscwc/common.hpp"
#include "mrscwc/terrain.hpp"
#include "mrscwc/trial.hpp"

namespace mrscwc {

struct LogRow {
    double t = 0.0;
    int robot = 0;
    Vec2 position;
    double heading = 0.0;
    double k_alpha = 0.0;
};

struct TrajectoryData {
    std::string terrain_id;
    std::string method;
    std::string config;  // compact JSON, empty if the log has none
    std::vector<LogRow> rows;
};

inline std::map<std::string, std::string> parse_comment_fields(const std::string& line) {
    std::map<std::string, std::string> out;
    std::istringstream ss(line.substr(1));
    std::string token;
    while (ss >> token) {
        const auto eq = token.find('=');
        if (eq != std::string::npos) out[token.substr(0, eq)] = token.substr(eq + 1);
    }
    return out;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

inline TrajectoryData read_trajectory(std::istream& in) {
    TrajectoryData d;
    std::string line;
    bool header_seen = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto fields = parse_comment_fields(line);
            if (auto it = fields.find("terrain_id"); it != fields.end()) d.terrain_id = it->second;
            if (auto it = fields.find("method"); it != fields.end()) d.method = it->second;
            if (auto it = fields.find("config"); it != fields.end()) d.config = it->second;
            continue;
        }
        if (!header_seen) {
            if (line != kTrajectoryHeader)
                throw std::invalid_argument("trajectory log: unexpected header '" + line + "'");
            header_seen = true;
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() != 11)
            throw std::invalid_argument("trajectory log line " + std::to_string(line_no) + ": expected 11 columns");
        try {
            LogRow r;
            r.t = std::stod(cells[0]);
            r.robot = std::stoi(cells[1]);
            r.position = {std::stod(cells[2]), std::stod(cells[3])};
            r.heading = std::stod(cells[4]);
            r.k_alpha = std::stod(cells[7]);
            if (r.robot < 1 || r.robot > kRobots) throw std::invalid_argument("robot index");
            d.rows.push_back(r);
        } catch (const std::exception&) {
            throw std::invalid_argument("trajectory log line " + std::to_string(line_no) + ": malformed row");
        }
    }
    if (!header_seen || d.rows.empty()) throw std::invalid_argument("trajectory log is empty");
    return d;
}

// Marching squares over a height grid; returns line segments per level.
struct Segment {
    Vec2 a, b;
};

inline std::vector<Segment> contour_segments(const std::vector<double>& h, int nx, int ny, const Region& region,
                                             double level) {
    const double dx = (region.x_max - region.x_min) / (nx - 1);
    const double dy = (region.y_max - region.y_min) / (ny - 1);
    auto at = [&](int i, int j) { return h[static_cast<std::size_t>(j) * nx + i]; };
    auto pos = [&](int i, int j) { return Vec2{region.x_min + i * dx, region.y_min + j * dy}; };
    auto lerp = [&](Vec2 p, Vec2 q, double hp, double hq) {
        const double t = (level - hp) / (hq - hp);
        return p + t * (q - p);
    };
    std::vector<Segment> out;
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            const std::array<Vec2, 4> p{pos(i, j), pos(i + 1, j), pos(i + 1, j + 1), pos(i, j + 1)};
            const std::array<double, 4> v{at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)};
            std::vector<Vec2> cross_points;
            for (int e = 0; e < 4; ++e) {
                const int f = (e + 1) % 4;
                if ((v[e] < level) != (v[f] < level)) cross_points.push_back(lerp(p[e], p[f], v[e], v[f]));
            }
            if (cross_points.size() == 2) {
                out.push_back({cross_points[0], cross_points[1]});
            } else if (cross_points.size() == 4) {
                // Saddle: pair edges by the cell-center value.
                const double center = 0.25 * (v[0] + v[1] + v[2] + v[3]);
                if ((center < level) == (v[0] < level)) {
                    out.push_back({cross_points[0], cross_points[1]});
                    out.push_back({cross_points[2], cross_points[3]});
                } else {
                    out.push_back({cross_points[0], cross_points[3]});
                    out.push_back({cross_points[1], cross_points[2]});
                }
            }
        }
    }
    return out;
}

struct PlotOptions {
    Region region = kNavigationRegion;
    int grid = 111;
    int levels = 12;
    double pixels_per_meter = 60.0;
    Vec2 start{0.0, 0.0};
    Vec2 target{9.0, 9.0};
    double success_radius = 0.5;
};

inline std::string render_svg(const TerrainParams& terrain, const std::string& terrain_id, const TrajectoryData& d,
                              const PlotOptions& opt = {}) {
    if (!d.terrain_id.empty() && d.terrain_id != terrain_id)
        throw std::invalid_argument("trajectory log belongs to terrain '" + d.terrain_id + "', not '" + terrain_id +
                                    "'");
    if (d.rows.empty()) throw std::invalid_argument("trajectory log is empty");

    const Region& R = opt.region;
    const double s = opt.pixels_per_meter;
    const double margin = 20.0;
    const double width = (R.x_max - R.x_min) * s + 2 * margin;
    const double height_px = (R.y_max - R.y_min) * s + 2 * margin;
    auto px = [&](Vec2 p) {
        return Vec2{margin + (p.x - R.x_min) * s, margin + (R.y_max - p.y) * s};
    };

    std::vector<double> h(static_cast<std::size_t>(opt.grid) * opt.grid);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int j = 0; j < opt.grid; ++j)
        for (int i = 0; i < opt.grid; ++i) {
            const double x = R.x_min + (R.x_max - R.x_min) * i / (opt.grid - 1);
            const double y = R.y_min + (R.y_max - R.y_min) * j / (opt.grid - 1);
            const double v = height(terrain, x, y);
            h[static_cast<std::size_t>(j) * opt.grid + i] = v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }

    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height_px
        << "\" viewBox=\"0 0 " << width << ' ' << height_px << "\">\n";
    out << "<!-- terrain_id=" << terrain_id << " method=" << d.method << " generator_version=" << kGeneratorVersion
        << " -->\n";
    if (!d.config.empty()) out << "<!-- config=" << d.config << " -->\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    if (hi > lo) {
        out << "<g stroke=\"#9a8c7a\" stroke-width=\"0.8\" fill=\"none\">\n";
        for (int k = 1; k <= opt.levels; ++k) {
            const double level = lo + (hi - lo) * k / (opt.levels + 1);
            for (const auto& seg : contour_segments(h, opt.grid, opt.grid, R, level)) {
                const Vec2 a = px(seg.a), b = px(seg.b);
                out << "<line x1=\"" << a.x << "\" y1=\"" << a.y << "\" x2=\"" << b.x << "\" y2=\"" << b.y
                    << "\"/>\n";
            }
        }
        out << "</g>\n";
    }

    static constexpr std::array<const char*, kRobots> colors{"#d62728", "#1f77b4", "#2ca02c",
                                                             "#9467bd", "#ff7f0e", "#17becf"};
    for (int r = kRobots; r >= 1; --r) {
        out << "<polyline fill=\"none\" stroke=\"" << colors[r - 1] << "\" stroke-width=\"" << (r == 1 ? 2.0 : 1.2)
            << "\" points=\"";
        for (const auto& row : d.rows)
            if (row.robot == r) {
                const Vec2 p = px(row.position);
                out << p.x << ',' << p.y << ' ';
            }
        out << "\"/>\n";
    }

    // Stiffness change markers on the leader track.
    out << "<g fill=\"black\">\n";
    bool have_prev = false;
    double prev_k = 0.0;
    for (const auto& row : d.rows) {
        if (row.robot != 1) continue;
        if (have_prev && row.k_alpha != prev_k) {
            const Vec2 p = px(row.position);
            out << "<circle cx=\"" << p.x << "\" cy=\"" << p.y << "\" r=\"2.5\"/>\n";
        }
        prev_k = row.k_alpha;
        have_prev = true;
    }
    out << "</g>\n";

    const Vec2 st = px(opt.start), tg = px(opt.target);
    out << "<circle cx=\"" << st.x << "\" cy=\"" << st.y << "\" r=\"5\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<circle cx=\"" << tg.x << "\" cy=\"" << tg.y << "\" r=\"" << opt.success_radius * s
        << "\" fill=\"none\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n";
    out << "</svg>\n";
    return out.str();
}

}  // namespace mrscwc
