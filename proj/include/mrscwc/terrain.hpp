#pragma once

// Sinusoidal heightfield terrains: evaluation, slope statistics, seeded
// sampling into the two difficulty groups, and JSON (de)serialization.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrscwc/common.hpp"

namespace mrscwc {

enum class TerrainGroup { A, B, Unclassified };

inline std::string to_string(TerrainGroup g) {
    switch (g) {
        case TerrainGroup::A: return "A";
        case TerrainGroup::B: return "B";
        case TerrainGroup::Unclassified: return "unclassified";
    }
    return "unclassified";
}

inline TerrainGroup parse_group(const std::string& s) {
    if (s == "A" || s == "a") return TerrainGroup::A;
    if (s == "B" || s == "b") return TerrainGroup::B;
    if (s == "unclassified") return TerrainGroup::Unclassified;
    throw std::invalid_argument("unknown terrain group '" + s + "' (expected A, B or unclassified)");
}

inline constexpr std::array<double, 3> kTerrainWeights{1.0, 0.5, 0.1};

struct TerrainParams {
    std::array<double, 3> amplitude{0.0, 0.0, 0.0};  // m
    std::array<double, 3> phase{0.0, 0.0, 0.0};      // cycles
    std::array<double, 3> frequency{0.0, 0.0, 0.0};  // rad/m
    double vertical_scale = 1.0;                     // dzs
    std::array<double, 3> weights = kTerrainWeights;
    std::uint64_t seed = 0;
    TerrainGroup group = TerrainGroup::Unclassified;

    friend bool operator==(const TerrainParams&, const TerrainParams&) = default;
};

// Throws std::invalid_argument when the parameter set is not a valid terrain.
inline void validate(const TerrainParams& p) {
    if (p.weights != kTerrainWeights)
        throw std::invalid_argument("terrain weights must be (1, 0.5, 0.1)");
    for (int i = 0; i < 3; ++i) {
        if (!(p.amplitude[i] >= 0.0) || !std::isfinite(p.amplitude[i]))
            throw std::invalid_argument("terrain amplitudes must be finite and nonnegative");
        if (!(p.frequency[i] >= 0.0) || !std::isfinite(p.frequency[i]))
            throw std::invalid_argument("terrain frequencies must be finite and nonnegative");
        if (!std::isfinite(p.phase[i])) throw std::invalid_argument("terrain phases must be finite");
    }
    if (!(p.vertical_scale > 0.0) || !std::isfinite(p.vertical_scale))
        throw std::invalid_argument("terrain vertical scale must be positive");
}

inline double height(const TerrainParams& p, double x, double y) {
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double ph = kTwoPi * p.phase[i];
        sum += p.weights[i] * p.amplitude[i] *
               (std::sin(ph + p.frequency[i] * x) + std::sin(ph + p.frequency[i] * y));
    }
    return sum * p.vertical_scale;
}

inline Vec2 gradient(const TerrainParams& p, double x, double y) {
    double gx = 0.0;
    double gy = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double ph = kTwoPi * p.phase[i];
        const double k = p.weights[i] * p.amplitude[i] * p.frequency[i];
        gx += k * std::cos(ph + p.frequency[i] * x);
        gy += k * std::cos(ph + p.frequency[i] * y);
    }
    return {gx * p.vertical_scale, gy * p.vertical_scale};
}

inline double slope_deg_at(const TerrainParams& p, double x, double y) {
    return rad_to_deg(std::atan(norm(gradient(p, x, y))));
}

struct Region {
    double x_min = -1.0;
    double x_max = 10.0;
    double y_min = -1.0;
    double y_max = 10.0;

    bool contains(Vec2 q) const {
        return q.x >= x_min && q.x <= x_max && q.y >= y_min && q.y <= y_max;
    }
    friend bool operator==(const Region&, const Region&) = default;
};

inline constexpr Region kNavigationRegion{-1.0, 10.0, -1.0, 10.0};
inline constexpr double kSlopeResolution = 0.05;

struct SlopeStats {
    double average_slope_deg = 0.0;
    double max_slope_deg = 0.0;
    double sample_resolution = kSlopeResolution;
    Region region = kNavigationRegion;
};

// Number of samples along [lo, hi] at the given spacing (both ends included
// when the span is a multiple of the spacing).
inline int grid_count(double lo, double hi, double resolution) {
    return static_cast<int>(std::floor((hi - lo) / resolution + 1e-9)) + 1;
}

inline SlopeStats slope_stats(const TerrainParams& p, const Region& region, double resolution) {
    if (!(resolution > 0.0) || !std::isfinite(resolution))
        throw std::invalid_argument("slope_stats: resolution must be positive");
    if (!(region.x_max > region.x_min) || !(region.y_max > region.y_min))
        throw std::invalid_argument("slope_stats: region must be non-degenerate");

    const int nx = grid_count(region.x_min, region.x_max, resolution);
    const int ny = grid_count(region.y_min, region.y_max, resolution);

    // The gradient separates into an x-only and a y-only part.
    std::vector<double> gx(nx), gy(ny);
    for (int i = 0; i < nx; ++i) gx[i] = gradient(p, region.x_min + i * resolution, 0.0).x;
    for (int j = 0; j < ny; ++j) gy[j] = gradient(p, 0.0, region.y_min + j * resolution).y;

    double sum = 0.0;
    double max_norm = 0.0;
    for (int j = 0; j < ny; ++j) {
        double row = 0.0;
        for (int i = 0; i < nx; ++i) {
            const double n = std::hypot(gx[i], gy[j]);
            row += std::atan(n);
            max_norm = std::max(max_norm, n);
        }
        sum += row;
    }
    SlopeStats s;
    s.average_slope_deg = rad_to_deg(sum / (static_cast<double>(nx) * ny));
    s.max_slope_deg = rad_to_deg(std::atan(max_norm));
    s.sample_resolution = resolution;
    s.region = region;
    return s;
}

inline constexpr double kGroupSlopeSplitDeg = 30.0;
inline constexpr double kMaxSlopeCapDeg = 70.0;

inline bool satisfies_group(const SlopeStats& s, TerrainGroup g) {
    if (s.max_slope_deg > kMaxSlopeCapDeg) return false;
    switch (g) {
        case TerrainGroup::A: return s.average_slope_deg < kGroupSlopeSplitDeg;
        case TerrainGroup::B: return s.average_slope_deg > kGroupSlopeSplitDeg;
        case TerrainGroup::Unclassified: return true;
    }
    return false;
}

struct SamplingRanges {
    double amplitude_min = 0.1, amplitude_max = 1.5;
    double phase_min = 0.0, phase_max = 1.0;
    double frequency_min = 0.2, frequency_max = 2.5;
    double scale_min = 0.3, scale_max = 1.5;
};

inline nlohmann::json to_json(const SamplingRanges& r) {
    return {{"A", {r.amplitude_min, r.amplitude_max}},
            {"P", {r.phase_min, r.phase_max}},
            {"f", {r.frequency_min, r.frequency_max}},
            {"dzs", {r.scale_min, r.scale_max}}};
}

// Draws one candidate terrain; a pure function of the seed.
inline TerrainParams draw_terrain(std::uint64_t seed, const SamplingRanges& r = {}) {
    SeededRng rng(seed);
    TerrainParams p;
    for (auto& a : p.amplitude) a = rng.uniform(r.amplitude_min, r.amplitude_max);
    for (auto& ph : p.phase) ph = rng.uniform(r.phase_min, r.phase_max);
    for (auto& f : p.frequency) f = rng.uniform(r.frequency_min, r.frequency_max);
    p.vertical_scale = rng.uniform(r.scale_min, r.scale_max);
    p.seed = seed;
    return p;
}

struct SampleOptions {
    int max_rejections = 10000;
    Region region = kNavigationRegion;
    double resolution = kSlopeResolution;
    SamplingRanges ranges{};
};

struct SampledTerrain {
    TerrainParams params;
    SlopeStats stats;
    int rejections = 0;
};

// Rejection-samples a terrain for the group. Candidate k is drawn from
// seed (k = 0) or derive_seed(seed, k); the accepted candidate's own seed is
// stored so that draw_terrain(params.seed) reproduces it.
inline SampledTerrain sample_terrain(TerrainGroup group, std::uint64_t seed,
                                     const SampleOptions& opt = {}) {
    if (group == TerrainGroup::Unclassified)
        throw std::invalid_argument("sample_terrain: group must be A or B");
    // A coarse grid aligned with the fine one is a subset of it, so its max
    // slope is a lower bound and can reject early.
    const double coarse = opt.resolution * 4.0;
    for (int k = 0; k <= opt.max_rejections; ++k) {
        const std::uint64_t s = k == 0 ? seed : derive_seed(seed, static_cast<std::uint64_t>(k));
        TerrainParams p = draw_terrain(s, opt.ranges);
        const SlopeStats quick = slope_stats(p, opt.region, coarse);
        if (quick.max_slope_deg > kMaxSlopeCapDeg) continue;
        if (group == TerrainGroup::A && quick.average_slope_deg > kGroupSlopeSplitDeg + 3.0) continue;
        if (group == TerrainGroup::B && quick.average_slope_deg < kGroupSlopeSplitDeg - 3.0) continue;
        const SlopeStats stats = slope_stats(p, opt.region, opt.resolution);
        if (!satisfies_group(stats, group)) continue;
        p.group = group;
        return {p, stats, k};
    }
    throw std::runtime_error("sample_terrain: no terrain for group " + to_string(group) + " from seed " +
                             std::to_string(seed) + " after " + std::to_string(opt.max_rejections) +
                             " rejections");
}

inline std::string terrain_id(const TerrainParams& p) {
    return to_string(p.group) + "-" + std::to_string(p.seed);
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json terrain_to_json(const TerrainParams& p, const SlopeStats& s) {
    nlohmann::json j;
    j["seed"] = p.seed;
    j["A"] = p.amplitude;
    j["P"] = p.phase;
    j["f"] = p.frequency;
    j["dzs"] = p.vertical_scale;
    j["weights"] = p.weights;
    j["group"] = to_string(p.group);
    j["avg_slope_deg"] = s.average_slope_deg;
    j["max_slope_deg"] = s.max_slope_deg;
    j["generator_version"] = kGeneratorVersion;
    return j;
}

struct TerrainFile {
    TerrainParams params;
    double avg_slope_deg = 0.0;
    double max_slope_deg = 0.0;
    std::string generator_version;
};

inline TerrainFile terrain_from_json(const nlohmann::json& j) {
    TerrainFile t;
    try {
        t.params.seed = j.at("seed").get<std::uint64_t>();
        t.params.amplitude = j.at("A").get<std::array<double, 3>>();
        t.params.phase = j.at("P").get<std::array<double, 3>>();
        t.params.frequency = j.at("f").get<std::array<double, 3>>();
        t.params.vertical_scale = j.at("dzs").get<double>();
        t.params.weights = j.at("weights").get<std::array<double, 3>>();
        t.params.group = parse_group(j.at("group").get<std::string>());
        t.avg_slope_deg = j.at("avg_slope_deg").get<double>();
        t.max_slope_deg = j.at("max_slope_deg").get<double>();
        t.generator_version = j.at("generator_version").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed terrain record: ") + e.what());
    }
    validate(t.params);
    return t;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("invalid JSON in '" + path.string() + "': " + e.what());
    }
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

inline void save_terrain(const std::filesystem::path& path, const TerrainParams& p, const SlopeStats& s) {
    write_json_file(path, terrain_to_json(p, s));
}

inline TerrainFile load_terrain(const std::filesystem::path& path) {
    try {
        return terrain_from_json(read_json_file(path));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("'" + path.string() + "': " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Dataset

struct DatasetEntry {
    std::string file;  // relative to the manifest directory
    TerrainParams params;
    SlopeStats stats;
};

struct DatasetManifest {
    std::uint64_t base_seed = 0;
    std::vector<DatasetEntry> terrains;
};

inline std::uint64_t dataset_seed(std::uint64_t base_seed, TerrainGroup g, int index) {
    const std::uint64_t stream = (g == TerrainGroup::A ? 0ull : 1ull << 32) + static_cast<std::uint64_t>(index);
    return derive_seed(base_seed, stream);
}

inline nlohmann::json manifest_to_json(const DatasetManifest& m, const SampleOptions& opt = {}) {
    nlohmann::json j;
    j["base_seed"] = m.base_seed;
    j["generator_version"] = kGeneratorVersion;
    j["ranges"] = to_json(opt.ranges);
    j["slope_region"] = {opt.region.x_min, opt.region.x_max, opt.region.y_min, opt.region.y_max};
    j["slope_resolution"] = opt.resolution;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : m.terrains) {
        nlohmann::json rec = terrain_to_json(e.params, e.stats);
        rec["file"] = e.file;
        arr.push_back(std::move(rec));
    }
    j["terrains"] = std::move(arr);
    return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
    DatasetManifest m;
    try {
        m.base_seed = j.at("base_seed").get<std::uint64_t>();
        for (const auto& rec : j.at("terrains")) {
            DatasetEntry e;
            e.file = rec.at("file").get<std::string>();
            const TerrainFile t = terrain_from_json(rec);
            e.params = t.params;
            e.stats.average_slope_deg = t.avg_slope_deg;
            e.stats.max_slope_deg = t.max_slope_deg;
            m.terrains.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
    try {
        return manifest_from_json(read_json_file(path));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("'" + path.string() + "': " + e.what());
    }
}

inline std::string dataset_file_name(TerrainGroup g, int index) {
    std::ostringstream ss;
    ss << to_string(g) << "_";
    ss.width(3);
    ss.fill('0');
    ss << index << ".json";
    return ss.str();
}

// Writes `count` terrains per requested group plus manifest.json into
// out_dir; returns the manifest path.
inline std::filesystem::path generate_dataset(int count, std::uint64_t base_seed,
                                              const std::filesystem::path& out_dir,
                                              const std::vector<TerrainGroup>& groups = {TerrainGroup::A,
                                                                                         TerrainGroup::B},
                                              const SampleOptions& opt = {}) {
    if (count < 1) throw std::invalid_argument("generate_dataset: count must be >= 1");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create directory '" + out_dir.string() + "': " + ec.message());

    DatasetManifest m;
    m.base_seed = base_seed;
    for (TerrainGroup g : groups) {
        for (int i = 0; i < count; ++i) {
            const SampledTerrain st = sample_terrain(g, dataset_seed(base_seed, g, i), opt);
            DatasetEntry e{dataset_file_name(g, i), st.params, st.stats};
            save_terrain(out_dir / e.file, e.params, e.stats);
            m.terrains.push_back(std::move(e));
        }
    }
    const auto manifest_path = out_dir / "manifest.json";
    write_json_file(manifest_path, manifest_to_json(m, opt));
    return manifest_path;
}

}  // namespace mrscwc
