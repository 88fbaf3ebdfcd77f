#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "mrscwc/baselines.hpp"
#include "mrscwc/dynamics.hpp"
#include "mrscwc/terrain.hpp"

namespace mrscwc {

struct TrialRecord {
    std::string terrain_id;
    TerrainGroup group = TerrainGroup::Unclassified;
    MethodSpec method;
    std::uint64_t seed = 0;
    bool success = false;
    double total_time = 0.0;      // T_total, s
    double start_distance = 0.0;  // L, m
    double min_distance = 0.0;    // d_min, m
    double effective_distance = 0.0;  // D_ef, m; L for a successful trial
    double journey = 0.0;         // J, leader path length, m
    double energy = 0.0;          // E, J
    nlohmann::json config = nlohmann::json::object();

    bool astar_fallback = false;
    bool diverged = false;
    std::string error;        // non-empty when the trial could not run
    std::string diagnostics;
    int stiffness_switches = 0;
    double min_spacing = 0.0;  // consecutive center distances, m
    double max_spacing = 0.0;
    double max_joint_gap = 0.0; // attachment-point separation, m
};

struct TrialMetrics {
    double ncr = 0.0;
    std::optional<double> nef;
    std::optional<double> nec;
};

inline TrialMetrics metrics(double start_distance, double min_distance, double journey, double energy) {
    if (!(start_distance > 0.0)) throw std::invalid_argument("metrics: start distance must be positive");
    TrialMetrics m;
    const double d_ef = start_distance - min_distance;
    m.ncr = d_ef / start_distance;
    if (d_ef > 0.0 && journey > 0.0) {
        m.nef = d_ef / journey;
        m.nec = energy / d_ef;
    }
    return m;
}

// Reaching the success radius counts as arriving, so NCR = 1 for successful
// trials; min_distance keeps the measured value.
inline TrialMetrics metrics(const TrialRecord& r) {
    return metrics(r.start_distance, r.start_distance - r.effective_distance, r.journey, r.energy);
}

// Rectangle-rule increment of sum_i (|tau_L w_L| + |tau_R w_R|).
inline double energy_accumulate(std::span<const WheelTorques> torques, std::span<const RobotState> robots,
                                double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("energy_accumulate: dt must be positive");
    if (torques.size() != robots.size()) throw std::invalid_argument("energy_accumulate: size mismatch");
    double power = 0.0;
    for (std::size_t i = 0; i < torques.size(); ++i)
        power += std::abs(torques[i].left * robots[i].omega_left) + std::abs(torques[i].right * robots[i].omega_right);
    return power * dt;
}

inline nlohmann::json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json record_to_json(const TrialRecord& r) {
    const TrialMetrics m = metrics(r);
    nlohmann::json j;
    j["terrain_id"] = r.terrain_id;
    j["group"] = to_string(r.group);
    j["method"] = to_string(r.method);
    j["seed"] = r.seed;
    j["success"] = r.success;
    j["T_total"] = r.total_time;
    j["L"] = r.start_distance;
    j["d_min"] = r.min_distance;
    j["D_ef"] = r.effective_distance;
    j["J"] = r.journey;
    j["E"] = r.energy;
    j["NCR"] = m.ncr;
    j["NEF"] = optional_json(m.nef);
    j["NEC"] = optional_json(m.nec);
    j["astar_fallback"] = r.astar_fallback;
    j["diverged"] = r.diverged;
    j["error"] = r.error;
    j["diagnostics"] = r.diagnostics;
    j["stiffness_switches"] = r.stiffness_switches;
    j["min_spacing"] = r.min_spacing;
    j["max_spacing"] = r.max_spacing;
    j["max_joint_gap"] = r.max_joint_gap;
    j["config"] = r.config;
    return j;
}

inline TrialRecord record_from_json(const nlohmann::json& j) {
    TrialRecord r;
    try {
        r.terrain_id = j.at("terrain_id").get<std::string>();
        r.group = parse_group(j.at("group").get<std::string>());
        r.method = parse_method(j.at("method").get<std::string>());
        r.seed = j.at("seed").get<std::uint64_t>();
        r.success = j.at("success").get<bool>();
        r.total_time = j.at("T_total").get<double>();
        r.start_distance = j.at("L").get<double>();
        r.min_distance = j.at("d_min").get<double>();
        r.effective_distance = j.at("D_ef").get<double>();
        r.journey = j.at("J").get<double>();
        r.energy = j.at("E").get<double>();
        r.astar_fallback = j.at("astar_fallback").get<bool>();
        r.diverged = j.at("diverged").get<bool>();
        r.error = j.at("error").get<std::string>();
        r.diagnostics = j.at("diagnostics").get<std::string>();
        r.stiffness_switches = j.at("stiffness_switches").get<int>();
        r.min_spacing = j.at("min_spacing").get<double>();
        r.max_spacing = j.at("max_spacing").get<double>();
        r.max_joint_gap = j.at("max_joint_gap").get<double>();
        r.config = j.at("config");
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed trial record: ") + e.what());
    }
    return r;
}

}  // namespace mrscwc
