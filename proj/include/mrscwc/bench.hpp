#pragma once

// Benchmark sweeps over a terrain dataset, group aggregates and the
// results/table formats.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mrscwc/config.hpp"
#include "mrscwc/metrics.hpp"
#include "mrscwc/terrain.hpp"
#include "mrscwc/trial.hpp"

namespace mrscwc {

struct GroupAggregate {
    TerrainGroup group = TerrainGroup::Unclassified;
    MethodSpec method;
    int trials = 0;
    int successes = 0;
    double nsr = 0.0;
    double mean_ncr = 0.0;
    std::optional<double> mean_nef;
    std::optional<double> mean_nec;
    int nef_excluded = 0;  // trials with undefined NEF
    int nec_excluded = 0;
};

struct BenchReport {
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json dataset_ref = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::vector<MethodSpec> methods;
    std::vector<TrialRecord> trials;
    std::vector<GroupAggregate> aggregates;
    double wall_seconds = 0.0;
    int jobs = 1;

    const GroupAggregate* find(TerrainGroup g, MethodSpec m) const {
        for (const auto& a : aggregates)
            if (a.group == g && a.method == m) return &a;
        return nullptr;
    }
};

// Aggregates are computed over records sorted by (terrain id, method), so
// they do not depend on the order the trials finished in.
inline std::vector<GroupAggregate> aggregate(const std::vector<TrialRecord>& records) {
    std::vector<const TrialRecord*> sorted;
    sorted.reserve(records.size());
    for (const auto& r : records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const TrialRecord* a, const TrialRecord* b) {
        if (a->terrain_id != b->terrain_id) return a->terrain_id < b->terrain_id;
        return method_rank(a->method) < method_rank(b->method);
    });

    struct Acc {
        GroupAggregate agg;
        double ncr_sum = 0.0, nef_sum = 0.0, nec_sum = 0.0;
        int nef_n = 0, nec_n = 0;
    };
    std::map<std::pair<int, int>, Acc> acc;
    for (const TrialRecord* r : sorted) {
        auto& a = acc[{static_cast<int>(r->group), method_rank(r->method)}];
        a.agg.group = r->group;
        a.agg.method = r->method;
        ++a.agg.trials;
        if (r->success) ++a.agg.successes;
        const TrialMetrics m = metrics(*r);
        a.ncr_sum += m.ncr;
        if (m.nef) { a.nef_sum += *m.nef; ++a.nef_n; } else ++a.agg.nef_excluded;
        if (m.nec) { a.nec_sum += *m.nec; ++a.nec_n; } else ++a.agg.nec_excluded;
    }
    std::vector<GroupAggregate> out;
    for (auto& [key, a] : acc) {
        GroupAggregate g = a.agg;
        g.nsr = static_cast<double>(g.successes) / g.trials;
        g.mean_ncr = a.ncr_sum / g.trials;
        if (a.nef_n > 0) g.mean_nef = a.nef_sum / a.nef_n;
        if (a.nec_n > 0) g.mean_nec = a.nec_sum / a.nec_n;
        out.push_back(g);
    }
    return out;
}

inline std::uint64_t trial_seed(std::uint64_t bench_seed, std::size_t terrain_index, MethodSpec m) {
    return derive_seed(bench_seed, static_cast<std::uint64_t>(terrain_index) * 16u + method_rank(m));
}

struct BenchOptions {
    int jobs = 1;
    std::uint64_t seed = 0;
    std::string dataset_ref;  // manifest path as given by the caller
    // Optional per-trial trajectory logs: directory, one CSV per trial.
    std::optional<std::filesystem::path> log_dir;
};

inline std::string trial_log_name(const std::string& terrain_id, MethodSpec m) {
    return terrain_id + "_" + to_string(m) + ".csv";
}

// Runs every (terrain, method) pair. Per-trial failures (missing files,
// divergence) are recorded, never thrown. Results are independent of jobs.
inline BenchReport run_benchmark(const DatasetManifest& manifest, const std::filesystem::path& manifest_dir,
                                 const std::vector<MethodSpec>& methods, const SimConfig& cfg,
                                 const BenchOptions& opt = {}) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    struct Job {
        std::size_t terrain;
        MethodSpec method;
    };
    std::vector<Job> jobs;
    for (std::size_t t = 0; t < manifest.terrains.size(); ++t)
        for (const auto& m : methods) jobs.push_back({t, m});

    std::vector<TrialRecord> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t k = next.fetch_add(1); k < jobs.size(); k = next.fetch_add(1)) {
            const Job& job = jobs[k];
            const DatasetEntry& entry = manifest.terrains[job.terrain];
            const std::uint64_t seed = trial_seed(opt.seed, job.terrain, job.method);
            TrialRecord rec;
            try {
                const TerrainFile tf = load_terrain(manifest_dir / entry.file);
                const std::string id = terrain_id(tf.params);
                if (opt.log_dir) {
                    std::ofstream log_out(*opt.log_dir / trial_log_name(id, job.method));
                    if (!log_out) throw std::runtime_error("cannot open trajectory log in " + opt.log_dir->string());
                    TrajectoryLog log(log_out, id, job.method, config_to_json(cfg));
                    TrialOptions topt;
                    topt.log = &log;
                    rec = run_trial(tf.params, id, job.method, cfg, seed, topt);
                } else {
                    rec = run_trial(tf.params, id, job.method, cfg, seed);
                }
            } catch (const std::exception& e) {
                rec = TrialRecord{};
                rec.terrain_id = terrain_id(entry.params);
                rec.group = entry.params.group;
                rec.method = job.method;
                rec.seed = seed;
                rec.config = config_to_json(cfg);
                rec.start_distance = norm(cfg.target.position - cfg.start);
                rec.min_distance = rec.start_distance;
                rec.error = e.what();
            }
            results[k] = std::move(rec);
        }
    };
    if (opt.log_dir) std::filesystem::create_directories(*opt.log_dir);
    const int n_threads = std::max(1, std::min<int>(opt.jobs, static_cast<int>(jobs.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    BenchReport rep;
    rep.config = config_to_json(cfg);
    rep.dataset_ref = {{"manifest", opt.dataset_ref}, {"base_seed", manifest.base_seed}};
    rep.seed = opt.seed;
    rep.methods = methods;
    rep.trials = std::move(results);
    rep.aggregates = aggregate(rep.trials);
    rep.jobs = opt.jobs;
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json aggregate_to_json(const GroupAggregate& a) {
    return {{"group", to_string(a.group)},
            {"method", to_string(a.method)},
            {"trials", a.trials},
            {"successes", a.successes},
            {"NSR", a.nsr},
            {"mean_NCR", a.mean_ncr},
            {"mean_NEF", optional_json(a.mean_nef)},
            {"mean_NEC", optional_json(a.mean_nec)},
            {"NEF_excluded", a.nef_excluded},
            {"NEC_excluded", a.nec_excluded}};
}

inline std::optional<double> optional_from_json(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

inline GroupAggregate aggregate_from_json(const nlohmann::json& j) {
    GroupAggregate a;
    a.group = parse_group(j.at("group").get<std::string>());
    a.method = parse_method(j.at("method").get<std::string>());
    a.trials = j.at("trials").get<int>();
    a.successes = j.at("successes").get<int>();
    a.nsr = j.at("NSR").get<double>();
    a.mean_ncr = j.at("mean_NCR").get<double>();
    a.mean_nef = optional_from_json(j.at("mean_NEF"));
    a.mean_nec = optional_from_json(j.at("mean_NEC"));
    a.nef_excluded = j.at("NEF_excluded").get<int>();
    a.nec_excluded = j.at("NEC_excluded").get<int>();
    return a;
}

inline nlohmann::json report_to_json(const BenchReport& r, bool include_timing = true) {
    nlohmann::json j;
    j["generator_version"] = kGeneratorVersion;
    j["config"] = r.config;
    j["dataset_ref"] = r.dataset_ref;
    j["seed"] = r.seed;
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& m : r.methods) methods.push_back(to_string(m));
    j["methods"] = methods;
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : r.trials) trials.push_back(record_to_json(t));
    j["trials"] = std::move(trials);
    nlohmann::json aggs = nlohmann::json::array();
    for (const auto& a : r.aggregates) aggs.push_back(aggregate_to_json(a));
    j["aggregates"] = std::move(aggs);
    if (include_timing) j["timing"] = {{"wall_seconds", r.wall_seconds}, {"jobs", r.jobs}};
    return j;
}

inline BenchReport report_from_json(const nlohmann::json& j) {
    BenchReport r;
    try {
        r.config = j.at("config");
        r.dataset_ref = j.at("dataset_ref");
        r.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& m : j.at("methods")) r.methods.push_back(parse_method(m.get<std::string>()));
        for (const auto& t : j.at("trials")) r.trials.push_back(record_from_json(t));
        for (const auto& a : j.at("aggregates")) r.aggregates.push_back(aggregate_from_json(a));
        if (j.contains("timing")) {
            r.wall_seconds = j["timing"].value("wall_seconds", 0.0);
            r.jobs = j["timing"].value("jobs", 1);
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed results file: ") + e.what());
    }
    return r;
}

// ---------------------------------------------------------------------------
// Tables

inline std::vector<TerrainGroup> report_groups(const BenchReport& r) {
    std::vector<TerrainGroup> groups;
    for (TerrainGroup g : {TerrainGroup::A, TerrainGroup::B, TerrainGroup::Unclassified})
        for (const auto& a : r.aggregates)
            if (a.group == g) {
                groups.push_back(g);
                break;
            }
    return groups;
}

inline std::vector<const GroupAggregate*> table_rows(const BenchReport& r, TerrainGroup g) {
    std::vector<const GroupAggregate*> rows;
    for (const auto& m : kAllMethods)
        if (const auto* a = r.find(g, m)) rows.push_back(a);
    return rows;
}

inline std::string format_fixed(double v, int digits) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(digits) << v;
    return ss.str();
}

inline std::string format_optional(const std::optional<double>& v, int digits) {
    return v ? format_fixed(*v, digits) : std::string("n/a");
}

inline std::string render_text_tables(const BenchReport& r) {
    std::ostringstream out;
    for (TerrainGroup g : report_groups(r)) {
        out << "Group " << to_string(g) << "\n";
        out << std::left << std::setw(18) << "Method" << std::right << std::setw(9) << "NSR (%)" << std::setw(14)
            << "mean NCR (%)" << std::setw(10) << "mean NEF" << std::setw(16) << "mean NEC (J/m)" << std::setw(8)
            << "trials" << "\n";
        for (const auto* a : table_rows(r, g)) {
            out << std::left << std::setw(18) << display_name(a->method) << std::right << std::setw(9)
                << format_fixed(100.0 * a->nsr, 1) << std::setw(14) << format_fixed(100.0 * a->mean_ncr, 1)
                << std::setw(10) << format_optional(a->mean_nef, 3) << std::setw(16)
                << format_optional(a->mean_nec, 1) << std::setw(8) << a->trials << "\n";
        }
        out << "\n";
    }
    return out.str();
}

inline std::string render_csv_tables(const BenchReport& r) {
    std::ostringstream out;
    out << "group,method,nsr_percent,mean_ncr_percent,mean_nef,mean_nec_j_per_m,trials,nef_excluded,nec_excluded\n";
    for (TerrainGroup g : report_groups(r)) {
        for (const auto* a : table_rows(r, g)) {
            out << to_string(g) << ',' << display_name(a->method) << ',' << format_fixed(100.0 * a->nsr, 1) << ','
                << format_fixed(100.0 * a->mean_ncr, 1) << ',' << format_optional(a->mean_nef, 3) << ','
                << format_optional(a->mean_nec, 1) << ',' << a->trials << ',' << a->nef_excluded << ','
                << a->nec_excluded << "\n";
        }
    }
    return out.str();
}

}  // namespace mrscwc
