// mrscwc: dataset generation, single trials, benchmark sweeps, reports and
// trajectory plots.
//
// Exit codes: 0 success, 1 usage or internal error, 2 the trial ran but
// did not reach the target.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrscwc/bench.hpp"
#include "mrscwc/config.hpp"
#include "mrscwc/plot.hpp"
#include "mrscwc/terrain.hpp"
#include "mrscwc/trial.hpp"

namespace fs = std::filesystem;
using namespace mrscwc;

namespace {

struct Globals {
    std::string config_file;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::string out;
};

SimConfig resolve_config(const Globals& g) {
    SimConfig cfg;
    if (!g.config_file.empty()) apply_config_json(cfg, read_json_file(g.config_file));
    for (const auto& o : g.overrides) apply_override(cfg, o);
    cfg.validate();
    return cfg;
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    write_text_file(path, text);
}

std::vector<TerrainGroup> parse_groups(const std::string& s) {
    if (s == "A") return {TerrainGroup::A};
    if (s == "B") return {TerrainGroup::B};
    if (s == "both") return {TerrainGroup::A, TerrainGroup::B};
    throw std::invalid_argument("group must be A, B or both, got '" + s + "'");
}

std::vector<MethodSpec> parse_methods(const std::string& list) {
    if (list.empty() || list == "all") return {kAllMethods.begin(), kAllMethods.end()};
    std::vector<MethodSpec> out;
    std::stringstream ss(list);
    std::string name;
    while (std::getline(ss, name, ','))
        if (!name.empty()) out.push_back(parse_method(name));
    if (out.empty()) throw std::invalid_argument("empty method list");
    return out;
}

int cmd_gen_terrain(const Globals& g, const std::string& group, int count) {
    if (g.out.empty()) throw std::invalid_argument("gen-terrain needs --out <directory>");
    const std::uint64_t seed = g.seed.value_or(42);
    const fs::path manifest = generate_dataset(count, seed, g.out, parse_groups(group));
    const DatasetManifest m = load_manifest(manifest);
    std::cout << std::fixed << std::setprecision(2);
    for (const auto& e : m.terrains)
        std::cout << e.file << "  group " << to_string(e.params.group) << "  avg " << e.stats.average_slope_deg
                  << " deg  max " << e.stats.max_slope_deg << " deg\n";
    std::cout << "manifest: " << manifest.string() << "\n";
    return 0;
}

int cmd_run(const Globals& g, const std::string& terrain_file, const std::string& method_name,
            const std::string& log_path) {
    const MethodSpec method = parse_method(method_name);
    const SimConfig cfg = resolve_config(g);
    const TerrainFile tf = load_terrain(terrain_file);
    const std::string id = terrain_id(tf.params);
    const std::uint64_t seed = g.seed.value_or(0);

    TrialRecord rec;
    if (!log_path.empty()) {
        std::ofstream log_out(log_path);
        if (!log_out) throw std::runtime_error("cannot open '" + log_path + "' for writing");
        TrajectoryLog log(log_out, id, method, config_to_json(cfg));
        TrialOptions opt;
        opt.log = &log;
        rec = run_trial(tf.params, id, method, cfg, seed, opt);
    } else {
        rec = run_trial(tf.params, id, method, cfg, seed);
    }
    nlohmann::json j = record_to_json(rec);
    j["generator_version"] = kGeneratorVersion;
    j["terrain_file"] = terrain_file;
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (!g.out.empty()) write_text_file(g.out, text);
    return rec.success ? 0 : 2;
}

fs::path with_extension(const fs::path& p, const std::string& ext) {
    fs::path q = p;
    q.replace_extension(ext);
    return q;
}

int cmd_bench(const Globals& g, const std::string& manifest_path, const std::string& methods,
              const std::string& log_dir) {
    if (g.jobs < 1) throw std::invalid_argument("--jobs must be a positive integer");
    const SimConfig cfg = resolve_config(g);
    const DatasetManifest manifest = load_manifest(manifest_path);
    BenchOptions opt;
    opt.jobs = g.jobs;
    opt.seed = g.seed.value_or(0);
    opt.dataset_ref = manifest_path;
    if (!log_dir.empty()) opt.log_dir = fs::path(log_dir);
    const BenchReport rep =
        run_benchmark(manifest, fs::path(manifest_path).parent_path(), parse_methods(methods), cfg, opt);

    const fs::path out = g.out.empty() ? fs::path("results.json") : fs::path(g.out);
    write_json_file(out, report_to_json(rep));
    write_text_file(with_extension(out, ".txt"), render_text_tables(rep));
    write_text_file(with_extension(out, ".csv"), render_csv_tables(rep));
    std::cout << render_text_tables(rep);
    for (const auto& t : rep.trials)
        if (!t.error.empty()) std::cerr << "trial " << t.terrain_id << " " << to_string(t.method) << ": " << t.error << "\n";
    std::cout << "results: " << out.string() << "\n";
    return 0;
}

int cmd_report(const Globals& g, const std::string& input, const std::string& format) {
    const BenchReport rep = report_from_json(read_json_file(input));
    if (format == "text") write_output(g.out, render_text_tables(rep));
    else if (format == "csv") write_output(g.out, render_csv_tables(rep));
    else throw std::invalid_argument("format must be text or csv, got '" + format + "'");
    return 0;
}

int cmd_plot(const Globals& g, const std::string& log_path, const std::string& terrain_file) {
    if (g.out.empty()) throw std::invalid_argument("plot needs --out <file.svg>");
    std::ifstream in(log_path);
    if (!in) throw std::runtime_error("cannot open '" + log_path + "'");
    const TrajectoryData data = read_trajectory(in);
    const TerrainFile tf = load_terrain(terrain_file);
    PlotOptions opt;
    if (!data.config.empty()) {
        // Start and target markers follow the config the run used.
        SimConfig cfg;
        apply_config_json(cfg, nlohmann::json::parse(data.config));
        opt.start = cfg.start;
        opt.target = cfg.target.position;
        opt.success_radius = cfg.target.success_radius;
    }
    write_text_file(g.out, render_svg(tf.params, terrain_id(tf.params), data, opt));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chain-of-robots terrain navigation simulator", "mrscwc"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kGeneratorVersion);

    Globals g;
    app.add_option("--config", g.config_file, "JSON config file");
    app.add_option("--set", g.overrides, "Override a config key, key=value (repeatable)");
    app.add_option("--seed", g.seed, "Seed (dataset base seed, trial seed or bench seed)");
    app.add_option("--jobs", g.jobs, "Worker threads for bench")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output path");

    std::string group = "both";
    int count = 0;
    auto* gen = app.add_subcommand("gen-terrain", "Generate a terrain dataset and manifest");
    gen->add_option("--group", group, "A, B or both");
    gen->add_option("--count", count, "Terrains per group")->required()->check(CLI::PositiveNumber);

    std::string terrain_file, method, log_path;
    auto* run = app.add_subcommand("run", "Run one trial and print its record");
    run->add_option("--terrain", terrain_file, "Terrain file")->required();
    run->add_option("--method", method, "Method name, e.g. cwc-tdt")->required();
    run->add_option("--log", log_path, "Trajectory CSV log");

    std::string manifest, methods, log_dir;
    auto* bench = app.add_subcommand("bench", "Run every method on every terrain of a dataset");
    bench->add_option("--manifest", manifest, "Dataset manifest")->required();
    bench->add_option("--methods", methods, "Comma-separated method names, default all");
    bench->add_option("--log-dir", log_dir, "Directory for per-trial trajectory logs");

    std::string input, format = "text";
    auto* report = app.add_subcommand("report", "Format the tables of a results file");
    report->add_option("--input", input, "Results JSON")->required();
    report->add_option("--format", format, "text or csv");

    std::string plot_log, plot_terrain;
    auto* plot = app.add_subcommand("plot", "Render a trajectory log over its terrain as SVG");
    plot->add_option("--log", plot_log, "Trajectory CSV log")->required();
    plot->add_option("--terrain", plot_terrain, "Terrain file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*gen) return cmd_gen_terrain(g, group, count);
        if (*run) return cmd_run(g, terrain_file, method, log_path);
        if (*bench) return cmd_bench(g, manifest, methods, log_dir);
        if (*report) return cmd_report(g, input, format);
        if (*plot) return cmd_plot(g, plot_log, plot_terrain);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
