#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tsens/bootstrap.hpp"
#include "tsens/csv.hpp"
#include "tsens/dataset.hpp"
#include "tsens/errors.hpp"
#include "tsens/estimator.hpp"
#include "tsens/plot.hpp"
#include "tsens/sensitivity.hpp"
#include "tsens/simlab.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

// Exit codes: 0 success, 2 usage, 3 unreadable or malformed input,
// 4 structural/validation failure, 5 estimation failure, 1 internal.
enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kParse = 3, kStructure = 4, kEstimation = 5 };

struct CommonOpts {
    std::string out = ".";
    std::uint64_t seed = 0;
    int threads = 1;
};

struct DataOpts {
    std::string data;
    std::string config;
    std::string variant = "proxy";
};

void add_common(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "master seed")->capture_default_str();
    sub->add_option("--threads", o.threads, "worker threads")
        ->check(CLI::Range(1, 256))
        ->capture_default_str();
}

void add_data(CLI::App* sub, DataOpts& o) {
    sub->add_option("--data", o.data, "dataset CSV")->required();
    sub->add_option("--config", o.config, "proxy/donor/weights config");
    sub->add_option("--variant", o.variant, "estimator variant")
        ->check(CLI::IsMember({"proxy", "pooled", "blind"}))
        ->capture_default_str();
}

std::string single_line(std::string msg) {
    for (char& c : msg)
        if (c == '\n') c = ' ';
    return msg;
}

std::filesystem::path prepare_out(const CommonOpts& o) {
    std::filesystem::path dir(o.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw tsens::ParseError("cannot create output directory '" + o.out + "'");
    return dir;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw tsens::ParseError("cannot write '" + path.string() + "'");
    return out;
}

std::string metadata_line(std::uint64_t seed, std::uint64_t config_hash) {
    return std::string("tsens ") + kVersion + " seed=" + std::to_string(seed) +
           " config=" + tsens::hex64(config_hash);
}

void write_run_meta(const std::filesystem::path& dir, const std::string& command,
                    std::uint64_t seed, std::uint64_t config_hash,
                    const std::vector<std::pair<std::string, std::string>>& extra) {
    std::ofstream out = open_out(dir / "run_meta.txt");
    out << "tool = tsens\nversion = " << kVersion << "\ncommand = " << command
        << "\nseed = " << seed << "\nconfig_hash = " << tsens::hex64(config_hash) << "\n";
    for (const auto& [k, v] : extra) out << k << " = " << v << "\n";
}

struct LoadedData {
    tsens::StudyDataset data;
    tsens::ProxyConfig cfg;
    std::uint64_t config_hash = 0;
};

LoadedData load_inputs(const DataOpts& o) {
    tsens::StudyDataset data = tsens::load_dataset_file(o.data);
    tsens::ProxyConfig cfg = o.config.empty() ? tsens::default_config(data)
                                              : tsens::parse_proxy_config_file(o.config, data);
    const std::uint64_t hash = tsens::fnv1a64(tsens::config_text(cfg, data));
    return {std::move(data), std::move(cfg), hash};
}

void report_validation(const tsens::StudyDataset& data, const tsens::ProxyConfig& cfg) {
    const tsens::ValidationReport report = tsens::validate_assumptions(data, cfg);
    if (!report.ok())
        throw tsens::StructuralError("assumption checks failed: " +
                                     single_line(report.summary()));
    for (const auto& check : report.checks)
        if (check.status == tsens::CheckStatus::warn)
            std::cout << "warning: " << check.name << ": " << check.detail << "\n";
}

int cmd_estimate(const CommonOpts& common, const DataOpts& data_opts) {
    const LoadedData in = load_inputs(data_opts);
    report_validation(in.data, in.cfg);
    const auto dir = prepare_out(common);

    const tsens::Variant variant = tsens::variant_from_name(data_opts.variant);
    const tsens::AteEstimate est = tsens::estimate_variant(in.data, in.cfg, {}, variant);

    std::ofstream out = open_out(dir / "estimates.csv");
    out << "# " << metadata_line(common.seed, in.config_hash) << "\n";
    tsens::write_estimates({est}, in.data, out);
    write_run_meta(dir, "estimate", common.seed, in.config_hash,
                   {{"variant", data_opts.variant}, {"data", data_opts.data}});

    std::cout << "overall ATE (" << est.variant << "): " << tsens::format_double(est.overall)
              << "\n";
    for (int s = 1; s <= static_cast<int>(est.per_study.size()); ++s)
        std::cout << "study " << in.data.study_label(s)
                  << " ATE: " << tsens::format_double(est.per_study[s - 1]) << "\n";
    std::cout << "wrote " << (dir / "estimates.csv").string() << "\n";
    return kOk;
}

int cmd_sensitivity(const CommonOpts& common, const DataOpts& data_opts,
                    const std::string& grid_text, int n_boot, double level) {
    const LoadedData in = load_inputs(data_opts);
    report_validation(in.data, in.cfg);
    const auto dir = prepare_out(common);

    const std::vector<double> grid = tsens::parse_grid(grid_text);
    tsens::BootstrapPlan plan;
    plan.n_replicates = n_boot;
    plan.seed = common.seed;
    plan.level = level;
    plan.threads = common.threads;
    const tsens::SensitivityResult result =
        tsens::scan_delta(in.data, in.cfg, {}, tsens::variant_from_name(data_opts.variant), grid,
                          plan);

    std::ofstream out = open_out(dir / "sensitivity.csv");
    out << "# " << metadata_line(common.seed, in.config_hash) << "\n";
    tsens::write_sensitivity(result, out);
    write_run_meta(dir, "sensitivity", common.seed, in.config_hash,
                   {{"variant", data_opts.variant},
                    {"data", data_opts.data},
                    {"n_boot", std::to_string(n_boot)},
                    {"delta_grid", grid_text}});

    const auto critical = tsens::critical_delta(result);
    std::cout << "critical delta: "
              << (critical ? tsens::format_double(*critical) : std::string("none")) << "\n";
    std::cout << "wrote " << (dir / "sensitivity.csv").string() << "\n";
    return kOk;
}

int cmd_bounds(const CommonOpts& common, const DataOpts& data_opts, const std::string& grid_text,
               const std::string& form_name, std::optional<double> gamma1,
               std::optional<double> gamma0, int n_boot, double level) {
    if (gamma1.has_value() != gamma0.has_value())
        throw tsens::ParseError("--gamma1 and --gamma0 must be given together");
    const LoadedData in = load_inputs(data_opts);
    report_validation(in.data, in.cfg);
    const auto dir = prepare_out(common);

    const std::vector<double> grid = tsens::parse_grid(grid_text);
    tsens::BootstrapPlan plan;
    plan.n_replicates = n_boot;
    plan.seed = common.seed;
    plan.level = level;
    plan.threads = common.threads;
    std::optional<std::pair<double, double>> split;
    if (gamma1) split = std::make_pair(*gamma1, *gamma0);
    const tsens::SensitivityResult result = tsens::scan_gamma(
        in.data, in.cfg, {}, tsens::variant_from_name(data_opts.variant), grid, plan,
        tsens::bound_form_from_name(form_name), split);

    std::ofstream out = open_out(dir / "bounds.csv");
    out << "# " << metadata_line(common.seed, in.config_hash) << "\n";
    tsens::write_sensitivity(result, out);
    write_run_meta(dir, "bounds", common.seed, in.config_hash,
                   {{"variant", data_opts.variant},
                    {"data", data_opts.data},
                    {"n_boot", std::to_string(n_boot)},
                    {"gamma_grid", grid_text},
                    {"bound_form", form_name}});
    std::cout << "wrote " << (dir / "bounds.csv").string() << "\n";
    return kOk;
}

int cmd_simulate(const CommonOpts& common, const std::string& scenario_path, int replicate,
                 bool seed_given) {
    tsens::SimScenario scn = tsens::parse_scenario_file(scenario_path);
    if (seed_given) scn.seed = common.seed;
    const auto dir = prepare_out(common);

    const std::string canonical =
        "n=" + std::to_string(scn.n) + ";bias=" + std::to_string(static_cast<int>(scn.bias)) +
        ";u0=" + tsens::format_double(scn.u0) + ";delta=" + tsens::format_double(scn.delta) +
        ";b0=" + tsens::format_double(scn.b0) + ";b1=" + tsens::format_double(scn.b1) +
        ";reps=" + std::to_string(scn.reps) + ";seed=" + std::to_string(scn.seed);
    const std::uint64_t hash = tsens::fnv1a64(canonical);

    const tsens::SimDraw draw = tsens::simulate(scn, replicate);
    tsens::save_dataset_file(draw.data, (dir / "dataset.csv").string(),
                             metadata_line(scn.seed, hash));
    write_run_meta(dir, "simulate", scn.seed, hash,
                   {{"scenario", scenario_path}, {"replicate", std::to_string(replicate)}});
    std::cout << "wrote " << (dir / "dataset.csv").string() << " (" << draw.data.n_rows()
              << " rows, " << draw.data.n_studies() << " studies)\n";
    return kOk;
}

int cmd_reproduce(const CommonOpts& common, int figure, int reps, int n_boot, bool plot) {
    const auto dir = prepare_out(common);
    tsens::StudyOptions options;
    options.figure = figure;
    options.reps = reps;
    options.seed = common.seed;
    options.n_boot = n_boot;
    options.threads = common.threads;

    const std::string canonical = "figure=" + std::to_string(figure) +
                                  ";reps=" + std::to_string(reps) +
                                  ";n_boot=" + std::to_string(n_boot) +
                                  ";seed=" + std::to_string(common.seed);
    const std::uint64_t hash = tsens::fnv1a64(canonical);

    const std::string base = "figure" + std::to_string(figure);
    std::ofstream out = open_out(dir / (base + ".csv"));
    out << "# " << metadata_line(common.seed, hash) << "\n";
    tsens::write_figure_header(out);
    std::vector<tsens::FigureRow> rows;
    std::size_t n_rows = 0;
    tsens::run_study(options, [&](const tsens::FigureRow& row) {
        tsens::write_figure_row(row, out);
        ++n_rows;
        if (plot) rows.push_back(row);
    });
    out.close();

    write_run_meta(dir, "reproduce", common.seed, hash,
                   {{"figure", std::to_string(figure)},
                    {"reps", std::to_string(reps)},
                    {"n_boot", std::to_string(n_boot)}});
    std::cout << "wrote " << (dir / (base + ".csv")).string() << " (" << n_rows << " rows)\n";
    if (plot) {
        tsens::write_figure_svg_file(rows, (dir / (base + ".svg")).string());
        std::cout << "wrote " << (dir / (base + ".svg")).string() << "\n";
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transported treatment-effect estimation with outcome proxies"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonOpts common;
    DataOpts data_opts;

    auto* est = app.add_subcommand("estimate", "plug-in transported ATE from a dataset");
    add_common(est, common);
    add_data(est, data_opts);

    auto* sens = app.add_subcommand("sensitivity", "constant-bias adjustment over a delta grid");
    std::string delta_grid;
    int sens_boot = 1000;
    double sens_level = 0.95;
    add_common(sens, common);
    add_data(sens, data_opts);
    sens->add_option("--delta-grid", delta_grid, "grid a:b:step, list, or single value")
        ->required();
    sens->add_option("--n-boot", sens_boot, "bootstrap replicates")->capture_default_str();
    sens->add_option("--level", sens_level, "confidence level")->capture_default_str();

    auto* bounds = app.add_subcommand("bounds", "bounded-bias intervals over a gamma grid");
    std::string gamma_grid;
    std::string bound_form = "flat";
    std::optional<double> gamma1, gamma0;
    int bounds_boot = 1000;
    double bounds_level = 0.95;
    add_common(bounds, common);
    add_data(bounds, data_opts);
    bounds->add_option("--gamma-grid", gamma_grid, "grid a:b:step, list, or single value")
        ->required();
    bounds->add_option("--bound-form", bound_form, "interval form")
        ->check(CLI::IsMember({"flat", "weighted"}))
        ->capture_default_str();
    bounds->add_option("--gamma1", gamma1, "treated-arm bias magnitude (with --gamma0)");
    bounds->add_option("--gamma0", gamma0, "control-arm bias magnitude (with --gamma1)");
    bounds->add_option("--n-boot", bounds_boot, "bootstrap replicates")->capture_default_str();
    bounds->add_option("--level", bounds_level, "confidence level")->capture_default_str();

    auto* sim = app.add_subcommand("simulate", "generate a dataset from a scenario file");
    std::string scenario_path;
    int replicate = 0;
    add_common(sim, common);
    sim->add_option("--scenario", scenario_path, "scenario key-value file")->required();
    sim->add_option("--replicate", replicate, "replicate index")->capture_default_str();

    auto* rep = app.add_subcommand("reproduce", "run a packaged simulation experiment");
    int figure = 1;
    int reps = 0;
    int rep_boot = 1000;
    bool plot = false;
    add_common(rep, common);
    rep->add_option("--figure", figure, "experiment preset 1..10")
        ->required()
        ->check(CLI::Range(1, 10));
    rep->add_option("--reps", reps, "replications (0 = preset default)")->capture_default_str();
    rep->add_option("--n-boot", rep_boot, "bootstrap replicates")->capture_default_str();
    rep->add_flag("--plot", plot, "also write an SVG rendering");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: usage: " << single_line(e.what()) << "\n";
        return kUsage;
    }

    try {
        if (est->parsed()) return cmd_estimate(common, data_opts);
        if (sens->parsed())
            return cmd_sensitivity(common, data_opts, delta_grid, sens_boot, sens_level);
        if (bounds->parsed())
            return cmd_bounds(common, data_opts, gamma_grid, bound_form, gamma1, gamma0,
                              bounds_boot, bounds_level);
        if (sim->parsed())
            return cmd_simulate(common, scenario_path, replicate, sim->count("--seed") > 0);
        if (rep->parsed()) return cmd_reproduce(common, figure, reps, rep_boot, plot);
        std::cerr << "error: usage: no subcommand\n";
        return kUsage;
    } catch (const tsens::ParseError& e) {
        std::cerr << "error: parse: " << single_line(e.what()) << "\n";
        return kParse;
    } catch (const tsens::StructuralError& e) {
        std::cerr << "error: structure: " << single_line(e.what()) << "\n";
        return kStructure;
    } catch (const tsens::EstimationError& e) {
        std::cerr << "error: estimation: " << single_line(e.what()) << "\n";
        return kEstimation;
    } catch (const tsens::Error& e) {
        std::cerr << "error: run: " << single_line(e.what()) << "\n";
        return kStructure;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << single_line(e.what()) << "\n";
        return kInternal;
    }
}
