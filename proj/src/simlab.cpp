#include "tsens/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "tsens/bootstrap.hpp"
#include "tsens/csv.hpp"
#include "tsens/errors.hpp"
#include "tsens/estimator.hpp"
#include "tsens/parallel.hpp"
#include "tsens/rng.hpp"
#include "tsens/sensitivity.hpp"

namespace tsens {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream tags keeping the oracle draws disjoint from dataset draws.
constexpr std::uint64_t kTruthTag = 0x74727574;  // "trut"
constexpr std::uint64_t kBiasTag = 0x62696173;   // "bias"

double expit(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

void SimScenario::validate() const {
    if (n < 1) throw StructuralError("scenario needs n >= 1 rows per study");
    if (reps < 1) throw StructuralError("scenario needs reps >= 1");
    if (bias == Bias::functional && (b0 < 0 || b1 < 0))
        throw StructuralError("functional bias magnitudes must be non-negative");
}

SimScenario parse_scenario(std::istream& in) {
    SimScenario scn;
    LineReader reader(in);
    std::string line;
    while (reader.next(line)) {
        std::string_view sv = trim(line);
        if (sv.empty() || sv[0] == '#' || sv[0] == ';') continue;
        const std::string at = "scenario line " + std::to_string(reader.line_number());
        auto eq = sv.find('=');
        if (eq == std::string_view::npos) throw ParseError(at + ": expected 'key = value'");
        const std::string key(trim(sv.substr(0, eq)));
        const std::string value(trim(sv.substr(eq + 1)));
        auto need_int = [&](long long lo) {
            auto v = parse_int(value);
            if (!v || *v < lo) throw ParseError(at + ": bad value for " + key);
            return *v;
        };
        auto need_double = [&]() {
            auto v = parse_double(value);
            if (!v) throw ParseError(at + ": bad value for " + key);
            return *v;
        };
        if (key == "n") {
            scn.n = static_cast<int>(need_int(1));
        } else if (key == "bias.kind") {
            if (value == "none") scn.bias = SimScenario::Bias::none;
            else if (value == "constant") scn.bias = SimScenario::Bias::constant;
            else if (value == "functional") scn.bias = SimScenario::Bias::functional;
            else throw ParseError(at + ": bias.kind must be none, constant, or functional");
        } else if (key == "bias.u0") {
            scn.u0 = need_double();
        } else if (key == "bias.delta") {
            scn.delta = need_double();
        } else if (key == "bias.b0") {
            scn.b0 = need_double();
        } else if (key == "bias.b1") {
            scn.b1 = need_double();
        } else if (key == "reps") {
            scn.reps = static_cast<int>(need_int(1));
        } else if (key == "seed") {
            scn.seed = static_cast<std::uint64_t>(need_int(0));
        } else if (key == "delta_grid") {
            scn.delta_grid = parse_grid(value);
        } else if (key == "gamma_grid") {
            scn.gamma_grid = parse_grid(value);
        } else {
            throw ParseError(at + ": unknown key '" + key + "'");
        }
    }
    scn.validate();
    return scn;
}

SimScenario parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return parse_scenario(in);
}

SimDraw simulate(const SimScenario& scenario, int replicate) {
    scenario.validate();
    const int n = scenario.n;
    const int total = 2 * n;

    std::vector<long long> labels(static_cast<std::size_t>(total));
    Eigen::VectorXi arm(total);
    Eigen::MatrixXd W(total, 1), T(total, 1);
    Eigen::VectorXd y(total);
    Eigen::VectorXd draw_y0(total), draw_y1(total), draw_t0(total), draw_t1(total),
        draw_y_full(total);

    for (int s = 1; s <= 2; ++s) {
        RngStream rng = RngStream::from_key({scenario.seed, static_cast<std::uint64_t>(replicate),
                                             static_cast<std::uint64_t>(s)});
        for (int i = 0; i < n; ++i) {
            const int row = (s - 1) * n + i;
            const double w = rng.normal();
            const double t0 = rng.normal();
            const double t1 = 1.0 + rng.normal();
            const int a = rng.bernoulli(0.5) ? 1 : 0;
            const double e0 = rng.normal();
            const double e1 = rng.normal();
            double y0 = -4.0 * t0 + w + e0;
            double y1 = 4.0 * t1 + w + e1;
            if (s == 2) {
                if (scenario.bias == SimScenario::Bias::constant) {
                    y0 += scenario.u0;
                    y1 += scenario.u0 + scenario.delta;
                } else if (scenario.bias == SimScenario::Bias::functional) {
                    const double x = (a == 1 ? t1 : t0) + w;
                    y0 += scenario.b0 * std::sin(x);
                    y1 += scenario.b1 * expit(x);
                }
            }
            labels[static_cast<std::size_t>(row)] = s;
            arm[row] = a;
            W(row, 0) = w;
            T(row, 0) = a == 1 ? t1 : t0;
            draw_t0[row] = t0;
            draw_t1[row] = t1;
            draw_y0[row] = y0;
            draw_y1[row] = y1;
            draw_y_full[row] = a == 1 ? y1 : y0;
            y[row] = s == 2 ? kNaN : draw_y_full[row];
        }
    }
    return SimDraw{StudyDataset::from_rows(labels, arm, W, T, y, {"w1"}, {"t1"}),
                   std::move(draw_y0), std::move(draw_y1), std::move(draw_t0),
                   std::move(draw_t1), std::move(draw_y_full)};
}

TruthRecord truth(const SimScenario& scenario, long long mc_draws) {
    scenario.validate();
    TruthRecord record;
    record.per_study = Eigen::VectorXd::Constant(2, 4.0);
    record.overall = 4.0;
    record.method = "analytic";

    switch (scenario.bias) {
        case SimScenario::Bias::none:
            break;
        case SimScenario::Bias::constant:
            record.true_delta = scenario.delta;
            record.per_study[1] = 4.0 + scenario.delta;
            record.overall = 4.0 + 0.5 * scenario.delta;
            break;
        case SimScenario::Bias::functional: {
            if (mc_draws < 2) throw StructuralError("Monte Carlo truth needs >= 2 draws");
            // The realized proxy plus W is N(A, 2) with A fair Bernoulli.
            RngStream rng = RngStream::from_key({scenario.seed, kTruthTag});
            const double sd = std::sqrt(2.0);
            double sum = 0.0, sumsq = 0.0;
            for (long long i = 0; i < mc_draws; ++i) {
                const double x = (rng.bernoulli(0.5) ? 1.0 : 0.0) + sd * rng.normal();
                const double g = scenario.b1 * expit(x) - scenario.b0 * std::sin(x);
                sum += g;
                sumsq += g * g;
            }
            const double m = static_cast<double>(mc_draws);
            const double mean = sum / m;
            const double var = (sumsq - m * mean * mean) / (m - 1.0);
            record.true_delta = kNaN;
            record.per_study[1] = 4.0 + mean;
            record.overall = 4.0 + 0.5 * mean;
            record.gamma0 = scenario.b0;
            record.gamma1 = scenario.b1;
            record.method = "monte-carlo";
            record.mc_error = 0.5 * std::sqrt(var / m);
            break;
        }
    }
    return record;
}

RealizedBias realized_bias(const SimScenario& scenario, long long mc_draws) {
    scenario.validate();
    RealizedBias out;
    switch (scenario.bias) {
        case SimScenario::Bias::none:
            break;
        case SimScenario::Bias::constant:
            out.u1_mean = scenario.u0 + scenario.delta;
            out.u0_mean = scenario.u0;
            out.delta = scenario.delta;
            break;
        case SimScenario::Bias::functional: {
            if (mc_draws < 2) throw StructuralError("Monte Carlo bias needs >= 2 draws");
            RngStream rng = RngStream::from_key({scenario.seed, kBiasTag});
            const double sd = std::sqrt(2.0);
            double s1 = 0.0, s1sq = 0.0, s0 = 0.0, s0sq = 0.0;
            for (long long i = 0; i < mc_draws; ++i) {
                // Treated rows realize T1 + W ~ N(1,2); controls T0 + W ~ N(0,2).
                const double u1 = scenario.b1 * expit(1.0 + sd * rng.normal());
                const double u0 = scenario.b0 * std::sin(sd * rng.normal());
                s1 += u1;
                s1sq += u1 * u1;
                s0 += u0;
                s0sq += u0 * u0;
            }
            const double m = static_cast<double>(mc_draws);
            out.u1_mean = s1 / m;
            out.u0_mean = s0 / m;
            out.delta = out.u1_mean - out.u0_mean;
            const double v1 = (s1sq - m * out.u1_mean * out.u1_mean) / (m - 1.0);
            const double v0 = (s0sq - m * out.u0_mean * out.u0_mean) / (m - 1.0);
            out.mc_error = std::sqrt((v1 + v0) / m);
            break;
        }
    }
    return out;
}

namespace {

std::string cell_label(const SimScenario& scn) {
    switch (scn.bias) {
        case SimScenario::Bias::functional:
            return "b0=" + format_double(scn.b0) + ";b1=" + format_double(scn.b1) +
                   ";n=" + std::to_string(scn.n);
        default:
            return "u0=" + format_double(scn.u0) + ";delta=" + format_double(scn.delta) +
                   ";n=" + std::to_string(scn.n);
    }
}

std::vector<double> default_delta_grid() { return {-3, -2, -1, 0, 1, 2, 3}; }
std::vector<double> default_gamma_grid() { return {0, 1, 2, 3, 4}; }

struct FigurePreset {
    int n = 100;
    bool replicated = false;   // aggregate over replications vs one draw
    bool study_target = false; // masked study's effect vs overall
    bool compare_blind = false;
    bool bounded = false;      // functional-bias gamma preset
};

FigurePreset preset_of(int figure) {
    switch (figure) {
        case 1: return {100, false, false, false, false};
        case 2: return {100, false, true, false, false};
        case 3: return {100, true, false, false, false};
        case 4: return {100, true, true, false, false};
        case 5: return {100, true, false, true, false};
        case 6: return {100, false, false, false, true};
        case 7: return {200, false, false, false, false};
        case 8: return {200, false, true, false, false};
        case 9: return {500, false, false, false, false};
        case 10: return {500, false, true, false, false};
        default: throw StructuralError("figure id must be 1..10");
    }
}

std::vector<SimScenario> preset_cells(const FigurePreset& preset, const StudyOptions& options) {
    std::vector<SimScenario> cells;
    if (preset.bounded) {
        for (double b0 : {2.0, 3.0, 4.0})
            for (double b1 : {1.0, 2.0, 3.0}) {
                SimScenario scn;
                scn.n = preset.n;
                scn.bias = SimScenario::Bias::functional;
                scn.b0 = b0;
                scn.b1 = b1;
                scn.seed = options.seed;
                cells.push_back(scn);
            }
    } else {
        for (double u0 : {-3.0, 0.0, 3.0})
            for (double delta : {-2.0, 0.0, 2.0}) {
                SimScenario scn;
                scn.n = preset.n;
                scn.bias = SimScenario::Bias::constant;
                scn.u0 = u0;
                scn.delta = delta;
                scn.seed = options.seed;
                cells.push_back(scn);
            }
    }
    return cells;
}

// One draw, a delta scan with bootstrap intervals, rows for one target.
void run_single_draw_cell(const SimScenario& scn, const FigurePreset& preset,
                          const StudyOptions& options,
                          const std::function<void(const FigureRow&)>& sink) {
    const SimDraw draw = simulate(scn, 0);
    const ProxyConfig cfg = default_config(draw.data);
    BootstrapPlan plan;
    plan.n_replicates = options.n_boot;
    plan.seed = options.seed;
    plan.threads = options.threads;
    const SensitivityResult scan =
        scan_delta(draw.data, cfg, {}, Variant::proxy, default_delta_grid(), plan);
    const TruthRecord tr = truth(scn);
    const std::string label = cell_label(scn);
    const std::string target = preset.study_target ? "2" : "overall";
    for (const auto& row : scan.rows) {
        if (row.target != target) continue;
        FigureRow out;
        out.scenario = label;
        out.replicate = 0;
        out.parameter = row.parameter;
        out.estimate = row.estimate_or_lower;
        out.lower = row.ci_lower;
        out.upper = row.ci_upper;
        out.truth = preset.study_target ? tr.per_study[1] : tr.overall;
        sink(out);
    }
}

// Replicated runs: every replication re-simulates and re-estimates; the
// delta adjustments are affine, so replicate-level estimates are stored
// once and shifted per grid value when aggregating.
void run_replicated_cell(const SimScenario& scn, const FigurePreset& preset, int reps,
                         const StudyOptions& options,
                         const std::function<void(const FigureRow&)>& sink) {
    struct RepValue {
        double overall = kNaN;
        double study2 = kNaN;
        double blind_overall = kNaN;
    };
    std::vector<RepValue> values(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), options.threads, [&](std::size_t r) {
        const SimDraw draw = simulate(scn, static_cast<int>(r));
        const ProxyConfig cfg = default_config(draw.data);
        try {
            const AteEstimate est = estimate_variant(draw.data, cfg, {}, Variant::proxy);
            values[r].overall = est.overall;
            values[r].study2 = est.per_study[1];
            if (preset.compare_blind)
                values[r].blind_overall = estimate_variant(draw.data, cfg, {}, Variant::blind).overall;
        } catch (const Error&) {
            // Degenerate draw; recorded as a missing replication.
        }
    });

    const TruthRecord tr = truth(scn);
    const double truth_value = preset.study_target ? tr.per_study[1] : tr.overall;
    const double mass = 0.5;  // equal-size studies, one of two masked

    auto emit = [&](const std::string& label, auto value_of, double shift_scale) {
        for (double delta : default_delta_grid()) {
            std::vector<double> shifted;
            shifted.reserve(values.size());
            for (const auto& v : values) {
                const double base = value_of(v);
                if (!std::isnan(base)) shifted.push_back(base + shift_scale * delta);
            }
            if (shifted.empty())
                throw EstimationError("every replication failed for " + label);
            std::sort(shifted.begin(), shifted.end());
            double mean = 0.0;
            for (double v : shifted) mean += v;
            mean /= static_cast<double>(shifted.size());
            FigureRow out;
            out.scenario = label;
            out.replicate = reps;
            out.parameter = delta;
            out.estimate = mean;
            out.lower = percentile_nearest_rank(shifted, 0.025);
            out.upper = percentile_nearest_rank(shifted, 0.975);
            out.truth = truth_value;
            sink(out);
        }
    };

    const std::string label = cell_label(scn);
    if (preset.compare_blind) {
        emit(label + ";variant=proxy", [](const RepValue& v) { return v.overall; }, mass);
        emit(label + ";variant=blind", [](const RepValue& v) { return v.blind_overall; }, mass);
    } else if (preset.study_target) {
        emit(label, [](const RepValue& v) { return v.study2; }, 1.0);
    } else {
        emit(label, [](const RepValue& v) { return v.overall; }, mass);
    }
}

// One draw, gamma-scan bounds around the point estimate.
void run_bounded_cell(const SimScenario& scn, const StudyOptions& options,
                      const std::function<void(const FigureRow&)>& sink) {
    const SimDraw draw = simulate(scn, 0);
    const ProxyConfig cfg = default_config(draw.data);
    BootstrapPlan plan;
    plan.n_replicates = options.n_boot;
    plan.seed = options.seed;
    plan.threads = options.threads;
    const SensitivityResult scan = scan_gamma(draw.data, cfg, {}, Variant::proxy,
                                              default_gamma_grid(), plan, BoundForm::flat);
    const TruthRecord tr = truth(scn);
    const std::string label = cell_label(scn);
    for (const auto& row : scan.rows) {
        FigureRow out;
        out.scenario = label;
        out.replicate = 0;
        out.parameter = row.parameter;
        out.estimate = scan.boot.point[0];
        out.lower = row.estimate_or_lower;
        out.upper = row.upper;
        out.truth = tr.overall;
        sink(out);
    }
}

}  // namespace

void run_study(const StudyOptions& options, const std::function<void(const FigureRow&)>& sink) {
    const FigurePreset preset = preset_of(options.figure);
    const int reps = options.reps > 0 ? options.reps : 1000;
    for (const SimScenario& scn : preset_cells(preset, options)) {
        if (preset.bounded)
            run_bounded_cell(scn, options, sink);
        else if (preset.replicated)
            run_replicated_cell(scn, preset, reps, options, sink);
        else
            run_single_draw_cell(scn, preset, options, sink);
    }
}

void write_figure_header(std::ostream& out) {
    out << "scenario,replicate,parameter,estimate,lower,upper,truth\n";
}

void write_figure_row(const FigureRow& row, std::ostream& out) {
    out << row.scenario << ',' << row.replicate << ',' << format_double(row.parameter) << ','
        << format_double(row.estimate) << ',' << format_double(row.lower) << ','
        << format_double(row.upper) << ',' << format_double(row.truth) << '\n';
}

}  // namespace tsens
