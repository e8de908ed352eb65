#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tsens/dataset.hpp"

namespace tsens {

// Two-study generator: study 1 observes the outcome, study 2 has it masked.
// Per row: W ~ N(0,1), T0 ~ N(0,1), T1 ~ N(1,1), A ~ Bernoulli(1/2),
// Y0 = -4*T0 + W + e0, Y1 = 4*T1 + W + e1 with unit normal noise, observed
// T and Y picked by A. The study-2 bias shifts both counterfactuals:
//   constant:   Y0 += u0, Y1 += u0 + delta (so its true effect is 4 + delta)
//   functional: Y0 += b0*sin(T + W), Y1 += b1*expit(T + W), with T the
//               realized proxy of the row's assigned arm.
struct SimScenario {
    enum class Bias { none, constant, functional };

    int n = 100;  // rows per study
    Bias bias = Bias::none;
    double u0 = 0.0;
    double delta = 0.0;
    double b0 = 0.0;
    double b1 = 0.0;
    std::uint64_t seed = 0;
    int reps = 1000;
    std::vector<double> delta_grid;  // optional scan grids
    std::vector<double> gamma_grid;

    void validate() const;
};

// Scenario file: flat key-value text with keys n, bias.kind
// (none|constant|functional), bias.u0, bias.delta, bias.b0, bias.b1, reps,
// seed, delta_grid, gamma_grid.
SimScenario parse_scenario(std::istream& in);
SimScenario parse_scenario_file(const std::string& path);

// A generated dataset plus the truth sidecar the estimators never see:
// per-row counterfactuals (after any bias shift), latent proxies, and the
// unmasked outcome, aligned with the dataset's rows.
struct SimDraw {
    StudyDataset data;
    Eigen::VectorXd y0;
    Eigen::VectorXd y1;
    Eigen::VectorXd t0;
    Eigen::VectorXd t1;
    Eigen::VectorXd y_full;
};

// Deterministic in (scenario, replicate): each (replicate, study) pair gets
// its own derived RNG stream.
SimDraw simulate(const SimScenario& scenario, int replicate);

struct TruthRecord {
    double overall = 0.0;
    Eigen::VectorXd per_study;   // length 2
    double true_delta = 0.0;     // constant case; NaN for functional bias
    double gamma0 = 0.0;         // functional case: (b0, b1)
    double gamma1 = 0.0;
    std::string method;          // "analytic" or "monte-carlo"
    double mc_error = 0.0;       // standard error of the overall value
};

// Exact for the none/constant cases. The functional case integrates the two
// bias means by Monte Carlo (draw count configurable; the standard error
// scales accordingly).
TruthRecord truth(const SimScenario& scenario, long long mc_draws = 10000000);

// Monte Carlo summary of the study-level bias the generator realizes:
// mean of u1 given treatment and of u0 given control in the masked study,
// and their contrast (what a constant-bias adjustment would need to undo).
struct RealizedBias {
    double u1_mean = 0.0;
    double u0_mean = 0.0;
    double delta = 0.0;
    double mc_error = 0.0;
};
RealizedBias realized_bias(const SimScenario& scenario, long long mc_draws = 1000000);

// One tidy output row of a replication study. Single-draw presets emit
// replicate 0 with bootstrap interval columns; replicated presets emit one
// summary row per grid value with replicate = the replication count and
// lower/upper the 2.5th/97.5th quantiles across replications.
struct FigureRow {
    std::string scenario;
    long long replicate = 0;
    double parameter = 0.0;
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double truth = 0.0;
};

// Experiment presets. Constant-bias presets sweep the 3x3 grid of
// (u0, true delta) cells; the bounded preset sweeps (b0, b1) cells.
//   1: overall adjusted estimate vs delta, one draw, bootstrap CIs, n=100
//   2: as 1 for the masked study's own effect
//   3: overall adjusted estimate vs delta, replicated summary
//   4: as 3 for the masked study
//   5: as 3 with the proxy-using and proxy-blind estimators side by side
//   6: bound interval vs gamma, one draw, functional bias, n=100
//   7/8: as 1/2 with n=200    9/10: as 1/2 with n=500
struct StudyOptions {
    int figure = 1;
    int reps = 0;  // 0 = preset default (1000 for replicated presets)
    std::uint64_t seed = 0;
    int n_boot = 1000;
    int threads = 1;
};

// Runs one preset, emitting rows in a fixed order independent of thread
// count. The sink sees rows ready for figure_csv.
void run_study(const StudyOptions& options, const std::function<void(const FigureRow&)>& sink);

// CSV form: scenario,replicate,parameter,estimate,lower,upper,truth.
void write_figure_header(std::ostream& out);
void write_figure_row(const FigureRow& row, std::ostream& out);

}  // namespace tsens
