#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tsens/dataset.hpp"

namespace tsens {

// Study-stratified resampling plan. Stratifying by study preserves each
// study's sample size, treating study membership as design rather than as
// something to resample.
struct BootstrapPlan {
    int n_replicates = 1000;
    std::uint64_t seed = 0;
    bool by_arm = false;  // stratify by study x arm instead of study
    double level = 0.95;
    int threads = 1;

    void validate() const;
};

struct BootstrapResult {
    std::vector<double> replicates;  // length B; NaN marks a failed replicate
    double point = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double se = 0.0;
    int n_failed = 0;
    std::uint64_t seed = 0;
};

// A scalar statistic of (data, config) to be bootstrapped.
using Functional = std::function<double(const StudyDataset&, const ProxyConfig&)>;

// Within each stratum draws stratum-size rows with replacement. The RNG
// stream is derived from (seed, replicate, stratum), so any replicate can be
// regenerated in isolation and parallel runs agree with serial ones.
StudyDataset resample(const StudyDataset& data, const BootstrapPlan& plan, int replicate);

// Nearest-rank order statistic of an ascending-sorted vector.
double percentile_nearest_rank(const std::vector<double>& sorted_values, double p);

// Percentile interval, standard error, and usable-replicate count from a
// replicate vector in which NaN marks failures.
struct IntervalSummary {
    double lower = 0.0;
    double upper = 0.0;
    double se = 0.0;
    int n_used = 0;
    int n_failed = 0;
};
IntervalSummary summarize_replicates(const std::vector<double>& replicates, double level);

// Runs the estimator on the original data, then on every resample (all
// regressions refit per replicate). Replicates whose estimator throws an
// estimation or validation error are recorded as failures and excluded from
// the interval; more than 5% failures is an error.
BootstrapResult bootstrap_estimate(const StudyDataset& data, const ProxyConfig& cfg,
                                   const Functional& estimator, const BootstrapPlan& plan);

// Vector-valued form: one pipeline run per replicate, one interval summary
// per component. Component count must not depend on the resample.
using VectorFunctional =
    std::function<std::vector<double>(const StudyDataset&, const ProxyConfig&)>;

struct VectorBootstrapResult {
    std::vector<double> point;
    std::vector<std::vector<double>> replicates;  // [component][replicate], NaN = failed
    std::vector<IntervalSummary> summaries;       // per component
    int n_failed = 0;
    std::uint64_t seed = 0;
};

VectorBootstrapResult bootstrap_vector(const StudyDataset& data, const ProxyConfig& cfg,
                                       const VectorFunctional& estimator,
                                       const BootstrapPlan& plan);

// Standard normal quantile (Wichura's double-precision rational
// approximations); feeds the standard-error margins on bound intervals.
double normal_quantile(double p);

}  // namespace tsens
