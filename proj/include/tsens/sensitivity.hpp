#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tsens/bootstrap.hpp"
#include "tsens/dataset.hpp"
#include "tsens/estimator.hpp"

namespace tsens {

enum class BiasKind { constant, bounded };

// Interval form for the bounded-bias analysis. `flat` uses half-width 2γ
// regardless of how much weight sits on outcome-missing studies; `weighted`
// scales the half-width by that weight mass, which is tighter and follows
// from carrying the per-study bound through the weighted sum.
enum class BoundForm { flat, weighted };

BoundForm bound_form_from_name(const std::string& name);
const char* bound_form_name(BoundForm form);

// Grid of sensitivity parameters: signed bias offsets δ (constant kind) or
// bias magnitudes γ >= 0 (bounded kind). Grids must be nonempty and
// strictly increasing.
struct BiasSpec {
    BiasKind kind = BiasKind::constant;
    std::vector<double> grid;
    std::optional<std::pair<double, double>> split_gamma;  // (γ1, γ0) single bound

    void validate() const;
};

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

// One reporting row: an adjusted estimate (constant kind; `upper` is NaN) or
// a partial-identification interval (bounded kind), with its confidence
// interval, for one target ("overall" or a study label).
struct SensitivityRow {
    std::string variant;
    BiasKind kind = BiasKind::constant;
    double parameter = 0.0;
    double estimate_or_lower = 0.0;
    double upper = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    std::string target;
};

struct SensitivityResult {
    BiasKind kind = BiasKind::constant;
    double missing_mass = 0.0;  // total weight on outcome-missing studies
    std::vector<SensitivityRow> rows;
    VectorBootstrapResult boot;  // the single underlying bootstrap run
};

// Shifts an estimate by a constant per-row bias δ on every outcome-missing
// study: ATE(s) += δ for s beyond the outcome-observed range, overall
// re-aggregated, so overall moves by δ times the missing weight mass.
AteEstimate adjust_constant(const AteEstimate& est, double delta, const ProxyConfig& cfg);

// Point estimate and one bootstrap run, then the constant-bias adjustment
// applied per grid δ. The adjustment is deterministic and affine, so each
// confidence interval is the δ=0 percentile interval shifted by the same
// offset as the estimate. Reports the overall target and each
// outcome-missing study.
SensitivityResult scan_delta(const StudyDataset& data, const ProxyConfig& cfg,
                             const EstimatorOptions& options, Variant variant,
                             const std::vector<double>& grid, const BootstrapPlan& plan);

// Partial-identification interval around an estimate under bias magnitude
// bounded by γ in each arm: half-width 2γ (scaled by the missing weight
// mass under the weighted form).
Interval bound_ate(const AteEstimate& est, double gamma, const ProxyConfig& cfg,
                   BoundForm form = BoundForm::flat);
// Separate per-arm magnitudes: (γ1 + γ0) takes the place of 2γ.
Interval bound_ate_split(const AteEstimate& est, double gamma1, double gamma0,
                         const ProxyConfig& cfg, BoundForm form = BoundForm::flat);

// Point estimate and one bootstrap run (the margin needs only the standard
// error, so bootstrapping happens once, not per γ). Per grid γ the bound
// interval is widened on both sides by the normal-quantile margin for the
// plan's confidence level times the bootstrap standard error. When
// split_gamma is set, each grid value scales that (γ1, γ0) pair, giving a
// grid of per-arm pairs along a fixed ray.
SensitivityResult scan_gamma(const StudyDataset& data, const ProxyConfig& cfg,
                             const EstimatorOptions& options, Variant variant,
                             const std::vector<double>& grid, const BootstrapPlan& plan,
                             BoundForm form = BoundForm::flat,
                             std::optional<std::pair<double, double>> split_gamma = {});

// Smallest-magnitude grid δ whose overall confidence interval contains 0
// (ties broken toward the negative value); nullopt when none qualifies.
std::optional<double> critical_delta(const SensitivityResult& result);

// CSV form: variant,kind,parameter,estimate_or_lower,upper,ci_lower,
// ci_upper,target. NaN fields are written empty.
void write_sensitivity(const SensitivityResult& result, std::ostream& out);

}  // namespace tsens
