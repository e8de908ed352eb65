#pragma once

#include <Eigen/Core>
#include <array>
#include <memory>
#include <string>
#include <vector>

#include "tsens/dataset.hpp"
#include "tsens/regression.hpp"

namespace tsens {

// Estimator variants. `proxy` composes, for each outcome-missing study, an
// inner regression of Y on (proxies, W) over donor rows with an outer
// regression of the inner predictions on W over that study's rows. `pooled`
// borrows across studies by fitting the outer regression on rows pooled
// across studies within arm, routing every study through the nested form.
// `blind` ignores proxies and regresses Y on W alone over donor rows.
enum class Variant { proxy, pooled, blind };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct EstimatorOptions {
    RegressionMode mode = RegressionMode::least_squares;
    double ridge = 0.0;          // least-squares only
    int interaction_order = 1;   // 1 or 2
    int max_levels = 64;         // saturated mode
    bool intercept = true;
};

// Per (study, arm): the fitted W-function whose predictions enter the study
// mean, plus the inner (proxies, W) fit when the nested route was taken.
// When a study's proxy subset is empty the inner fit is already a function
// of W alone and is used directly; the outer step is skipped since
// regressing a W-function on W reproduces it.
struct StratumFit {
    std::shared_ptr<const FittedRegression> inner;  // nested route only
    FittedRegression wfun;
    bool nested = false;
    bool outer_skipped = false;
};

struct FittedTransportModel {
    Variant variant = Variant::proxy;
    EstimatorOptions options;
    std::vector<std::array<StratumFit, 2>> strata;  // [study-1][arm]
};

struct AteEstimate {
    std::string variant;
    double overall = 0.0;
    Eigen::VectorXd per_study;  // [study-1]
    Eigen::VectorXd weights;
    std::vector<int> study_sizes;
};

// Fits every regression the variant needs. Validates the empirically
// checkable assumptions first and refuses to fit when a structural check
// fails. Regression errors are annotated with the stratum (study label, arm,
// inner/outer role). Inner fits are shared across studies with identical
// (donor set, proxy subset, arm) signatures.
FittedTransportModel fit_transport(const StudyDataset& data, const ProxyConfig& cfg,
                                   const EstimatorOptions& options = {},
                                   Variant variant = Variant::proxy);

// Plug-in ATE: per-study means of fitted arm contrasts over all rows of the
// study, aggregated with the configured weights. Row means accumulate in
// row order, so results do not depend on thread schedule.
AteEstimate estimate_ate(const FittedTransportModel& model, const StudyDataset& data,
                         const ProxyConfig& cfg);

// Convenience forms: fit then estimate.
AteEstimate estimate_ate_pooled(const StudyDataset& data, const ProxyConfig& cfg,
                                const EstimatorOptions& options = {});
AteEstimate estimate_ate_blind(const StudyDataset& data, const ProxyConfig& cfg,
                               const EstimatorOptions& options = {});
AteEstimate estimate_variant(const StudyDataset& data, const ProxyConfig& cfg,
                             const EstimatorOptions& options, Variant variant);

// Plug-in conditional treatment-effect contrast at covariate vector w for
// one study (full covariate vector, dataset column order).
double estimate_cate(const FittedTransportModel& model, const std::vector<double>& w, int study);

// Serialization used by the command-line tool: one row per study plus an
// overall row, columns variant,study,ate,weight,n_rows.
void write_estimates(const std::vector<AteEstimate>& estimates, const StudyDataset& data,
                     std::ostream& out);

}  // namespace tsens
