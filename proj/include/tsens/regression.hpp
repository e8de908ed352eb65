#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "tsens/dataset.hpp"

namespace tsens {

// Which dataset columns enter the regression design. Interaction order 2
// adds pairwise products of the selected predictors to the main effects.
struct DesignSpec {
    bool intercept = true;
    std::vector<int> covariate_ids;
    std::vector<int> proxy_ids;
    int interaction_order = 1;  // 1 or 2
};

// Spec with all covariates and the given proxies as main effects.
DesignSpec main_effects_spec(const StudyDataset& data, std::vector<int> proxy_ids = {});

// Human-readable design column names ("1", "w1", "t2", "w1*t2", ...).
std::vector<std::string> design_column_names(const StudyDataset& data, const DesignSpec& spec);

// Design matrix for the listed rows, columns as in design_column_names.
Eigen::MatrixXd build_design(const StudyDataset& data, const std::vector<int>& rows,
                             const DesignSpec& spec);

// response[i] pairs with rows[i].
Eigen::VectorXd gather(const Eigen::VectorXd& column, const std::vector<int>& rows);

enum class RegressionMode { least_squares, saturated };

// A fitted conditional-mean model. In least-squares mode predictions are
// design-matrix products with `coef`; in saturated mode they are empirical
// cell means keyed by the raw predictor values (intercept and interaction
// settings are irrelevant there).
struct FittedRegression {
    RegressionMode mode = RegressionMode::least_squares;
    DesignSpec spec;
    Eigen::VectorXd coef;                          // least-squares only
    std::map<std::vector<double>, double> cells;   // saturated only
    int n_used = 0;
    int rank = 0;
    double residual_variance = 0.0;
    std::string subset;  // stratum descriptor, used to annotate errors
};

// Ordinary least squares via a rank-revealing orthogonal decomposition
// (relative rank tolerance 1e-10). ridge > 0 augments the system with
// sqrt(ridge)·I rows, penalizing every design column.
// Errors: fewer rows than columns (names the stratum), exact collinearity
// (names the dependent columns).
FittedRegression fit_least_squares(const StudyDataset& data, const std::vector<int>& rows,
                                   const Eigen::VectorXd& response, const DesignSpec& spec,
                                   double ridge = 0.0, std::string subset = "");

// Empirical conditional mean on discrete predictors: one cell per distinct
// predictor tuple. Each predictor must take at most max_levels distinct
// values in the fit rows.
FittedRegression fit_saturated(const StudyDataset& data, const std::vector<int>& rows,
                               const Eigen::VectorXd& response, const DesignSpec& spec,
                               int max_levels = 64, std::string subset = "");

// Fitted values for the listed rows. Saturated mode errors on a predictor
// tuple never seen at fit time, naming the cell.
Eigen::VectorXd predict(const FittedRegression& model, const StudyDataset& data,
                        const std::vector<int>& rows);

// Fitted value at raw predictor values (covariates then proxies, in the
// spec's column order).
double predict_at(const FittedRegression& model, const std::vector<double>& predictors);

}  // namespace tsens
