#include "tsens/regression.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "tsens/csv.hpp"
#include "tsens/errors.hpp"

namespace tsens {

namespace {

std::string with_subset(const std::string& subset, const std::string& msg) {
    return subset.empty() ? msg : subset + ": " + msg;
}

void check_spec(const StudyDataset& data, const DesignSpec& spec) {
    if (spec.interaction_order != 1 && spec.interaction_order != 2)
        throw StructuralError("interaction order must be 1 or 2");
    for (int j : spec.covariate_ids)
        if (j < 0 || j >= data.n_covariates())
            throw StructuralError("design references covariate column " + std::to_string(j) +
                                  ", dataset has " + std::to_string(data.n_covariates()));
    for (int j : spec.proxy_ids)
        if (j < 0 || j >= data.n_proxies())
            throw StructuralError("design references proxy column " + std::to_string(j) +
                                  ", dataset has " + std::to_string(data.n_proxies()));
}

// Raw predictor values for a row, covariates first, in spec order. Masked
// proxies surface here as NaN, so reject them.
std::vector<double> predictor_tuple(const StudyDataset& data, int row, const DesignSpec& spec) {
    std::vector<double> v;
    v.reserve(spec.covariate_ids.size() + spec.proxy_ids.size());
    for (int j : spec.covariate_ids) v.push_back(data.covariates()(row, j));
    for (int j : spec.proxy_ids) {
        const double x = data.proxies()(row, j);
        if (std::isnan(x))
            throw StructuralError("proxy " + data.proxy_names()[static_cast<std::size_t>(j)] +
                                  " is not observed in study " +
                                  std::to_string(data.study_label(data.study_of(row))));
        v.push_back(x);
    }
    return v;
}

std::vector<std::string> predictor_names(const StudyDataset& data, const DesignSpec& spec) {
    std::vector<std::string> names;
    for (int j : spec.covariate_ids) names.push_back(data.covariate_names()[static_cast<std::size_t>(j)]);
    for (int j : spec.proxy_ids) names.push_back(data.proxy_names()[static_cast<std::size_t>(j)]);
    return names;
}

}  // namespace

DesignSpec main_effects_spec(const StudyDataset& data, std::vector<int> proxy_ids) {
    DesignSpec spec;
    for (int j = 0; j < data.n_covariates(); ++j) spec.covariate_ids.push_back(j);
    spec.proxy_ids = std::move(proxy_ids);
    return spec;
}

std::vector<std::string> design_column_names(const StudyDataset& data, const DesignSpec& spec) {
    check_spec(data, spec);
    std::vector<std::string> names;
    if (spec.intercept) names.push_back("1");
    const auto main = predictor_names(data, spec);
    names.insert(names.end(), main.begin(), main.end());
    if (spec.interaction_order == 2)
        for (std::size_t a = 0; a < main.size(); ++a)
            for (std::size_t b = a + 1; b < main.size(); ++b)
                names.push_back(main[a] + "*" + main[b]);
    return names;
}

Eigen::MatrixXd build_design(const StudyDataset& data, const std::vector<int>& rows,
                             const DesignSpec& spec) {
    check_spec(data, spec);
    const int n = static_cast<int>(rows.size());
    const int m = static_cast<int>(spec.covariate_ids.size() + spec.proxy_ids.size());
    int cols = (spec.intercept ? 1 : 0) + m;
    if (spec.interaction_order == 2) cols += m * (m - 1) / 2;
    Eigen::MatrixXd X(n, cols);
    for (int i = 0; i < n; ++i) {
        const auto v = predictor_tuple(data, rows[static_cast<std::size_t>(i)], spec);
        int c = 0;
        if (spec.intercept) X(i, c++) = 1.0;
        for (double x : v) X(i, c++) = x;
        if (spec.interaction_order == 2)
            for (std::size_t a = 0; a < v.size(); ++a)
                for (std::size_t b = a + 1; b < v.size(); ++b) X(i, c++) = v[a] * v[b];
    }
    return X;
}

Eigen::VectorXd gather(const Eigen::VectorXd& column, const std::vector<int>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = column[rows[i]];
    return out;
}

FittedRegression fit_least_squares(const StudyDataset& data, const std::vector<int>& rows,
                                   const Eigen::VectorXd& response, const DesignSpec& spec,
                                   double ridge, std::string subset) {
    if (static_cast<Eigen::Index>(rows.size()) != response.size())
        throw StructuralError(with_subset(subset, "response length does not match row count"));
    for (Eigen::Index i = 0; i < response.size(); ++i)
        if (!std::isfinite(response[i]))
            throw StructuralError(with_subset(subset, "response is not finite"));
    if (ridge < 0) throw StructuralError(with_subset(subset, "ridge penalty must be >= 0"));

    Eigen::MatrixXd X = build_design(data, rows, spec);
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (n < p)
        throw EstimationError(with_subset(
            subset, "too few rows: " + std::to_string(n) + " rows for " + std::to_string(p) +
                        " design columns"));

    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    if (ridge > 0) {
        A.resize(n + p, p);
        A.topRows(n) = X;
        A.bottomRows(p) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(p, p);
        b.resize(n + p);
        b.head(n) = response;
        b.tail(p).setZero();
    } else {
        A = X;
        b = response;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A.rows(), A.cols());
    qr.setThreshold(1e-10);
    qr.compute(A);
    const int rank = static_cast<int>(qr.rank());
    if (rank < p) {
        // Columns not among the first `rank` pivots are linearly dependent
        // on the pivoted ones.
        const auto names = design_column_names(data, spec);
        const auto& perm = qr.colsPermutation().indices();
        std::vector<std::string> dependent;
        for (int c = rank; c < p; ++c)
            dependent.push_back(names[static_cast<std::size_t>(perm[c])]);
        std::sort(dependent.begin(), dependent.end());
        std::string list;
        for (const auto& name : dependent) {
            if (!list.empty()) list += ", ";
            list += name;
        }
        throw EstimationError(with_subset(
            subset, "design is rank deficient (rank " + std::to_string(rank) + " of " +
                        std::to_string(p) + "); collinear columns: " + list));
    }

    FittedRegression fit;
    fit.mode = RegressionMode::least_squares;
    fit.spec = spec;
    fit.coef = qr.solve(b);
    fit.n_used = n;
    fit.rank = rank;
    const Eigen::VectorXd resid = response - X * fit.coef;
    fit.residual_variance = n > p ? resid.squaredNorm() / (n - p) : 0.0;
    fit.subset = std::move(subset);
    return fit;
}

FittedRegression fit_saturated(const StudyDataset& data, const std::vector<int>& rows,
                               const Eigen::VectorXd& response, const DesignSpec& spec,
                               int max_levels, std::string subset) {
    check_spec(data, spec);
    if (static_cast<Eigen::Index>(rows.size()) != response.size())
        throw StructuralError(with_subset(subset, "response length does not match row count"));
    if (rows.empty()) throw EstimationError(with_subset(subset, "no rows to fit"));

    const std::size_t m = spec.covariate_ids.size() + spec.proxy_ids.size();
    std::vector<std::set<double>> levels(m);
    std::map<std::vector<double>, std::pair<double, int>> sums;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!std::isfinite(response[static_cast<Eigen::Index>(i)]))
            throw StructuralError(with_subset(subset, "response is not finite"));
        auto key = predictor_tuple(data, rows[i], spec);
        for (std::size_t j = 0; j < m; ++j) levels[j].insert(key[j]);
        auto& cell = sums[std::move(key)];
        cell.first += response[static_cast<Eigen::Index>(i)];
        cell.second += 1;
    }
    const auto names = predictor_names(data, spec);
    for (std::size_t j = 0; j < m; ++j)
        if (static_cast<int>(levels[j].size()) > max_levels)
            throw EstimationError(with_subset(
                subset, "predictor " + names[j] + " takes " + std::to_string(levels[j].size()) +
                            " distinct values, over the saturated-mode limit of " +
                            std::to_string(max_levels)));

    FittedRegression fit;
    fit.mode = RegressionMode::saturated;
    fit.spec = spec;
    fit.n_used = static_cast<int>(rows.size());
    fit.rank = static_cast<int>(sums.size());
    double rss = 0.0;
    for (const auto& [key, cell] : sums) fit.cells[key] = cell.first / cell.second;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double mean = fit.cells.at(predictor_tuple(data, rows[i], spec));
        const double r = response[static_cast<Eigen::Index>(i)] - mean;
        rss += r * r;
    }
    const int dof = fit.n_used - fit.rank;
    fit.residual_variance = dof > 0 ? rss / dof : 0.0;
    fit.subset = std::move(subset);
    return fit;
}

double predict_at(const FittedRegression& model, const std::vector<double>& predictors) {
    const std::size_t m = model.spec.covariate_ids.size() + model.spec.proxy_ids.size();
    if (predictors.size() != m)
        throw StructuralError(with_subset(model.subset, "predictor tuple has " +
                                                            std::to_string(predictors.size()) +
                                                            " values, design uses " +
                                                            std::to_string(m)));
    if (model.mode == RegressionMode::saturated) {
        auto it = model.cells.find(predictors);
        if (it == model.cells.end()) {
            std::string cell;
            for (double v : predictors) {
                if (!cell.empty()) cell += ", ";
                cell += format_double(v);
            }
            throw EstimationError(
                with_subset(model.subset, "prediction cell (" + cell + ") never seen at fit time"));
        }
        return it->second;
    }
    std::vector<double> design;
    if (model.spec.intercept) design.push_back(1.0);
    design.insert(design.end(), predictors.begin(), predictors.end());
    if (model.spec.interaction_order == 2)
        for (std::size_t a = 0; a < predictors.size(); ++a)
            for (std::size_t b = a + 1; b < predictors.size(); ++b)
                design.push_back(predictors[a] * predictors[b]);
    if (static_cast<Eigen::Index>(design.size()) != model.coef.size())
        throw StructuralError(with_subset(model.subset, "design width does not match fit"));
    double out = 0.0;
    for (std::size_t c = 0; c < design.size(); ++c)
        out += design[c] * model.coef[static_cast<Eigen::Index>(c)];
    return out;
}

Eigen::VectorXd predict(const FittedRegression& model, const StudyDataset& data,
                        const std::vector<int>& rows) {
    if (model.mode == RegressionMode::least_squares) {
        const Eigen::MatrixXd X = build_design(data, rows, model.spec);
        if (X.cols() != model.coef.size())
            throw StructuralError(with_subset(model.subset, "design width does not match fit"));
        return X * model.coef;
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    const auto names = predictor_names(data, model.spec);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto key = predictor_tuple(data, rows[i], model.spec);
        auto it = model.cells.find(key);
        if (it == model.cells.end()) {
            std::ostringstream cell;
            cell << "(";
            for (std::size_t j = 0; j < key.size(); ++j) {
                if (j) cell << ", ";
                cell << names[j] << "=" << format_double(key[j]);
            }
            cell << ")";
            throw EstimationError(with_subset(
                model.subset, "prediction cell " + cell.str() + " never seen at fit time"));
        }
        out[static_cast<Eigen::Index>(i)] = it->second;
    }
    return out;
}

}  // namespace tsens
