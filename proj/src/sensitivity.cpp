#include "tsens/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "tsens/csv.hpp"
#include "tsens/errors.hpp"

namespace tsens {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* kind_name(BiasKind kind) {
    return kind == BiasKind::constant ? "constant" : "bounded";
}

void check_grid(const std::vector<double>& grid, bool nonnegative) {
    if (grid.empty()) throw StructuralError("sensitivity grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i])) throw StructuralError("sensitivity grid value is not finite");
        if (nonnegative && grid[i] < 0)
            throw StructuralError("bias magnitude grid must be non-negative");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw StructuralError("sensitivity grid must be strictly increasing");
    }
}

// Overall estimate followed by each outcome-missing study's estimate.
std::vector<double> targets_of(const AteEstimate& est, const ProxyConfig& cfg) {
    std::vector<double> out{est.overall};
    for (int s = cfg.s_star + 1; s <= static_cast<int>(est.per_study.size()); ++s)
        out.push_back(est.per_study[s - 1]);
    return out;
}

}  // namespace

BoundForm bound_form_from_name(const std::string& name) {
    if (name == "flat") return BoundForm::flat;
    if (name == "weighted") return BoundForm::weighted;
    throw ParseError("unknown bound form '" + name + "' (expected flat or weighted)");
}

const char* bound_form_name(BoundForm form) {
    return form == BoundForm::flat ? "flat" : "weighted";
}

void BiasSpec::validate() const {
    check_grid(grid, kind == BiasKind::bounded);
    if (split_gamma && (split_gamma->first < 0 || split_gamma->second < 0))
        throw StructuralError("split bias magnitudes must be non-negative");
}

AteEstimate adjust_constant(const AteEstimate& est, double delta, const ProxyConfig& cfg) {
    if (static_cast<int>(est.per_study.size()) != cfg.weights.size())
        throw StructuralError("estimate and config disagree on the study count");
    AteEstimate out = est;
    out.overall = 0.0;
    for (int s = 1; s <= static_cast<int>(out.per_study.size()); ++s) {
        if (s > cfg.s_star) out.per_study[s - 1] += delta;
        out.overall += cfg.weight(s) * out.per_study[s - 1];
    }
    return out;
}

SensitivityResult scan_delta(const StudyDataset& data, const ProxyConfig& cfg,
                             const EstimatorOptions& options, Variant variant,
                             const std::vector<double>& grid, const BootstrapPlan& plan) {
    check_grid(grid, false);
    SensitivityResult result;
    result.kind = BiasKind::constant;
    result.missing_mass = cfg.missing_mass();

    const VectorFunctional functional = [&](const StudyDataset& d, const ProxyConfig& c) {
        return targets_of(estimate_variant(d, c, options, variant), c);
    };
    result.boot = bootstrap_vector(data, cfg, functional, plan);

    const std::string variant_tag = variant_name(variant);
    for (double delta : grid) {
        // Overall target: estimate and interval shift by missing_mass * δ.
        {
            SensitivityRow row;
            row.variant = variant_tag;
            row.kind = BiasKind::constant;
            row.parameter = delta;
            row.target = "overall";
            const double shift = result.missing_mass * delta;
            row.estimate_or_lower = result.boot.point[0] + shift;
            row.upper = kNaN;
            row.ci_lower = result.boot.summaries[0].lower + shift;
            row.ci_upper = result.boot.summaries[0].upper + shift;
            result.rows.push_back(row);
        }
        // Outcome-missing studies: estimate and interval shift by δ itself.
        for (int s = cfg.s_star + 1; s <= data.n_studies(); ++s) {
            const std::size_t c = static_cast<std::size_t>(s - cfg.s_star);
            SensitivityRow row;
            row.variant = variant_tag;
            row.kind = BiasKind::constant;
            row.parameter = delta;
            row.target = std::to_string(data.study_label(s));
            row.estimate_or_lower = result.boot.point[c] + delta;
            row.upper = kNaN;
            row.ci_lower = result.boot.summaries[c].lower + delta;
            row.ci_upper = result.boot.summaries[c].upper + delta;
            result.rows.push_back(row);
        }
    }
    return result;
}

Interval bound_ate(const AteEstimate& est, double gamma, const ProxyConfig& cfg, BoundForm form) {
    return bound_ate_split(est, gamma, gamma, cfg, form);
}

Interval bound_ate_split(const AteEstimate& est, double gamma1, double gamma0,
                         const ProxyConfig& cfg, BoundForm form) {
    if (gamma1 < 0 || gamma0 < 0) throw StructuralError("bias magnitudes must be non-negative");
    double half = gamma1 + gamma0;
    if (form == BoundForm::weighted) half *= cfg.missing_mass();
    return Interval{est.overall - half, est.overall + half};
}

SensitivityResult scan_gamma(const StudyDataset& data, const ProxyConfig& cfg,
                             const EstimatorOptions& options, Variant variant,
                             const std::vector<double>& grid, const BootstrapPlan& plan,
                             BoundForm form, std::optional<std::pair<double, double>> split_gamma) {
    check_grid(grid, true);
    if (split_gamma && (split_gamma->first < 0 || split_gamma->second < 0))
        throw StructuralError("split bias magnitudes must be non-negative");
    SensitivityResult result;
    result.kind = BiasKind::bounded;
    result.missing_mass = cfg.missing_mass();

    const VectorFunctional functional = [&](const StudyDataset& d, const ProxyConfig& c) {
        return std::vector<double>{estimate_variant(d, c, options, variant).overall};
    };
    result.boot = bootstrap_vector(data, cfg, functional, plan);
    const double margin = normal_quantile((1.0 + plan.level) / 2.0) * result.boot.summaries[0].se;

    AteEstimate point;
    point.variant = variant_name(variant);
    point.overall = result.boot.point[0];
    // Per-study values are not needed for the interval arithmetic below.
    point.per_study = Eigen::VectorXd::Zero(data.n_studies());
    point.weights = cfg.weights;

    for (double gamma : grid) {
        const Interval base = split_gamma
                                  ? bound_ate_split(point, gamma * split_gamma->first,
                                                    gamma * split_gamma->second, cfg, form)
                                  : bound_ate(point, gamma, cfg, form);
        SensitivityRow row;
        row.variant = point.variant;
        row.kind = BiasKind::bounded;
        row.parameter = gamma;
        row.target = "overall";
        row.estimate_or_lower = base.lower;
        row.upper = base.upper;
        row.ci_lower = base.lower - margin;
        row.ci_upper = base.upper + margin;
        result.rows.push_back(row);
    }
    return result;
}

std::optional<double> critical_delta(const SensitivityResult& result) {
    if (result.kind != BiasKind::constant)
        throw StructuralError("critical parameter search needs a constant-bias scan");
    std::optional<double> best;
    for (const auto& row : result.rows) {
        if (row.target != "overall") continue;
        if (!(row.ci_lower <= 0.0 && 0.0 <= row.ci_upper)) continue;
        if (!best || std::abs(row.parameter) < std::abs(*best) ||
            (std::abs(row.parameter) == std::abs(*best) && row.parameter < *best))
            best = row.parameter;
    }
    return best;
}

void write_sensitivity(const SensitivityResult& result, std::ostream& out) {
    out << "variant,kind,parameter,estimate_or_lower,upper,ci_lower,ci_upper,target\n";
    auto field = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
    for (const auto& row : result.rows)
        out << row.variant << ',' << kind_name(row.kind) << ',' << format_double(row.parameter)
            << ',' << field(row.estimate_or_lower) << ',' << field(row.upper) << ','
            << field(row.ci_lower) << ',' << field(row.ci_upper) << ',' << row.target << '\n';
}

}  // namespace tsens
