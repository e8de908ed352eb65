#include "tsens/estimator.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "tsens/csv.hpp"
#include "tsens/errors.hpp"

namespace tsens {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::proxy: return "proxy";
        case Variant::pooled: return "pooled";
        case Variant::blind: return "blind";
    }
    return "proxy";
}

Variant variant_from_name(const std::string& name) {
    if (name == "proxy") return Variant::proxy;
    if (name == "pooled") return Variant::pooled;
    if (name == "blind") return Variant::blind;
    throw ParseError("unknown estimator variant '" + name + "' (expected proxy, pooled, or blind)");
}

namespace {

std::string study_list(const StudyDataset& data, const std::vector<int>& studies) {
    std::string out;
    for (int s : studies) {
        if (!out.empty()) out += ",";
        out += std::to_string(data.study_label(s));
    }
    return out;
}

std::string proxy_list(const StudyDataset& data, const std::vector<int>& proxies) {
    std::string out;
    for (int j : proxies) {
        if (!out.empty()) out += ",";
        out += data.proxy_names()[static_cast<std::size_t>(j)];
    }
    return out;
}

class TransportFitter {
public:
    TransportFitter(const StudyDataset& data, const ProxyConfig& cfg,
                    const EstimatorOptions& options)
        : data_(data), cfg_(cfg), options_(options) {}

    FittedTransportModel fit(Variant variant) {
        const ValidationReport report = validate_assumptions(data_, cfg_);
        if (!report.ok()) {
            std::string detail;
            for (const auto& c : report.checks)
                if (c.status == CheckStatus::fail) {
                    if (!detail.empty()) detail += "; ";
                    detail += c.name + ": " + c.detail;
                }
            throw StructuralError("assumption checks failed: " + detail);
        }

        FittedTransportModel model;
        model.variant = variant;
        model.options = options_;
        model.strata.resize(static_cast<std::size_t>(data_.n_studies()));
        for (int s = 1; s <= data_.n_studies(); ++s)
            for (int a = 0; a < 2; ++a)
                model.strata[static_cast<std::size_t>(s - 1)][static_cast<std::size_t>(a)] =
                    fit_stratum(variant, s, a);
        return model;
    }

private:
    DesignSpec w_spec() const {
        DesignSpec spec = main_effects_spec(data_);
        spec.intercept = options_.intercept;
        spec.interaction_order = options_.interaction_order;
        return spec;
    }

    FittedRegression fit_regression(const std::vector<int>& rows, const Eigen::VectorXd& response,
                                    const DesignSpec& spec, std::string subset) const {
        if (options_.mode == RegressionMode::saturated)
            return fit_saturated(data_, rows, response, spec, options_.max_levels,
                                 std::move(subset));
        return fit_least_squares(data_, rows, response, spec, options_.ridge, std::move(subset));
    }

    // Y regressed on (proxies, W) over the donor rows of one arm. Shared
    // across studies with the same (donor set, proxy subset, arm).
    std::shared_ptr<const FittedRegression> donor_fit(const std::vector<int>& donors,
                                                      const std::vector<int>& proxies, int arm) {
        const auto key = std::make_tuple(donors, proxies, arm);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;

        std::vector<int> rows;
        for (int d : donors) {
            const auto dr = data_.rows_of(d, arm);
            rows.insert(rows.end(), dr.begin(), dr.end());
        }
        DesignSpec spec = w_spec();
        spec.proxy_ids = proxies;
        std::string subset = "arm-" + std::to_string(arm) + " regression on studies {" +
                             study_list(data_, donors) + "}";
        if (!proxies.empty()) subset += " with proxies {" + proxy_list(data_, proxies) + "}";
        auto fit = std::make_shared<const FittedRegression>(
            fit_regression(rows, gather(data_.outcome(), rows), spec, std::move(subset)));
        cache_.emplace(key, fit);
        return fit;
    }

    StratumFit fit_stratum(Variant variant, int s, int a) {
        const long long label = data_.study_label(s);
        StratumFit out;

        const bool direct = variant == Variant::pooled ? false : data_.outcome_observed(s);
        if (direct) {
            const auto rows = data_.rows_of(s, a);
            out.wfun = fit_regression(
                rows, gather(data_.outcome(), rows), w_spec(),
                "study " + std::to_string(label) + " arm-" + std::to_string(a) + " outcome fit");
            return out;
        }

        const auto& donors = cfg_.donor_set(s);
        if (variant == Variant::blind) {
            out.wfun = *donor_fit(donors, {}, a);
            return out;
        }

        const auto& proxies = cfg_.proxy_subset(s);
        out.nested = true;
        out.inner = donor_fit(donors, proxies, a);
        if (proxies.empty()) {
            // The inner fit is already a function of W alone; regressing it
            // on W would reproduce it, so use it directly.
            out.wfun = *out.inner;
            out.outer_skipped = true;
            return out;
        }

        std::vector<int> outer_rows;
        std::string subset;
        if (variant == Variant::pooled) {
            // Pool every study in which this proxy subset is observed.
            for (int u = 1; u <= data_.n_studies(); ++u) {
                const bool eligible = std::all_of(proxies.begin(), proxies.end(), [&](int j) {
                    return data_.proxy_available(u, j);
                });
                if (!eligible) continue;
                const auto ur = data_.rows_of(u, a);
                outer_rows.insert(outer_rows.end(), ur.begin(), ur.end());
            }
            subset = "study " + std::to_string(label) + " arm-" + std::to_string(a) +
                     " pooled outer fit";
        } else {
            outer_rows = data_.rows_of(s, a);
            subset = "study " + std::to_string(label) + " arm-" + std::to_string(a) + " outer fit";
        }
        const Eigen::VectorXd response = predict(*out.inner, data_, outer_rows);
        out.wfun = fit_regression(outer_rows, response, w_spec(), std::move(subset));
        return out;
    }

    const StudyDataset& data_;
    const ProxyConfig& cfg_;
    const EstimatorOptions& options_;
    std::map<std::tuple<std::vector<int>, std::vector<int>, int>,
             std::shared_ptr<const FittedRegression>>
        cache_;
};

}  // namespace

FittedTransportModel fit_transport(const StudyDataset& data, const ProxyConfig& cfg,
                                   const EstimatorOptions& options, Variant variant) {
    return TransportFitter(data, cfg, options).fit(variant);
}

AteEstimate estimate_ate(const FittedTransportModel& model, const StudyDataset& data,
                         const ProxyConfig& cfg) {
    AteEstimate est;
    est.variant = variant_name(model.variant);
    est.per_study.resize(data.n_studies());
    est.weights = cfg.weights;
    est.overall = 0.0;
    for (int s = 1; s <= data.n_studies(); ++s) {
        const auto rows = data.rows_of(s);
        const auto& stratum = model.strata[static_cast<std::size_t>(s - 1)];
        const Eigen::VectorXd p1 = predict(stratum[1].wfun, data, rows);
        const Eigen::VectorXd p0 = predict(stratum[0].wfun, data, rows);
        double sum = 0.0;
        for (Eigen::Index i = 0; i < p1.size(); ++i) sum += p1[i] - p0[i];
        est.per_study[s - 1] = sum / static_cast<double>(rows.size());
        est.study_sizes.push_back(static_cast<int>(rows.size()));
        est.overall += cfg.weight(s) * est.per_study[s - 1];
    }
    return est;
}

AteEstimate estimate_variant(const StudyDataset& data, const ProxyConfig& cfg,
                             const EstimatorOptions& options, Variant variant) {
    return estimate_ate(fit_transport(data, cfg, options, variant), data, cfg);
}

AteEstimate estimate_ate_pooled(const StudyDataset& data, const ProxyConfig& cfg,
                                const EstimatorOptions& options) {
    return estimate_variant(data, cfg, options, Variant::pooled);
}

AteEstimate estimate_ate_blind(const StudyDataset& data, const ProxyConfig& cfg,
                               const EstimatorOptions& options) {
    return estimate_variant(data, cfg, options, Variant::blind);
}

double estimate_cate(const FittedTransportModel& model, const std::vector<double>& w, int study) {
    if (study < 1 || study > static_cast<int>(model.strata.size()))
        throw StructuralError("study id out of range");
    const auto& stratum = model.strata[static_cast<std::size_t>(study - 1)];
    auto tuple_for = [&](const FittedRegression& fit) {
        std::vector<double> v;
        v.reserve(fit.spec.covariate_ids.size());
        for (int j : fit.spec.covariate_ids) {
            if (j < 0 || j >= static_cast<int>(w.size()))
                throw StructuralError("covariate vector too short for the fitted design");
            v.push_back(w[static_cast<std::size_t>(j)]);
        }
        return v;
    };
    return predict_at(stratum[1].wfun, tuple_for(stratum[1].wfun)) -
           predict_at(stratum[0].wfun, tuple_for(stratum[0].wfun));
}

void write_estimates(const std::vector<AteEstimate>& estimates, const StudyDataset& data,
                     std::ostream& out) {
    out << "variant,study,ate,weight,n_rows\n";
    for (const auto& est : estimates) {
        for (int s = 1; s <= static_cast<int>(est.per_study.size()); ++s)
            out << est.variant << ',' << data.study_label(s) << ','
                << format_double(est.per_study[s - 1]) << ',' << format_double(est.weights[s - 1])
                << ',' << est.study_sizes[static_cast<std::size_t>(s - 1)] << '\n';
        out << est.variant << ",overall," << format_double(est.overall) << ",1," << data.n_rows()
            << '\n';
    }
}

}  // namespace tsens
