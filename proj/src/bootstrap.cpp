#include "tsens/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsens/errors.hpp"
#include "tsens/parallel.hpp"
#include "tsens/rng.hpp"

namespace tsens {

void BootstrapPlan::validate() const {
    if (n_replicates < 2) throw StructuralError("bootstrap needs at least 2 replicates");
    if (!(level > 0.0 && level < 1.0)) throw StructuralError("confidence level must be in (0,1)");
}

StudyDataset resample(const StudyDataset& data, const BootstrapPlan& plan, int replicate) {
    plan.validate();
    std::vector<int> picked;
    picked.reserve(static_cast<std::size_t>(data.n_rows()));
    for (int s = 1; s <= data.n_studies(); ++s) {
        const int arms = plan.by_arm ? 2 : 1;
        for (int a = 0; a < arms; ++a) {
            const std::vector<int> rows = plan.by_arm ? data.rows_of(s, a) : data.rows_of(s);
            if (rows.empty()) throw EstimationError("resampling stratum is empty");
            const std::uint64_t stratum =
                plan.by_arm ? static_cast<std::uint64_t>(2 * s + a) : static_cast<std::uint64_t>(s);
            RngStream rng = RngStream::from_key(
                {plan.seed, static_cast<std::uint64_t>(replicate), stratum});
            for (std::size_t i = 0; i < rows.size(); ++i)
                picked.push_back(rows[rng.uniform_int(static_cast<std::uint64_t>(rows.size()))]);
        }
    }
    return data.take_rows(picked);
}

double percentile_nearest_rank(const std::vector<double>& sorted_values, double p) {
    const auto n = static_cast<long long>(sorted_values.size());
    if (n == 0) throw StructuralError("percentile of an empty vector");
    long long k = static_cast<long long>(std::ceil(p * static_cast<double>(n)));
    k = std::max(1LL, std::min(k, n));
    return sorted_values[static_cast<std::size_t>(k - 1)];
}

IntervalSummary summarize_replicates(const std::vector<double>& replicates, double level) {
    IntervalSummary out;
    std::vector<double> ok;
    ok.reserve(replicates.size());
    for (double v : replicates) {
        if (std::isnan(v))
            ++out.n_failed;
        else
            ok.push_back(v);
    }
    out.n_used = static_cast<int>(ok.size());
    if (out.n_used < 2)
        throw EstimationError("too few usable bootstrap replicates (" +
                              std::to_string(out.n_used) + ")");
    std::sort(ok.begin(), ok.end());
    out.lower = percentile_nearest_rank(ok, (1.0 - level) / 2.0);
    out.upper = percentile_nearest_rank(ok, (1.0 + level) / 2.0);
    double mean = 0.0;
    for (double v : ok) mean += v;
    mean /= out.n_used;
    double ss = 0.0;
    for (double v : ok) ss += (v - mean) * (v - mean);
    out.se = std::sqrt(ss / (out.n_used - 1));
    return out;
}

VectorBootstrapResult bootstrap_vector(const StudyDataset& data, const ProxyConfig& cfg,
                                       const VectorFunctional& estimator,
                                       const BootstrapPlan& plan) {
    plan.validate();
    VectorBootstrapResult result;
    result.seed = plan.seed;
    result.point = estimator(data, cfg);
    const std::size_t k = result.point.size();
    if (k == 0) throw StructuralError("bootstrap estimator returned no components");

    const int B = plan.n_replicates;
    result.replicates.assign(k, std::vector<double>(static_cast<std::size_t>(B),
                                                    std::numeric_limits<double>::quiet_NaN()));
    parallel_for(static_cast<std::size_t>(B), plan.threads, [&](std::size_t r) {
        try {
            const StudyDataset boot = resample(data, plan, static_cast<int>(r));
            const std::vector<double> value = estimator(boot, cfg);
            if (value.size() != k) throw StructuralError("bootstrap component count changed");
            for (std::size_t c = 0; c < k; ++c) result.replicates[c][r] = value[c];
        } catch (const Error&) {
            // Degenerate resample (e.g. an arm emptied out); leave NaN.
        }
    });

    for (std::size_t c = 0; c < k; ++c)
        result.summaries.push_back(summarize_replicates(result.replicates[c], plan.level));
    result.n_failed = result.summaries.front().n_failed;
    if (result.n_failed * 20 > B)
        throw EstimationError("bootstrap unstable: " + std::to_string(result.n_failed) + " of " +
                              std::to_string(B) + " replicates failed");
    return result;
}

BootstrapResult bootstrap_estimate(const StudyDataset& data, const ProxyConfig& cfg,
                                   const Functional& estimator, const BootstrapPlan& plan) {
    const VectorBootstrapResult vec = bootstrap_vector(
        data, cfg,
        [&](const StudyDataset& d, const ProxyConfig& c) {
            return std::vector<double>{estimator(d, c)};
        },
        plan);
    BootstrapResult result;
    result.seed = vec.seed;
    result.point = vec.point.front();
    result.replicates = vec.replicates.front();
    result.n_failed = vec.n_failed;
    result.lower = vec.summaries.front().lower;
    result.upper = vec.summaries.front().upper;
    result.se = vec.summaries.front().se;
    return result;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw StructuralError("normal quantile needs p in (0,1)");
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                  6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
              1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        const double den =
            (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                  3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
              4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
        value = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-6) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
        value = num / den;
    }
    return q < 0.0 ? -value : value;
}

}  // namespace tsens
