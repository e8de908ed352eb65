#pragma once

// Brute-force reference implementations the tests pin estimator behavior to.
// Everything recomputes from raw rows with ordered mean tables and hand-rolled
// normal equations, independent of the library's fitting code paths.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tsens/dataset.hpp"
#include "tsens/rng.hpp"

namespace oracle {

struct Rows {
    std::vector<long long> study;  // labels
    std::vector<int> arm;
    std::vector<double> y;  // NaN where missing
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> t;
};

inline Rows rows_of(const tsens::StudyDataset& d) {
    Rows r;
    const int n = d.n_rows();
    for (int i = 0; i < n; ++i) {
        r.study.push_back(d.study_label(d.study_of(i)));
        r.arm.push_back(d.arm_of(i));
        r.y.push_back(d.outcome()[i]);
        std::vector<double> wi, ti;
        for (int j = 0; j < d.n_covariates(); ++j) wi.push_back(d.covariates()(i, j));
        for (int j = 0; j < d.n_proxies(); ++j) ti.push_back(d.proxies()(i, j));
        r.w.push_back(std::move(wi));
        r.t.push_back(std::move(ti));
    }
    return r;
}

// Least squares via the normal equations, Gauss-Jordan with partial pivoting
// in extended precision. Deliberately a different algorithm from QR.
inline std::vector<double> normal_equations(const std::vector<std::vector<double>>& X,
                                            const std::vector<double>& y) {
    const std::size_t n = X.size();
    if (n == 0 || y.size() != n) throw std::runtime_error("bad oracle system");
    const std::size_t p = X[0].size();
    std::vector<std::vector<long double>> A(p, std::vector<long double>(p + 1, 0.0L));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            for (std::size_t k = 0; k < p; ++k)
                A[j][k] += static_cast<long double>(X[i][j]) * X[i][k];
            A[j][p] += static_cast<long double>(X[i][j]) * y[i];
        }
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t pivot = col;
        for (std::size_t r2 = col + 1; r2 < p; ++r2)
            if (std::fabs(static_cast<double>(A[r2][col])) >
                std::fabs(static_cast<double>(A[pivot][col])))
                pivot = r2;
        std::swap(A[col], A[pivot]);
        if (A[col][col] == 0.0L) throw std::runtime_error("singular oracle system");
        const long double d = A[col][col];
        for (std::size_t k = col; k <= p; ++k) A[col][k] /= d;
        for (std::size_t r2 = 0; r2 < p; ++r2) {
            if (r2 == col) continue;
            const long double f = A[r2][col];
            if (f == 0.0L) continue;
            for (std::size_t k = col; k <= p; ++k) A[r2][k] -= f * A[col][k];
        }
    }
    std::vector<double> beta(p);
    for (std::size_t j = 0; j < p; ++j) beta[j] = static_cast<double>(A[j][p]);
    return beta;
}

class MeanTable {
public:
    void add(const std::vector<double>& key, double v) {
        auto& cell = cells_[key];
        cell.first += v;
        cell.second += 1;
    }
    double mean(const std::vector<double>& key) const {
        auto it = cells_.find(key);
        if (it == cells_.end()) throw std::runtime_error("oracle cell miss");
        return it->second.first / static_cast<double>(it->second.second);
    }
    bool empty() const { return cells_.empty(); }

private:
    std::map<std::vector<double>, std::pair<double, long long>> cells_;
};

inline std::vector<double> subset_of(const std::vector<double>& t,
                                     const std::vector<int>& cols) {
    std::vector<double> out;
    out.reserve(cols.size());
    for (int c : cols) out.push_back(t[static_cast<std::size_t>(c)]);
    return out;
}

inline std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

// Within-study contrast of arm-specific mean tables keyed by W, evaluated
// over every row of the study.
inline double ate_direct(const Rows& r, long long study) {
    MeanTable m1, m0;
    for (std::size_t i = 0; i < r.study.size(); ++i) {
        if (r.study[i] != study) continue;
        (r.arm[i] == 1 ? m1 : m0).add(r.w[i], r.y[i]);
    }
    if (m1.empty() || m0.empty()) throw std::runtime_error("oracle stratum empty");
    double sum = 0.0;
    long long count = 0;
    for (std::size_t i = 0; i < r.study.size(); ++i) {
        if (r.study[i] != study) continue;
        sum += m1.mean(r.w[i]) - m0.mean(r.w[i]);
        ++count;
    }
    return sum / static_cast<double>(count);
}

// Nested evaluation for one target study: inner means of Y keyed by
// (proxy subset, W) over the donor rows of each arm, shifted by u_a; outer
// means keyed by W over the target study's arm rows; final average over all
// target rows. Donor rows accumulate in donor-list order to mirror the
// estimator's row gathering.
inline double ate_nested(const Rows& r, const std::vector<long long>& donors, long long study,
                         const std::vector<int>& proxy_cols, double u1 = 0.0, double u0 = 0.0) {
    MeanTable inner[2];
    for (long long d : donors)
        for (std::size_t i = 0; i < r.study.size(); ++i)
            if (r.study[i] == d)
                inner[r.arm[i]].add(concat(r.w[i], subset_of(r.t[i], proxy_cols)), r.y[i]);
    const double shift[2] = {u0, u1};
    MeanTable outer[2];
    for (std::size_t i = 0; i < r.study.size(); ++i) {
        if (r.study[i] != study) continue;
        const int a = r.arm[i];
        const auto key = concat(r.w[i], subset_of(r.t[i], proxy_cols));
        outer[a].add(r.w[i], inner[a].mean(key) + shift[a]);
    }
    double sum = 0.0;
    long long count = 0;
    for (std::size_t i = 0; i < r.study.size(); ++i) {
        if (r.study[i] != study) continue;
        sum += outer[1].mean(r.w[i]) - outer[0].mean(r.w[i]);
        ++count;
    }
    return sum / static_cast<double>(count);
}

// Pooled form: the outer table pools arm rows across every study in
// pool_studies (those observing the proxy subset), then averages over the
// target study's rows.
inline double ate_pooled(const Rows& r, const std::vector<long long>& donors, long long study,
                         const std::vector<int>& proxy_cols,
                         const std::vector<long long>& pool_studies, double u1 = 0.0,
                         double u0 = 0.0) {
    MeanTable inner[2];
    for (long long d : donors)
        for (std::size_t i = 0; i < r.study.size(); ++i)
            if (r.study[i] == d)
                inner[r.arm[i]].add(concat(r.w[i], subset_of(r.t[i], proxy_cols)), r.y[i]);
    const double shift[2] = {u0, u1};
    MeanTable outer[2];
    for (long long u : pool_studies)
        for (std::size_t i = 0; i < r.study.size(); ++i) {
            if (r.study[i] != u) continue;
            const int a = r.arm[i];
            const auto key = concat(r.w[i], subset_of(r.t[i], proxy_cols));
            outer[a].add(r.w[i], inner[a].mean(key) + shift[a]);
        }
    double sum = 0.0;
    long long count = 0;
    for (std::size_t i = 0; i < r.study.size(); ++i) {
        if (r.study[i] != study) continue;
        sum += outer[1].mean(r.w[i]) - outer[0].mean(r.w[i]);
        ++count;
    }
    return sum / static_cast<double>(count);
}

// Proxy-blind form: donor means keyed by W alone, averaged over target rows.
inline double ate_blind(const Rows& r, const std::vector<long long>& donors, long long study,
                        double u1 = 0.0, double u0 = 0.0) {
    MeanTable m[2];
    for (long long d : donors)
        for (std::size_t i = 0; i < r.study.size(); ++i)
            if (r.study[i] == d) m[r.arm[i]].add(r.w[i], r.y[i]);
    const double shift[2] = {u0, u1};
    double sum = 0.0;
    long long count = 0;
    for (std::size_t i = 0; i < r.study.size(); ++i) {
        if (r.study[i] != study) continue;
        sum += (m[1].mean(r.w[i]) + shift[1]) - (m[0].mean(r.w[i]) + shift[0]);
        ++count;
    }
    return sum / static_cast<double>(count);
}

// Random instance with binary W, binary T, 2 or 3 studies (last one outcome
// free), small integer outcomes, at most 40 rows. Mandatory rows guarantee
// every cell any route can query is populated.
inline tsens::StudyDataset discrete_instance(std::uint64_t seed) {
    tsens::RngStream rng = tsens::RngStream::from_key({seed, 0x6469736bULL});
    const int n_studies = 2 + static_cast<int>(rng.uniform_int(2));
    std::vector<long long> study;
    std::vector<int> arm;
    std::vector<double> w, t, y;
    auto push = [&](long long s, int a, double wv, double tv, double yv) {
        study.push_back(s);
        arm.push_back(a);
        w.push_back(wv);
        t.push_back(tv);
        y.push_back(yv);
    };
    auto draw_y = [&]() { return static_cast<double>(rng.uniform_int(5)) - 2.0; };
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int s = 1; s < n_studies; ++s) {
        for (int a = 0; a < 2; ++a)
            for (int tv = 0; tv < 2; ++tv)
                for (int wv = 0; wv < 2; ++wv) push(s, a, wv, tv, draw_y());
        const int extra = static_cast<int>(rng.uniform_int(4));
        for (int e = 0; e < extra; ++e)
            push(s, static_cast<int>(rng.uniform_int(2)),
                 static_cast<double>(rng.uniform_int(2)),
                 static_cast<double>(rng.uniform_int(2)), draw_y());
    }
    const long long target = n_studies;
    for (int a = 0; a < 2; ++a)
        for (int wv = 0; wv < 2; ++wv)
            push(target, a, wv, static_cast<double>(rng.uniform_int(2)), nan);
    const int extra = static_cast<int>(rng.uniform_int(6));
    for (int e = 0; e < extra; ++e)
        push(target, static_cast<int>(rng.uniform_int(2)),
             static_cast<double>(rng.uniform_int(2)), static_cast<double>(rng.uniform_int(2)),
             nan);

    const int n = static_cast<int>(study.size());
    Eigen::VectorXi arms(n);
    Eigen::MatrixXd W(n, 1), T(n, 1);
    Eigen::VectorXd Y(n);
    for (int i = 0; i < n; ++i) {
        arms[i] = arm[static_cast<std::size_t>(i)];
        W(i, 0) = w[static_cast<std::size_t>(i)];
        T(i, 0) = t[static_cast<std::size_t>(i)];
        Y[i] = y[static_cast<std::size_t>(i)];
    }
    return tsens::StudyDataset::from_rows(study, arms, W, T, Y, {"w1"}, {"t1"});
}

}  // namespace oracle
