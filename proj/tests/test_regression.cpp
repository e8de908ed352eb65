#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "tsens/errors.hpp"
#include "tsens/regression.hpp"
#include "tsens/rng.hpp"

using namespace tsens;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// One observed study, two covariates, two proxies.
StudyDataset make_data(const std::vector<std::vector<double>>& w,
                       const std::vector<std::vector<double>>& t,
                       const std::vector<double>& y) {
    const int n = static_cast<int>(y.size());
    std::vector<long long> study(static_cast<std::size_t>(n), 1);
    Eigen::VectorXi arm = Eigen::VectorXi::Zero(n);
    for (int i = 0; i < n; i += 2) arm[i] = 1;  // keep both arms populated
    Eigen::MatrixXd W(n, static_cast<int>(w[0].size()));
    Eigen::MatrixXd T(n, static_cast<int>(t[0].size()));
    Eigen::VectorXd Y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < W.cols(); ++j) W(i, j) = w[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        for (int j = 0; j < T.cols(); ++j) T(i, j) = t[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        Y[i] = y[static_cast<std::size_t>(i)];
    }
    std::vector<std::string> wn, tn;
    for (int j = 0; j < W.cols(); ++j) wn.push_back("w" + std::to_string(j + 1));
    for (int j = 0; j < T.cols(); ++j) tn.push_back("t" + std::to_string(j + 1));
    return StudyDataset::from_rows(study, arm, W, T, Y, wn, tn);
}

std::vector<int> all_rows(const StudyDataset& d) {
    std::vector<int> rows;
    for (int i = 0; i < d.n_rows(); ++i) rows.push_back(i);
    return rows;
}

}  // namespace

TEST_CASE("exact line is recovered") {
    const StudyDataset d =
        make_data({{1}, {2}, {3}}, {{0}, {0}, {0}}, {2, 4, 6});
    const auto fit = fit_least_squares(d, all_rows(d), d.outcome(), main_effects_spec(d));
    REQUIRE(fit.coef.size() == 2);
    CHECK(fit.coef[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fit.coef[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.rank == 2);
    CHECK(fit.residual_variance == doctest::Approx(0.0).epsilon(1e-20));
}

TEST_CASE("constant response gives intercept-only fit") {
    const StudyDataset d = make_data({{1}, {2}, {5}}, {{0}, {1}, {2}}, {5, 5, 5});
    const auto fit = fit_least_squares(d, all_rows(d), d.outcome(), main_effects_spec(d));
    CHECK(fit.coef[0] == doctest::Approx(5.0));
    CHECK(fit.coef[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("coefficients match hand-rolled normal equations") {
    RngStream rng = RngStream::from_key({77});
    std::vector<std::vector<double>> w, t;
    std::vector<double> y;
    for (int i = 0; i < 25; ++i) {
        w.push_back({rng.normal(), rng.normal()});
        t.push_back({rng.normal(), rng.normal()});
        y.push_back(1.5 + 2.0 * w.back()[0] - w.back()[1] + 0.5 * t.back()[0] + rng.normal());
    }
    const StudyDataset d = make_data(w, t, y);
    const DesignSpec spec = main_effects_spec(d, {0, 1});
    const auto fit = fit_least_squares(d, all_rows(d), d.outcome(), spec);

    std::vector<std::vector<double>> X;
    for (std::size_t i = 0; i < y.size(); ++i)
        X.push_back({1.0, w[i][0], w[i][1], t[i][0], t[i][1]});
    const auto beta = oracle::normal_equations(X, y);
    REQUIRE(fit.coef.size() == 5);
    for (int j = 0; j < 5; ++j)
        CHECK(fit.coef[j] == doctest::Approx(beta[static_cast<std::size_t>(j)]).epsilon(1e-10));
}

TEST_CASE("residuals are orthogonal to the design") {
    RngStream rng = RngStream::from_key({78});
    std::vector<std::vector<double>> w, t;
    std::vector<double> y;
    for (int i = 0; i < 40; ++i) {
        w.push_back({rng.normal(), rng.normal()});
        t.push_back({rng.normal()});
        y.push_back(rng.normal(0.0, 3.0));
    }
    StudyDataset d = make_data(w, t, y);
    const DesignSpec spec = main_effects_spec(d, {0});
    const auto fit = fit_least_squares(d, all_rows(d), d.outcome(), spec);
    const Eigen::MatrixXd X = build_design(d, all_rows(d), spec);
    const Eigen::VectorXd resid = d.outcome() - X * fit.coef;
    const Eigen::VectorXd grad = X.transpose() * resid;
    for (int j = 0; j < grad.size(); ++j) CHECK(std::fabs(grad[j]) < 1e-8 * 40);
}

TEST_CASE("interaction designs add pairwise products") {
    const StudyDataset d = make_data({{1, 2}}, {{3}}, {0});
    DesignSpec spec = main_effects_spec(d, {0});
    spec.interaction_order = 2;
    const auto names = design_column_names(d, spec);
    const Eigen::MatrixXd X = build_design(d, {0}, spec);
    REQUIRE(names.size() == static_cast<std::size_t>(X.cols()));
    // 1, w1, w2, t1, w1*w2, w1*t1, w2*t1
    CHECK(names[0] == "1");
    CHECK(names[4] == "w1*w2");
    CHECK(X(0, 4) == 2.0);
    CHECK(X(0, 5) == 3.0);
    CHECK(X(0, 6) == 6.0);
}

TEST_CASE("rank deficiency names the dependent columns") {
    const StudyDataset d = make_data({{1, 2}, {2, 4}, {3, 6}, {0, 0}},
                                     {{0}, {0}, {0}, {0}}, {1, 2, 3, 4});
    try {
        fit_least_squares(d, all_rows(d), d.outcome(), main_effects_spec(d), 0.0, "demo fit");
        FAIL("expected a rank error");
    } catch (const EstimationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("collinear") != std::string::npos);
        // one member of the dependent pair is flagged (pivot picks which)
        const bool names_w = msg.find("w1") != std::string::npos ||
                             msg.find("w2") != std::string::npos;
        CHECK(names_w);
        CHECK(msg.find("demo fit") != std::string::npos);
    }
}

TEST_CASE("too few rows is reported with the stratum") {
    const StudyDataset d = make_data({{1, 2}}, {{3}}, {1});
    CHECK_THROWS_WITH_AS(
        fit_least_squares(d, {0}, d.outcome().head(1), main_effects_spec(d), 0.0, "tiny stratum"),
        doctest::Contains("tiny stratum"), EstimationError);
}

TEST_CASE("ridge shrinks toward zero and vanishes at zero penalty") {
    RngStream rng = RngStream::from_key({79});
    std::vector<std::vector<double>> w, t;
    std::vector<double> y;
    for (int i = 0; i < 30; ++i) {
        w.push_back({rng.normal()});
        t.push_back({rng.normal()});
        y.push_back(3.0 * w.back()[0] + rng.normal());
    }
    const StudyDataset d = make_data(w, t, y);
    const DesignSpec spec = main_effects_spec(d);
    const auto plain = fit_least_squares(d, all_rows(d), d.outcome(), spec);
    const auto zero = fit_least_squares(d, all_rows(d), d.outcome(), spec, 0.0);
    const auto heavy = fit_least_squares(d, all_rows(d), d.outcome(), spec, 1e6);
    CHECK(plain.coef == zero.coef);
    CHECK(std::fabs(heavy.coef[1]) < 0.1);
    CHECK(std::fabs(heavy.coef[1]) < std::fabs(plain.coef[1]));

    // ridge makes a collinear system solvable
    const StudyDataset dd = make_data({{1, 2}, {2, 4}, {3, 6}, {0, 0}},
                                      {{0}, {0}, {0}, {0}}, {1, 2, 3, 4});
    CHECK_NOTHROW(fit_least_squares(dd, all_rows(dd), dd.outcome(), main_effects_spec(dd), 0.1));
}

TEST_CASE("saturated cells are group means") {
    const StudyDataset d = make_data({{0}, {0}, {1}}, {{0}, {0}, {0}}, {1, 3, 5});
    DesignSpec spec = main_effects_spec(d);
    const auto fit = fit_saturated(d, all_rows(d), d.outcome(), spec);
    CHECK(fit.cells.size() == 2);
    CHECK(predict_at(fit, {0.0}) == doctest::Approx(2.0));
    CHECK(predict_at(fit, {1.0}) == doctest::Approx(5.0));
    const Eigen::VectorXd p = predict(fit, d, all_rows(d));
    CHECK(p[0] == doctest::Approx(2.0));
    CHECK(p[2] == doctest::Approx(5.0));
}

TEST_CASE("saturated equals least squares with fully dummied design") {
    // one binary predictor: saturated means == intercept + slope fit
    const StudyDataset d =
        make_data({{0}, {1}, {0}, {1}, {1}}, {{0}, {0}, {0}, {0}, {0}}, {1, 2, 3, 6, 7});
    const DesignSpec spec = main_effects_spec(d);
    const auto sat = fit_saturated(d, all_rows(d), d.outcome(), spec);
    const auto ls = fit_least_squares(d, all_rows(d), d.outcome(), spec);
    const Eigen::VectorXd ps = predict(sat, d, all_rows(d));
    const Eigen::VectorXd pl = predict(ls, d, all_rows(d));
    for (int i = 0; i < 5; ++i) CHECK(ps[i] == doctest::Approx(pl[i]).epsilon(1e-12));
}

TEST_CASE("saturated prediction on an unseen cell names it") {
    const StudyDataset d = make_data({{0}, {1}}, {{0}, {0}}, {1, 2});
    const auto fit =
        fit_saturated(d, {0}, d.outcome().head(1), main_effects_spec(d), 64, "cells fit");
    CHECK_THROWS_WITH_AS(predict_at(fit, {1.0}), doctest::Contains("cells fit"),
                         EstimationError);
}

TEST_CASE("saturated level cap is enforced per predictor") {
    std::vector<std::vector<double>> w, t;
    std::vector<double> y;
    for (int i = 0; i < 10; ++i) {
        w.push_back({static_cast<double>(i)});
        t.push_back({0.0});
        y.push_back(1.0);
    }
    const StudyDataset d = make_data(w, t, y);
    CHECK_THROWS_WITH_AS(
        fit_saturated(d, all_rows(d), d.outcome(), main_effects_spec(d), 5),
        doctest::Contains("w1"), EstimationError);
    CHECK_NOTHROW(fit_saturated(d, all_rows(d), d.outcome(), main_effects_spec(d), 10));
}

TEST_CASE("masked proxies cannot enter a design") {
    std::vector<long long> study{1, 1, 2, 2};
    Eigen::VectorXi arm(4);
    arm << 0, 1, 0, 1;
    Eigen::MatrixXd W(4, 1), T(4, 1);
    W << 0, 1, 0, 1;
    T << 0.5, 0.7, kNaN, kNaN;
    Eigen::VectorXd Y(4);
    Y << 1, 2, 3, 4;
    const StudyDataset d = StudyDataset::from_rows(study, arm, W, T, Y, {"w1"}, {"t1"});
    const DesignSpec spec = main_effects_spec(d, {0});
    CHECK_THROWS_AS(build_design(d, all_rows(d), spec), StructuralError);
}

TEST_CASE("predict_at matches row predictions in least squares mode") {
    RngStream rng = RngStream::from_key({80});
    std::vector<std::vector<double>> w, t;
    std::vector<double> y;
    for (int i = 0; i < 12; ++i) {
        w.push_back({rng.normal(), rng.normal()});
        t.push_back({rng.normal()});
        y.push_back(rng.normal());
    }
    const StudyDataset d = make_data(w, t, y);
    DesignSpec spec = main_effects_spec(d, {0});
    spec.interaction_order = 2;
    const auto fit = fit_least_squares(d, all_rows(d), d.outcome(), spec);
    const Eigen::VectorXd p = predict(fit, d, all_rows(d));
    for (int i = 0; i < 12; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        CHECK(predict_at(fit, {w[ui][0], w[ui][1], t[ui][0]}) ==
              doctest::Approx(p[i]).epsilon(1e-12));
    }
}
