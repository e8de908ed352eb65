#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "tsens/errors.hpp"
#include "tsens/simlab.hpp"

using namespace tsens;

namespace {

SimScenario scenario(SimScenario::Bias kind, int n, std::uint64_t seed) {
    SimScenario s;
    s.bias = kind;
    s.n = n;
    s.seed = seed;
    return s;
}

}  // namespace

TEST_CASE("simulation is deterministic in (scenario, replicate)") {
    const SimScenario s = scenario(SimScenario::Bias::none, 40, 3);
    CHECK(simulate(s, 2).data.equals(simulate(s, 2).data));
    CHECK_FALSE(simulate(s, 2).data.equals(simulate(s, 3).data));
    SimScenario other = s;
    other.seed = 4;
    CHECK_FALSE(simulate(s, 2).data.equals(simulate(other, 2).data));
}

TEST_CASE("generator moments match the design") {
    const SimScenario s = scenario(SimScenario::Bias::none, 50000, 11);
    const SimDraw draw = simulate(s, 0);
    const StudyDataset& d = draw.data;
    REQUIRE(d.n_rows() == 100000);

    double w_sum = 0, a_sum = 0;
    double t_treated = 0, t_control = 0;
    int n_treated = 0;
    for (int i = 0; i < d.n_rows(); ++i) {
        w_sum += d.covariates()(i, 0);
        a_sum += d.arm_of(i);
        if (d.arm_of(i) == 1) {
            t_treated += d.proxies()(i, 0);
            ++n_treated;
        } else {
            t_control += d.proxies()(i, 0);
        }
    }
    const int n = d.n_rows();
    CHECK(std::fabs(w_sum / n) < 0.02);
    CHECK(a_sum / n == doctest::Approx(0.5).epsilon(0.02));
    CHECK(t_treated / n_treated == doctest::Approx(1.0).epsilon(0.03));
    CHECK(std::fabs(t_control / (n - n_treated)) < 0.03);

    double effect = 0;
    for (int i = 0; i < n; ++i) effect += draw.y1[i] - draw.y0[i];
    CHECK(effect / n == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("outcome masking and sidecar consistency") {
    const SimScenario s = scenario(SimScenario::Bias::constant, 30, 5);
    const SimDraw draw = simulate(s, 1);
    const StudyDataset& d = draw.data;
    for (int i = 0; i < d.n_rows(); ++i) {
        const bool missing = d.study_of(i) == 2;
        CHECK(std::isnan(d.outcome()[i]) == missing);
        CHECK(std::isfinite(draw.y_full[i]));
        const double want = d.arm_of(i) == 1 ? draw.y1[i] : draw.y0[i];
        CHECK(draw.y_full[i] == want);
        if (!missing) CHECK(d.outcome()[i] == draw.y_full[i]);
    }
}

TEST_CASE("constant bias shifts the masked study's counterfactuals exactly") {
    SimScenario biased = scenario(SimScenario::Bias::constant, 25, 7);
    biased.u0 = -3.0;
    biased.delta = -2.0;
    const SimDraw base = simulate(scenario(SimScenario::Bias::none, 25, 7), 0);
    const SimDraw shifted = simulate(biased, 0);
    for (int i = 0; i < base.data.n_rows(); ++i) {
        if (base.data.study_of(i) == 1) {
            CHECK(shifted.y0[i] == base.y0[i]);
            CHECK(shifted.y1[i] == base.y1[i]);
        } else {
            CHECK(shifted.y0[i] == base.y0[i] + biased.u0);
            CHECK(shifted.y1[i] == base.y1[i] + biased.u0 + biased.delta);
        }
    }
}

TEST_CASE("functional bias stays inside its magnitudes") {
    SimScenario biased = scenario(SimScenario::Bias::functional, 400, 9);
    biased.b0 = 2.0;
    biased.b1 = 1.0;
    const SimDraw base = simulate(scenario(SimScenario::Bias::none, 400, 9), 0);
    const SimDraw shifted = simulate(biased, 0);
    for (int i = 0; i < base.data.n_rows(); ++i) {
        const double d0 = shifted.y0[i] - base.y0[i];
        const double d1 = shifted.y1[i] - base.y1[i];
        if (base.data.study_of(i) == 1) {
            CHECK(d0 == 0.0);
            CHECK(d1 == 0.0);
        } else {
            CHECK(std::fabs(d0) <= biased.b0);
            CHECK(d1 >= 0.0);
            CHECK(d1 <= biased.b1);
        }
    }
}

TEST_CASE("truth is analytic for constant bias") {
    SimScenario s = scenario(SimScenario::Bias::constant, 100, 1);
    s.u0 = 5.0;
    s.delta = -2.0;
    const TruthRecord t = truth(s);
    CHECK(t.method == "analytic");
    CHECK(t.per_study[0] == 4.0);
    CHECK(t.per_study[1] == 2.0);
    CHECK(t.overall == 3.0);
    CHECK(t.true_delta == -2.0);
    CHECK(t.mc_error == 0.0);

    const TruthRecord clean = truth(scenario(SimScenario::Bias::none, 100, 1));
    CHECK(clean.overall == 4.0);
    CHECK(std::isnan(truth(s).true_delta) == false);
}

TEST_CASE("functional truth integrates by monte carlo, reproducibly") {
    SimScenario s = scenario(SimScenario::Bias::functional, 100, 13);
    s.b0 = 2.0;
    s.b1 = 1.0;
    const TruthRecord a = truth(s, 200000);
    const TruthRecord b = truth(s, 200000);
    CHECK(a.overall == b.overall);  // same seed-derived stream
    CHECK(a.method == "monte-carlo");
    CHECK(a.mc_error > 0.0);
    CHECK(a.mc_error < 0.01);
    CHECK(std::isnan(a.true_delta));
    CHECK(a.gamma0 == 2.0);
    CHECK(a.gamma1 == 1.0);
    CHECK(a.per_study[0] == 4.0);

    // independent-length runs agree within their error bars
    const TruthRecord c = truth(s, 1000000);
    CHECK(std::fabs(a.overall - c.overall) < 4.0 * (a.mc_error + c.mc_error));

    // shifts are bounded, so the truth stays near 4
    CHECK(a.per_study[1] == doctest::Approx(4.0).epsilon(0.2));

    SimScenario zero = s;
    zero.b0 = 0.0;
    zero.b1 = 0.0;
    CHECK(truth(zero, 1000).overall == 4.0);
}

TEST_CASE("realized bias summaries") {
    const RealizedBias none = realized_bias(scenario(SimScenario::Bias::none, 10, 2));
    CHECK(none.u1_mean == 0.0);
    CHECK(none.u0_mean == 0.0);
    CHECK(none.delta == 0.0);

    SimScenario c = scenario(SimScenario::Bias::constant, 10, 2);
    c.u0 = 1.5;
    c.delta = -0.75;
    const RealizedBias rc = realized_bias(c);
    CHECK(rc.u0_mean == 1.5);
    CHECK(rc.u1_mean == 0.75);
    CHECK(rc.delta == -0.75);
    CHECK(rc.mc_error == 0.0);

    SimScenario f = scenario(SimScenario::Bias::functional, 10, 2);
    f.b0 = 3.0;
    f.b1 = 2.0;
    const RealizedBias rf = realized_bias(f, 200000);
    CHECK(std::fabs(rf.u0_mean) <= 3.0);
    CHECK(rf.u1_mean >= 0.0);
    CHECK(rf.u1_mean <= 2.0);
    CHECK(rf.delta == rf.u1_mean - rf.u0_mean);
    CHECK(rf.mc_error > 0.0);
}

TEST_CASE("scenario text parsing") {
    std::istringstream in(
        "# comment\n"
        "n = 250\n"
        "bias.kind = constant\n"
        "bias.u0 = -3\n"
        "bias.delta = 2\n"
        "reps = 50\n"
        "seed = 17\n"
        "delta_grid = -1:1:1\n");
    const SimScenario s = parse_scenario(in);
    CHECK(s.n == 250);
    CHECK(s.bias == SimScenario::Bias::constant);
    CHECK(s.u0 == -3.0);
    CHECK(s.delta == 2.0);
    CHECK(s.reps == 50);
    CHECK(s.seed == 17);
    REQUIRE(s.delta_grid.size() == 3);

    std::istringstream bad_kind("bias.kind = wavy\n");
    CHECK_THROWS_AS(parse_scenario(bad_kind), ParseError);
    std::istringstream bad_key("banana = 1\n");
    CHECK_THROWS_WITH_AS(parse_scenario(bad_key), doctest::Contains("banana"), ParseError);
    std::istringstream bad_value("n = many\n");
    CHECK_THROWS_AS(parse_scenario(bad_value), ParseError);
}

TEST_CASE("scenario validation") {
    SimScenario s;
    s.n = 0;
    CHECK_THROWS_AS(s.validate(), StructuralError);
    s.n = 10;
    s.reps = 0;
    CHECK_THROWS_AS(s.validate(), StructuralError);
    s.reps = 10;
    s.bias = SimScenario::Bias::functional;
    s.b0 = -1.0;
    CHECK_THROWS_AS(s.validate(), StructuralError);
}

TEST_CASE("single-draw study emits one row per cell and grid value") {
    StudyOptions o;
    o.figure = 1;
    o.seed = 2;
    o.n_boot = 40;
    std::vector<FigureRow> rows;
    run_study(o, [&](const FigureRow& r) { rows.push_back(r); });
    CHECK(rows.size() == 9 * 7);  // 3x3 cells, default -3..3 grid
    for (const auto& r : rows) {
        CHECK(r.replicate == 0);
        CHECK(r.lower <= r.estimate);
        CHECK(r.estimate <= r.upper);
        CHECK(std::isfinite(r.truth));
    }
    CHECK(rows[0].scenario.find("u0=-3") != std::string::npos);
    CHECK(rows[0].scenario.find("n=100") != std::string::npos);

    // same options, same rows
    std::vector<FigureRow> again;
    run_study(o, [&](const FigureRow& r) { again.push_back(r); });
    REQUIRE(again.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].estimate == again[i].estimate);
        CHECK(rows[i].lower == again[i].lower);
    }
}

TEST_CASE("replicated study summarizes across replications, thread-stably") {
    StudyOptions o;
    o.figure = 3;
    o.seed = 5;
    o.reps = 12;
    std::vector<FigureRow> serial;
    run_study(o, [&](const FigureRow& r) { serial.push_back(r); });
    CHECK(serial.size() == 9 * 7);
    for (const auto& r : serial) {
        CHECK(r.replicate == 12);
        CHECK(r.lower <= r.estimate);
        CHECK(r.estimate <= r.upper);
    }

    StudyOptions par = o;
    par.threads = 3;
    std::vector<FigureRow> parallel;
    run_study(par, [&](const FigureRow& r) { parallel.push_back(r); });
    REQUIRE(parallel.size() == serial.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].scenario == parallel[i].scenario);
        CHECK(serial[i].estimate == parallel[i].estimate);
        CHECK(serial[i].lower == parallel[i].lower);
        CHECK(serial[i].upper == parallel[i].upper);
    }
}

TEST_CASE("comparison study tags both estimator variants") {
    StudyOptions o;
    o.figure = 5;
    o.seed = 6;
    o.reps = 8;
    std::vector<FigureRow> rows;
    run_study(o, [&](const FigureRow& r) { rows.push_back(r); });
    CHECK(rows.size() == 2 * 9 * 7);
    bool saw_proxy = false, saw_blind = false;
    for (const auto& r : rows) {
        if (r.scenario.find("variant=proxy") != std::string::npos) saw_proxy = true;
        if (r.scenario.find("variant=blind") != std::string::npos) saw_blind = true;
    }
    CHECK(saw_proxy);
    CHECK(saw_blind);
}

TEST_CASE("bounded study degenerates at gamma zero") {
    StudyOptions o;
    o.figure = 6;
    o.seed = 7;
    o.n_boot = 40;
    std::vector<FigureRow> rows;
    run_study(o, [&](const FigureRow& r) { rows.push_back(r); });
    CHECK(rows.size() == 9 * 5);  // default gamma grid 0..4
    for (const auto& r : rows) {
        CHECK(r.lower <= r.upper);
        if (r.parameter == 0.0) {
            CHECK(r.lower == r.estimate);
            CHECK(r.upper == r.estimate);
        } else {
            CHECK(r.lower < r.estimate);
            CHECK(r.upper > r.estimate);
        }
    }
}

TEST_CASE("figure rows serialize to the tidy schema") {
    FigureRow r;
    r.scenario = "u0=0;delta=0;n=100";
    r.replicate = 3;
    r.parameter = -1.0;
    r.estimate = 2.5;
    r.lower = 1.5;
    r.upper = 3.5;
    r.truth = 4.0;
    std::ostringstream out;
    write_figure_header(out);
    write_figure_row(r, out);
    CHECK(out.str() ==
          "scenario,replicate,parameter,estimate,lower,upper,truth\n"
          "u0=0;delta=0;n=100,3,-1,2.5,1.5,3.5,4\n");
}
