/*
   Copyright 2026 The hlab Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/


#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hlab/errors.hpp"
#include "hlab/presets.hpp"
#include "hlab/verify.hpp"

using namespace hlab;

namespace {

const Grid1D wide(-10.0, 10.0, 2001);
const Grid1D standard(-8.0, 8.0, 801);
const Grid1D chain(-10.0, 10.0, 201);

SimConfig config(double dt, std::uint64_t seed)
{
    SimConfig c;
    c.dt = dt;
    c.seed = seed;
    return c;
}

// OU with theta = 1/2, sigma = 1 and f = e^z: log P_t f(y) = e^{-t/2} y + v_t / 2 and
// P_t log f(x) = e^{-t/2} x, so the slack is a quadratic in d = x - y.
double ou_exp_slack(double d, double t)
{
    const double ct = harnack_constant(-1.0, t);
    const double v = 1.0 - std::exp(-t);
    return ct * d * d - std::exp(-t / 2.0) * d + v / 2.0;
}

}  // namespace

TEST_CASE("report verdicts")
{
    auto r = VerificationReport::make("a", ReportKind::inequality, 1.0, 0.9, 0.2);
    CHECK(r.slack == doctest::Approx(-0.1));
    CHECK(r.pass);
    r.rescale_tolerance(0.25);
    CHECK_FALSE(r.pass);
    CHECK(std::string(r.verdict()) == "FAIL");
    CHECK_FALSE(VerificationReport::make("b", ReportKind::identity, 0.0, 1.0, 0.5).pass);
    CHECK(VerificationReport::make("b", ReportKind::inequality, 0.0, 1.0, 0.5).pass);
    CHECK(VerificationReport::make("c", ReportKind::tightness, 1.0, 1.0005, 1e-3).pass);
}

TEST_CASE("report serialisation")
{
    std::vector<VerificationReport> rs = {
        VerificationReport::make("z", ReportKind::inequality, 0.1, 0.2, 0.0, {{"seed", 3}}),
        VerificationReport::make("a", ReportKind::identity, 1.0 / 3.0, 1.0 / 3.0, 1e-9)};
    rs = sorted(rs);
    CHECK(rs[0].name == "a");
    const auto j = nlohmann::json::parse(reports_json(rs));
    CHECK(j["summary"]["total"] == 2);
    CHECK(j["summary"]["passed"] == 2);
    CHECK(j["reports"][0]["verdict"] == "PASS");
    CHECK(j["reports"][0]["lhs"].get<double>() == 1.0 / 3.0);
    CHECK(j["reports"][1]["metadata"]["seed"] == 3);
    const std::string csv = summary_csv(rs);
    CHECK(csv.rfind("name,kind,lhs,rhs,slack,tolerance,verdict\n", 0) == 0);
    CHECK(csv.find("a,identity,0.33333333333333331,") != std::string::npos);
}

TEST_CASE("log-Harnack equality case")
{
    const auto ou = make_ou(0.5, 1.0);
    const auto r = verify_log_harnack(ou, 0.3, 0.3, 1.0, TestFunction::constant(2.0), 200,
                                      config(1e-2, 1));
    CHECK(r.lhs == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(r.rhs == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(std::abs(r.slack) < 1e-14);
    CHECK(r.pass);
}

TEST_CASE("oracle slack follows the closed-form quadratic for OU and e^z")
{
    const auto ou = make_ou(0.5, 1.0);
    const auto f = TestFunction::exponential(1.0);
    for (double d : {-1.0, 0.0, 0.5, 1.0422, 2.0}) {
        const auto r = verify_log_harnack_oracle(ou, d, 0.0, 1.0, f, wide, 1e-3);
        CHECK(std::abs(r.slack - ou_exp_slack(d, 1.0)) < 1e-3);
    }
}

TEST_CASE("OU and e^z make the log-Harnack constant tight")
{
    const auto ou = make_ou(0.5, 1.0);
    const auto f = TestFunction::exponential(1.0);
    const double ct = harnack_constant(-1.0, 1.0);
    const double d_star = std::exp(-0.5) / (2.0 * ct);
    CHECK(d_star == doctest::Approx(1.0422).epsilon(1e-4));
    // The discriminant of the quadratic vanishes, so its minimum is exactly zero.
    CHECK(std::abs(ou_exp_slack(d_star, 1.0)) < 1e-15);
    for (double t : {0.3, 2.0, 5.0}) {
        const double ds = std::exp(-t / 2.0) / (2.0 * harnack_constant(-1.0, t));
        CHECK(std::abs(ou_exp_slack(ds, t)) < 1e-14);
    }

    const auto s = log_harnack_sharpness(ou, 0.0, 1.0, f, wide, 1e-3, 0.0, 3.0);
    CHECK(s.d_star == doctest::Approx(d_star).epsilon(1e-3));
    CHECK(std::abs(s.min_slack) <= 1e-3);
    for (std::size_t k = 0; k < s.d_scan.size(); ++k) {
        if (std::abs(s.d_scan[k] - d_star) > 0.3)
            CHECK(s.slack_scan[k] > 1e-3);
    }
    const auto r = verify_log_harnack_sharpness(ou, 0.0, 1.0, f, wide, 1e-3, 0.0, 3.0);
    CHECK(r.kind == ReportKind::tightness);
    CHECK(r.pass);
    CHECK(r.metadata["d_star"].get<double>() == doctest::Approx(d_star).epsilon(1e-3));
}

TEST_CASE("monte carlo log-Harnack at the tight displacement")
{
    const auto ou = make_ou(0.5, 1.0);
    const auto r = verify_log_harnack(ou, 1.0422, 0.0, 1.0, TestFunction::exponential(1.0),
                                      20000, config(1e-2, 5));
    CHECK(r.pass);
    CHECK(std::abs(r.slack) <= r.tolerance);
}

TEST_CASE("log-Harnack slack is invariant under scaling f")
{
    const auto m = make_tanh_perturbed(1.0, 1.0, 0.1, 0.9);
    const auto f = TestFunction::logistic(1.0, 1.0);
    const auto a = verify_log_harnack(m, 0.5, -0.5, 1.0, f, 5000, config(1e-2, 6));
    const auto b = verify_log_harnack(m, 0.5, -0.5, 1.0, f.scaled(7.0), 5000, config(1e-2, 6));
    CHECK(b.lhs - a.lhs == doctest::Approx(std::log(7.0)).epsilon(1e-12));
    CHECK(b.rhs - a.rhs == doctest::Approx(std::log(7.0)).epsilon(1e-12));
    CHECK(std::abs(b.slack - a.slack) < 1e-12);
}

TEST_CASE("log-Harnack at x = y is the Jensen gap")
{
    const auto m = make_tanh_perturbed(1.0, 1.0, 0.1, 0.9);
    for (const auto& f : {TestFunction::exponential(1.0), TestFunction::logistic(1.0, 1.0)}) {
        const auto r = verify_log_harnack(m, 0.7, 0.7, 1.0, f, 5000, config(1e-2, 7));
        CHECK(r.slack >= -r.tolerance);
        CHECK(r.slack >= 0.0);  // same sample on both sides: exact Jensen
    }
}

TEST_CASE("tanh model passes the oracle log-Harnack grid")
{
    const auto m = make_tanh_perturbed(1.0, 1.0, 0.1, 0.9);
    const auto f = TestFunction::logistic(1.0, 1.0);
    for (double t : {0.25, 1.0, 4.0})
        for (double x : {-2.0, 0.0, 2.0})
            for (double y : {-2.0, 0.0, 2.0})
                CHECK(verify_log_harnack_oracle(m, x, y, t, f, standard, 1e-3).pass);
}

TEST_CASE("coupling contraction is sharp for linear drift with constant noise")
{
    const auto ou = make_ou(0.5, 1.0);
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.0), y = Eigen::VectorXd::Zero(1);
    const auto r = verify_coupling_contraction(ou, x, y, 1.0, 200, config(1e-3, 8));
    CHECK(r.pass);
    CHECK(std::abs(r.metadata["ratio"].get<double>() - 1.0) <= 10.0 * 1e-3);
    const auto same = verify_coupling_contraction(ou, x, x, 1.0, 200, config(1e-3, 8));
    CHECK(same.lhs == 0.0);
    CHECK(same.rhs == 0.0);
    CHECK(same.pass);
}

TEST_CASE("coupling contraction for the tanh model at random pairs")
{
    const auto m = make_tanh_perturbed(1.0, 1.0, 0.1, 0.9);
    NormalStream rng(99, 0);
    for (std::uint64_t k = 0; k < 10; ++k) {
        const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 4.0 * rng.uniform(2 * k) - 2.0);
        const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 4.0 * rng.uniform(2 * k + 1) - 2.0);
        const auto r = verify_coupling_contraction(m, x, y, 1.0, 5000, config(1e-2, 100 + k));
        CHECK(r.pass);
        CHECK(r.metadata["ratio"].get<double>() <= 1.0);
    }
}

TEST_CASE("a falsified K is detected by the coupling check")
{
    const auto ou = make_ou(0.5, 1.0).with_K(-2.0);
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.0), y = Eigen::VectorXd::Zero(1);
    CHECK_FALSE(verify_coupling_contraction(ou, x, y, 1.0, 200, config(1e-3, 9)).pass);
}

TEST_CASE("gradient estimate")
{
    const auto ou = make_ou(0.5, 1.0);
    const auto flat = verify_gradient_estimate(ou, TestFunction::constant(1.0), 1.0, standard, 1e-3);
    CHECK(std::abs(flat.lhs) < 1e-12);
    CHECK(flat.pass);
    const auto eq = verify_gradient_estimate(ou, TestFunction::affine(1.0), 1.0, standard, 1e-3, true);
    CHECK(eq.kind == ReportKind::identity);
    CHECK(eq.lhs < 1e-3);
    CHECK(eq.pass);
    const auto m = make_tanh_perturbed(1.0, 1.0, 0.1, 0.9);
    for (const auto& f : {TestFunction::logistic(), TestFunction::quadratic(), TestFunction::affine(2.0)})
        CHECK(verify_gradient_estimate(m, f, 1.0, standard, 1e-3).pass);
}

TEST_CASE("strong Feller modulus on a sweep towards x")
{
    const auto ou = make_ou(0.5, 1.0);
    const auto f = TestFunction::logistic();
    const auto pts = feller_modulus(ou, f, 1.0, 0.0, {0.5, 0.1, 0.02}, standard, 1e-3);
    REQUIRE(pts.size() == 3);
    CHECK(pts[0].modulus > pts[1].modulus);
    CHECK(pts[1].modulus > pts[2].modulus);
    CHECK(pts[2].modulus < 0.05);
    for (const auto& p : pts)
        CHECK(p.worst_margin >= -1e-4);
    const auto reports = verify_feller_modulus(ou, f, 1.0, 0.0, {0.5, 0.1, 0.02}, standard, 1e-3);
    CHECK(reports.size() == 5);
    for (const auto& r : reports)
        CHECK(r.pass);

    const auto same = feller_modulus(ou, f, 1.0, 0.0, {0.0}, standard, 1e-3);
    CHECK(same[0].worst_margin >= 0.0);
    const auto zero = feller_modulus(ou, TestFunction::constant(0.0), 1.0, 0.0, {0.3}, standard, 1e-3);
    CHECK(zero[0].ptf_y == 0.0);
    CHECK(zero[0].worst_margin >= 0.0);
    CHECK_THROWS_AS(feller_modulus(ou, TestFunction::exponential(1.0), 1.0, 0.0, {0.1}, standard, 1e-3),
                    UsageError);
}

TEST_CASE("heat kernel entropy on the OU chain")
{
    const auto ou = make_ou(0.5, 1.0);
    const auto k1 = build_kernel(ou, 1.0, chain);
    CHECK(verify_heat_kernel_entropy(k1, ou.norm(), ou.K(), chain.index_of(0.0)).pass);
    const auto k01 = build_kernel(ou, 0.1, chain);
    const auto r = verify_heat_kernel_entropy(k01, ou.norm(), ou.K(), chain.index_of(1.0));
    CHECK(r.pass);
    CHECK(r.slack > 0.0);
    const auto kinf = build_kernel(ou, 60.0, chain);
    const auto far = verify_heat_kernel_entropy(kinf, ou.norm(), ou.K(), chain.index_of(0.0));
    CHECK(std::abs(far.lhs) < 1e-6);
    CHECK(far.rhs >= 0.0);
}

TEST_CASE("entropy-cost on the OU chain")
{
    const auto ou = make_ou(0.5, 1.0);
    const auto k = build_kernel(ou, 1.0, chain);
    const auto flat = verify_entropy_cost(k, ou.norm(), ou.K(), grid_density(k, "uniform"), "uniform");
    CHECK(std::abs(flat.lhs) < 1e-10);
    CHECK(std::abs(flat.rhs) < 1e-10);
    for (const char* name : {"shift", "right_half"}) {
        const auto r = verify_entropy_cost(k, ou.norm(), ou.K(), grid_density(k, name), name);
        CHECK(r.pass);
        CHECK(std::abs(r.metadata["duality_gap"].get<double>()) < 1e-8);
    }
    Eigen::VectorXd bad = 2.0 * grid_density(k, "uniform");
    CHECK_THROWS_AS(verify_entropy_cost(k, ou.norm(), ou.K(), bad, "bad"), UsageError);
    CHECK_THROWS_AS(grid_density(k, "nope"), UsageError);
}

TEST_CASE("closed-form Galerkin tail")
{
    GalerkinHeatParams p;
    double tail = 0.0;
    for (int i = 9; i <= 64; ++i) {
        const double lambda = std::numbers::pi * std::numbers::pi * i * i;
        const double q2 = std::pow(1.0 + lambda, -0.6);
        tail += q2 * (1.0 - std::exp(-2.0 * lambda)) / (2.0 * lambda);
    }
    CHECK(galerkin_linear_tail(p, 8, 64, 1.0) == doctest::Approx(tail).epsilon(1e-12));
    CHECK(galerkin_linear_tail(p, 64, 64, 1.0) == 0.0);
}

TEST_CASE("linear Galerkin distances match the tail")
{
    GalerkinHeatParams p;
    p.drift_amplitude = 0.0;
    p.sigma1_amplitude = 0.0;
    Eigen::VectorXd x0(4);
    x0 << 1.0, 0.5, 0.25, 0.125;
    SimConfig c = config(1e-2, 11);
    c.scheme = Scheme::exponential_euler;
    std::vector<GalerkinLevelStats> stats;
    const auto reports = verify_galerkin_convergence(p, {4, 8, 16}, x0, 1.0, 2000, c, {}, 1, &stats);
    CHECK(reports.size() == 2);
    for (const auto& r : reports)
        CHECK(r.pass);
    CHECK(stats.back().level == 16);
    CHECK(stats.back().D.mean == 0.0);
}

TEST_CASE("full Galerkin distances shrink with the level")
{
    GalerkinHeatParams p;
    Eigen::VectorXd x0(4);
    x0 << 1.0, 0.5, 0.25, 0.125;
    SimConfig c = config(1e-2, 12);
    c.scheme = Scheme::exponential_euler;
    const auto reports = verify_galerkin_convergence(p, {4, 8, 16, 32}, x0, 1.0, 1000, c);
    CHECK(reports.size() == 3);
    for (const auto& r : reports)
        CHECK(r.pass);
}
