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
#include <vector>

#include "hlab/errors.hpp"
#include "hlab/estimator.hpp"
#include "hlab/presets.hpp"

using namespace hlab;

namespace {

SimConfig config(double dt, std::uint64_t seed)
{
    SimConfig c;
    c.dt = dt;
    c.seed = seed;
    return c;
}

const std::vector<double> origin = {0.0};

}  // namespace

TEST_CASE("summary statistics of a fixed sample")
{
    const std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
    const auto e = summarize(v);
    CHECK(e.n == 4);
    CHECK(e.mean == 2.5);
    CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)).epsilon(1e-15));
    CHECK(e.ci95 == doctest::Approx(1.96 * e.std_error).epsilon(1e-15));
    CHECK_THROWS_AS(summarize(std::vector<double>{}), UsageError);
}

TEST_CASE("test function shapes")
{
    const auto e = TestFunction::exponential(2.0, 3.0, 1.0);
    CHECK(e(0.5) == doctest::Approx(3.0 * std::exp(1.0) + 1.0));
    CHECK(e.derivative(0.5) == doctest::Approx(6.0 * std::exp(1.0)));
    CHECK(e.strictly_positive());
    CHECK_FALSE(e.bounded());
    CHECK(TestFunction::exponential(1.0).strictly_positive());
    CHECK_FALSE(TestFunction::affine(1.0).strictly_positive());

    const auto q = TestFunction::quadratic();
    CHECK(q.floor() == 1e-8);
    CHECK(q(0.0) == 1e-8);
    CHECK(q.strictly_positive());

    const auto l = TestFunction::logistic(1.0, 1.0);
    CHECK(l.floor() == 0.0);
    CHECK(l(0.0) == doctest::Approx(1.5));
    CHECK(l.sup_norm() == doctest::Approx(2.0));
    CHECK(l.lower_bound() == doctest::Approx(1.0));
    CHECK(l.derivative(0.0) == doctest::Approx(0.25));
    CHECK(logistic(-800.0) == 0.0);
    CHECK(logistic(800.0) == 1.0);

    const auto c = TestFunction::constant(2.0).scaled(1.5);
    CHECK(c(17.0) == 3.0);
    CHECK(c.derivative(17.0) == 0.0);
}

TEST_CASE("constant test functions have zero standard error")
{
    const auto ou = make_ou(0.5, 1.0);
    const auto f = TestFunction::constant(2.5);
    const auto e = estimate_semigroup(ou, origin, 1.0, f, 500, config(1e-2, 1));
    CHECK(e.mean == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(e.std_error == doctest::Approx(0.0).epsilon(1e-15));
    const auto l = estimate_log_semigroup(ou, origin, 1.0, f, 500, config(1e-2, 1));
    CHECK(l.mean == doctest::Approx(std::log(2.5)).epsilon(1e-15));
}

TEST_CASE("OU mean of the identity after one half-life")
{
    const auto ou = make_ou(1.0, 1.0);
    const std::vector<double> x0 = {2.0};
    const auto e = estimate_semigroup(ou, x0, std::log(2.0), TestFunction::affine(1.0), 20000,
                                      config(std::log(2.0) / 1000.0, 5));
    CHECK(std::abs(e.mean - 1.0) <= 3.0 * e.std_error + 1e-3);
}

TEST_CASE("OU exponential moment")
{
    const auto ou = make_ou(0.5, 1.0);
    const double v = 1.0 - std::exp(-1.0);
    const auto e = estimate_semigroup(ou, origin, 1.0, TestFunction::exponential(1.0), 100000,
                                      config(1e-3, 6));
    CHECK(std::exp(v / 2.0) == doctest::Approx(1.3718).epsilon(1e-4));
    CHECK(std::abs(e.mean - std::exp(v / 2.0)) <= 3.0 * e.std_error + 10.0 * 1e-3);
}

TEST_CASE("OU log of an exponential is the decayed mean")
{
    const auto ou = make_ou(0.5, 1.0);
    const std::vector<double> x0 = {1.0};
    const auto e = estimate_log_semigroup(ou, x0, 1.0, TestFunction::exponential(1.0), 50000,
                                          config(1e-3, 7));
    CHECK(std::abs(e.mean - std::exp(-0.5)) <= 3.0 * e.std_error + 1e-3);
}

TEST_CASE("log of a small bounded perturbation stays in its range")
{
    const auto m = make_tanh_perturbed(1.0, 1.0, 0.1, 0.9);
    const auto f = TestFunction::logistic(0.05, 1.0);
    const auto e = estimate_log_semigroup(m, origin, 1.0, f, 2000, config(1e-2, 8));
    CHECK(e.mean >= 0.0);
    CHECK(e.mean <= std::log(1.05));
}

TEST_CASE("log of a function touching zero is refused")
{
    const auto ou = make_ou(0.5, 1.0);
    CHECK_THROWS_AS(estimate_log_semigroup(ou, origin, 1.0, TestFunction::affine(1.0), 200,
                                           config(1e-2, 9)),
                    PositivityError);
}

TEST_CASE("too few samples is a usage error")
{
    const auto ou = make_ou(0.5, 1.0);
    CHECK_THROWS_AS(estimate_semigroup(ou, origin, 1.0, TestFunction::affine(1.0), 99,
                                       config(1e-2, 9)),
                    UsageError);
}

TEST_CASE("Jensen gap is nonnegative on common random numbers")
{
    const auto m = make_tanh_perturbed(1.0, 1.0, 0.1, 0.9);
    for (const auto& f : {TestFunction::exponential(1.0), TestFunction::logistic(1.0, 1.0),
                          TestFunction::quadratic(1.0, 1.0)}) {
        const auto s = sample_endpoints(m, origin, {1.0}, 20000, config(1e-2, 10));
        const auto pf = summarize(evaluate(s, 0, f, false));
        const auto plf = summarize(evaluate(s, 0, f, true));
        const double combined = std::hypot(pf.std_error / pf.mean, plf.std_error);
        CHECK(plf.mean <= std::log(pf.mean) + 3.0 * combined);
    }
}

TEST_CASE("standard error halves when the sample count quadruples")
{
    const auto ou = make_ou(0.5, 1.0);
    const auto f = TestFunction::logistic();
    const auto a = estimate_semigroup(ou, origin, 1.0, f, 5000, config(1e-2, 11));
    const auto b = estimate_semigroup(ou, origin, 1.0, f, 20000, config(1e-2, 12));
    CHECK(a.std_error / b.std_error == doctest::Approx(2.0).epsilon(0.2));
    const auto c = estimate_semigroup(ou, origin, 1.0, f, 10000, config(1e-2, 13));
    CHECK(a.std_error / c.std_error == doctest::Approx(std::sqrt(2.0)).epsilon(0.2));
}

TEST_CASE("common random numbers correlate estimates at nearby points")
{
    const auto m = make_tanh_perturbed(1.0, 1.0, 0.1, 0.9);
    const std::vector<double> y = {0.5};
    const auto f = TestFunction::logistic(1.0, 1.0);
    const std::size_t n = 5000;
    const auto sx = sample_endpoints(m, origin, {1.0}, n, config(1e-2, 14));
    const auto sy = sample_endpoints(m, y, {1.0}, n, config(1e-2, 14));
    const auto fx = evaluate(sx, 0, f, false), fy = evaluate(sy, 0, f, false);
    const double mx = summarize(fx).mean, my = summarize(fy).mean;
    double cxy = 0, cxx = 0, cyy = 0;
    for (std::size_t r = 0; r < n; ++r) {
        cxy += (fx[r] - mx) * (fy[r] - my);
        cxx += (fx[r] - mx) * (fx[r] - mx);
        cyy += (fy[r] - my) * (fy[r] - my);
    }
    CHECK(cxy / std::sqrt(cxx * cyy) > 0.5);
}

TEST_CASE("snapshots match separate runs to the same times")
{
    const auto m = make_tanh_perturbed(1.0, 1.0, 0.1, 0.9);
    const std::vector<double> x0 = {1.2};
    const auto s = sample_endpoints(m, x0, {1.0, 0.25, 0.5}, 150, config(1e-2, 15));
    CHECK(s.times() == std::vector<double>{0.25, 0.5, 1.0});
    const auto half = sample_endpoints(m, x0, {0.5}, 150, config(1e-2, 15));
    for (std::size_t r = 0; r < 150; ++r)
        CHECK(s.at(r, s.time_index(0.5))[0] == half.at(r, 0)[0]);
    CHECK_THROWS_AS(s.time_index(0.3), UsageError);
}
