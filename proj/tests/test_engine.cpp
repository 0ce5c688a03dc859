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

#include "hlab/engine.hpp"
#include "hlab/errors.hpp"
#include "hlab/estimator.hpp"
#include "hlab/presets.hpp"

using namespace hlab;

namespace {

// b(x) = -theta x with both sigma and sigma0 chosen freely; sigma = 0 gives the ODE.
DiffusionModel linear_model(double theta, double sigma, std::size_t dim = 1)
{
    auto b = [theta](std::span<const double> x, std::span<double> out) {
        for (std::size_t i = 0; i < x.size(); ++i)
            out[i] = -theta * x[i];
    };
    auto s = [sigma, dim](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < dim; ++i)
            out[i * dim + i] = sigma;
    };
    return DiffusionModel("linear", dim, b, s, Eigen::VectorXd::Ones(Eigen::Index(dim)),
                          -2.0 * theta);
}

GalerkinModel two_mode_ou()
{
    Eigen::VectorXd lambda(2), q(2);
    lambda << 1.0, 4.0;
    q << 1.0, 0.5;
    auto F = [](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
    return GalerkinModel("two_mode", lambda, q, F, SparseMatrixField{}, -2.0, true);
}

SimConfig config(double t, double dt, std::uint64_t seed = 1)
{
    SimConfig c;
    c.t_final = t;
    c.dt = dt;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("step grid always ends at t_final")
{
    CHECK(config(1.0, 1e-3).steps() == 1000);
    CHECK(config(1.0, 0.3).steps() == 4);
    CHECK(config(1.0, 0.3).step() == doctest::Approx(0.25));
    CHECK(config(2.0, 1e-3).steps_to(0.5) == 500);
    CHECK_THROWS_AS(config(1.0, 1e-3).steps_to(0.00025), UsageError);
    CHECK_THROWS_AS(config(1.0, 2.0).validate(), UsageError);
    CHECK_THROWS_AS(config(-1.0, 1e-3).validate(), UsageError);
}

TEST_CASE("a path with no drift and no noise stays put")
{
    const auto m = linear_model(0.0, 0.0, 2);
    const std::vector<double> x0 = {1.0, 2.0};
    NormalStream rng(5, 0);
    const Eigen::VectorXd x = simulate(m, x0, config(3.0, 1e-2), rng);
    CHECK(x[0] == 1.0);
    CHECK(x[1] == 2.0);
}

TEST_CASE("noise-free linear drift follows the ODE")
{
    const auto m = linear_model(1.0, 0.0);
    const std::vector<double> x0 = {1.0};
    NormalStream rng(5, 0);
    const Eigen::VectorXd x = simulate(m, x0, config(1.0, 1e-4), rng);
    CHECK(std::abs(x[0] - std::exp(-1.0)) < 1e-3);
}

TEST_CASE("euler weak error for the OU mean decays at first order")
{
    const auto m = linear_model(1.0, 0.0);
    const std::vector<double> x0 = {2.0};
    std::vector<double> err;
    for (double dt : {1e-2, 1e-3, 1e-4}) {
        NormalStream rng(0, 0);
        err.push_back(std::abs(simulate(m, x0, config(1.0, dt), rng)[0] - 2.0 * std::exp(-1.0)));
    }
    CHECK(err[0] / err[1] == doctest::Approx(10.0).epsilon(0.05));
    CHECK(err[1] / err[2] == doctest::Approx(10.0).epsilon(0.05));

    // With noise the bias is the same plus a centred error.
    const auto ou = make_ou(1.0, 1.0);
    const double c = 1.1 * std::exp(-1.0);  // |bias| ~ x0 theta^2 t e^{-theta t} dt / 2
    for (double dt : {1e-2, 1e-3}) {
        const auto e = estimate_semigroup(ou, x0, 1.0, TestFunction::affine(1.0), 4000,
                                          config(1.0, dt, 77));
        CHECK(std::abs(e.mean - 2.0 * std::exp(-1.0)) <= 3.0 * e.std_error + c * dt);
    }
}

TEST_CASE("OU sample mean matches the closed form")
{
    const auto ou = make_ou(1.0, 1.0);
    const std::vector<double> x0 = {2.0};
    const auto e = estimate_semigroup(ou, x0, 1.0, TestFunction::affine(1.0), 100000,
                                      config(1.0, 1e-3, 2024));
    CHECK(std::abs(e.mean - 2.0 * std::exp(-1.0)) <= 3.0 * e.std_error);
    CHECK(e.mean == doctest::Approx(0.7358).epsilon(1e-2));
}

TEST_CASE("synchronous coupling keeps coincident paths together")
{
    const auto m = make_tanh_perturbed(1.0, 1.0, 0.1, 0.9);
    const std::vector<double> x0 = {0.7};
    NormalStream rng(3, 11);
    const auto e = simulate_coupled(m, x0, x0, config(1.0, 1e-3), rng);
    CHECK(e.x_end[0] == e.y_end[0]);
    CHECK(e.increments == 1000);
}

TEST_CASE("swapping the coupled starting points swaps the endpoints")
{
    const auto m = make_tanh_perturbed(1.0, 1.0, 0.1, 0.9);
    const std::vector<double> x0 = {-1.5}, y0 = {2.0};
    NormalStream a(8, 4), b(8, 4);
    const auto e1 = simulate_coupled(m, x0, y0, config(1.0, 1e-3), a);
    const auto e2 = simulate_coupled(m, y0, x0, config(1.0, 1e-3), b);
    CHECK(e1.x_end[0] == e2.y_end[0]);
    CHECK(e1.y_end[0] == e2.x_end[0]);
}

TEST_CASE("coupled marginals agree with single-path simulation")
{
    const auto m = make_tanh_perturbed(1.0, 1.0, 0.1, 0.9);
    const std::vector<double> x0 = {0.3}, y0 = {-0.4};
    NormalStream a(6, 2), b(6, 2), c(6, 2);
    const auto e = simulate_coupled(m, x0, y0, config(0.5, 1e-3), a);
    CHECK(e.x_end[0] == simulate(m, x0, config(0.5, 1e-3), b)[0]);
    CHECK(e.y_end[0] == simulate(m, y0, config(0.5, 1e-3), c)[0]);
}

TEST_CASE("constant noise makes the coupled difference deterministic")
{
    const auto ou = make_ou(0.5, 1.0);
    const std::vector<double> x0 = {1.0}, y0 = {0.0};
    for (std::uint64_t r = 0; r < 5; ++r) {
        NormalStream rng(19, r);
        const auto e = simulate_coupled(ou, x0, y0, config(1.0, 1e-3), rng);
        CHECK(std::abs(e.x_end[0] - e.y_end[0] - std::exp(-0.5)) < 1e-3);
    }
}

TEST_CASE("tanh coupling contracts at the certified rate")
{
    const auto m = make_tanh_perturbed(1.0, 1.0, 0.1, 0.9);
    const std::vector<double> x0 = {1.0}, y0 = {-0.5};
    const auto e = estimate_coupled_distance(m, x0, y0, 1.0, 100000, config(1.0, 1e-2, 31));
    const double d2 = 1.5 * 1.5 / (0.9 * 0.9);
    CHECK(e.mean <= std::exp(-1.99) * d2 * 1.05);
}

TEST_CASE("blow-up guard raises an explosion error")
{
    auto b = [](std::span<const double> x, std::span<double> out) { out[0] = x[0] * x[0]; };
    auto s = [](std::span<const double>, std::span<double> out) { out[0] = 1.0; };
    DiffusionModel m("blowup", 1, b, s, Eigen::VectorXd::Ones(1), 0.0);
    const std::vector<double> x0 = {10.0};
    NormalStream rng(1, 0);
    CHECK_THROWS_AS(simulate(m, x0, config(1.0, 1e-2), rng), ExplosionError);
}

TEST_CASE("wrong state dimension is a usage error")
{
    const auto ou = make_ou(0.5, 1.0, 2);
    const std::vector<double> x0 = {1.0};
    NormalStream rng(1, 0);
    CHECK_THROWS_AS(simulate(ou, x0, config(1.0, 1e-2), rng), UsageError);
    SimConfig c = config(1.0, 1e-2);
    c.scheme = Scheme::exponential_euler;
    const std::vector<double> y0 = {1.0, 0.0};
    CHECK_THROWS_AS(simulate(ou, y0, c, rng), UsageError);
}

TEST_CASE("stochastic convolution variances")
{
    const auto g = two_mode_ou();
    const Eigen::VectorXd v = stochastic_convolution_variance(g, 1.0);
    CHECK(v[0] == doctest::Approx((1.0 - std::exp(-2.0)) / 2.0).epsilon(1e-14));
    CHECK(v[1] == doctest::Approx(0.25 * (1.0 - std::exp(-8.0)) / 8.0).epsilon(1e-14));
    CHECK(v[0] == doctest::Approx(0.43233).epsilon(1e-4));
    CHECK(v[1] == doctest::Approx(0.031240).epsilon(1e-4));

    Eigen::VectorXd zero(1), one(1);
    zero << 0.0;
    one << 1.0;
    auto F = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    GalerkinModel brownian("bm", zero, one, F, SparseMatrixField{}, 0.0, true);
    CHECK(stochastic_convolution_variance(brownian, 2.0)[0] == doctest::Approx(2.0));
    GalerkinModel ou("ou", one, one, F, SparseMatrixField{}, -2.0, true);
    CHECK(stochastic_convolution_variance(ou, 50.0)[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("exact convolution draws have the closed-form variances")
{
    const auto g = two_mode_ou();
    const Eigen::VectorXd v = stochastic_convolution_variance(g, 1.0);
    const std::size_t n = 1000000;
    double s0 = 0, s1 = 0, m0 = 0, m1 = 0;
    for (std::size_t r = 0; r < n; ++r) {
        NormalStream rng(123, r);
        const Eigen::VectorXd y = sample_stochastic_convolution(g, 1.0, rng);
        m0 += y[0];
        m1 += y[1];
        s0 += y[0] * y[0];
        s1 += y[1] * y[1];
    }
    const double N = double(n);
    const double var0 = s0 / N - (m0 / N) * (m0 / N);
    const double var1 = s1 / N - (m1 / N) * (m1 / N);
    CHECK(std::abs(var0 / v[0] - 1.0) < 1e-2);
    CHECK(std::abs(var1 / v[1] - 1.0) < 1e-2);
}

TEST_CASE("exponential euler is exact for the decoupled linear system")
{
    // One step of the scheme reproduces the mean and variance of each OU mode.
    const auto g = two_mode_ou();
    const std::vector<double> x0 = {1.0, -2.0};
    SimConfig c = config(1.0, 0.25, 9);
    c.scheme = Scheme::exponential_euler;
    const std::size_t n = 200000;
    const Eigen::VectorXd v = stochastic_convolution_variance(g, 1.0);
    double m0 = 0, m1 = 0, q0 = 0, q1 = 0;
    for (std::size_t r = 0; r < n; ++r) {
        NormalStream rng(c.seed, r);
        const Eigen::VectorXd x = simulate(g, x0, c, rng);
        m0 += x[0];
        m1 += x[1];
        q0 += x[0] * x[0];
        q1 += x[1] * x[1];
    }
    const double N = double(n);
    CHECK(std::abs(m0 / N - std::exp(-1.0)) < 5.0 * std::sqrt(v[0] / N));
    CHECK(std::abs(m1 / N + 2.0 * std::exp(-4.0)) < 5.0 * std::sqrt(v[1] / N));
    CHECK(std::abs((q0 / N - (m0 / N) * (m0 / N)) / v[0] - 1.0) < 2e-2);
    CHECK(std::abs((q1 / N - (m1 / N) * (m1 / N)) / v[1] - 1.0) < 2e-2);
}

TEST_CASE("galerkin levels share mode-wise noise")
{
    GalerkinHeatParams p;
    p.drift_amplitude = 0.0;
    p.sigma1_amplitude = 0.0;
    p.level = 4;
    const auto g4 = make_galerkin_heat(p);
    p.level = 8;
    const auto g8 = make_galerkin_heat(p);
    const std::vector<double> x4 = {1.0, 0.5, 0.25, 0.125};
    std::vector<double> x8(8, 0.0);
    std::copy(x4.begin(), x4.end(), x8.begin());
    SimConfig c = config(1.0, 1e-2, 4);
    c.scheme = Scheme::exponential_euler;
    NormalStream a(4, 0), b(4, 0);
    const Eigen::VectorXd y4 = simulate(g4, x4, c, a);
    const Eigen::VectorXd y8 = simulate(g8, x8, c, b);
    for (Eigen::Index i = 0; i < 4; ++i)
        CHECK(y4[i] == y8[i]);
}

TEST_CASE("monte carlo output does not depend on the worker count")
{
    const auto m = make_tanh_perturbed(1.0, 1.0, 0.1, 0.9);
    const std::vector<double> x0 = {0.5}, y0 = {-1.0};
    const auto f = TestFunction::logistic(1.0, 1.0);
    const auto cfg = config(1.0, 1e-2, 99);
    const auto a = estimate_semigroup(m, x0, 1.0, f, 3001, cfg, 1);
    const auto d1 = estimate_coupled_distance(m, x0, y0, 1.0, 3001, cfg, 1);
    for (std::size_t w : {2, 4, 8}) {
        const auto b = estimate_semigroup(m, x0, 1.0, f, 3001, cfg, w);
        CHECK(a.mean == b.mean);
        CHECK(a.std_error == b.std_error);
        CHECK(d1.mean == estimate_coupled_distance(m, x0, y0, 1.0, 3001, cfg, w).mean);
    }
}
