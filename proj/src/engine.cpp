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

#include "hlab/engine.hpp"

#include <cmath>
#include <sstream>

#include "hlab/errors.hpp"

namespace hlab {

namespace {

constexpr unsigned kModeBits = 20;

void guard(std::span<const double> x, std::size_t step)
{
    double sq = 0.0;
    for (double a : x)
        sq += a * a;
    if (!(sq <= kBlowUpNorm * kBlowUpNorm)) {
        std::ostringstream os;
        os << "state left the blow-up guard |x| <= " << kBlowUpNorm << " at step " << step
           << "; the model is not non-explosive on this run";
        throw ExplosionError(os.str());
    }
}

void require_state(std::size_t got, std::size_t dim)
{
    if (got != dim)
        throw UsageError("initial state has wrong dimension");
}

// Euler-Maruyama scratch space for one path (or a coupled pair).
struct EulerStepper {
    const DiffusionModel& m;
    std::size_t dim;
    double dt;
    double sqrt_dt;
    std::vector<double> b, sig, xi;

    EulerStepper(const DiffusionModel& model, double h)
        : m(model), dim(model.dim()), dt(h), sqrt_dt(std::sqrt(h)),
          b(dim), sig(dim * dim), xi(dim)
    {
    }

    void draw(NormalStream& rng, std::size_t step)
    {
        rng.fill(static_cast<std::uint64_t>(step) * dim, xi);
    }

    void advance(std::span<double> x)
    {
        m.drift(x, b);
        m.diffusion(x, sig);
        if (dim == 1) {
            x[0] += b[0] * dt + sig[0] * sqrt_dt * xi[0];
            return;
        }
        for (std::size_t i = 0; i < dim; ++i) {
            double noise = 0.0;
            for (std::size_t j = 0; j < dim; ++j)
                noise += sig[j * dim + i] * xi[j];
            x[i] += b[i] * dt + noise * sqrt_dt;
        }
    }
};

// Per-mode constants of the exponential Euler step.
struct ModeCoefficients {
    std::vector<double> decay;     // exp(-lambda dt)
    std::vector<double> phi;       // (1 - exp(-lambda dt)) / lambda
    std::vector<double> conv_sd;   // sd of int_0^dt exp(-lambda (dt - s)) dW_s
    std::vector<double> dw_a;      // dW = dw_a z_a + dw_b z_b
    std::vector<double> dw_b;

    ModeCoefficients(const Eigen::VectorXd& lambda, double dt)
    {
        const auto n = static_cast<std::size_t>(lambda.size());
        decay.resize(n);
        phi.resize(n);
        conv_sd.resize(n);
        dw_a.resize(n);
        dw_b.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double l = lambda[static_cast<Eigen::Index>(i)];
            double var;
            if (l == 0.0) {
                decay[i] = 1.0;
                phi[i] = dt;
                var = dt;
            } else {
                decay[i] = std::exp(-l * dt);
                phi[i] = -std::expm1(-l * dt) / l;
                var = -std::expm1(-2.0 * l * dt) / (2.0 * l);
            }
            conv_sd[i] = std::sqrt(var);
            dw_a[i] = phi[i] / conv_sd[i];
            dw_b[i] = std::sqrt(std::max(0.0, dt - dw_a[i] * dw_a[i]));
        }
    }
};

struct GalerkinStepper {
    const GalerkinModel& g;
    std::size_t n;
    ModeCoefficients c;
    const SparseMatrixField& s1;
    bool linear;
    std::vector<double> za, zb, F, s1v;

    GalerkinStepper(const GalerkinModel& model, double dt)
        : g(model), n(model.level()), c(model.eigenvalues(), dt), s1(model.sigma1_field()),
          linear(model.linear_additive()), za(n), zb(n), F(n), s1v(s1.entries.size())
    {
    }

    void draw(NormalStream& rng, std::size_t step)
    {
        const std::uint64_t base = static_cast<std::uint64_t>(step) << kModeBits;
        for (std::size_t i = 0; i < n; ++i) {
            const auto z = rng.block(base | i);
            za[i] = z[0];
            zb[i] = z[1];
        }
    }

    void advance(std::span<double> x)
    {
        const Eigen::VectorXd& q = g.weights();
        if (linear) {
            for (std::size_t i = 0; i < n; ++i)
                x[i] = c.decay[i] * x[i] + q[static_cast<Eigen::Index>(i)] * c.conv_sd[i] * za[i];
            return;
        }
        g.F(x, F);
        if (!s1v.empty())
            s1.values(x, s1v);
        for (std::size_t i = 0; i < n; ++i) {
            const double conv = c.conv_sd[i] * za[i];
            F[i] = c.decay[i] * x[i] + c.phi[i] * F[i] + q[static_cast<Eigen::Index>(i)] * conv;
        }
        for (std::size_t k = 0; k < s1v.size(); ++k) {
            const auto [r, col] = s1.entries[k];
            double incr;
            if (r == col)
                incr = c.conv_sd[r] * za[r];
            else
                incr = c.decay[r] * (c.dw_a[col] * za[col] + c.dw_b[col] * zb[col]);
            F[r] += s1v[k] * incr;
        }
        std::copy(F.begin(), F.end(), x.begin());
    }
};

}  // namespace

//---------------------------------------------------------------------------//

const char* to_string(Scheme s)
{
    return s == Scheme::euler ? "euler" : "exponential_euler";
}

Scheme scheme_from_string(const std::string& s)
{
    if (s == "euler")
        return Scheme::euler;
    if (s == "exponential_euler")
        return Scheme::exponential_euler;
    throw UsageError("unknown scheme '" + s + "'");
}

void SimConfig::validate() const
{
    if (!(t_final > 0.0) || !std::isfinite(t_final))
        throw UsageError("SimConfig: t_final must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw UsageError("SimConfig: dt must be positive");
    if (dt > t_final * (1.0 + 1e-12))
        throw UsageError("SimConfig: dt must not exceed t_final");
    if (t_final / dt > 1e10)
        throw UsageError("SimConfig: too many steps");
}

std::size_t SimConfig::steps() const
{
    validate();
    const double r = t_final / dt;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(r - 1e-9)));
}

std::size_t SimConfig::steps_to(double t) const
{
    if (!(t > 0.0) || t > t_final * (1.0 + 1e-12))
        throw UsageError("SimConfig: snapshot time outside (0, t_final]");
    const double r = t / step();
    const double k = std::round(r);
    if (std::abs(r - k) > 1e-6)
        throw UsageError("SimConfig: snapshot time is not on the step grid");
    return static_cast<std::size_t>(k);
}

//---------------------------------------------------------------------------//

Eigen::VectorXd simulate(const DiffusionModel& m, std::span<const double> x0,
                         const SimConfig& cfg, NormalStream& rng)
{
    const std::size_t steps = cfg.steps();
    Eigen::VectorXd out(static_cast<Eigen::Index>(m.dim()));
    const std::size_t snap[] = {steps};
    simulate_snapshots(m, x0, cfg, snap, rng, {out.data(), m.dim()});
    return out;
}

void simulate_snapshots(const DiffusionModel& m, std::span<const double> x0,
                        const SimConfig& cfg, std::span<const std::size_t> snapshot_steps,
                        NormalStream& rng, std::span<double> out)
{
    if (cfg.scheme != Scheme::euler)
        throw UsageError("exponential_euler applies to Galerkin models only");
    const std::size_t dim = m.dim();
    require_state(x0.size(), dim);
    if (out.size() != snapshot_steps.size() * dim)
        throw UsageError("simulate_snapshots: output buffer has wrong size");
    const std::size_t steps = cfg.steps();
    EulerStepper st(m, cfg.step());
    std::vector<double> x(x0.begin(), x0.end());
    std::size_t next = 0;
    auto record = [&](std::size_t step) {
        while (next < snapshot_steps.size() && snapshot_steps[next] == step) {
            std::copy(x.begin(), x.end(), out.begin() + static_cast<std::ptrdiff_t>(next * dim));
            ++next;
        }
    };
    record(0);
    for (std::size_t k = 0; k < steps && next < snapshot_steps.size(); ++k) {
        st.draw(rng, k);
        st.advance(x);
        guard(x, k + 1);
        record(k + 1);
    }
    if (next != snapshot_steps.size())
        throw UsageError("simulate_snapshots: snapshot steps must be sorted and <= steps");
}

CoupledEndpoint simulate_coupled(const DiffusionModel& m, std::span<const double> x0,
                                 std::span<const double> y0, const SimConfig& cfg,
                                 NormalStream& rng)
{
    if (cfg.scheme != Scheme::euler)
        throw UsageError("exponential_euler applies to Galerkin models only");
    const std::size_t dim = m.dim();
    require_state(x0.size(), dim);
    require_state(y0.size(), dim);
    const std::size_t steps = cfg.steps();
    EulerStepper st(m, cfg.step());
    CoupledEndpoint e;
    e.x_end = Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Eigen::Index>(dim));
    e.y_end = Eigen::Map<const Eigen::VectorXd>(y0.data(), static_cast<Eigen::Index>(dim));
    std::span<double> x(e.x_end.data(), dim), y(e.y_end.data(), dim);
    for (std::size_t k = 0; k < steps; ++k) {
        st.draw(rng, k);
        st.advance(x);
        st.advance(y);
        guard(x, k + 1);
        guard(y, k + 1);
    }
    e.increments = steps * dim;
    return e;
}

//---------------------------------------------------------------------------//

Eigen::VectorXd simulate(const GalerkinModel& g, std::span<const double> x0,
                         const SimConfig& cfg, NormalStream& rng)
{
    if (cfg.scheme == Scheme::euler)
        return simulate(g.to_diffusion_model(), x0, cfg, rng);
    require_state(x0.size(), g.level());
    const std::size_t steps = cfg.steps();
    GalerkinStepper st(g, cfg.step());
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(x0.data(), x0.size());
    std::span<double> xs(x.data(), g.level());
    for (std::size_t k = 0; k < steps; ++k) {
        st.draw(rng, k);
        st.advance(xs);
        guard(xs, k + 1);
    }
    return x;
}

CoupledEndpoint simulate_coupled(const GalerkinModel& g, std::span<const double> x0,
                                 std::span<const double> y0, const SimConfig& cfg,
                                 NormalStream& rng)
{
    if (cfg.scheme == Scheme::euler)
        return simulate_coupled(g.to_diffusion_model(), x0, y0, cfg, rng);
    const std::size_t n = g.level();
    require_state(x0.size(), n);
    require_state(y0.size(), n);
    const std::size_t steps = cfg.steps();
    GalerkinStepper st(g, cfg.step());
    CoupledEndpoint e;
    e.x_end = Eigen::Map<const Eigen::VectorXd>(x0.data(), x0.size());
    e.y_end = Eigen::Map<const Eigen::VectorXd>(y0.data(), y0.size());
    std::span<double> x(e.x_end.data(), n), y(e.y_end.data(), n);
    for (std::size_t k = 0; k < steps; ++k) {
        st.draw(rng, k);
        st.advance(x);
        st.advance(y);
        guard(x, k + 1);
        guard(y, k + 1);
    }
    e.increments = steps * n;
    return e;
}

Eigen::VectorXd stochastic_convolution_variance(const GalerkinModel& g, double t)
{
    if (!(t > 0.0) || !std::isfinite(t))
        throw UsageError("stochastic convolution: t must be positive");
    const Eigen::VectorXd& lambda = g.eigenvalues();
    const Eigen::VectorXd& q = g.weights();
    Eigen::VectorXd v(lambda.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double l = lambda[i];
        v[i] = q[i] * q[i] * (l == 0.0 ? t : -std::expm1(-2.0 * l * t) / (2.0 * l));
    }
    return v;
}

Eigen::VectorXd sample_stochastic_convolution(const GalerkinModel& g, double t,
                                              NormalStream& rng)
{
    const Eigen::VectorXd v = stochastic_convolution_variance(g, t);
    Eigen::VectorXd y(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        y[i] = std::sqrt(v[i]) * rng.block(static_cast<std::uint64_t>(i))[0];
    return y;
}

}  // namespace hlab
