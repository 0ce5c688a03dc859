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

#include "hlab/oracle1d.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hlab/errors.hpp"

namespace hlab {

namespace {

constexpr double kSolveResidual = 1e-8;
constexpr double kMuResidual = 1e-12;
constexpr std::size_t kMaxPowerIterations = 100000;
constexpr double kTaylorReach = 16.0;  // largest uniformised rate * substep

std::size_t pde_steps(double t, double dt_pde)
{
    if (!(t > 0.0) || !std::isfinite(t))
        throw UsageError("oracle: t must be positive");
    if (!(dt_pde > 0.0) || !std::isfinite(dt_pde))
        throw UsageError("oracle: dt_pde must be positive");
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t / dt_pde - 1e-9)));
}

void require_1d(const DiffusionModel& m)
{
    if (m.dim() != 1)
        throw UsageError("oracle1d needs a one-dimensional model, got dim " +
                         std::to_string(m.dim()));
}

// Thomas algorithm for a[i] x[i-1] + b[i] x[i] + c[i] x[i+1] = d[i].
Eigen::VectorXd thomas(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& c, const Eigen::VectorXd& d)
{
    const Eigen::Index n = b.size();
    Eigen::VectorXd cp(n), dp(n), x(n);
    double piv = b[0];
    if (piv == 0.0)
        throw SolverError("tridiagonal solve: zero pivot");
    cp[0] = c[0] / piv;
    dp[0] = d[0] / piv;
    for (Eigen::Index i = 1; i < n; ++i) {
        piv = b[i] - a[i] * cp[i - 1];
        if (piv == 0.0)
            throw SolverError("tridiagonal solve: zero pivot");
        cp[i] = c[i] / piv;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / piv;
    }
    x[n - 1] = dp[n - 1];
    for (Eigen::Index i = n - 2; i >= 0; --i)
        x[i] = dp[i] - cp[i] * x[i + 1];

    double res = 0.0, scale = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double r = b[i] * x[i] - d[i];
        if (i > 0)
            r += a[i] * x[i - 1];
        if (i + 1 < n)
            r += c[i] * x[i + 1];
        res = std::max(res, std::abs(r));
        scale = std::max(scale, std::abs(d[i]));
    }
    if (!(res <= kSolveResidual * scale)) {
        std::ostringstream os;
        os << "Crank-Nicolson solve residual " << res << " exceeds " << kSolveResidual;
        throw SolverError(os.str());
    }
    return x;
}

}  // namespace

//---------------------------------------------------------------------------//

Grid1D::Grid1D(double lo, double hi, std::size_t points) : lo_(lo), hi_(hi), m_(points)
{
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo))
        throw UsageError("grid: need finite lo < hi");
    if (points < 51)
        throw UsageError("grid: at least 51 points are required");
    h_ = (hi - lo) / static_cast<double>(points - 1);
}

Eigen::VectorXd Grid1D::nodes() const
{
    Eigen::VectorXd x(static_cast<Eigen::Index>(m_));
    for (std::size_t i = 0; i < m_; ++i)
        x[static_cast<Eigen::Index>(i)] = node(i);
    return x;
}

std::size_t Grid1D::index_of(double x) const
{
    const double r = (x - lo_) / h_;
    const double k = std::round(r);
    if (k < 0.0 || k > static_cast<double>(m_ - 1) || std::abs(r - k) > 1e-9) {
        std::ostringstream os;
        os << "point " << x << " is not a grid node";
        throw UsageError(os.str());
    }
    return static_cast<std::size_t>(k);
}

Grid1D Grid1D::refined() const
{
    return Grid1D(lo_, hi_, 2 * (m_ - 1) + 1);
}

Eigen::VectorXd Grid1D::sample(const TestFunction& f) const
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(m_));
    for (std::size_t i = 0; i < m_; ++i)
        v[static_cast<Eigen::Index>(i)] = f(node(i));
    return v;
}

double interpolate(const Grid1D& grid, const Eigen::VectorXd& values, double x)
{
    if (static_cast<std::size_t>(values.size()) != grid.size())
        throw UsageError("interpolate: value count does not match the grid");
    if (!grid.contains(x))
        throw UsageError("interpolate: point outside the grid");
    const double r = (x - grid.lo()) / grid.h();
    auto i = static_cast<Eigen::Index>(std::floor(r));
    i = std::clamp<Eigen::Index>(i, 0, values.size() - 2);
    const double w = r - static_cast<double>(i);
    return (1.0 - w) * values[i] + w * values[i + 1];
}

//---------------------------------------------------------------------------//

Eigen::VectorXd Generator::apply(const Eigen::VectorXd& u) const
{
    const Eigen::Index n = diag.size();
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double v = diag[i] * u[i];
        if (i > 0)
            v += lower[i] * u[i - 1];
        if (i + 1 < n)
            v += upper[i] * u[i + 1];
        out[i] = v;
    }
    return out;
}

Eigen::VectorXd Generator::apply_transpose(const Eigen::VectorXd& nu) const
{
    const Eigen::Index n = diag.size();
    Eigen::VectorXd out(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double v = diag[j] * nu[j];
        if (j > 0)
            v += upper[j - 1] * nu[j - 1];
        if (j + 1 < n)
            v += lower[j + 1] * nu[j + 1];
        out[j] = v;
    }
    return out;
}

double Generator::max_rate() const
{
    return diag.cwiseAbs().maxCoeff();
}

Generator discretize(const DiffusionModel& m, const Grid1D& grid)
{
    require_1d(m);
    const auto n = static_cast<Eigen::Index>(grid.size());
    const double h = grid.h();
    Generator g{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    double x[1], b[1], s[1];
    for (Eigen::Index i = 0; i < n; ++i) {
        x[0] = grid.node(static_cast<std::size_t>(i));
        m.drift(x, b);
        m.diffusion(x, s);
        const double s2 = s[0] * s[0];
        if (!std::isfinite(b[0]) || !std::isfinite(s2) || !(s2 > 0.0))
            throw OracleError("oracle: drift or diffusion not usable at a grid node");
        if (i == 0) {
            g.upper[i] = s2 / (h * h);
        } else if (i == n - 1) {
            g.lower[i] = s2 / (h * h);
        } else {
            const double a = 0.5 * s2 / (h * h);
            if (std::abs(b[0]) * h >= s2) {
                g.lower[i] = a + std::max(-b[0], 0.0) / h;
                g.upper[i] = a + std::max(b[0], 0.0) / h;
            } else {
                g.lower[i] = a - b[0] / (2.0 * h);
                g.upper[i] = a + b[0] / (2.0 * h);
            }
        }
        g.diag[i] = -(g.lower[i] + g.upper[i]);
    }
    return g;
}

//---------------------------------------------------------------------------//

CrankNicolson::CrankNicolson(Generator gen, double dt) : gen_(std::move(gen)), dt_(dt)
{
    if (!(dt > 0.0))
        throw UsageError("Crank-Nicolson: dt must be positive");
}

void CrankNicolson::step_backward(Eigen::VectorXd& u) const
{
    const double k = 0.5 * dt_;
    const Eigen::VectorXd rhs = u + k * gen_.apply(u);
    const Eigen::VectorXd a = -k * gen_.lower;
    const Eigen::VectorXd b = Eigen::VectorXd::Ones(gen_.diag.size()) - k * gen_.diag;
    const Eigen::VectorXd c = -k * gen_.upper;
    u = thomas(a, b, c, rhs);
}

void CrankNicolson::step_forward(Eigen::VectorXd& nu) const
{
    const double k = 0.5 * dt_;
    const Eigen::Index n = gen_.diag.size();
    Eigen::VectorXd a(n), c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a[i] = i > 0 ? -k * gen_.upper[i - 1] : 0.0;
        c[i] = i + 1 < n ? -k * gen_.lower[i + 1] : 0.0;
    }
    const Eigen::VectorXd b = Eigen::VectorXd::Ones(n) - k * gen_.diag;
    const Eigen::VectorXd w = thomas(a, b, c, nu);
    nu = w + k * gen_.apply_transpose(w);
}

Eigen::VectorXd solve_backward(const DiffusionModel& m, const Eigen::VectorXd& f, double t,
                               const Grid1D& grid, double dt_pde)
{
    if (static_cast<std::size_t>(f.size()) != grid.size())
        throw UsageError("solve_backward: f does not match the grid");
    if (!f.allFinite())
        throw UsageError("solve_backward: f must be finite on the grid");
    const std::size_t steps = pde_steps(t, dt_pde);
    CrankNicolson cn(discretize(m, grid), t / static_cast<double>(steps));
    Eigen::VectorXd u = f;
    for (std::size_t k = 0; k < steps; ++k)
        cn.step_backward(u);
    return u;
}

Eigen::VectorXd solve_backward(const DiffusionModel& m, const TestFunction& f, double t,
                               const Grid1D& grid, double dt_pde)
{
    return solve_backward(m, grid.sample(f), t, grid, dt_pde);
}

//---------------------------------------------------------------------------//

double GridKernel::row_sum_error() const
{
    return (P.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

double GridKernel::boundary_mass(std::size_t row) const
{
    const auto i = static_cast<Eigen::Index>(row);
    return P(i, 0) + P(i, P.cols() - 1);
}

GridKernel build_kernel(const DiffusionModel& m, double t, const Grid1D& grid)
{
    if (!(t > 0.0) || !std::isfinite(t))
        throw UsageError("build_kernel: t must be positive");
    const Generator gen = discretize(m, grid);
    const auto n = static_cast<Eigen::Index>(grid.size());
    const double rate = gen.max_rate();

    int squarings = 0;
    double tau = t;
    while (rate * tau > kTaylorReach) {
        tau *= 0.5;
        ++squarings;
    }
    // exp(tau L) = e^{-rate tau} sum_k (tau B)^k / k!, B = L + rate I >= 0 entrywise.
    const Eigen::VectorXd bdiag = gen.diag.array() + rate;
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n) * std::exp(-rate * tau);
    Eigen::MatrixXd sum = term;
    Eigen::MatrixXd next(n, n);
    for (int k = 1; k < 400; ++k) {
        // next = term * (tau B) / k, B tridiagonal.
        const double f = tau / k;
        for (Eigen::Index j = 0; j < n; ++j) {
            next.col(j) = term.col(j) * (bdiag[j] * f);
            if (j > 0)
                next.col(j) += term.col(j - 1) * (gen.upper[j - 1] * f);
            if (j + 1 < n)
                next.col(j) += term.col(j + 1) * (gen.lower[j + 1] * f);
        }
        term.swap(next);
        sum += term;
        if (k > rate * tau && term.maxCoeff() <= 1e-18 * sum.maxCoeff())
            break;
    }
    for (int s = 0; s < squarings; ++s) {
        next.noalias() = sum * sum;
        sum.swap(next);
    }

    // Detailed balance of the birth-death chain, in logs.
    Eigen::VectorXd logmu(n);
    logmu[0] = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        logmu[i + 1] = logmu[i] + std::log(gen.upper[i]) - std::log(gen.lower[i + 1]);
    Eigen::VectorXd mu = (logmu.array() - logmu.maxCoeff()).exp();
    mu /= mu.sum();

    std::size_t it = 0;
    for (;; ++it) {
        Eigen::VectorXd next_mu = sum.transpose() * mu;
        next_mu /= next_mu.sum();
        const double res = (next_mu - mu).lpNorm<1>();
        mu = next_mu;
        if (res < kMuResidual)
            break;
        if (it >= kMaxPowerIterations)
            throw OracleError("invariant measure: power iteration did not converge");
    }
    if (!(mu.minCoeff() > 0.0))
        throw OracleError("invariant measure is not fully supported on the grid; shrink the domain");
    return GridKernel{grid, t, std::move(sum), std::move(mu)};
}

Eigen::VectorXd adjoint_apply(const GridKernel& k, const Eigen::VectorXd& f)
{
    if (static_cast<std::size_t>(f.size()) != k.size())
        throw UsageError("adjoint_apply: f does not match the kernel");
    if (!(k.mu.minCoeff() > 0.0))
        throw UsageError("adjoint_apply: mu must be strictly positive");
    const Eigen::VectorXd weighted = k.mu.cwiseProduct(f);
    return (k.P.transpose() * weighted).cwiseQuotient(k.mu);
}

//---------------------------------------------------------------------------//

DDSides dd_identity_sides(const DiffusionModel& m, const TestFunction& f, double t, double x,
                          const std::vector<double>& s_list, const Grid1D& grid, double dt_pde)
{
    const std::size_t N = pde_steps(t, dt_pde);
    const double dt = t / static_cast<double>(N);
    const std::size_t ix = grid.index_of(x);
    std::vector<std::size_t> ks;
    std::size_t kmax = 0;
    for (double s : s_list) {
        const double r = s / dt;
        const double k = std::round(r);
        if (s < 0.0 || s > t * (1.0 + 1e-12) || std::abs(r - k) > 1e-6)
            throw UsageError("dd identity: every s must be a step multiple in [0, t]");
        ks.push_back(static_cast<std::size_t>(k));
        kmax = std::max(kmax, ks.back());
    }

    const Generator gen = discretize(m, grid);
    const CrankNicolson cn(gen, dt);
    const auto n = static_cast<Eigen::Index>(grid.size());
    const double h = grid.h();

    Eigen::VectorXd sig2(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double xi[1] = {grid.node(static_cast<std::size_t>(i))}, s[1];
        m.diffusion(xi, s);
        sig2[i] = s[0] * s[0];
    }

    std::vector<Eigen::VectorXd> u(N + 1);
    u[0] = grid.sample(f);
    for (std::size_t k = 0; k < N; ++k) {
        u[k + 1] = u[k];
        cn.step_backward(u[k + 1]);
    }
    for (const auto& v : u) {
        if (!(v.minCoeff() > 0.0))
            throw PositivityError("dd identity: P_t f is not strictly positive on the grid");
    }

    auto energy = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 1; i + 1 < n; ++i) {
            const double d = (v[i + 1] - v[i - 1]) / (2.0 * h) / v[i];
            g[i] = sig2[i] * d * d;
        }
        return g;
    };

    Eigen::VectorXd nu = Eigen::VectorXd::Zero(n);
    nu[static_cast<Eigen::Index>(ix)] = 1.0;
    const double log_ptf = std::log(u[N][static_cast<Eigen::Index>(ix)]);
    std::vector<double> lhs_at(kmax + 1), integral(kmax + 1);
    double prev = nu.dot(energy(u[N]));
    integral[0] = 0.0;
    lhs_at[0] = nu.dot(u[N].array().log().matrix()) - log_ptf;
    for (std::size_t k = 1; k <= kmax; ++k) {
        cn.step_forward(nu);
        const double cur = nu.dot(energy(u[N - k]));
        integral[k] = integral[k - 1] + 0.5 * dt * (prev + cur);
        prev = cur;
        lhs_at[k] = nu.dot(u[N - k].array().log().matrix()) - log_ptf;
    }

    DDSides out;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        out.s.push_back(s_list[i]);
        out.lhs.push_back(lhs_at[ks[i]]);
        out.rhs.push_back(-0.5 * integral[ks[i]]);
    }
    return out;
}

VerificationReport verify_dd_identity(const DiffusionModel& m, const TestFunction& f, double t,
                                      double x, const std::vector<double>& s_list,
                                      const Grid1D& grid, double dt_pde, double rel_tol)
{
    if (s_list.empty())
        throw UsageError("dd identity: empty s list");
    const DDSides sides = dd_identity_sides(m, f, t, x, s_list, grid, dt_pde);
    constexpr double kFloor = 1e-8;
    std::size_t worst = 0;
    double worst_gap = -1.0;
    std::vector<double> gaps;
    for (std::size_t i = 0; i < sides.s.size(); ++i) {
        const double gap =
            std::abs(sides.lhs[i] - sides.rhs[i]) / std::max(std::abs(sides.rhs[i]), kFloor);
        gaps.push_back(gap);
        if (gap > worst_gap) {
            worst_gap = gap;
            worst = i;
        }
    }
    nlohmann::json meta = {{"model", m.name()},
                           {"f", f.name()},
                           {"t", t},
                           {"x", x},
                           {"s", sides.s},
                           {"lhs", sides.lhs},
                           {"rhs", sides.rhs},
                           {"relative_gap", gaps},
                           {"max_relative_gap", worst_gap},
                           {"grid", {{"lo", grid.lo()}, {"hi", grid.hi()}, {"points", grid.size()}}},
                           {"dt_pde", dt_pde}};
    const double rhs = sides.rhs[worst];
    return VerificationReport::make("dd_identity/" + m.name() + "/" + f.name(),
                                    ReportKind::identity, sides.lhs[worst], rhs,
                                    rel_tol * std::max(std::abs(rhs), kFloor), std::move(meta));
}

//---------------------------------------------------------------------------//

void write_grid_csv(const std::filesystem::path& path, const Grid1D& grid,
                    const Eigen::VectorXd& values)
{
    std::ostringstream os;
    os << std::setprecision(17) << "node,value\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
        os << grid.node(i) << ',' << values[static_cast<Eigen::Index>(i)] << '\n';
    write_atomic(path, os.str());
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& a)
{
    std::ostringstream os;
    os << std::setprecision(17);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            os << (j ? "," : "") << a(i, j);
        os << '\n';
    }
    write_atomic(path, os.str());
}

}  // namespace hlab
