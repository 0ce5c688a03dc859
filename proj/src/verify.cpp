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

#include "hlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>

#include "hlab/errors.hpp"
#include "hlab/parallel.hpp"
#include "hlab/transport.hpp"

namespace hlab {

namespace {

std::string g6(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string level_tag(std::size_t n)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "n=%03zu", n);
    return buf;
}

double dist_sq_1d(const DiffusionModel& m, double x, double y)
{
    const double q = m.sigma0()[0];
    return (x - y) * (x - y) / (q * q);
}

void require_1d(const DiffusionModel& m, const char* what)
{
    if (m.dim() != 1)
        throw UsageError(std::string(what) + " needs a one-dimensional model");
}

nlohmann::json grid_json(const Grid1D& grid, double dt_pde)
{
    return {{"lo", grid.lo()}, {"hi", grid.hi()}, {"points", grid.size()}, {"dt_pde", dt_pde}};
}

template <class Model>
VerificationReport coupling_report(const Model& m, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y, double t, std::size_t n,
                                   const SimConfig& cfg, std::size_t workers)
{
    if (static_cast<std::size_t>(x.size()) != m.dim() || static_cast<std::size_t>(y.size()) != m.dim())
        throw UsageError("coupling contraction: start points have the wrong dimension");
    const double d0 = weighted_norm_sq(Eigen::VectorXd(x - y), m.norm());
    const double rhs = std::exp(m.K() * t) * d0;
    SimConfig c = cfg;
    c.t_final = t;
    MCEstimate e;
    if (d0 == 0.0) {
        e.n = n;
    } else {
        e = estimate_coupled_distance(m, {x.data(), m.dim()}, {y.data(), m.dim()}, t, n, c,
                                      workers);
    }
    const double tol = kStatZ * e.std_error + kDtAllowance * c.step() * rhs;
    nlohmann::json meta = {{"model", m.name()},
                           {"x", std::vector<double>(x.data(), x.data() + x.size())},
                           {"y", std::vector<double>(y.data(), y.data() + y.size())},
                           {"t", t},
                           {"K", m.K()},
                           {"samples", n},
                           {"seed", c.seed},
                           {"dt", c.step()},
                           {"stderr", e.std_error},
                           {"ratio", rhs > 0.0 ? e.mean / rhs : 0.0}};
    return VerificationReport::make("coupling_contraction/" + m.name() + "/x=" + g6(x[0]) +
                                        ",y=" + g6(y[0]) + "/t=" + g6(t),
                                    ReportKind::inequality, e.mean, rhs, tol, std::move(meta));
}

double golden_min(const std::function<double(double)>& fn, double a, double b, double tol)
{
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = fn(c), fd = fn(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = fn(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = fn(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

//---------------------------------------------------------------------------//

VerificationReport log_harnack_from_samples(const DiffusionModel& m, const EndpointSample& sx,
                                            const EndpointSample& sy, double x, double y,
                                            double t, const TestFunction& f, double dt,
                                            std::uint64_t seed)
{
    if (sx.n() != sy.n())
        throw UsageError("log-Harnack: paired samples must have equal size");
    const std::vector<double> logfx = evaluate(sx, sx.time_index(t), f, true);
    const std::vector<double> fy = evaluate(sy, sy.time_index(t), f, false);
    const MCEstimate lhs = summarize(logfx);
    const MCEstimate pfy = summarize(fy);
    if (!(pfy.mean > 0.0))
        throw PositivityError("log-Harnack: estimate of P_t f(y) is not positive");
    const double ct = harnack_constant(m.K(), t);
    const double d2 = dist_sq_1d(m, x, y);
    const double rhs = std::log(pfy.mean) + ct * d2;

    std::vector<double> z(fy.size());
    for (std::size_t r = 0; r < z.size(); ++r)
        z[r] = fy[r] / pfy.mean - logfx[r];
    const MCEstimate paired = summarize(z);
    const double tol = kStatZ * paired.std_error + kDtAllowance * dt;

    nlohmann::json meta = {{"model", m.name()}, {"f", f.name()},   {"x", x},
                           {"y", y},            {"t", t},          {"K", m.K()},
                           {"c_t", ct},         {"samples", sx.n()}, {"seed", seed},
                           {"dt", dt},          {"stderr_lhs", lhs.std_error},
                           {"stderr_rhs", pfy.mean > 0 ? pfy.std_error / pfy.mean : 0.0},
                           {"stderr_slack", paired.std_error}};
    return VerificationReport::make("log_harnack/" + m.name() + "/" + f.name() + "/x=" + g6(x) +
                                        ",y=" + g6(y) + "/t=" + g6(t),
                                    ReportKind::inequality, lhs.mean, rhs, tol, std::move(meta));
}

VerificationReport verify_log_harnack(const DiffusionModel& m, double x, double y, double t,
                                      const TestFunction& f, std::size_t n, const SimConfig& cfg,
                                      std::size_t workers)
{
    require_1d(m, "verify_log_harnack");
    const double xs[1] = {x}, ys[1] = {y};
    const EndpointSample sx = sample_endpoints(m, xs, {t}, n, cfg, workers);
    const EndpointSample sy = sample_endpoints(m, ys, {t}, n, cfg, workers);
    SimConfig c = cfg;
    c.t_final = t;
    return log_harnack_from_samples(m, sx, sy, x, y, t, f, c.step(), cfg.seed);
}

VerificationReport verify_log_harnack_oracle(const DiffusionModel& m, double x, double y,
                                             double t, const TestFunction& f,
                                             const Grid1D& grid, double dt_pde, double tolerance)
{
    require_1d(m, "verify_log_harnack_oracle");
    if (!f.strictly_positive())
        throw PositivityError("log-Harnack oracle: " + f.name() + " is not strictly positive");
    Eigen::VectorXd logf = grid.sample(f).array().log();
    const Eigen::VectorXd plog = solve_backward(m, logf, t, grid, dt_pde);
    const Eigen::VectorXd pf = solve_backward(m, grid.sample(f), t, grid, dt_pde);
    const double ct = harnack_constant(m.K(), t);
    const double lhs = interpolate(grid, plog, x);
    const double rhs = std::log(interpolate(grid, pf, y)) + ct * dist_sq_1d(m, x, y);
    nlohmann::json meta = {{"model", m.name()}, {"f", f.name()}, {"x", x},     {"y", y},
                           {"t", t},            {"K", m.K()},    {"c_t", ct}, {"grid", grid_json(grid, dt_pde)}};
    return VerificationReport::make("log_harnack_oracle/" + m.name() + "/" + f.name() + "/x=" +
                                        g6(x) + ",y=" + g6(y) + "/t=" + g6(t),
                                    ReportKind::inequality, lhs, rhs, tolerance, std::move(meta));
}

SharpnessResult log_harnack_sharpness(const DiffusionModel& m, double y, double t,
                                      const TestFunction& f, const Grid1D& grid, double dt_pde,
                                      double d_lo, double d_hi)
{
    require_1d(m, "log_harnack_sharpness");
    if (!(d_hi > d_lo))
        throw UsageError("sharpness: need d_lo < d_hi");
    if (!grid.contains(y + d_lo) || !grid.contains(y + d_hi))
        throw UsageError("sharpness: displacement range leaves the grid");
    if (!f.strictly_positive())
        throw PositivityError("sharpness: " + f.name() + " is not strictly positive");
    Eigen::VectorXd logf = grid.sample(f).array().log();
    const Eigen::VectorXd plog = solve_backward(m, logf, t, grid, dt_pde);
    const Eigen::VectorXd pf = solve_backward(m, grid.sample(f), t, grid, dt_pde);
    const double ct = harnack_constant(m.K(), t);
    const double log_pfy = std::log(interpolate(grid, pf, y));
    auto slack = [&](double d) {
        return log_pfy + ct * dist_sq_1d(m, y + d, y) - interpolate(grid, plog, y + d);
    };
    SharpnessResult r;
    constexpr int kScan = 301;
    std::size_t best = 0;
    for (int k = 0; k < kScan; ++k) {
        const double d = d_lo + (d_hi - d_lo) * k / (kScan - 1);
        r.d_scan.push_back(d);
        r.slack_scan.push_back(slack(d));
        if (r.slack_scan.back() < r.slack_scan[best])
            best = static_cast<std::size_t>(k);
    }
    const double a = r.d_scan[best == 0 ? 0 : best - 1];
    const double b = r.d_scan[std::min<std::size_t>(best + 1, kScan - 1)];
    r.d_star = golden_min(slack, a, b, 1e-9);
    r.min_slack = slack(r.d_star);
    return r;
}

VerificationReport verify_log_harnack_sharpness(const DiffusionModel& m, double y, double t,
                                                const TestFunction& f, const Grid1D& grid,
                                                double dt_pde, double d_lo, double d_hi,
                                                double tolerance)
{
    const SharpnessResult s = log_harnack_sharpness(m, y, t, f, grid, dt_pde, d_lo, d_hi);
    const double ct = harnack_constant(m.K(), t);
    const double rhs = ct * dist_sq_1d(m, y + s.d_star, y);
    nlohmann::json meta = {{"model", m.name()},
                           {"f", f.name()},
                           {"y", y},
                           {"t", t},
                           {"K", m.K()},
                           {"c_t", ct},
                           {"d_star", s.d_star},
                           {"min_slack", s.min_slack},
                           {"d_range", {d_lo, d_hi}},
                           {"grid", grid_json(grid, dt_pde)}};
    // Reported as lhs = c_t d*^2 - slack, rhs = c_t d*^2 so that rhs - lhs is the minimum.
    return VerificationReport::make("log_harnack_sharpness/" + m.name() + "/" + f.name() + "/y=" +
                                        g6(y) + "/t=" + g6(t),
                                    ReportKind::tightness, rhs - s.min_slack, rhs, tolerance,
                                    std::move(meta));
}

//---------------------------------------------------------------------------//

VerificationReport verify_coupling_contraction(const DiffusionModel& m, const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& y, double t, std::size_t n,
                                               const SimConfig& cfg, std::size_t workers)
{
    return coupling_report(m, x, y, t, n, cfg, workers);
}

VerificationReport verify_coupling_contraction(const GalerkinModel& g, const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& y, double t, std::size_t n,
                                               const SimConfig& cfg, std::size_t workers)
{
    return coupling_report(g, x, y, t, n, cfg, workers);
}

VerificationReport verify_gradient_estimate(const DiffusionModel& m, const TestFunction& f,
                                            double t, const Grid1D& grid, double dt_pde,
                                            bool equality, double equality_tol)
{
    require_1d(m, "verify_gradient_estimate");
    const double q = m.sigma0()[0];
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = q * f.derivative(grid.node(static_cast<std::size_t>(i)));
        g[i] = d * d;
    }
    const Eigen::VectorXd u = solve_backward(m, grid.sample(f), t, grid, dt_pde);
    const Eigen::VectorXd pg = solve_backward(m, g, t, grid, dt_pde);
    const double growth = std::exp(m.K() * t);
    const double h = grid.h();
    double max_diff = -std::numeric_limits<double>::infinity();
    double max_abs = 0.0, max_rhs = 0.0;
    double at = grid.node(static_cast<std::size_t>(n / 4));
    for (Eigen::Index i = n / 4; i <= 3 * n / 4; ++i) {
        const double du = q * (u[i + 1] - u[i - 1]) / (2.0 * h);
        const double left = du * du;
        const double right = growth * pg[i];
        if (left - right > max_diff) {
            max_diff = left - right;
            at = grid.node(static_cast<std::size_t>(i));
        }
        max_abs = std::max(max_abs, std::abs(left - right));
        max_rhs = std::max(max_rhs, right);
    }
    nlohmann::json meta = {{"model", m.name()}, {"f", f.name()},       {"t", t},
                           {"K", m.K()},        {"max_rhs", max_rhs},  {"argmax", at},
                           {"max_abs_gap", max_abs},
                           {"window", {grid.node(static_cast<std::size_t>(n / 4)),
                                       grid.node(static_cast<std::size_t>(3 * n / 4))}},
                           {"grid", grid_json(grid, dt_pde)}};
    const std::string base = "gradient_estimate/" + m.name() + "/" + f.name() + "/t=" + g6(t);
    if (equality)
        return VerificationReport::make(base + "/equality", ReportKind::identity, max_abs, 0.0,
                                        equality_tol, std::move(meta));
    return VerificationReport::make(base, ReportKind::inequality, max_diff, 0.0,
                                    5e-3 * (1.0 + max_rhs), std::move(meta));
}

//---------------------------------------------------------------------------//

std::vector<FellerPoint> feller_modulus(const DiffusionModel& m, const TestFunction& f, double t,
                                        double x, const std::vector<double>& y_list,
                                        const Grid1D& grid, double dt_pde)
{
    require_1d(m, "feller_modulus");
    if (!f.bounded() || f.lower_bound() < 0.0)
        throw UsageError("feller modulus: f must be bounded and nonnegative");
    const Eigen::VectorXd u = solve_backward(m, f, t, grid, dt_pde);
    const double ct = harnack_constant(m.K(), t);
    const double sup = f.sup_norm();
    const double a = interpolate(grid, u, x);
    std::vector<FellerPoint> out;
    for (double y : y_list) {
        FellerPoint p{};
        p.y = y;
        p.distance = std::abs(y - x);
        p.ptf_x = a;
        p.ptf_y = interpolate(grid, u, y);
        const double cd2 = ct * dist_sq_1d(m, x, y);
        auto bound = [&](double log_eps) {
            const double e = std::exp(log_eps);
            return std::log1p(e * a) / e + cd2 / e + e * sup * sup;
        };
        constexpr int kSweep = 161;
        const double lo = std::log(1e-5), hi = std::log(1e3);
        double best_l = lo;
        double best_v = bound(lo);
        p.worst_margin = std::numeric_limits<double>::infinity();
        for (int k = 0; k < kSweep; ++k) {
            const double l = lo + (hi - lo) * k / (kSweep - 1);
            const double v = bound(l);
            p.worst_margin = std::min(p.worst_margin, v - p.ptf_y);
            if (v < best_v) {
                best_v = v;
                best_l = l;
            }
        }
        const double step = (hi - lo) / (kSweep - 1);
        const double l = golden_min(bound, std::max(lo, best_l - step), std::min(hi, best_l + step), 1e-10);
        if (bound(l) < best_v) {
            best_v = bound(l);
            best_l = l;
        }
        p.worst_margin = std::min(p.worst_margin, best_v - p.ptf_y);
        p.best_epsilon = std::exp(best_l);
        p.best_bound = best_v;
        p.modulus = best_v - a;
        out.push_back(p);
    }
    return out;
}

std::vector<VerificationReport> verify_feller_modulus(const DiffusionModel& m,
                                                      const TestFunction& f, double t, double x,
                                                      const std::vector<double>& y_list,
                                                      const Grid1D& grid, double dt_pde,
                                                      double noise, double small_bound)
{
    if (y_list.empty())
        throw UsageError("feller modulus: empty y list");
    std::vector<FellerPoint> pts = feller_modulus(m, f, t, x, y_list, grid, dt_pde);
    const std::string base = "feller_modulus/" + m.name() + "/" + f.name() + "/t=" + g6(t);
    std::vector<VerificationReport> reports;
    for (const auto& p : pts) {
        nlohmann::json meta = {{"model", m.name()},       {"f", f.name()},
                               {"t", t},                  {"x", x},
                               {"y", p.y},                {"distance", p.distance},
                               {"best_epsilon", p.best_epsilon},
                               {"modulus", p.modulus},    {"worst_margin", p.worst_margin},
                               {"grid", grid_json(grid, dt_pde)}};
        reports.push_back(VerificationReport::make(base + "/y=" + g6(p.y), ReportKind::inequality,
                                                   p.ptf_y, p.best_bound, noise, std::move(meta)));
    }
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.distance > b.distance; });
    double worst_increase = -std::numeric_limits<double>::infinity();
    std::vector<double> dists, mods;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        dists.push_back(pts[k].distance);
        mods.push_back(pts[k].modulus);
        if (k > 0)
            worst_increase = std::max(worst_increase, pts[k].modulus - pts[k - 1].modulus);
    }
    if (pts.size() < 2)
        worst_increase = 0.0;
    nlohmann::json meta = {{"model", m.name()}, {"f", f.name()}, {"t", t}, {"x", x},
                           {"distance", dists}, {"modulus", mods}};
    reports.push_back(VerificationReport::make(base + "/decay", ReportKind::inequality,
                                               worst_increase, 0.0, noise, meta));
    reports.push_back(VerificationReport::make(base + "/closest", ReportKind::inequality,
                                               pts.back().modulus, small_bound, 0.0, meta));
    return reports;
}

//---------------------------------------------------------------------------//

VerificationReport verify_heat_kernel_entropy(const GridKernel& k, const WeightedNorm& norm,
                                              double K, std::size_t x_index,
                                              const std::string& model_name)
{
    if (norm.dim() != 1)
        throw UsageError("heat kernel entropy: grid kernels are one-dimensional");
    if (x_index >= k.size())
        throw UsageError("heat kernel entropy: node index out of range");
    const auto i = static_cast<Eigen::Index>(x_index);
    const double q = norm.weight(0);
    const double ct = harnack_constant(K, k.t);
    const double x = k.grid.node(x_index);
    double lhs = 0.0, mass = 0.0;
    for (Eigen::Index j = 0; j < k.P.cols(); ++j) {
        const double p = k.P(i, j);
        if (p > 0.0)
            lhs += p * std::log(p / k.mu[j]);
        const double d = (x - k.grid.node(static_cast<std::size_t>(j))) / q;
        mass += std::exp(-ct * d * d) * k.mu[j];
    }
    const double rhs = -std::log(mass);
    nlohmann::json meta = {{"model", model_name},
                           {"t", k.t},
                           {"x", x},
                           {"K", K},
                           {"c_t", ct},
                           {"row_sum_error", k.row_sum_error()},
                           {"grid", {{"lo", k.grid.lo()}, {"hi", k.grid.hi()}, {"points", k.size()}}}};
    return VerificationReport::make("heat_kernel_entropy/" + model_name + "/t=" + g6(k.t) + "/x=" +
                                        g6(x),
                                    ReportKind::inequality, lhs, rhs, 5e-3 * (1.0 + std::abs(rhs)),
                                    std::move(meta));
}

Eigen::VectorXd grid_density(const GridKernel& k, const std::string& name)
{
    const auto n = static_cast<Eigen::Index>(k.size());
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    if (name == "uniform") {
        f.setOnes();
    } else if (name == "shift") {
        for (Eigen::Index i = 1; i < n; ++i)
            f[i] = k.mu[i - 1] / k.mu[i];
    } else if (name == "right_half") {
        const double mid = 0.5 * (k.grid.lo() + k.grid.hi());
        for (Eigen::Index i = 0; i < n; ++i)
            f[i] = k.grid.node(static_cast<std::size_t>(i)) >= mid ? 1.0 : 0.0;
    } else {
        throw UsageError("unknown grid density '" + name + "'");
    }
    return f / f.dot(k.mu);
}

VerificationReport verify_entropy_cost(const GridKernel& k, const WeightedNorm& norm, double K,
                                       const Eigen::VectorXd& f, const std::string& label,
                                       const std::string& model_name)
{
    if (static_cast<std::size_t>(f.size()) != k.size())
        throw UsageError("entropy cost: density does not match the grid");
    if (!f.allFinite() || f.minCoeff() < 0.0)
        throw UsageError("entropy cost: density must be finite and nonnegative");
    const double total = f.dot(k.mu);
    if (std::abs(total - 1.0) > 1e-8)
        throw UsageError("entropy cost: mu(f) must equal 1");
    const Eigen::VectorXd g = adjoint_apply(k, f);
    double lhs = 0.0;
    for (Eigen::Index j = 0; j < g.size(); ++j) {
        if (g[j] > 0.0)
            lhs += g[j] * std::log(g[j]) * k.mu[j];
    }
    const Eigen::VectorXd x = k.grid.nodes();
    const Eigen::VectorXd w1 = k.mu.cwiseProduct(f) / total;
    const W0Result w0 = w0_exact(DiscreteMeasure::on_line(x, w1),
                                 DiscreteMeasure::on_line(x, k.mu / k.mu.sum()), norm);
    const double ct = harnack_constant(K, k.t);
    const double rhs = ct * w0.cost;
    nlohmann::json meta = {{"model", model_name}, {"t", k.t},     {"K", K},
                           {"c_t", ct},           {"density", label},
                           {"w0_cost", w0.cost},  {"duality_gap", w0.duality_gap},
                           {"simplex_iterations", w0.iterations},
                           {"grid", {{"lo", k.grid.lo()}, {"hi", k.grid.hi()}, {"points", k.size()}}}};
    return VerificationReport::make("entropy_cost/" + model_name + "/t=" + g6(k.t) + "/" + label,
                                    ReportKind::inequality, lhs, rhs, 5e-3 * (1.0 + std::abs(rhs)),
                                    std::move(meta));
}

//---------------------------------------------------------------------------//

double galerkin_linear_tail(const GalerkinHeatParams& base, std::size_t n, std::size_t n_ref,
                            double t)
{
    double s = 0.0;
    for (std::size_t i = n_ref; i > n; --i) {
        const double pi_i = std::numbers::pi * static_cast<double>(i);
        const double lambda = pi_i * pi_i;
        const double q = std::pow(1.0 + lambda, -base.decay);
        s += q * q * (-std::expm1(-2.0 * lambda * t)) / (2.0 * lambda);
    }
    return s;
}

std::vector<GalerkinLevelStats> galerkin_levels(const GalerkinHeatParams& base,
                                                const std::vector<std::size_t>& levels,
                                                const Eigen::VectorXd& x0, double t,
                                                std::size_t n, const SimConfig& cfg,
                                                std::size_t workers)
{
    if (levels.size() < 2)
        throw UsageError("galerkin convergence: need at least two levels");
    for (std::size_t k = 1; k < levels.size(); ++k) {
        if (levels[k] <= levels[k - 1])
            throw UsageError("galerkin convergence: levels must be increasing");
    }
    if (static_cast<std::size_t>(x0.size()) > levels.front())
        throw UsageError("galerkin convergence: x0 must lie in the smallest level's span");
    if (n < kMinSamples)
        throw UsageError("galerkin convergence: need at least 100 samples");

    std::vector<GalerkinModel> models;
    for (std::size_t level : levels) {
        GalerkinHeatParams p = base;
        p.level = level;
        models.push_back(make_galerkin_heat(p, 0.0));  // K is not used here
    }
    const std::size_t L = levels.size();
    const std::size_t ref = levels.back();
    SimConfig c = cfg;
    c.t_final = t;
    c.scheme = cfg.scheme;
    std::vector<double> D(n * L);
    parallel_for(n, workers, [&](std::size_t r) {
        std::vector<Eigen::VectorXd> ends(L);
        for (std::size_t l = 0; l < L; ++l) {
            Eigen::VectorXd start = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(levels[l]));
            start.head(x0.size()) = x0;
            NormalStream rng(c.seed, r);
            ends[l] = simulate(models[l], {start.data(), levels[l]}, c, rng);
        }
        for (std::size_t l = 0; l < L; ++l) {
            Eigen::VectorXd diff = ends[L - 1];
            diff.head(ends[l].size()) -= ends[l];
            D[r * L + l] = diff.squaredNorm();
        }
    });
    std::vector<GalerkinLevelStats> out;
    std::vector<double> col(n), step(n);
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t r = 0; r < n; ++r) {
            col[r] = D[r * L + l];
            step[r] = l + 1 < L ? D[r * L + l + 1] - D[r * L + l] : 0.0;
        }
        GalerkinLevelStats s;
        s.level = levels[l];
        s.D = summarize(col);
        s.tail = galerkin_linear_tail(base, levels[l], ref, t);
        s.step = summarize(step);
        out.push_back(s);
    }
    return out;
}

std::vector<VerificationReport> verify_galerkin_convergence(
    const GalerkinHeatParams& base, const std::vector<std::size_t>& levels,
    const Eigen::VectorXd& x0, double t, std::size_t n, const SimConfig& cfg,
    const GalerkinCheck& check, std::size_t workers, std::vector<GalerkinLevelStats>* stats_out)
{
    const std::vector<GalerkinLevelStats> st = galerkin_levels(base, levels, x0, t, n, cfg, workers);
    if (stats_out)
        *stats_out = st;
    const bool linear = base.drift_amplitude == 0.0 && base.sigma1_amplitude == 0.0;
    SimConfig c = cfg;
    c.t_final = t;
    nlohmann::json common = {{"model", "galerkin_heat"},
                             {"linear", linear},
                             {"levels", levels},
                             {"x0", std::vector<double>(x0.data(), x0.data() + x0.size())},
                             {"t", t},
                             {"samples", n},
                             {"seed", c.seed},
                             {"dt", c.step()},
                             {"scheme", to_string(c.scheme)},
                             {"decay", base.decay},
                             {"drift_amplitude", base.drift_amplitude},
                             {"sigma1_amplitude", base.sigma1_amplitude},
                             {"sigma1_offset", base.sigma1_offset}};
    std::vector<double> Ds, ses, tails;
    for (const auto& s : st) {
        Ds.push_back(s.D.mean);
        ses.push_back(s.D.std_error);
        tails.push_back(s.tail);
    }
    common["D"] = Ds;
    common["stderr"] = ses;
    common["tail"] = tails;

    const std::string base_name = std::string("galerkin_convergence/") + (linear ? "linear" : "full");
    std::vector<VerificationReport> reports;
    if (linear) {
        for (std::size_t l = 0; l + 1 < st.size(); ++l) {
            nlohmann::json meta = common;
            meta["level"] = st[l].level;
            reports.push_back(VerificationReport::make(base_name + "/" + level_tag(st[l].level),
                                                       ReportKind::identity, st[l].D.mean,
                                                       st[l].tail, kStatZ * st[l].D.std_error,
                                                       std::move(meta)));
        }
        return reports;
    }

    // D(n) nonincreasing: the least favourable step relative to its paired error.
    std::size_t worst = 0;
    double worst_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l + 1 < st.size(); ++l) {
        const double excess = st[l].step.mean - kStatZ * st[l].step.std_error;
        if (excess > worst_excess) {
            worst_excess = excess;
            worst = l;
        }
    }
    {
        nlohmann::json meta = common;
        meta["worst_step_from"] = st[worst].level;
        reports.push_back(VerificationReport::make(base_name + "/monotone", ReportKind::inequality,
                                                   st[worst].step.mean, 0.0,
                                                   kStatZ * st[worst].step.std_error, std::move(meta)));
    }
    const GalerkinLevelStats& second = st[st.size() - 2];
    {
        nlohmann::json meta = common;
        meta["from"] = st.front().level;
        meta["to"] = second.level;
        reports.push_back(VerificationReport::make(base_name + "/ratio", ReportKind::inequality,
                                                   second.D.mean / st.front().D.mean,
                                                   check.ratio_max, 0.0, std::move(meta)));
    }
    {
        nlohmann::json meta = common;
        meta["level"] = second.level;
        meta["tail_factor"] = check.tail_factor;
        reports.push_back(VerificationReport::make(base_name + "/threshold",
                                                   ReportKind::inequality, second.D.mean,
                                                   check.tail_factor * second.tail, 0.0,
                                                   std::move(meta)));
    }
    return reports;
}

}  // namespace hlab
