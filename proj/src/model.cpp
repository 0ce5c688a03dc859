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

#include "hlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <utility>
#include <vector>

#include "hlab/errors.hpp"

namespace hlab {

namespace {

double unit_uniform(std::mt19937_64& gen)
{
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

Eigen::VectorXd sample_box(const Box& box, std::mt19937_64& gen)
{
    Eigen::VectorXd x(box.lo.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unit_uniform(gen);
    return x;
}

void require_dim(std::size_t got, std::size_t want, const char* what)
{
    if (got != want) {
        std::ostringstream os;
        os << what << ": dimension mismatch (" << got << " vs " << want << ")";
        throw UsageError(os.str());
    }
}

bool all_finite(std::span<const double> v)
{
    return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

// Quotient maximisation shared by both model kinds.
template <class Quotient>
KEstimate maximise_quotient(Quotient&& quotient, const Box& domain, std::size_t budget,
                            std::uint64_t seed)
{
    domain.validate();
    if (budget < 1)
        throw UsageError("estimate_K: budget must be at least 1");

    std::mt19937_64 gen(seed);
    const auto n = static_cast<Eigen::Index>(domain.dim());
    const double tiny = 1e-12 * (1.0 + (domain.hi - domain.lo).norm());

    auto safe_eval = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        if ((x - y).norm() <= tiny)
            return -std::numeric_limits<double>::infinity();
        return quotient(x, y);
    };

    KEstimate best{-std::numeric_limits<double>::infinity(), Eigen::VectorXd(), Eigen::VectorXd()};
    for (std::size_t k = 0; k < budget; ++k) {
        Eigen::VectorXd x = sample_box(domain, gen);
        Eigen::VectorXd y = sample_box(domain, gen);
        double q = safe_eval(x, y);
        if (q > best.value)
            best = {q, std::move(x), std::move(y)};
    }
    if (!std::isfinite(best.value))
        throw UsageError("estimate_K: no admissible pair found in domain");

    // Coordinate ascent over the concatenated pair (x, y).
    Eigen::VectorXd z(2 * n);
    z << best.x, best.y;
    Eigen::VectorXd step(2 * n);
    step << 0.1 * (domain.hi - domain.lo), 0.1 * (domain.hi - domain.lo);
    double current = best.value;
    for (int sweep = 0; sweep < 100; ++sweep) {
        bool improved = false;
        for (Eigen::Index k = 0; k < 2 * n; ++k) {
            const Eigen::Index c = k % n;
            for (double sign : {1.0, -1.0}) {
                Eigen::VectorXd trial = z;
                trial[k] = std::clamp(z[k] + sign * step[k], domain.lo[c], domain.hi[c]);
                if (trial[k] == z[k])
                    continue;
                double q = safe_eval(trial.head(n), trial.tail(n));
                if (q > current) {
                    current = q;
                    z = std::move(trial);
                    improved = true;
                    break;
                }
            }
        }
        if (!improved)
            step *= 0.5;
    }
    best.value = current;
    best.x = z.head(n);
    best.y = z.tail(n);
    return best;
}

}  // namespace

//---------------------------------------------------------------------------//

WeightedNorm::WeightedNorm(Eigen::VectorXd weights) : weights_(std::move(weights))
{
    if (weights_.size() == 0)
        throw UsageError("WeightedNorm: empty weight vector");
    for (Eigen::Index i = 0; i < weights_.size(); ++i) {
        if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i]))
            throw UsageError("WeightedNorm: weights must be finite and strictly positive");
    }
}

WeightedNorm WeightedNorm::scaled(double s) const
{
    return WeightedNorm(weights_ * s);
}

double weighted_norm_sq(std::span<const double> v, const WeightedNorm& norm)
{
    require_dim(v.size(), norm.dim(), "weighted_norm_sq");
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double r = v[i] / norm.weight(i);
        acc += r * r;
    }
    return acc;
}

double weighted_norm_sq(const Eigen::VectorXd& v, const WeightedNorm& norm)
{
    return weighted_norm_sq(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())),
                            norm);
}

double weighted_dist_sq(std::span<const double> x, std::span<const double> y,
                        const WeightedNorm& norm)
{
    require_dim(x.size(), norm.dim(), "weighted_dist_sq");
    require_dim(y.size(), norm.dim(), "weighted_dist_sq");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = (x[i] - y[i]) / norm.weight(i);
        acc += r * r;
    }
    return acc;
}

double harnack_constant(double K, double t)
{
    if (!(t > 0.0) || !std::isfinite(t))
        throw UsageError("harnack_constant: t must be positive");
    if (!std::isfinite(K))
        throw UsageError("harnack_constant: K must be finite");
    const double kt = K * t;
    if (std::abs(kt) < kHarnackSeriesSwitch)
        return (1.0 + kt / 2.0 + kt * kt / 12.0) / (2.0 * t);
    return K / (-2.0 * std::expm1(-kt));
}

//---------------------------------------------------------------------------//

Box Box::cube(std::size_t dim, double lo, double hi)
{
    const auto n = static_cast<Eigen::Index>(dim);
    return Box{Eigen::VectorXd::Constant(n, lo), Eigen::VectorXd::Constant(n, hi)};
}

void Box::validate() const
{
    if (lo.size() == 0 || lo.size() != hi.size())
        throw UsageError("Box: empty or mismatched bounds");
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || !(lo[i] < hi[i]))
            throw UsageError("Box: empty domain");
    }
}

//---------------------------------------------------------------------------//

DiffusionModel::DiffusionModel(std::string name, std::size_t dim, VectorField drift,
                               MatrixField diffusion, Eigen::VectorXd sigma0, double K,
                               Traits traits)
    : name_(std::move(name)),
      dim_(dim),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      norm_(std::move(sigma0)),
      K_(K),
      traits_(traits)
{
    if (dim_ == 0)
        throw UsageError("DiffusionModel: dimension must be positive");
    require_dim(norm_.dim(), dim_, "DiffusionModel sigma0");
    if (!drift_ || !diffusion_)
        throw UsageError("DiffusionModel: drift and diffusion must be set");
    if (!std::isfinite(K_))
        throw UsageError("DiffusionModel: K must be finite");
}

DiffusionModel::DiffusionModel(std::string name, std::size_t dim, VectorField drift,
                               MatrixField diffusion, Eigen::VectorXd sigma0, double K)
    : DiffusionModel(std::move(name), dim, std::move(drift), std::move(diffusion),
                     std::move(sigma0), K, Traits{})
{
}

DiffusionModel DiffusionModel::with_K(double K) const
{
    DiffusionModel copy = *this;
    if (!std::isfinite(K))
        throw UsageError("DiffusionModel: K must be finite");
    copy.K_ = K;
    return copy;
}

Eigen::VectorXd DiffusionModel::drift(const Eigen::VectorXd& x) const
{
    require_dim(static_cast<std::size_t>(x.size()), dim_, "drift");
    Eigen::VectorXd out(x.size());
    drift_({x.data(), dim_}, {out.data(), dim_});
    return out;
}

Eigen::MatrixXd DiffusionModel::diffusion(const Eigen::VectorXd& x) const
{
    require_dim(static_cast<std::size_t>(x.size()), dim_, "diffusion");
    Eigen::MatrixXd out(x.size(), x.size());
    diffusion_({x.data(), dim_}, {out.data(), dim_ * dim_});
    return out;
}

double DiffusionModel::ellipticity_margin(const Eigen::VectorXd& x) const
{
    const Eigen::MatrixXd s = diffusion(x);
    Eigen::MatrixXd gap = s.transpose() * s;
    gap.diagonal() -= sigma0().cwiseAbs2();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gap, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

void DiffusionModel::check_invariants(const Box& domain, std::size_t samples,
                                      std::uint64_t seed, double tol) const
{
    domain.validate();
    require_dim(domain.dim(), dim_, "check_invariants domain");
    std::mt19937_64 gen(seed);
    for (std::size_t k = 0; k < samples; ++k) {
        const Eigen::VectorXd x = sample_box(domain, gen);
        const Eigen::VectorXd b = drift(x);
        const Eigen::MatrixXd s = diffusion(x);
        if (!all_finite({b.data(), dim_}) || !all_finite({s.data(), dim_ * dim_}))
            throw UsageError(name_ + ": drift or diffusion not finite on the test domain");
        const double margin = ellipticity_margin(x);
        if (margin < -tol) {
            std::ostringstream os;
            os << name_ << ": sigma^T sigma - sigma0^2 not positive semi-definite at x[0]="
               << x[0] << " (smallest eigenvalue " << margin << ")";
            throw UsageError(os.str());
        }
    }
}

//---------------------------------------------------------------------------//

void SparseMatrixField::dense(std::span<const double> x, std::span<double> out,
                              std::size_t n) const
{
    std::fill(out.begin(), out.end(), 0.0);
    if (entries.empty())
        return;
    std::vector<double> v(entries.size());
    values(x, v);
    for (std::size_t k = 0; k < entries.size(); ++k)
        out[entries[k].second * n + entries[k].first] += v[k];
}

GalerkinModel::GalerkinModel(std::string name, Eigen::VectorXd eigenvalues,
                             Eigen::VectorXd weights, VectorField F, SparseMatrixField sigma1,
                             double K,
                             bool linear_additive)
    : name_(std::move(name)),
      eigenvalues_(std::move(eigenvalues)),
      norm_(std::move(weights)),
      F_(std::move(F)),
      sigma1_(std::move(sigma1)),
      K_(K),
      linear_additive_(linear_additive)
{
    require_dim(norm_.dim(), level(), "GalerkinModel weights");
    for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
        if (!(eigenvalues_[i] >= 0.0) || !std::isfinite(eigenvalues_[i]))
            throw UsageError("GalerkinModel: eigenvalues must be finite and nonnegative");
        if (i > 0 && eigenvalues_[i] < eigenvalues_[i - 1])
            throw UsageError("GalerkinModel: eigenvalues must be nondecreasing");
    }
    if (!F_ || (!sigma1_.entries.empty() && !sigma1_.values))
        throw UsageError("GalerkinModel: F and sigma1 must be set");
    for (const auto& [r, c] : sigma1_.entries) {
        if (r >= level() || c >= level())
            throw UsageError("GalerkinModel: sigma1 pattern entry outside the truncation");
    }
    if (!std::isfinite(K_))
        throw UsageError("GalerkinModel: K must be finite");
}

GalerkinModel GalerkinModel::with_K(double K) const
{
    GalerkinModel copy = *this;
    if (!std::isfinite(K))
        throw UsageError("GalerkinModel: K must be finite");
    copy.K_ = K;
    return copy;
}

DiffusionModel GalerkinModel::to_diffusion_model() const
{
    const std::size_t n = level();
    Eigen::VectorXd lambda = eigenvalues_;
    Eigen::VectorXd q = weights();
    VectorField F = F_;
    SparseMatrixField s1 = sigma1_;
    auto drift = [n, lambda, F](std::span<const double> x, std::span<double> out) {
        F(x, out);
        for (std::size_t i = 0; i < n; ++i)
            out[i] -= lambda[static_cast<Eigen::Index>(i)] * x[i];
    };
    auto diffusion = [n, q, s1](std::span<const double> x, std::span<double> out) {
        s1.dense(x, out, n);
        for (std::size_t i = 0; i < n; ++i)
            out[i * n + i] += q[static_cast<Eigen::Index>(i)];
    };
    DiffusionModel::Traits traits;
    traits.constant_diffusion = linear_additive_;
    traits.affine_drift = linear_additive_;
    return DiffusionModel(name_, n, drift, diffusion, weights(), K_, traits);
}

double GalerkinModel::ellipticity_margin(const Eigen::VectorXd& x) const
{
    return to_diffusion_model().ellipticity_margin(x);
}

void GalerkinModel::check_invariants(const Box& domain, std::size_t samples, std::uint64_t seed,
                                     double tol) const
{
    to_diffusion_model().check_invariants(domain, samples, seed, tol);
}

//---------------------------------------------------------------------------//

namespace {

// Shared body: quotient of (sigma difference, drift difference) against the weights.
double quotient_from_parts(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& dvec, const Eigen::MatrixXd& dsig,
                           const Eigen::VectorXd& q)
{
    const Eigen::VectorXd diff = x - y;
    const Eigen::VectorXd scaled = diff.cwiseQuotient(q);
    const double denom = scaled.squaredNorm();
    if (denom == 0.0)
        throw DegeneratePairError("dissipativity_quotient: x == y");
    const double hs = (q.cwiseInverse().asDiagonal() * dsig).squaredNorm();
    const double inner = 2.0 * dvec.cwiseQuotient(q).dot(scaled);
    return (hs + inner) / denom;
}

}  // namespace

double dissipativity_quotient(const DiffusionModel& m, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y)
{
    require_dim(static_cast<std::size_t>(x.size()), m.dim(), "dissipativity_quotient");
    require_dim(static_cast<std::size_t>(y.size()), m.dim(), "dissipativity_quotient");
    if (x == y)
        throw DegeneratePairError("dissipativity_quotient: x == y");
    return quotient_from_parts(x, y, m.drift(x) - m.drift(y), m.diffusion(x) - m.diffusion(y),
                               m.sigma0());
}

double dissipativity_quotient(const GalerkinModel& g, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y)
{
    const std::size_t n = g.level();
    require_dim(static_cast<std::size_t>(x.size()), n, "dissipativity_quotient");
    require_dim(static_cast<std::size_t>(y.size()), n, "dissipativity_quotient");
    if (x == y)
        throw DegeneratePairError("dissipativity_quotient: x == y");
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::VectorXd fx(ni), fy(ni);
    Eigen::MatrixXd sx(ni, ni), sy(ni, ni);
    g.F({x.data(), n}, {fx.data(), n});
    g.F({y.data(), n}, {fy.data(), n});
    g.sigma1({x.data(), n}, {sx.data(), n * n});
    g.sigma1({y.data(), n}, {sy.data(), n * n});
    return quotient_from_parts(x, y, fx - fy, sx - sy, g.weights());
}

KEstimate estimate_K(const DiffusionModel& m, const Box& domain, std::size_t budget,
                     std::uint64_t seed)
{
    require_dim(domain.dim(), m.dim(), "estimate_K domain");
    return maximise_quotient(
        [&m](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
            return dissipativity_quotient(m, x, y);
        },
        domain, budget, seed);
}

KEstimate estimate_K(const GalerkinModel& g, const Box& domain, std::size_t budget,
                     std::uint64_t seed)
{
    require_dim(domain.dim(), g.level(), "estimate_K domain");
    return maximise_quotient(
        [&g](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
            return dissipativity_quotient(g, x, y);
        },
        domain, budget, seed);
}

}  // namespace hlab
