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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace hlab {

/// Diagonal reference diffusion sigma0 = diag(q_1, ..., q_n), q_i > 0.
///
/// All distances in the library are measured as |sigma0^{-1} v|.
class WeightedNorm {
public:
    explicit WeightedNorm(Eigen::VectorXd weights);

    std::size_t dim() const { return static_cast<std::size_t>(weights_.size()); }
    const Eigen::VectorXd& weights() const { return weights_; }
    double weight(std::size_t i) const { return weights_[static_cast<Eigen::Index>(i)]; }

    /// Same geometry with every weight multiplied by s.
    WeightedNorm scaled(double s) const;

private:
    Eigen::VectorXd weights_;
};

/// sum_i q_i^{-2} v_i^2.
double weighted_norm_sq(std::span<const double> v, const WeightedNorm& norm);
double weighted_norm_sq(const Eigen::VectorXd& v, const WeightedNorm& norm);

/// |sigma0^{-1}(x - y)|^2.
double weighted_dist_sq(std::span<const double> x, std::span<const double> y,
                        const WeightedNorm& norm);

/// c_t = K / (2 (1 - exp(-K t))), with a series branch for |K| t < 1e-6.
double harnack_constant(double K, double t);

/// Smallest |K| t for which the closed form is used.
inline constexpr double kHarnackSeriesSwitch = 1e-6;

/// Axis-aligned box used as a sampling domain.
struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    static Box cube(std::size_t dim, double lo, double hi);
    std::size_t dim() const { return static_cast<std::size_t>(lo.size()); }
    /// Throws UsageError if any side is empty or the bounds are not finite.
    void validate() const;
};

/// b(x) written into out (size dim).
using VectorField = std::function<void(std::span<const double>, std::span<double>)>;
/// sigma(x) written column-major into out (size dim * dim).
using MatrixField = std::function<void(std::span<const double>, std::span<double>)>;

/// Finite-dimensional diffusion dX = b(X) dt + sigma(X) dB.
class DiffusionModel {
public:
    struct Traits {
        bool constant_diffusion = false;
        bool affine_drift = false;
    };

    DiffusionModel(std::string name, std::size_t dim, VectorField drift, MatrixField diffusion,
                   Eigen::VectorXd sigma0, double K, Traits traits);
    DiffusionModel(std::string name, std::size_t dim, VectorField drift, MatrixField diffusion,
                   Eigen::VectorXd sigma0, double K);

    const std::string& name() const { return name_; }
    std::size_t dim() const { return dim_; }
    const WeightedNorm& norm() const { return norm_; }
    const Eigen::VectorXd& sigma0() const { return norm_.weights(); }
    double K() const { return K_; }
    const Traits& traits() const { return traits_; }

    /// Copy of the model with a different dissipativity constant.
    DiffusionModel with_K(double K) const;

    void drift(std::span<const double> x, std::span<double> out) const { drift_(x, out); }
    void diffusion(std::span<const double> x, std::span<double> out) const { diffusion_(x, out); }

    Eigen::VectorXd drift(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd diffusion(const Eigen::VectorXd& x) const;

    /// Smallest eigenvalue of sigma(x)^T sigma(x) - sigma0^2.
    double ellipticity_margin(const Eigen::VectorXd& x) const;

    /// Checks finiteness and sigma^T sigma >= sigma0^2 on `samples` uniform points of the
    /// domain; throws UsageError naming the first offending state.
    void check_invariants(const Box& domain, std::size_t samples, std::uint64_t seed,
                          double tol = 1e-12) const;

private:
    std::string name_;
    std::size_t dim_;
    VectorField drift_;
    MatrixField diffusion_;
    WeightedNorm norm_;
    double K_;
    Traits traits_;
};

/// Matrix-valued field with a fixed sparsity pattern; values are written in pattern order.
struct SparseMatrixField {
    std::vector<std::pair<std::size_t, std::size_t>> entries;  // (row, col)
    std::function<void(std::span<const double>, std::span<double>)> values;

    /// Dense column-major n x n evaluation.
    void dense(std::span<const double> x, std::span<double> out, std::size_t n) const;
};

/// Spectral Galerkin truncation of dX = (AX + F(X)) dt + (sigma0 + sigma1(X)) dW at level n.
///
/// -A is diagonal with eigenvalues 0 <= lambda_1 <= ... <= lambda_n and sigma0 e_i = q_i e_i.
class GalerkinModel {
public:
    GalerkinModel(std::string name, Eigen::VectorXd eigenvalues, Eigen::VectorXd weights,
                  VectorField F, SparseMatrixField sigma1, double K, bool linear_additive);

    const std::string& name() const { return name_; }
    std::size_t level() const { return static_cast<std::size_t>(eigenvalues_.size()); }
    std::size_t dim() const { return level(); }
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    const Eigen::VectorXd& weights() const { return norm_.weights(); }
    const WeightedNorm& norm() const { return norm_; }
    double K() const { return K_; }
    /// True when F = 0 and sigma1 = 0, i.e. the modes are independent OU processes.
    bool linear_additive() const { return linear_additive_; }

    GalerkinModel with_K(double K) const;

    void F(std::span<const double> x, std::span<double> out) const { F_(x, out); }
    /// Dense column-major sigma1(x).
    void sigma1(std::span<const double> x, std::span<double> out) const
    {
        sigma1_.dense(x, out, level());
    }
    const SparseMatrixField& sigma1_field() const { return sigma1_; }

    /// The same equation as a generic diffusion: b = -Lambda x + F, sigma = sigma0 + sigma1.
    DiffusionModel to_diffusion_model() const;

    /// Smallest eigenvalue of sigma^T sigma - sigma0^2 at x.
    double ellipticity_margin(const Eigen::VectorXd& x) const;
    void check_invariants(const Box& domain, std::size_t samples, std::uint64_t seed,
                          double tol = 1e-12) const;

private:
    std::string name_;
    Eigen::VectorXd eigenvalues_;
    WeightedNorm norm_;
    VectorField F_;
    SparseMatrixField sigma1_;
    double K_;
    bool linear_additive_;
};

/// [ |sigma0^{-1}(sigma(x) - sigma(y))|_HS^2 + 2 <sigma0^{-1}(b(x)-b(y)), sigma0^{-1}(x-y)> ]
///   / |sigma0^{-1}(x-y)|^2
/// Throws DegeneratePairError when x == y.
double dissipativity_quotient(const DiffusionModel& m, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y);

/// Same quotient with F and sigma1 in place of b and sigma (the linear part drops out).
double dissipativity_quotient(const GalerkinModel& g, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y);

struct KEstimate {
    double value;
    Eigen::VectorXd x;
    Eigen::VectorXd y;
};

/// Largest quotient seen over `budget` uniform pairs followed by coordinate ascent from the
/// best pair. A lower bound on the supremum over the domain.
KEstimate estimate_K(const DiffusionModel& m, const Box& domain, std::size_t budget,
                     std::uint64_t seed = 1);
KEstimate estimate_K(const GalerkinModel& g, const Box& domain, std::size_t budget,
                     std::uint64_t seed = 1);

}  // namespace hlab
