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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hlab/engine.hpp"
#include "hlab/estimator.hpp"
#include "hlab/model.hpp"
#include "hlab/oracle1d.hpp"
#include "hlab/presets.hpp"
#include "hlab/report.hpp"
#include "hlab/test_function.hpp"

namespace hlab {

/// Statistical tolerance used by every Monte Carlo verdict: z * stderr + 10 dt.
inline constexpr double kStatZ = 3.0;
inline constexpr double kDtAllowance = 10.0;

//---------------------------------------------------------------------------//
// log-Harnack

/// P_t log f(x) <= log P_t f(y) + c_t |sigma0^{-1}(x - y)|^2 from common-random-number
/// endpoints sx (started at x) and sy (started at y).
///
/// tolerance = 3 * stderr of the paired slack (delta method) + 10 dt.
VerificationReport log_harnack_from_samples(const DiffusionModel& m, const EndpointSample& sx,
                                            const EndpointSample& sy, double x, double y,
                                            double t, const TestFunction& f, double dt,
                                            std::uint64_t seed);

VerificationReport verify_log_harnack(const DiffusionModel& m, double x, double y, double t,
                                      const TestFunction& f, std::size_t n, const SimConfig& cfg,
                                      std::size_t workers = 1);

/// Both sides from the backward solver, evaluated by linear interpolation at x and y.
VerificationReport verify_log_harnack_oracle(const DiffusionModel& m, double x, double y,
                                             double t, const TestFunction& f,
                                             const Grid1D& grid, double dt_pde,
                                             double tolerance = 1e-3);

struct SharpnessResult {
    double d_star;     // minimiser of slack(d), x = y + d
    double min_slack;
    std::vector<double> d_scan;
    std::vector<double> slack_scan;
};

/// slack(d) = log P_t f(y) + c_t d^2 / q^2 - P_t log f(y + d), minimised over d in
/// [d_lo, d_hi] by a scan followed by golden-section search.
SharpnessResult log_harnack_sharpness(const DiffusionModel& m, double y, double t,
                                      const TestFunction& f, const Grid1D& grid, double dt_pde,
                                      double d_lo, double d_hi);

/// Tightness report: pass iff |min slack| <= tolerance.
VerificationReport verify_log_harnack_sharpness(const DiffusionModel& m, double y, double t,
                                                const TestFunction& f, const Grid1D& grid,
                                                double dt_pde, double d_lo, double d_hi,
                                                double tolerance = 1e-3);

//---------------------------------------------------------------------------//
// Coupling and gradient

/// E |sigma0^{-1}(X_t - Y_t)|^2 <= e^{Kt} |sigma0^{-1}(x - y)|^2; tolerance 3 stderr + 10 dt rhs.
VerificationReport verify_coupling_contraction(const DiffusionModel& m,
                                               const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& y, double t,
                                               std::size_t n, const SimConfig& cfg,
                                               std::size_t workers = 1);
VerificationReport verify_coupling_contraction(const GalerkinModel& g,
                                               const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& y, double t,
                                               std::size_t n, const SimConfig& cfg,
                                               std::size_t workers = 1);

/// |sigma0 (P_t f)'|^2 <= e^{Kt} P_t |sigma0 f'|^2 on the central half of the grid.
///
/// Inequality form: lhs = max (left - right), rhs = 0, tolerance 5e-3 (1 + max right).
/// With `equality` the report is an identity with tolerance `equality_tol` on max |left - right|.
VerificationReport verify_gradient_estimate(const DiffusionModel& m, const TestFunction& f,
                                            double t, const Grid1D& grid, double dt_pde,
                                            bool equality = false, double equality_tol = 1e-3);

//---------------------------------------------------------------------------//
// Strong Feller modulus

struct FellerPoint {
    double distance;  // |y - x|
    double y;
    double ptf_x;
    double ptf_y;
    double best_epsilon;
    double best_bound;  // min over epsilon of eps^{-1} log(1 + eps P_t f(x)) + c_t d^2 / eps + eps |f|^2
    double modulus;     // best_bound - P_t f(x)
    double worst_margin;  // min over the epsilon sweep of bound(eps) - P_t f(y)
};

std::vector<FellerPoint> feller_modulus(const DiffusionModel& m, const TestFunction& f, double t,
                                        double x, const std::vector<double>& y_list,
                                        const Grid1D& grid, double dt_pde);

/// One inequality report per y, plus a decay report (modulus nonincreasing as y -> x within
/// `noise`) and a size report (modulus at the closest y below `small_bound`).
std::vector<VerificationReport> verify_feller_modulus(const DiffusionModel& m,
                                                      const TestFunction& f, double t, double x,
                                                      const std::vector<double>& y_list,
                                                      const Grid1D& grid, double dt_pde,
                                                      double noise = 1e-4,
                                                      double small_bound = 0.05);

//---------------------------------------------------------------------------//
// Grid-chain corollaries

/// sum_z p log p dmu <= -log sum_y exp(-c_t |x - y|_0^2) mu(y); tolerance 5e-3 (1 + |rhs|).
VerificationReport verify_heat_kernel_entropy(const GridKernel& k, const WeightedNorm& norm,
                                              double K, std::size_t x_index,
                                              const std::string& model_name = "grid");

/// mu((P_t^* f) log P_t^* f) <= c_t W0(f mu, mu)^2; tolerance 5e-3 (1 + |rhs|).
/// Throws UsageError unless f >= 0 and mu(f) = 1 within 1e-8.
VerificationReport verify_entropy_cost(const GridKernel& k, const WeightedNorm& norm, double K,
                                       const Eigen::VectorXd& f, const std::string& label,
                                       const std::string& model_name = "grid");

/// Named densities against mu: "uniform" (f = 1), "shift" (mu moved by one cell),
/// "right_half" (renormalised indicator of x >= midpoint).
Eigen::VectorXd grid_density(const GridKernel& k, const std::string& name);

//---------------------------------------------------------------------------//
// Galerkin convergence

struct GalerkinLevelStats {
    std::size_t level;
    MCEstimate D;        // E |X_t^n - X_t^{n_ref}|^2
    double tail;         // sum_{n < i <= n_ref} q_i^2 (1 - e^{-2 lambda_i t}) / (2 lambda_i)
    MCEstimate step;     // D(next level) - D(this level), paired per replicate
};

/// Simulates every level with the same mode-wise noise and compares against the largest.
std::vector<GalerkinLevelStats> galerkin_levels(const GalerkinHeatParams& base,
                                                const std::vector<std::size_t>& levels,
                                                const Eigen::VectorXd& x0, double t,
                                                std::size_t n, const SimConfig& cfg,
                                                std::size_t workers = 1);

struct GalerkinCheck {
    double ratio_max = 0.2;    // D(levels[-2]) / D(levels[0]) bound
    double tail_factor = 10.0; // D(levels[-2]) < tail_factor * linear tail
};

/// Linear-additive models: one identity report per level (D(n) = tail within 3 stderr).
/// General models: monotone, ratio and threshold reports.
std::vector<VerificationReport> verify_galerkin_convergence(
    const GalerkinHeatParams& base, const std::vector<std::size_t>& levels,
    const Eigen::VectorXd& x0, double t, std::size_t n, const SimConfig& cfg,
    const GalerkinCheck& check = {}, std::size_t workers = 1,
    std::vector<GalerkinLevelStats>* stats = nullptr);

/// Closed-form tail of the stochastic convolution between levels n and n_ref.
double galerkin_linear_tail(const GalerkinHeatParams& base, std::size_t n, std::size_t n_ref,
                            double t);

}  // namespace hlab
