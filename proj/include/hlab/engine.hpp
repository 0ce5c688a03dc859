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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hlab/model.hpp"
#include "hlab/rng.hpp"

namespace hlab {

enum class Scheme { euler, exponential_euler };

const char* to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

/// Time discretisation for one simulation.
///
/// The number of steps is ceil(t_final / dt) (up to a 1e-9 slack) and the step actually
/// taken is t_final / steps(), so t_final is always hit exactly.
struct SimConfig {
    double t_final = 1.0;
    double dt = 1e-3;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::euler;

    void validate() const;
    std::size_t steps() const;
    double step() const { return t_final / static_cast<double>(steps()); }
    /// Steps needed to reach time t (t <= t_final) on this grid.
    std::size_t steps_to(double t) const;
};

inline constexpr double kBlowUpNorm = 1e8;

struct CoupledEndpoint {
    Eigen::VectorXd x_end;
    Eigen::VectorXd y_end;
    std::size_t increments = 0;  // steps * dim Gaussian increments shared by both paths
};

/// X_{t_final} from x0. Euler-Maruyama: x += b(x) dt + sigma(x) sqrt(dt) xi.
/// Throws ExplosionError when |x| exceeds kBlowUpNorm or becomes non-finite.
Eigen::VectorXd simulate(const DiffusionModel& m, std::span<const double> x0,
                         const SimConfig& cfg, NormalStream& rng);

/// Records the state after each step count in `snapshot_steps` (nondecreasing, last one
/// <= cfg.steps()); writes snapshot k to out[k * dim, (k+1) * dim).
void simulate_snapshots(const DiffusionModel& m, std::span<const double> x0,
                        const SimConfig& cfg, std::span<const std::size_t> snapshot_steps,
                        NormalStream& rng, std::span<double> out);

/// Synchronous coupling: both paths are advanced with the same increments.
CoupledEndpoint simulate_coupled(const DiffusionModel& m, std::span<const double> x0,
                                 std::span<const double> y0, const SimConfig& cfg,
                                 NormalStream& rng);

/// Exponential Euler for the Galerkin system: the linear part and the sigma0-driven
/// convolution are integrated exactly per mode, F and sigma1 are frozen over a step.
///
/// Mode i at step k uses counter block (k << 20 | i) regardless of the truncation level,
/// so different levels see the projections of one noise path. cfg.scheme == euler runs
/// Euler-Maruyama on to_diffusion_model() instead.
Eigen::VectorXd simulate(const GalerkinModel& g, std::span<const double> x0,
                         const SimConfig& cfg, NormalStream& rng);

CoupledEndpoint simulate_coupled(const GalerkinModel& g, std::span<const double> x0,
                                 std::span<const double> y0, const SimConfig& cfg,
                                 NormalStream& rng);

/// Var <Y_t, e_i> = q_i^2 (1 - exp(-2 lambda_i t)) / (2 lambda_i), q_i^2 t when lambda_i = 0.
Eigen::VectorXd stochastic_convolution_variance(const GalerkinModel& g, double t);

/// One exact draw of the stochastic convolution Y_t at the model's truncation level.
Eigen::VectorXd sample_stochastic_convolution(const GalerkinModel& g, double t,
                                              NormalStream& rng);

}  // namespace hlab
