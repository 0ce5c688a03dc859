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
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "hlab/model.hpp"

namespace hlab {

/// Probability vector on finitely many distinct points (one point per row).
class DiscreteMeasure {
public:
    /// Throws UsageError unless weights are nonnegative, sum to 1 within 1e-10 and the
    /// points are distinct.
    DiscreteMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights);

    /// Points given as a column of scalars.
    static DiscreteMeasure on_line(const Eigen::VectorXd& x, const Eigen::VectorXd& weights);
    static DiscreteMeasure dirac(const Eigen::VectorXd& x);

    std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }
    std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }
    const Eigen::MatrixXd& points() const { return points_; }
    const Eigen::VectorXd& weights() const { return weights_; }

private:
    Eigen::MatrixXd points_;
    Eigen::VectorXd weights_;
};

struct PlanEntry {
    std::size_t i;
    std::size_t j;
    double mass;
};

/// Coupling stored as its nonzero cells.
struct TransportPlan {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<PlanEntry> entries;
    double cost = 0.0;  // sum of mass * |sigma0^{-1}(x_i - y_j)|^2

    Eigen::VectorXd row_sums() const;
    Eigen::VectorXd col_sums() const;
    Eigen::MatrixXd dense() const;
    /// Largest absolute violation of either marginal constraint.
    double marginal_error(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2) const;
};

struct W0Result {
    double cost = 0.0;
    TransportPlan plan;
    double dual_value = 0.0;   // objective of a feasible dual (c-transformed potentials)
    double duality_gap = 0.0;  // cost - dual_value
    std::size_t iterations = 0;
};

/// c(i, j) = |sigma0^{-1}(x_i - y_j)|^2.
Eigen::MatrixXd cost_matrix(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                            const WeightedNorm& norm);

/// Transportation LP by the network simplex method. Supports of up to 2000 points each.
W0Result w0_exact(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                  const WeightedNorm& norm);

/// Log-domain Sinkhorn with epsilon scaling, stopped once the row marginal error is below
/// 1e-9, then rounded onto the exact marginals. The cost of the rounded plan is within
/// epsilon * log(min(m, n)) (plus the rounding error) of the exact value.
/// Throws SolverError when 1e5 iterations at the target epsilon do not suffice.
W0Result w0_sinkhorn(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                     const WeightedNorm& norm, double epsilon);

/// i,j,mass
void write_plan_csv(const std::filesystem::path& path, const TransportPlan& plan);

}  // namespace hlab
