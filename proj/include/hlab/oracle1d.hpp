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
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hlab/model.hpp"
#include "hlab/report.hpp"
#include "hlab/test_function.hpp"

namespace hlab {

/// m equispaced nodes on [lo, hi], m >= 51.
class Grid1D {
public:
    Grid1D(double lo, double hi, std::size_t points);

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    std::size_t size() const { return m_; }
    double h() const { return h_; }
    double node(std::size_t i) const { return lo_ + h_ * static_cast<double>(i); }
    Eigen::VectorXd nodes() const;

    /// Index of the node nearest to x, if it lies within 1e-9 h; throws UsageError otherwise.
    std::size_t index_of(double x) const;
    bool contains(double x) const { return x >= lo_ && x <= hi_; }

    /// Same interval with twice the resolution (2(m-1)+1 nodes).
    Grid1D refined() const;

    Eigen::VectorXd sample(const TestFunction& f) const;

private:
    double lo_;
    double hi_;
    std::size_t m_;
    double h_;
};

/// Piecewise-linear interpolation of nodal values.
double interpolate(const Grid1D& grid, const Eigen::VectorXd& values, double x);

/// Tridiagonal generator ½ sigma^2 u'' + b u' on the grid with a reflecting boundary.
///
/// Interior rows use central differences, switching to upwinding for the drift at nodes
/// where |b| h > sigma^2 so that off-diagonal rates stay nonnegative. Rows sum to zero.
struct Generator {
    Eigen::VectorXd lower;  // lower[i] = L(i, i-1), lower[0] = 0
    Eigen::VectorXd diag;
    Eigen::VectorXd upper;  // upper[i] = L(i, i+1), upper[m-1] = 0

    std::size_t size() const { return static_cast<std::size_t>(diag.size()); }
    /// (L u)(i)
    Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
    /// (L^T nu)(j)
    Eigen::VectorXd apply_transpose(const Eigen::VectorXd& nu) const;
    /// Largest exit rate max_i |L(i, i)|.
    double max_rate() const;
};

Generator discretize(const DiffusionModel& m, const Grid1D& grid);

/// Crank-Nicolson stepping of u' = L u (backward) or nu' = L^T nu (forward).
class CrankNicolson {
public:
    CrankNicolson(Generator gen, double dt);

    double dt() const { return dt_; }
    /// u <- (I - dt/2 L)^{-1} (I + dt/2 L) u
    void step_backward(Eigen::VectorXd& u) const;
    /// nu <- nu (I - dt/2 L)^{-1} (I + dt/2 L), nu as a column vector.
    void step_forward(Eigen::VectorXd& nu) const;

private:
    Generator gen_;
    double dt_;
};

/// Solution of the backward equation with u(0) = f on the grid; steps = ceil(t / dt_pde).
/// Throws SolverError if a linear solve leaves a residual above 1e-8.
Eigen::VectorXd solve_backward(const DiffusionModel& m, const Eigen::VectorXd& f, double t,
                               const Grid1D& grid, double dt_pde);
Eigen::VectorXd solve_backward(const DiffusionModel& m, const TestFunction& f, double t,
                               const Grid1D& grid, double dt_pde);

/// Transition matrix of the grid chain at time t with its invariant law.
struct GridKernel {
    Grid1D grid;
    double t;
    Eigen::MatrixXd P;   // P(i, j) = probability of moving from node i to node j
    Eigen::VectorXd mu;  // invariant probability vector, all entries > 0

    std::size_t size() const { return grid.size(); }
    /// p_t(x_i, x_j) as a density against mu.
    double density(std::size_t i, std::size_t j) const { return P(i, j) / mu[static_cast<Eigen::Index>(j)]; }
    /// max_i |sum_j P(i, j) - 1|.
    double row_sum_error() const;
    /// max_i (P(i, 0) + P(i, m-1)): mass sitting on the boundary nodes.
    double boundary_mass(std::size_t row) const;
};

/// exp(t L) by scaling and squaring with a uniformised Taylor core, which keeps every entry
/// nonnegative. mu solves detailed balance for L and is then refined by power iteration on
/// P until |mu P - mu|_1 < 1e-12 (OracleError after 1e5 iterations).
GridKernel build_kernel(const DiffusionModel& m, double t, const Grid1D& grid);

/// (P_t^* f)(y) = sum_x mu(x) p_t(x, y) f(x) / mu(y).
Eigen::VectorXd adjoint_apply(const GridKernel& k, const Eigen::VectorXd& f);

/// Both sides of
///   P_s log P_{t-s} f(x) - log P_t f(x) = -1/2 int_0^s P_r |sigma d/dx log P_{t-r} f|^2 (x) dr
/// for every s in `s_list`; x must be a grid node and every s a multiple of the step.
struct DDSides {
    std::vector<double> s;
    std::vector<double> lhs;
    std::vector<double> rhs;
};

DDSides dd_identity_sides(const DiffusionModel& m, const TestFunction& f, double t, double x,
                          const std::vector<double>& s_list, const Grid1D& grid, double dt_pde);

/// Relative gap |lhs - rhs| / max(|rhs|, 1e-8), maximised over s.
VerificationReport verify_dd_identity(const DiffusionModel& m, const TestFunction& f, double t,
                                      double x, const std::vector<double>& s_list,
                                      const Grid1D& grid, double dt_pde, double rel_tol = 2e-2);

void write_grid_csv(const std::filesystem::path& path, const Grid1D& grid,
                    const Eigen::VectorXd& values);
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& a);

}  // namespace hlab
