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

#include "hlab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "hlab/errors.hpp"
#include "hlab/report.hpp"

namespace hlab {

namespace {

constexpr std::size_t kMaxSupport = 2000;
constexpr double kSinkhornTarget = 1e-9;
constexpr std::size_t kSinkhornMaxIter = 100000;

struct Reduced {
    std::vector<std::size_t> index;  // positions with positive weight
    Eigen::VectorXd weights;
};

Reduced positive_part(const Eigen::VectorXd& w)
{
    Reduced r;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w[i] > 0.0)
            r.index.push_back(static_cast<std::size_t>(i));
    }
    r.weights.resize(static_cast<Eigen::Index>(r.index.size()));
    for (std::size_t k = 0; k < r.index.size(); ++k)
        r.weights[static_cast<Eigen::Index>(k)] = w[static_cast<Eigen::Index>(r.index[k])];
    return r;
}

void check_pair(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2, const WeightedNorm& norm)
{
    if (mu1.dim() != mu2.dim() || mu1.dim() != norm.dim())
        throw UsageError("transport: measures and norm must share one dimension");
}

// Feasible dual from row potentials u: v_j = min_i (c_ij - u_i), then u_i = min_j (c_ij - v_j).
double dual_objective(const Eigen::MatrixXd& c, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                      Eigen::VectorXd u)
{
    Eigen::VectorXd v = (c.colwise() - u).colwise().minCoeff().transpose();
    u = (c.rowwise() - v.transpose()).rowwise().minCoeff();
    return a.dot(u) + b.dot(v);
}

/// Network simplex on the complete bipartite graph sources -> sinks with an artificial
/// root. Tree stored as parent pointers with explicit children lists.
class NetworkSimplex {
public:
    NetworkSimplex(const Eigen::MatrixXd& cost, const Eigen::VectorXd& supply,
                   const Eigen::VectorXd& demand)
        : c_(cost), m_(supply.size()), n_(demand.size()), nodes_(m_ + n_ + 1),
          root_(m_ + n_), real_arcs_(m_ * n_)
    {
        const double cmax = std::max(1.0, c_.maxCoeff());
        big_ = 1.0 + static_cast<double>(m_ + n_) * cmax;
        eps_ = 1e-11 * (big_ + cmax);
        flow_.assign(static_cast<std::size_t>(real_arcs_ + m_ + n_), 0.0);
        parent_.assign(static_cast<std::size_t>(nodes_), -1);
        pred_.assign(static_cast<std::size_t>(nodes_), -1);
        depth_.assign(static_cast<std::size_t>(nodes_), 0);
        pi_.assign(static_cast<std::size_t>(nodes_), 0.0);
        children_.assign(static_cast<std::size_t>(nodes_), {});
        for (Eigen::Index v = 0; v < m_ + n_; ++v) {
            const auto vs = static_cast<std::size_t>(v);
            parent_[vs] = root_;
            pred_[vs] = real_arcs_ + v;
            depth_[vs] = 1;
            children_[static_cast<std::size_t>(root_)].push_back(v);
            if (v < m_) {
                flow_[static_cast<std::size_t>(real_arcs_ + v)] = supply[v];
                pi_[vs] = -big_;
            } else {
                flow_[static_cast<std::size_t>(real_arcs_ + v)] = demand[v - m_];
                pi_[vs] = big_;
            }
        }
        block_ = std::max<Eigen::Index>(
            64, static_cast<Eigen::Index>(std::sqrt(static_cast<double>(real_arcs_))));
    }

    std::size_t run()
    {
        const std::size_t cap = 50 * static_cast<std::size_t>(real_arcs_ + nodes_) + 1000;
        std::size_t it = 0;
        for (Eigen::Index e; (e = price()) >= 0; ++it) {
            if (it >= cap)
                throw SolverError("network simplex: iteration limit reached");
            pivot(e);
        }
        return it;
    }

    double artificial_flow() const
    {
        double s = 0.0;
        for (Eigen::Index v = 0; v < m_ + n_; ++v)
            s += flow_[static_cast<std::size_t>(real_arcs_ + v)];
        return s;
    }

    double flow(Eigen::Index i, Eigen::Index j) const
    {
        return flow_[static_cast<std::size_t>(i * n_ + j)];
    }

    /// Row potentials in the convention u_i + v_j <= c_ij.
    Eigen::VectorXd row_potentials() const
    {
        Eigen::VectorXd u(m_);
        for (Eigen::Index i = 0; i < m_; ++i)
            u[i] = -pi_[static_cast<std::size_t>(i)];
        return u;
    }

private:
    Eigen::Index tail(Eigen::Index arc) const
    {
        if (arc < real_arcs_)
            return arc / n_;
        const Eigen::Index v = arc - real_arcs_;
        return v < m_ ? v : root_;
    }
    Eigen::Index head(Eigen::Index arc) const
    {
        if (arc < real_arcs_)
            return m_ + arc % n_;
        const Eigen::Index v = arc - real_arcs_;
        return v < m_ ? root_ : v;
    }
    double reduced(Eigen::Index arc) const
    {
        const Eigen::Index i = arc / n_, j = arc % n_;
        return c_(i, j) + pi_[static_cast<std::size_t>(i)] - pi_[static_cast<std::size_t>(m_ + j)];
    }
    double arc_cost(Eigen::Index arc) const
    {
        return arc < real_arcs_ ? c_(arc / n_, arc % n_) : big_;
    }

    // Most negative reduced cost in the first block that has one.
    Eigen::Index price()
    {
        Eigen::Index best = -1;
        double best_rc = -eps_;
        Eigen::Index scanned = 0, in_block = 0;
        while (scanned < real_arcs_) {
            const Eigen::Index arc = next_;
            next_ = next_ + 1 == real_arcs_ ? 0 : next_ + 1;
            const double rc = reduced(arc);
            if (rc < best_rc) {
                best_rc = rc;
                best = arc;
            }
            ++scanned;
            if (++in_block == block_) {
                if (best >= 0)
                    return best;
                in_block = 0;
            }
        }
        return best;
    }

    void remove_child(Eigen::Index p, Eigen::Index v)
    {
        auto& ch = children_[static_cast<std::size_t>(p)];
        ch.erase(std::find(ch.begin(), ch.end(), v));
    }

    void pivot(Eigen::Index e)
    {
        const Eigen::Index s = tail(e), t = head(e);
        // Apex of the cycle.
        Eigen::Index a = s, b = t;
        while (a != b) {
            if (depth_[static_cast<std::size_t>(a)] >= depth_[static_cast<std::size_t>(b)])
                a = parent_[static_cast<std::size_t>(a)];
            else
                b = parent_[static_cast<std::size_t>(b)];
        }
        const Eigen::Index join = a;

        // Flow goes s -> t, then from t up to the apex and down to s. An edge is blocking
        // when the cycle runs against its orientation.
        double delta = std::numeric_limits<double>::infinity();
        Eigen::Index out = -1;
        bool out_on_s_side = false;
        for (Eigen::Index v = s; v != join; v = parent_[static_cast<std::size_t>(v)]) {
            const Eigen::Index arc = pred_[static_cast<std::size_t>(v)];
            if (tail(arc) == v) {  // oriented v -> parent, traversed parent -> v
                const double f = flow_[static_cast<std::size_t>(arc)];
                if (f < delta) {
                    delta = f;
                    out = v;
                    out_on_s_side = true;
                }
            }
        }
        for (Eigen::Index v = t; v != join; v = parent_[static_cast<std::size_t>(v)]) {
            const Eigen::Index arc = pred_[static_cast<std::size_t>(v)];
            if (head(arc) == v) {  // oriented parent -> v, traversed v -> parent
                const double f = flow_[static_cast<std::size_t>(arc)];
                if (f <= delta) {
                    delta = f;
                    out = v;
                    out_on_s_side = false;
                }
            }
        }
        if (out < 0)
            throw SolverError("network simplex: unbounded cycle");

        if (delta > 0.0) {
            flow_[static_cast<std::size_t>(e)] += delta;
            for (Eigen::Index v = s; v != join; v = parent_[static_cast<std::size_t>(v)]) {
                const auto arc = static_cast<std::size_t>(pred_[static_cast<std::size_t>(v)]);
                flow_[arc] += tail(static_cast<Eigen::Index>(arc)) == v ? -delta : delta;
            }
            for (Eigen::Index v = t; v != join; v = parent_[static_cast<std::size_t>(v)]) {
                const auto arc = static_cast<std::size_t>(pred_[static_cast<std::size_t>(v)]);
                flow_[arc] += head(static_cast<Eigen::Index>(arc)) == v ? -delta : delta;
            }
        }
        flow_[static_cast<std::size_t>(pred_[static_cast<std::size_t>(out)])] = 0.0;

        // Re-hang the subtree below `out`: q is the endpoint of e inside it.
        const Eigen::Index q = out_on_s_side ? s : t;
        const Eigen::Index p = out_on_s_side ? t : s;
        remove_child(parent_[static_cast<std::size_t>(out)], out);
        Eigen::Index v = q, new_parent = p, new_pred = e;
        while (true) {
            const auto vs = static_cast<std::size_t>(v);
            const Eigen::Index old_parent = parent_[vs];
            const Eigen::Index old_pred = pred_[vs];
            if (v != out)
                remove_child(old_parent, v);
            parent_[vs] = new_parent;
            pred_[vs] = new_pred;
            children_[static_cast<std::size_t>(new_parent)].push_back(v);
            if (v == out)
                break;
            new_parent = v;
            new_pred = old_pred;
            v = old_parent;
        }

        // Potentials and depths of the moved subtree.
        const double target = out_on_s_side
                                  ? pi_[static_cast<std::size_t>(t)] - arc_cost(e)
                                  : pi_[static_cast<std::size_t>(s)] + arc_cost(e);
        const double shift = target - pi_[static_cast<std::size_t>(q)];
        stack_.clear();
        stack_.push_back(q);
        depth_[static_cast<std::size_t>(q)] = depth_[static_cast<std::size_t>(p)] + 1;
        while (!stack_.empty()) {
            const Eigen::Index u = stack_.back();
            stack_.pop_back();
            pi_[static_cast<std::size_t>(u)] += shift;
            for (Eigen::Index w : children_[static_cast<std::size_t>(u)]) {
                depth_[static_cast<std::size_t>(w)] = depth_[static_cast<std::size_t>(u)] + 1;
                stack_.push_back(w);
            }
        }
    }

    const Eigen::MatrixXd& c_;
    Eigen::Index m_, n_, nodes_, root_, real_arcs_;
    double big_ = 0.0;
    double eps_ = 0.0;
    Eigen::Index block_ = 64;
    Eigen::Index next_ = 0;
    std::vector<double> flow_;
    std::vector<Eigen::Index> parent_, pred_, depth_;
    std::vector<double> pi_;
    std::vector<std::vector<Eigen::Index>> children_;
    std::vector<Eigen::Index> stack_;
};

double logsumexp(const double* v, Eigen::Index n, Eigen::Index stride)
{
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k)
        mx = std::max(mx, v[k * stride]);
    if (!std::isfinite(mx))
        return mx;
    double s = 0.0;
    for (Eigen::Index k = 0; k < n; ++k)
        s += std::exp(v[k * stride] - mx);
    return mx + std::log(s);
}

}  // namespace

//---------------------------------------------------------------------------//

DiscreteMeasure::DiscreteMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights)
    : points_(std::move(points)), weights_(std::move(weights))
{
    if (points_.rows() != weights_.size() || weights_.size() == 0)
        throw UsageError("discrete measure: need one weight per point");
    if (points_.cols() == 0)
        throw UsageError("discrete measure: points must have positive dimension");
    if (!points_.allFinite() || !weights_.allFinite() || weights_.minCoeff() < 0.0)
        throw UsageError("discrete measure: weights must be finite and nonnegative");
    if (std::abs(weights_.sum() - 1.0) > 1e-10)
        throw UsageError("discrete measure: weights must sum to 1");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(points_.rows()));
    std::iota(order.begin(), order.end(), 0);
    auto less = [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index d = 0; d < points_.cols(); ++d) {
            if (points_(a, d) != points_(b, d))
                return points_(a, d) < points_(b, d);
        }
        return false;
    };
    std::sort(order.begin(), order.end(), less);
    for (std::size_t k = 1; k < order.size(); ++k) {
        if (!less(order[k - 1], order[k]))
            throw UsageError("discrete measure: support points must be distinct");
    }
}

DiscreteMeasure DiscreteMeasure::on_line(const Eigen::VectorXd& x, const Eigen::VectorXd& weights)
{
    return DiscreteMeasure(Eigen::MatrixXd(x), weights);
}

DiscreteMeasure DiscreteMeasure::dirac(const Eigen::VectorXd& x)
{
    return DiscreteMeasure(Eigen::MatrixXd(x.transpose()), Eigen::VectorXd::Ones(1));
}

Eigen::VectorXd TransportPlan::row_sums() const
{
    Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows));
    for (const auto& e : entries)
        r[static_cast<Eigen::Index>(e.i)] += e.mass;
    return r;
}

Eigen::VectorXd TransportPlan::col_sums() const
{
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols));
    for (const auto& e : entries)
        c[static_cast<Eigen::Index>(e.j)] += e.mass;
    return c;
}

Eigen::MatrixXd TransportPlan::dense() const
{
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows),
                                              static_cast<Eigen::Index>(cols));
    for (const auto& e : entries)
        d(static_cast<Eigen::Index>(e.i), static_cast<Eigen::Index>(e.j)) += e.mass;
    return d;
}

double TransportPlan::marginal_error(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2) const
{
    return std::max((row_sums() - mu1.weights()).cwiseAbs().maxCoeff(),
                    (col_sums() - mu2.weights()).cwiseAbs().maxCoeff());
}

Eigen::MatrixXd cost_matrix(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                            const WeightedNorm& norm)
{
    check_pair(mu1, mu2, norm);
    const Eigen::RowVectorXd inv = norm.weights().cwiseInverse().transpose();
    const Eigen::MatrixXd x = mu1.points().array().rowwise() * inv.array();
    const Eigen::MatrixXd y = mu2.points().array().rowwise() * inv.array();
    Eigen::MatrixXd c(x.rows(), y.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < y.rows(); ++j)
            c(i, j) = (x.row(i) - y.row(j)).squaredNorm();
    }
    return c;
}

W0Result w0_exact(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2, const WeightedNorm& norm)
{
    if (mu1.size() > kMaxSupport || mu2.size() > kMaxSupport)
        throw UsageError("w0_exact: supports are limited to 2000 points");
    const Eigen::MatrixXd full = cost_matrix(mu1, mu2, norm);
    const Reduced r1 = positive_part(mu1.weights());
    const Reduced r2 = positive_part(mu2.weights());
    const auto m = static_cast<Eigen::Index>(r1.index.size());
    const auto n = static_cast<Eigen::Index>(r2.index.size());
    Eigen::MatrixXd c(m, n);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j)
            c(i, j) = full(static_cast<Eigen::Index>(r1.index[static_cast<std::size_t>(i)]),
                           static_cast<Eigen::Index>(r2.index[static_cast<std::size_t>(j)]));
    }
    // Balance the two totals exactly in floating point.
    const Eigen::VectorXd a = r1.weights / r1.weights.sum();
    const Eigen::VectorXd b = r2.weights / r2.weights.sum();

    NetworkSimplex ns(c, a, b);
    W0Result res;
    res.iterations = ns.run();
    if (ns.artificial_flow() > 1e-9)
        throw UsageError("w0_exact: marginals cannot be matched (infeasible normalization)");

    res.plan.rows = mu1.size();
    res.plan.cols = mu2.size();
    double cost = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double f = ns.flow(i, j);
            if (f > 0.0) {
                res.plan.entries.push_back({r1.index[static_cast<std::size_t>(i)],
                                            r2.index[static_cast<std::size_t>(j)], f});
                cost += f * c(i, j);
            }
        }
    }
    res.cost = cost;
    res.plan.cost = cost;
    res.dual_value = dual_objective(c, a, b, ns.row_potentials());
    res.duality_gap = cost - res.dual_value;
    return res;
}

W0Result w0_sinkhorn(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                     const WeightedNorm& norm, double epsilon)
{
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw UsageError("w0_sinkhorn: epsilon must be positive");
    const Eigen::MatrixXd c = cost_matrix(mu1, mu2, norm);
    const Eigen::VectorXd& a = mu1.weights();
    const Eigen::VectorXd& b = mu2.weights();
    const Eigen::Index m = c.rows(), n = c.cols();
    const double neg_inf = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd loga = a.array().log(), logb = b.array().log();
    for (Eigen::Index i = 0; i < m; ++i)
        if (a[i] == 0.0)
            loga[i] = neg_inf;
    for (Eigen::Index j = 0; j < n; ++j)
        if (b[j] == 0.0)
            logb[j] = neg_inf;

    Eigen::VectorXd f = Eigen::VectorXd::Zero(m), g = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd work(m, n);
    Eigen::VectorXd row(n), col(m);

    auto update_f = [&](double eps) {
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j < n; ++j)
                row[j] = logb[j] + (g[j] - c(i, j)) / eps;
            f[i] = -eps * logsumexp(row.data(), n, 1);
        }
    };
    auto update_g = [&](double eps) {
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < m; ++i)
                col[i] = loga[i] + (f[i] - c(i, j)) / eps;
            g[j] = -eps * logsumexp(col.data(), m, 1);
        }
    };
    auto plan = [&](double eps) {
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < m; ++i)
                work(i, j) = std::exp(loga[i] + logb[j] + (f[i] + g[j] - c(i, j)) / eps);
    };
    auto clamp_inf = [](Eigen::VectorXd& v) {
        for (Eigen::Index k = 0; k < v.size(); ++k)
            if (!std::isfinite(v[k]))
                v[k] = 0.0;
    };

    const double cmax = std::max(c.maxCoeff(), epsilon);
    std::size_t total = 0;
    for (double eps = cmax; eps > epsilon; eps *= 0.5) {
        for (int k = 0; k < 10; ++k) {
            update_f(eps);
            clamp_inf(f);
            update_g(eps);
            clamp_inf(g);
            ++total;
        }
    }
    std::size_t it = 0;
    double err = std::numeric_limits<double>::infinity();
    for (; it < kSinkhornMaxIter; ++it) {
        update_f(epsilon);
        clamp_inf(f);
        update_g(epsilon);
        clamp_inf(g);
        if (it % 10 == 9 || it + 1 == kSinkhornMaxIter) {
            plan(epsilon);
            err = (work.rowwise().sum() - a).lpNorm<1>();
            if (err < kSinkhornTarget)
                break;
        }
    }
    if (!(err < kSinkhornTarget))
        throw SolverError("Sinkhorn did not reach the marginal tolerance in 1e5 iterations");
    total += it + 1;

    // Rounding onto the transport polytope.
    Eigen::MatrixXd& p = work;
    const Eigen::VectorXd r = p.rowwise().sum();
    for (Eigen::Index i = 0; i < m; ++i)
        if (r[i] > a[i])
            p.row(i) *= a[i] / r[i];
    const Eigen::VectorXd cs = p.colwise().sum().transpose();
    for (Eigen::Index j = 0; j < n; ++j)
        if (cs[j] > b[j])
            p.col(j) *= b[j] / cs[j];
    const Eigen::VectorXd er = a - p.rowwise().sum();
    const Eigen::VectorXd ec = b - p.colwise().sum().transpose();
    const double mass = er.sum();
    if (mass > 0.0)
        p.noalias() += er * ec.transpose() / mass;

    W0Result res;
    res.iterations = total;
    res.plan.rows = static_cast<std::size_t>(m);
    res.plan.cols = static_cast<std::size_t>(n);
    double cost = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (p(i, j) > 0.0) {
                res.plan.entries.push_back(
                    {static_cast<std::size_t>(i), static_cast<std::size_t>(j), p(i, j)});
                cost += p(i, j) * c(i, j);
            }
        }
    }
    res.cost = cost;
    res.plan.cost = cost;
    Eigen::VectorXd u = f;
    for (Eigen::Index i = 0; i < m; ++i)
        if (a[i] == 0.0)
            u[i] = 0.0;
    res.dual_value = dual_objective(c, a, b, u);
    res.duality_gap = cost - res.dual_value;
    return res;
}

void write_plan_csv(const std::filesystem::path& path, const TransportPlan& plan)
{
    std::ostringstream os;
    os << std::setprecision(17) << "i,j,mass\n";
    for (const auto& e : plan.entries)
        os << e.i << ',' << e.j << ',' << e.mass << '\n';
    write_atomic(path, os.str());
}

}  // namespace hlab
