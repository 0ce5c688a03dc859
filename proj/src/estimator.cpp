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

#include "hlab/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "hlab/errors.hpp"
#include "hlab/parallel.hpp"

namespace hlab {

namespace {

void require_samples(std::size_t n)
{
    if (n < kMinSamples)
        throw UsageError("Monte Carlo estimates need at least 100 samples");
}

SimConfig horizon(const SimConfig& cfg, double t)
{
    SimConfig c = cfg;
    c.t_final = t;
    c.validate();
    return c;
}

template <class Model>
MCEstimate coupled_distance(const Model& m, std::span<const double> x,
                            std::span<const double> y, double t, std::size_t n,
                            const SimConfig& cfg, std::size_t workers)
{
    require_samples(n);
    const SimConfig c = horizon(cfg, t);
    std::vector<double> v(n);
    parallel_for(n, workers, [&](std::size_t r) {
        NormalStream rng(c.seed, r);
        const CoupledEndpoint e = simulate_coupled(m, x, y, c, rng);
        v[r] = weighted_norm_sq(Eigen::VectorXd(e.x_end - e.y_end), m.norm());
    });
    return summarize(v);
}

}  // namespace

MCEstimate summarize(std::span<const double> values)
{
    MCEstimate e;
    e.n = values.size();
    if (e.n == 0)
        throw UsageError("summarize: no samples");
    e.mean = pairwise_sum(values) / static_cast<double>(e.n);
    if (e.n > 1) {
        std::vector<double> sq(values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
            sq[i] = (values[i] - e.mean) * (values[i] - e.mean);
        const double var = pairwise_sum(sq) / static_cast<double>(e.n - 1);
        e.std_error = std::sqrt(var / static_cast<double>(e.n));
    }
    e.ci95 = kCi95 * e.std_error;
    return e;
}

EndpointSample::EndpointSample(std::size_t n, std::size_t dim, std::vector<double> times)
    : n_(n), dim_(dim), times_(std::move(times)), data_(n * dim * times_.size())
{
}

std::size_t EndpointSample::time_index(double t) const
{
    for (std::size_t k = 0; k < times_.size(); ++k) {
        if (std::abs(times_[k] - t) <= 1e-12 * std::max(1.0, t))
            return k;
    }
    throw UsageError("endpoint sample does not contain the requested time");
}

EndpointSample sample_endpoints(const DiffusionModel& m, std::span<const double> x0,
                                std::vector<double> times, std::size_t n, const SimConfig& cfg,
                                std::size_t workers)
{
    require_samples(n);
    if (times.empty())
        throw UsageError("sample_endpoints: no times");
    std::sort(times.begin(), times.end());
    const SimConfig c = horizon(cfg, times.back());
    std::vector<std::size_t> steps(times.size());
    for (std::size_t k = 0; k < times.size(); ++k)
        steps[k] = c.steps_to(times[k]);
    EndpointSample s(n, m.dim(), times);
    const std::size_t stride = m.dim() * times.size();
    parallel_for(n, workers, [&](std::size_t r) {
        NormalStream rng(c.seed, r);
        simulate_snapshots(m, x0, c, steps, rng, {s.at(r, 0).data(), stride});
    });
    return s;
}

std::vector<double> evaluate(const EndpointSample& s, std::size_t time, const TestFunction& f,
                             bool log)
{
    std::vector<double> v = s.map(time, [&](std::span<const double> x) { return f(x); });
    if (log) {
        for (double& a : v) {
            if (!(a > 0.0))
                throw PositivityError("test function " + f.name() +
                                      " is not strictly positive on a sampled endpoint");
            a = std::log(a);
        }
    }
    return v;
}

MCEstimate estimate_semigroup(const DiffusionModel& m, std::span<const double> x0, double t,
                              const TestFunction& f, std::size_t n, const SimConfig& cfg,
                              std::size_t workers)
{
    const EndpointSample s = sample_endpoints(m, x0, {t}, n, cfg, workers);
    return summarize(evaluate(s, 0, f, false));
}

MCEstimate estimate_log_semigroup(const DiffusionModel& m, std::span<const double> x0, double t,
                                  const TestFunction& f, std::size_t n, const SimConfig& cfg,
                                  std::size_t workers)
{
    const EndpointSample s = sample_endpoints(m, x0, {t}, n, cfg, workers);
    return summarize(evaluate(s, 0, f, true));
}

MCEstimate estimate_coupled_distance(const DiffusionModel& m, std::span<const double> x,
                                     std::span<const double> y, double t, std::size_t n,
                                     const SimConfig& cfg, std::size_t workers)
{
    return coupled_distance(m, x, y, t, n, cfg, workers);
}

MCEstimate estimate_coupled_distance(const GalerkinModel& g, std::span<const double> x,
                                     std::span<const double> y, double t, std::size_t n,
                                     const SimConfig& cfg, std::size_t workers)
{
    return coupled_distance(g, x, y, t, n, cfg, workers);
}

}  // namespace hlab
