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
#include <vector>

#include "hlab/engine.hpp"
#include "hlab/model.hpp"
#include "hlab/test_function.hpp"

namespace hlab {

inline constexpr double kCi95 = 1.96;
inline constexpr std::size_t kMinSamples = 100;

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;  // sample standard deviation / sqrt(n)
    std::size_t n = 0;
    double ci95 = 0.0;       // 1.96 * std_error
};

/// Mean and standard error by pairwise summation (order fixed by the input order).
MCEstimate summarize(std::span<const double> values);

/// Endpoints of n replicates recorded at several times.
///
/// Replicate r uses NormalStream(cfg.seed, r), so two samples taken with the same seed
/// from different starting points are driven by common random numbers.
class EndpointSample {
public:
    EndpointSample(std::size_t n, std::size_t dim, std::vector<double> times);

    std::size_t n() const { return n_; }
    std::size_t dim() const { return dim_; }
    const std::vector<double>& times() const { return times_; }
    std::size_t time_index(double t) const;

    std::span<const double> at(std::size_t replicate, std::size_t time) const
    {
        return {data_.data() + (replicate * times_.size() + time) * dim_, dim_};
    }
    std::span<double> at(std::size_t replicate, std::size_t time)
    {
        return {data_.data() + (replicate * times_.size() + time) * dim_, dim_};
    }

    /// Values fn(X_t^r) for every replicate r.
    template <class Fn>
    std::vector<double> map(std::size_t time, Fn&& fn) const
    {
        std::vector<double> v(n_);
        for (std::size_t r = 0; r < n_; ++r)
            v[r] = fn(at(r, time));
        return v;
    }

private:
    std::size_t n_;
    std::size_t dim_;
    std::vector<double> times_;
    std::vector<double> data_;
};

/// Simulates n replicates from x0 up to max(times) with cfg.dt and cfg.seed; every time
/// must lie on the step grid of [0, max(times)].
EndpointSample sample_endpoints(const DiffusionModel& m, std::span<const double> x0,
                                std::vector<double> times, std::size_t n, const SimConfig& cfg,
                                std::size_t workers = 1);

/// f(X_t) values; throws PositivityError if `log` is requested and some f(X_t) <= 0.
std::vector<double> evaluate(const EndpointSample& s, std::size_t time, const TestFunction& f,
                             bool log);

/// P_t f(x0) = E f(X_t).
MCEstimate estimate_semigroup(const DiffusionModel& m, std::span<const double> x0, double t,
                              const TestFunction& f, std::size_t n, const SimConfig& cfg,
                              std::size_t workers = 1);

/// P_t log f(x0). Requires f > 0 on every sampled endpoint.
MCEstimate estimate_log_semigroup(const DiffusionModel& m, std::span<const double> x0, double t,
                                  const TestFunction& f, std::size_t n, const SimConfig& cfg,
                                  std::size_t workers = 1);

/// E |sigma0^{-1}(X_t - Y_t)|^2 under synchronous coupling, one replicate per sample.
MCEstimate estimate_coupled_distance(const DiffusionModel& m, std::span<const double> x,
                                     std::span<const double> y, double t, std::size_t n,
                                     const SimConfig& cfg, std::size_t workers = 1);
MCEstimate estimate_coupled_distance(const GalerkinModel& g, std::span<const double> x,
                                     std::span<const double> y, double t, std::size_t n,
                                     const SimConfig& cfg, std::size_t workers = 1);

}  // namespace hlab
