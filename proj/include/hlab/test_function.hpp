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

#include <cmath>
#include <span>
#include <string>

namespace hlab {

/// Scalar test function of the first state coordinate,
///     f(x) = scale * g(x_1) + offset + floor,
/// with g one of the shipped shapes.
///
/// `floor` keeps nonnegative shapes strictly positive so that log f is defined; it
/// defaults to 1e-8 for quadratic and logistic shapes with zero offset, 0 otherwise.
class TestFunction {
public:
    enum class Kind { exponential, affine, quadratic, logistic, constant };

    static TestFunction exponential(double lambda, double scale = 1.0, double offset = 0.0);
    /// a z + b
    static TestFunction affine(double a, double b = 0.0);
    static TestFunction quadratic(double scale = 1.0, double offset = 0.0);
    static TestFunction logistic(double scale = 1.0, double offset = 0.0);
    static TestFunction constant(double c);

    /// Same function multiplied by c > 0 (floor included).
    TestFunction scaled(double c) const;
    TestFunction with_floor(double floor) const;

    Kind kind() const { return kind_; }
    double rate() const { return rate_; }
    double scale() const { return scale_; }
    double offset() const { return offset_; }
    double floor() const { return floor_; }

    double operator()(double z) const;
    double operator()(std::span<const double> x) const { return (*this)(x[0]); }
    double derivative(double z) const;

    /// sup |f|, +inf for unbounded kinds.
    double sup_norm() const;
    /// inf f over the real line, -inf when unbounded below.
    double lower_bound() const;
    /// f(z) > 0 for every z (e^z qualifies although its infimum is 0).
    bool strictly_positive() const;
    bool bounded() const;

    /// Short identifier such as "exp(1)+1" used in report names.
    std::string name() const;

private:
    TestFunction(Kind kind, double rate, double scale, double offset, double floor);

    Kind kind_;
    double rate_;
    double scale_;
    double offset_;
    double floor_;
};

const char* to_string(TestFunction::Kind k);

inline double logistic(double z)
{
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace hlab
