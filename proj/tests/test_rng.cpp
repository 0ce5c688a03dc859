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


#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "hlab/rng.hpp"

using namespace hlab;

TEST_CASE("philox known answers")
{
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::apply(C{0, 0, 0, 0}, K{0, 0}) ==
          C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::apply(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                            K{0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::apply(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                            K{0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("normal stream is a pure function of seed, replicate and index")
{
    NormalStream a(42, 7), b(42, 7);
    std::vector<double> xa(101), xb(101);
    a.fill(0, xa);
    for (std::size_t k = 101; k-- > 0;)
        xb[k] = b.block(k >> 1)[k & 1];
    CHECK(xa == xb);

    std::vector<double> tail(40);
    NormalStream c(42, 7);
    c.fill(61, tail);
    for (std::size_t k = 0; k < 40; ++k)
        CHECK(tail[k] == xa[61 + k]);
}

TEST_CASE("different replicates and seeds give different draws")
{
    std::set<double> firsts;
    for (std::uint64_t r = 0; r < 64; ++r)
        firsts.insert(NormalStream(1, r).block(0)[0]);
    for (std::uint64_t s = 2; s < 66; ++s)
        firsts.insert(NormalStream(s, 0).block(0)[0]);
    CHECK(firsts.size() == 128);
}

TEST_CASE("normal draws have standard moments")
{
    NormalStream s(2024, 3);
    const std::size_t n = 400000;
    std::vector<double> x(n);
    s.fill(0, x);
    double m1 = 0, m2 = 0, m3 = 0, m4 = 0, lag = 0;
    for (std::size_t i = 0; i < n; ++i) {
        m1 += x[i];
        m2 += x[i] * x[i];
        m3 += x[i] * x[i] * x[i];
        m4 += x[i] * x[i] * x[i] * x[i];
        if (i > 0)
            lag += x[i] * x[i - 1];
    }
    const double N = double(n);
    CHECK(std::abs(m1 / N) < 5.0 / std::sqrt(N));
    CHECK(std::abs(m2 / N - 1.0) < 5.0 * std::sqrt(2.0 / N));
    CHECK(std::abs(m3 / N) < 5.0 * std::sqrt(15.0 / N));
    CHECK(std::abs(m4 / N - 3.0) < 5.0 * std::sqrt(96.0 / N));
    CHECK(std::abs(lag / N) < 5.0 / std::sqrt(N));
}

TEST_CASE("uniforms lie in the open unit interval and are independent of normals")
{
    NormalStream s(9, 1);
    double sum = 0;
    for (std::uint64_t i = 0; i < 100000; ++i) {
        const double u = s.uniform(i);
        CHECK_UNARY(u > 0.0);
        CHECK_UNARY(u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / 1e5 - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / 1e5));
    const double n0 = s.block(0)[0];
    (void)s.uniform(0);
    CHECK(NormalStream(9, 1).block(0)[0] == n0);
}

TEST_CASE("derived seeds depend on the master seed and the job name")
{
    CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
    CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    CHECK(derive_seed(1, "job/1") != derive_seed(1, "job/10"));
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
}
