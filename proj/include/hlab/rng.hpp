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

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace hlab {

/// Philox4x32-10 block function (Salmon et al., SC'11).
///
/// Stateless: maps a 128-bit counter and 64-bit key to 128 random bits.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter apply(Counter ctr, Key key);
};

/// 64-bit finaliser used to derive independent seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for a named job: deterministic function of (master seed, job name).
std::uint64_t derive_seed(std::uint64_t master, std::string_view job);

/// Standard normal draws addressed by an index inside one replicate's stream.
///
/// Normal `k` of replicate `r` under seed `s` is a pure function of (s, r, k), so a path
/// can be re-generated in any order and on any thread. Block `k / 2` of the counter space
/// produces normals 2(k/2) and 2(k/2)+1 by Box-Muller.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t replicate);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t replicate() const { return replicate_; }

    /// The two normals of one counter block.
    std::array<double, 2> block(std::uint64_t index);

    /// Normals first, first+1, ..., first+out.size()-1.
    void fill(std::uint64_t first, std::span<double> out);

    /// Uniform in (0, 1) from an independent part of the counter space.
    double uniform(std::uint64_t index);

private:
    std::uint64_t seed_;
    std::uint64_t replicate_;
    Philox4x32::Key key_;
    std::uint64_t cached_block_ = ~std::uint64_t{0};
    std::array<double, 2> cached_{};
};

}  // namespace hlab
