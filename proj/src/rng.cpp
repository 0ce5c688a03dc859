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

#include "hlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace hlab {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

// Tag in the top bit of the block index separating uniforms from normals.
constexpr std::uint64_t kUniformTag = std::uint64_t{1} << 63;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline double to_open_unit(std::uint32_t a, std::uint32_t b)
{
    // 53 random bits, shifted half an ulp away from 0.
    const std::uint64_t bits = (static_cast<std::uint64_t>(a >> 5) << 26) | (b >> 6);
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::apply(Counter ctr, Key key)
{
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kW0;
            key[1] += kW1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, ctr[0], hi0, lo0);
        mulhilo(kM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view job)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : job) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(master ^ splitmix64(h));
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t replicate)
    : seed_(seed),
      replicate_(replicate),
      key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}
{
}

std::array<double, 2> NormalStream::block(std::uint64_t index)
{
    if (index == cached_block_)
        return cached_;
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(replicate_),
                                  static_cast<std::uint32_t>(replicate_ >> 32),
                                  static_cast<std::uint32_t>(index),
                                  static_cast<std::uint32_t>(index >> 32)};
    const auto r = Philox4x32::apply(ctr, key_);
    const double u1 = to_open_unit(r[0], r[1]);
    const double u2 = to_open_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_block_ = index;
    cached_ = {radius * std::cos(angle), radius * std::sin(angle)};
    return cached_;
}

void NormalStream::fill(std::uint64_t first, std::span<double> out)
{
    for (std::size_t k = 0; k < out.size(); ++k) {
        const std::uint64_t idx = first + k;
        out[k] = block(idx >> 1)[idx & 1];
    }
}

double NormalStream::uniform(std::uint64_t index)
{
    const std::uint64_t b = index | kUniformTag;
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(replicate_),
                                  static_cast<std::uint32_t>(replicate_ >> 32),
                                  static_cast<std::uint32_t>(b),
                                  static_cast<std::uint32_t>(b >> 32)};
    const auto r = Philox4x32::apply(ctr, key_);
    return to_open_unit(r[0], r[1]);
}

}  // namespace hlab
