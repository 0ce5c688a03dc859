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
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "hlab/model.hpp"

namespace hlab {

using ParamMap = std::map<std::string, double>;

struct GalerkinHeatParams;

struct ParamSpec {
    std::string name;
    double default_value;  // NaN: derived from the other parameters
    std::string description;
};

struct PresetInfo {
    std::string name;
    std::string family;
    std::string description;
    std::vector<ParamSpec> params;
    std::string exercises;  // which verifications the bundled configs run on it
    ParamMap overrides;     // user presets: fixed parameter values on top of the family defaults
    bool builtin = true;
    bool galerkin = false;
};

/// Named model families plus optional user aliases loaded from a JSON file.
///
/// A user preset file looks like
///   {"presets": [{"name": "slow_ou", "family": "ou", "params": {"theta": 0.1},
///                 "description": "..."}]}
class PresetRegistry {
public:
    /// Registry holding only the built-in families.
    static PresetRegistry builtin();

    /// Adds every preset listed in a user file. Throws ConfigError on duplicates,
    /// unknown families or unknown parameter names.
    void load_user_file(const std::filesystem::path& path);

    bool contains(const std::string& name) const;
    /// Throws ConfigError("unknown preset '<name>'").
    const PresetInfo& find(const std::string& name) const;
    std::vector<PresetInfo> list() const;

    /// Parameters after applying family defaults, user overrides, then `params`.
    /// Unknown keys raise ConfigError naming the key.
    ParamMap resolve(const std::string& name, const ParamMap& params) const;

    DiffusionModel make_diffusion(const std::string& name, const ParamMap& params) const;
    GalerkinModel make_galerkin(const std::string& name, const ParamMap& params) const;
    /// Resolved galerkin_heat parameters (the K entry is ignored).
    GalerkinHeatParams galerkin_params(const std::string& name, const ParamMap& params) const;

    /// Human-readable listing for `hlab list-presets`.
    std::string describe() const;

private:
    std::vector<PresetInfo> presets_;
};

// Family constructors, also usable without a registry.
DiffusionModel make_ou(double theta, double sigma, std::size_t dim = 1);
DiffusionModel make_brownian(double sigma, std::size_t dim = 1);
/// b(x) = -theta x, sigma(x) = scale (1 + amplitude tanh x), reference sigma0 given explicitly.
DiffusionModel make_tanh_perturbed(double theta, double scale, double amplitude, double sigma0);

struct GalerkinHeatParams {
    std::size_t level = 16;
    double decay = 0.3;              // q_i = (1 + lambda_i)^(-decay)
    double drift_amplitude = 0.5;    // F(x)_i = a logistic(x_i) (1 + i)^(-2)
    double sigma1_amplitude = 0.1;   // sigma1(x) = s (offset + tanh x_1) e_1 (x) e_1
    double sigma1_offset = 1.0;
};

/// Galerkin truncation with lambda_i = pi^2 i^2. K is certified with estimate_K unless
/// `K_override` is finite.
GalerkinModel make_galerkin_heat(const GalerkinHeatParams& p,
                                 double K_override = std::numeric_limits<double>::quiet_NaN());

/// sum_{i>=1} q_i^2 / (1 + lambda_i) for the galerkin_heat weight law (must be finite).
double galerkin_weight_series(double decay);

}  // namespace hlab
