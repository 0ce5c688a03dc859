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

#include "hlab/presets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hlab/errors.hpp"

namespace hlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double logistic(double z)
{
    return 1.0 / (1.0 + std::exp(-z));
}

std::size_t as_count(double v, const char* what)
{
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e6)
        throw ConfigError(std::string("parameter '") + what + "' must be a positive integer");
    return static_cast<std::size_t>(v);
}

PresetInfo ou_info()
{
    PresetInfo p;
    p.name = "ou";
    p.family = "ou";
    p.description = "Ornstein-Uhlenbeck: b(x) = -theta x, sigma = sigma I, sigma0 = sigma";
    p.params = {{"theta", 0.5, "mean-reversion rate"},
                {"sigma", 1.0, "constant noise level"},
                {"dim", 1.0, "state dimension"},
                {"K", kNaN, "dissipativity constant (default -2 theta)"}};
    p.exercises = "log-Harnack (MC and oracle), sharpness of the constant, coupling contraction, "
                  "gradient estimate, DD identity, strong-Feller modulus, heat-kernel entropy, "
                  "entropy-cost";
    return p;
}

PresetInfo brownian_info()
{
    PresetInfo p;
    p.name = "brownian";
    p.family = "brownian";
    p.description = "Scaled Brownian motion: b = 0, sigma = sigma I";
    p.params = {{"sigma", 1.0, "constant noise level"},
                {"dim", 1.0, "state dimension"},
                {"K", kNaN, "dissipativity constant (default 0)"}};
    p.exercises = "oracle solver checks";
    return p;
}

PresetInfo tanh_info()
{
    PresetInfo p;
    p.name = "tanh_perturbed";
    p.family = "tanh_perturbed";
    p.description = "1-D multiplicative noise: b(x) = -theta x, "
                    "sigma(x) = scale (1 + amplitude tanh x)";
    p.params = {{"theta", 1.0, "drift rate"},
                {"scale", 1.0, "noise scale"},
                {"amplitude", 0.1, "tanh modulation (|amplitude| < 1)"},
                {"sigma0", kNaN, "reference level (default scale (1 - |amplitude|))"},
                {"K", kNaN, "dissipativity constant (default (scale amplitude)^2 - 2 theta)"}};
    p.exercises = "log-Harnack (MC and oracle), coupling contraction, gradient estimate, "
                  "DD identity, heat-kernel entropy, entropy-cost";
    return p;
}

PresetInfo galerkin_info()
{
    PresetInfo p;
    p.name = "galerkin_heat";
    p.family = "galerkin_heat";
    p.description = "Galerkin truncation of a heat equation with multiplicative noise: "
                    "lambda_i = pi^2 i^2, q_i = (1 + lambda_i)^-decay";
    p.params = {{"level", 16.0, "truncation level n"},
                {"decay", 0.3, "weight decay exponent"},
                {"drift_amplitude", 0.5, "F(x)_i = a logistic(x_i) (1+i)^-2"},
                {"sigma1_amplitude", 0.1, "sigma1(x) = s (offset + tanh x_1) e_1 (x) e_1"},
                {"sigma1_offset", 1.0, "offset keeping sigma1 >= 0"},
                {"K", kNaN, "dissipativity constant (default: certified by estimate_K)"}};
    p.exercises = "Galerkin convergence, coupling contraction";
    p.galerkin = true;
    return p;
}

const ParamSpec* find_param(const PresetInfo& info, const std::string& key)
{
    for (const auto& spec : info.params) {
        if (spec.name == key)
            return &spec;
    }
    return nullptr;
}

}  // namespace

//---------------------------------------------------------------------------//

DiffusionModel make_ou(double theta, double sigma, std::size_t dim)
{
    if (!std::isfinite(theta) || !(sigma > 0.0) || dim == 0)
        throw UsageError("ou: need finite theta, sigma > 0, dim >= 1");
    auto drift = [theta](std::span<const double> x, std::span<double> out) {
        for (std::size_t i = 0; i < x.size(); ++i)
            out[i] = -theta * x[i];
    };
    auto diffusion = [sigma, dim](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < dim; ++i)
            out[i * dim + i] = sigma;
    };
    DiffusionModel::Traits traits{true, true};
    const auto n = static_cast<Eigen::Index>(dim);
    return DiffusionModel("ou", dim, drift, diffusion, Eigen::VectorXd::Constant(n, sigma),
                          -2.0 * theta, traits);
}

DiffusionModel make_brownian(double sigma, std::size_t dim)
{
    if (!(sigma > 0.0) || dim == 0)
        throw UsageError("brownian: need sigma > 0, dim >= 1");
    auto drift = [](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
    auto diffusion = [sigma, dim](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < dim; ++i)
            out[i * dim + i] = sigma;
    };
    DiffusionModel::Traits traits{true, true};
    const auto n = static_cast<Eigen::Index>(dim);
    return DiffusionModel("brownian", dim, drift, diffusion, Eigen::VectorXd::Constant(n, sigma),
                          0.0, traits);
}

DiffusionModel make_tanh_perturbed(double theta, double scale, double amplitude, double sigma0)
{
    if (!std::isfinite(theta) || !(scale > 0.0) || !(std::abs(amplitude) < 1.0))
        throw UsageError("tanh_perturbed: need finite theta, scale > 0, |amplitude| < 1");
    auto drift = [theta](std::span<const double> x, std::span<double> out) {
        out[0] = -theta * x[0];
    };
    auto diffusion = [scale, amplitude](std::span<const double> x, std::span<double> out) {
        out[0] = scale * (1.0 + amplitude * std::tanh(x[0]));
    };
    const double sa = scale * amplitude;
    DiffusionModel::Traits traits{amplitude == 0.0, true};
    DiffusionModel m("tanh_perturbed", 1, drift, diffusion, Eigen::VectorXd::Constant(1, sigma0),
                     sa * sa - 2.0 * theta, traits);
    return m;
}

double galerkin_weight_series(double decay)
{
    if (!(decay > -0.25))
        throw UsageError("galerkin_heat: decay must exceed -1/4 for a finite weight series");
    // Terms behave like (pi^2 i^2)^(-p) with p = 1 + 2 decay > 1/2.
    const double p = 1.0 + 2.0 * decay;
    const double pi2 = std::numbers::pi * std::numbers::pi;
    constexpr int kTerms = 200000;
    double sum = 0.0;
    for (int i = kTerms; i >= 1; --i)
        sum += std::pow(1.0 + pi2 * i * i, -p);
    // Integral tail of (pi^2 x^2)^(-p) from kTerms + 1/2.
    const double a = kTerms + 0.5;
    sum += std::pow(pi2, -p) * std::pow(a, 1.0 - 2.0 * p) / (2.0 * p - 1.0);
    return sum;
}

GalerkinModel make_galerkin_heat(const GalerkinHeatParams& p, double K_override)
{
    if (p.level == 0)
        throw UsageError("galerkin_heat: level must be positive");
    if (!std::isfinite(galerkin_weight_series(p.decay)))
        throw UsageError("galerkin_heat: weight series diverges");
    const auto n = static_cast<Eigen::Index>(p.level);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    Eigen::VectorXd lambda(n), q(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double k = static_cast<double>(i + 1);
        lambda[i] = pi2 * k * k;
        q[i] = std::pow(1.0 + lambda[i], -p.decay);
    }
    const double fa = p.drift_amplitude;
    const double sa = p.sigma1_amplitude;
    const double so = p.sigma1_offset;
    if (!std::isfinite(fa) || !std::isfinite(sa) || !std::isfinite(so))
        throw UsageError("galerkin_heat: amplitudes must be finite");
    auto F = [fa](std::span<const double> x, std::span<double> out) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double k = static_cast<double>(i + 2);
            out[i] = fa * logistic(x[i]) / (k * k);
        }
    };
    SparseMatrixField sigma1;
    if (sa != 0.0) {
        sigma1.entries = {{0, 0}};
        sigma1.values = [sa, so](std::span<const double> x, std::span<double> out) {
            out[0] = sa * (so + std::tanh(x[0]));
        };
    }
    const bool linear = (fa == 0.0 && sa == 0.0);
    GalerkinModel g("galerkin_heat", lambda, q, F, sigma1, 0.0, linear);
    if (std::isfinite(K_override))
        return g.with_K(K_override);
    if (linear)
        return g;
    const KEstimate K = estimate_K(g, Box::cube(p.level, -2.0, 2.0), 256, 0x5eed5eedULL);
    return g.with_K(K.value);
}

//---------------------------------------------------------------------------//

PresetRegistry PresetRegistry::builtin()
{
    PresetRegistry r;
    r.presets_ = {ou_info(), brownian_info(), tanh_info(), galerkin_info()};
    return r;
}

bool PresetRegistry::contains(const std::string& name) const
{
    return std::any_of(presets_.begin(), presets_.end(),
                       [&](const PresetInfo& p) { return p.name == name; });
}

const PresetInfo& PresetRegistry::find(const std::string& name) const
{
    for (const auto& p : presets_) {
        if (p.name == name)
            return p;
    }
    throw ConfigError("unknown preset '" + name + "'");
}

std::vector<PresetInfo> PresetRegistry::list() const
{
    return presets_;
}

void PresetRegistry::load_user_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read preset file '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("preset file '" + path.string() + "': " + e.what());
    }
    if (!doc.is_object())
        throw ConfigError("preset file must hold a JSON object");
    for (const auto& [key, _] : doc.items()) {
        if (key != "presets")
            throw ConfigError("preset file: unknown key '" + key + "'");
    }
    if (!doc.contains("presets"))
        return;
    if (!doc["presets"].is_array())
        throw ConfigError("preset file: 'presets' must be an array");
    for (const auto& entry : doc["presets"]) {
        if (!entry.is_object())
            throw ConfigError("preset file: each preset must be an object");
        for (const auto& [key, _] : entry.items()) {
            if (key != "name" && key != "family" && key != "params" && key != "description")
                throw ConfigError("preset file: unknown key '" + key + "'");
        }
        if (!entry.contains("name") || !entry["name"].is_string() || !entry.contains("family") ||
            !entry["family"].is_string())
            throw ConfigError("preset file: each preset needs string 'name' and 'family'");
        const std::string name = entry["name"];
        const std::string family = entry["family"];
        if (contains(name))
            throw ConfigError("preset file: duplicate preset '" + name + "'");
        const PresetInfo& base = find(family);
        if (!base.builtin)
            throw ConfigError("preset file: family '" + family + "' is not a built-in family");
        PresetInfo info = base;
        info.name = name;
        info.builtin = false;
        info.exercises = "user-defined";
        info.description = entry.value("description", std::string("alias of ") + family);
        if (entry.contains("params")) {
            if (!entry["params"].is_object())
                throw ConfigError("preset file: 'params' must be an object");
            for (const auto& [key, value] : entry["params"].items()) {
                if (!find_param(base, key))
                    throw ConfigError("preset '" + name + "': unknown parameter '" + key + "'");
                if (!value.is_number() || !std::isfinite(value.get<double>()))
                    throw ConfigError("preset '" + name + "': parameter '" + key +
                                      "' must be a finite number");
                info.overrides[key] = value.get<double>();
            }
        }
        presets_.push_back(std::move(info));
    }
}

ParamMap PresetRegistry::resolve(const std::string& name, const ParamMap& params) const
{
    const PresetInfo& info = find(name);
    ParamMap out;
    for (const auto& spec : info.params)
        out[spec.name] = spec.default_value;
    for (const auto& [k, v] : info.overrides)
        out[k] = v;
    for (const auto& [k, v] : params) {
        if (!find_param(info, k))
            throw ConfigError("preset '" + name + "': unknown parameter '" + k + "'");
        if (!std::isfinite(v))
            throw ConfigError("preset '" + name + "': parameter '" + k + "' must be finite");
        out[k] = v;
    }
    return out;
}

DiffusionModel PresetRegistry::make_diffusion(const std::string& name,
                                              const ParamMap& params) const
{
    const PresetInfo& info = find(name);
    const ParamMap p = resolve(name, params);
    const double K = p.at("K");
    auto finish = [&](DiffusionModel m) {
        m.check_invariants(Box::cube(m.dim(), -5.0, 5.0), 200, 17);
        return std::isfinite(K) ? m.with_K(K) : m;
    };
    if (info.family == "ou")
        return finish(make_ou(p.at("theta"), p.at("sigma"), as_count(p.at("dim"), "dim")));
    if (info.family == "brownian")
        return finish(make_brownian(p.at("sigma"), as_count(p.at("dim"), "dim")));
    if (info.family == "tanh_perturbed") {
        const double scale = p.at("scale");
        const double amp = p.at("amplitude");
        double s0 = p.at("sigma0");
        if (!std::isfinite(s0))
            s0 = scale * (1.0 - std::abs(amp));
        return finish(make_tanh_perturbed(p.at("theta"), scale, amp, s0));
    }
    if (info.galerkin)
        throw ConfigError("preset '" + name + "' is a Galerkin family; use a Galerkin verification");
    throw ConfigError("unknown preset '" + name + "'");
}

GalerkinModel PresetRegistry::make_galerkin(const std::string& name, const ParamMap& params) const
{
    const PresetInfo& info = find(name);
    if (!info.galerkin)
        throw ConfigError("preset '" + name + "' is not a Galerkin family");
    const ParamMap p = resolve(name, params);
    GalerkinModel g = make_galerkin_heat(galerkin_params(name, params), p.at("K"));
    g.check_invariants(Box::cube(g.level(), -3.0, 3.0), 32, 17);
    return g;
}

GalerkinHeatParams PresetRegistry::galerkin_params(const std::string& name,
                                                   const ParamMap& params) const
{
    if (!find(name).galerkin)
        throw ConfigError("preset '" + name + "' is not a Galerkin family");
    const ParamMap p = resolve(name, params);
    GalerkinHeatParams gp;
    gp.level = as_count(p.at("level"), "level");
    gp.decay = p.at("decay");
    gp.drift_amplitude = p.at("drift_amplitude");
    gp.sigma1_amplitude = p.at("sigma1_amplitude");
    gp.sigma1_offset = p.at("sigma1_offset");
    return gp;
}

std::string PresetRegistry::describe() const
{
    std::ostringstream os;
    auto section = [&](bool builtin) {
        for (const auto& p : presets_) {
            if (p.builtin != builtin)
                continue;
            os << "  " << p.name;
            if (!builtin)
                os << "  (family " << p.family << ")";
            os << "\n      " << p.description << "\n";
            for (const auto& spec : p.params) {
                os << "      " << spec.name << " = ";
                auto it = p.overrides.find(spec.name);
                const double v = it != p.overrides.end() ? it->second : spec.default_value;
                if (std::isfinite(v))
                    os << v;
                else
                    os << "(derived)";
                os << "    " << spec.description << "\n";
            }
            os << "      exercises: " << p.exercises << "\n";
        }
    };
    os << "Built-in presets:\n";
    section(true);
    const bool any_user = std::any_of(presets_.begin(), presets_.end(),
                                      [](const PresetInfo& p) { return !p.builtin; });
    if (any_user) {
        os << "User presets:\n";
        section(false);
    }
    return os.str();
}

}  // namespace hlab
