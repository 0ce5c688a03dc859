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

#include "hlab/suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "hlab/errors.hpp"
#include "hlab/oracle1d.hpp"
#include "hlab/parallel.hpp"
#include "hlab/rng.hpp"
#include "hlab/verify.hpp"

namespace hlab {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

const std::set<std::string> kTopKeys = {"name",    "description", "seed",  "model",
                                        "registry", "test_functions", "times", "pairs",
                                        "points",  "samples",     "dt",    "grid",
                                        "verifications", "output_dir"};

// Keys a verification entry may use, besides "type".
const std::map<std::string, std::set<std::string>> kVerificationKeys = {
    {"log_harnack", {"points", "pairs", "times", "test_functions", "samples", "dt"}},
    {"log_harnack_oracle", {"points", "pairs", "times", "test_functions", "grid", "tolerance"}},
    {"log_harnack_sharpness", {"y", "t", "test_functions", "d_range", "grid", "tolerance"}},
    {"coupling_contraction", {"pairs", "random_pairs", "t", "samples", "dt", "scheme"}},
    {"gradient_estimate", {"t", "test_functions", "grid", "equality", "equality_tolerance"}},
    {"dd_identity", {"t", "x", "s", "test_functions", "grid", "refine", "tolerance"}},
    {"feller_modulus", {"t", "x", "distances", "test_functions", "grid", "noise", "small_bound"}},
    {"heat_kernel_entropy", {"times", "x", "grid"}},
    {"entropy_cost", {"times", "densities", "grid"}},
    {"galerkin_convergence",
     {"levels", "x0", "t", "samples", "dt", "params", "ratio_max", "tail_factor", "scheme"}},
};

const std::map<std::string, std::string> kExercises = {
    {"log_harnack", "log-Harnack inequality (Monte Carlo)"},
    {"log_harnack_oracle", "log-Harnack inequality (backward solver)"},
    {"log_harnack_sharpness", "sharpness of the log-Harnack constant"},
    {"coupling_contraction", "synchronous coupling contraction"},
    {"gradient_estimate", "gradient estimate"},
    {"dd_identity", "entropy dissipation identity"},
    {"feller_modulus", "strong Feller modulus"},
    {"heat_kernel_entropy", "heat kernel entropy bound"},
    {"entropy_cost", "entropy-cost inequality"},
    {"galerkin_convergence", "Galerkin convergence"},
};

[[noreturn]] void bad(const std::string& where, const std::string& what)
{
    throw ConfigError(where + ": " + what);
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object())
        bad(where, "expected an object");
    for (const auto& [k, v] : j.items()) {
        if (!allowed.count(k))
            bad(where, "unknown key '" + k + "'");
    }
}

double number(const json& j, const std::string& where)
{
    if (!j.is_number())
        bad(where, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v))
        bad(where, "must be finite");
    return v;
}

std::size_t count(const json& j, const std::string& where)
{
    if (!j.is_number_integer() && !(j.is_number() && std::floor(j.get<double>()) == j.get<double>()))
        bad(where, "expected a nonnegative integer");
    const double v = j.get<double>();
    if (v < 0.0 || v > 1e12)
        bad(where, "expected a nonnegative integer");
    return static_cast<std::size_t>(v);
}

std::vector<double> numbers(const json& j, const std::string& where)
{
    if (!j.is_array())
        bad(where, "expected an array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i)
        v.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
    return v;
}

bool boolean(const json& j, const std::string& where)
{
    if (!j.is_boolean())
        bad(where, "expected true or false");
    return j.get<bool>();
}

TestFunction parse_test_function(const json& j, const std::string& where)
{
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        bad(where, "test function needs a string 'kind'");
    const std::string kind = j["kind"];
    auto get = [&](const char* key, double def) {
        return j.contains(key) ? number(j[key], where + "." + key) : def;
    };
    std::optional<TestFunction> f;
    if (kind == "exponential") {
        check_keys(j, {"kind", "lambda", "scale", "offset", "floor"}, where);
        f = TestFunction::exponential(get("lambda", 1.0), get("scale", 1.0), get("offset", 0.0));
    } else if (kind == "affine") {
        check_keys(j, {"kind", "a", "b"}, where);
        f = TestFunction::affine(get("a", 1.0), get("b", 0.0));
    } else if (kind == "quadratic") {
        check_keys(j, {"kind", "scale", "offset", "floor"}, where);
        f = TestFunction::quadratic(get("scale", 1.0), get("offset", 0.0));
    } else if (kind == "logistic") {
        check_keys(j, {"kind", "scale", "offset", "floor"}, where);
        f = TestFunction::logistic(get("scale", 1.0), get("offset", 0.0));
    } else if (kind == "constant") {
        check_keys(j, {"kind", "c"}, where);
        f = TestFunction::constant(get("c", 1.0));
    } else {
        bad(where, "unknown test function kind '" + kind + "'");
    }
    if (j.contains("floor")) {
        const double fl = number(j["floor"], where + ".floor");
        if (fl < 0.0)
            bad(where, "floor must be nonnegative");
        f = f->with_floor(fl);
    }
    return *f;
}

struct GridSpec {
    double lo = -8.0;
    double hi = 8.0;
    std::size_t points = 801;
    double dt_pde = 1e-3;

    Grid1D grid() const { return Grid1D(lo, hi, points); }
};

GridSpec parse_grid(const json& j, GridSpec g, const std::string& where)
{
    check_keys(j, {"lo", "hi", "points", "dt_pde"}, where);
    if (j.contains("lo"))
        g.lo = number(j["lo"], where + ".lo");
    if (j.contains("hi"))
        g.hi = number(j["hi"], where + ".hi");
    if (j.contains("points"))
        g.points = count(j["points"], where + ".points");
    if (j.contains("dt_pde"))
        g.dt_pde = number(j["dt_pde"], where + ".dt_pde");
    if (!(g.hi > g.lo) || g.points < 51 || !(g.dt_pde > 0.0))
        bad(where, "need lo < hi, points >= 51 and dt_pde > 0");
    return g;
}

/// Shared defaults with per-verification overrides.
struct Scope {
    const json* top;
    const json* entry;
    std::string where;

    bool has(const std::string& k) const { return entry->contains(k) || top->contains(k); }
    const json& at(const std::string& k) const
    {
        if (entry->contains(k))
            return (*entry)[k];
        if (top->contains(k))
            return (*top)[k];
        bad(where, "missing '" + k + "'");
    }
    const json& local(const std::string& k) const
    {
        if (!entry->contains(k))
            bad(where, "missing '" + k + "'");
        return (*entry)[k];
    }
    std::string path(const std::string& k) const { return where + "." + k; }

    double num(const std::string& k, std::optional<double> def = std::nullopt) const
    {
        if (!has(k)) {
            if (def)
                return *def;
            bad(where, "missing '" + k + "'");
        }
        return number(at(k), path(k));
    }
    std::size_t size(const std::string& k, std::optional<std::size_t> def = std::nullopt) const
    {
        if (!has(k)) {
            if (def)
                return *def;
            bad(where, "missing '" + k + "'");
        }
        return count(at(k), path(k));
    }
    std::vector<double> nums(const std::string& k) const { return numbers(at(k), path(k)); }
    std::vector<TestFunction> functions() const
    {
        const json& a = at("test_functions");
        if (!a.is_array() || a.empty())
            bad(path("test_functions"), "expected a non-empty array");
        std::vector<TestFunction> out;
        for (std::size_t i = 0; i < a.size(); ++i)
            out.push_back(parse_test_function(a[i], path("test_functions") + "[" + std::to_string(i) + "]"));
        return out;
    }
    GridSpec grid() const
    {
        GridSpec g;
        if (top->contains("grid"))
            g = parse_grid((*top)["grid"], g, "grid");
        if (entry->contains("grid"))
            g = parse_grid((*entry)["grid"], g, path("grid"));
        return g;
    }
    /// (x, y) pairs from "pairs" or every ordered pair of "points".
    std::vector<std::pair<double, double>> pairs() const
    {
        std::vector<std::pair<double, double>> out;
        const bool own_pairs = entry->contains("pairs"), own_points = entry->contains("points");
        const bool use_pairs = own_pairs || (!own_points && top->contains("pairs"));
        if (use_pairs) {
            const json& a = at("pairs");
            if (!a.is_array())
                bad(path("pairs"), "expected an array of [x, y]");
            for (std::size_t i = 0; i < a.size(); ++i) {
                const std::vector<double> p = numbers(a[i], path("pairs") + "[" + std::to_string(i) + "]");
                if (p.size() != 2)
                    bad(path("pairs"), "each pair needs two numbers");
                out.emplace_back(p[0], p[1]);
            }
        } else {
            const std::vector<double> pts = nums("points");
            for (double x : pts)
                for (double y : pts)
                    out.emplace_back(x, y);
        }
        if (out.empty())
            bad(where, "no point pairs");
        return out;
    }
};

std::uint64_t parse_seed(const json& j)
{
    if (j.is_number_unsigned())
        return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(j.get<std::int64_t>());
    bad("seed", "must be a nonnegative integer");
}

ParamMap parse_params(const json& j, const std::string& where)
{
    if (!j.is_object())
        bad(where, "expected an object of numbers");
    ParamMap p;
    for (const auto& [k, v] : j.items())
        p[k] = number(v, where + "." + k);
    return p;
}

SimConfig sim_config(const Scope& s, std::uint64_t seed)
{
    SimConfig c;
    c.dt = s.num("dt", 1e-3);
    c.seed = seed;
    return c;
}

Scheme scheme_of(const json& e, const Scope& s, Scheme fallback)
{
    if (!e.contains("scheme"))
        return fallback;
    if (!e["scheme"].is_string())
        bad(s.path("scheme"), "expected a string");
    try {
        return scheme_from_string(e["scheme"]);
    } catch (const UsageError& err) {
        bad(s.path("scheme"), err.what());
    }
}

double uniform01(std::uint64_t& state)
{
    state = splitmix64(state);
    return static_cast<double>(state >> 11) * 0x1.0p-53;
}

struct Job {
    std::string label;
    std::function<std::vector<VerificationReport>(std::size_t)> run;
};

std::string fmt_num(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string plot_slack(const std::vector<VerificationReport>& reports)
{
    std::ostringstream os;
    os << "name,model,f,x,y,t,slack,tolerance,verdict\n";
    for (const auto& r : reports) {
        if (r.name.rfind("log_harnack/", 0) != 0 && r.name.rfind("log_harnack_oracle/", 0) != 0)
            continue;
        const auto& m = r.metadata;
        os << r.name << ',' << m["model"].get<std::string>() << ',' << m["f"].get<std::string>()
           << ',' << fmt_num(m["x"]) << ',' << fmt_num(m["y"]) << ',' << fmt_num(m["t"]) << ','
           << fmt_num(r.slack) << ',' << fmt_num(r.tolerance) << ',' << r.verdict() << '\n';
    }
    return os.str();
}

std::string plot_galerkin(const std::vector<VerificationReport>& reports)
{
    std::ostringstream os;
    os << "variant,level,D,stderr,tail\n";
    std::set<std::string> seen;
    for (const auto& r : reports) {
        if (r.name.rfind("galerkin_convergence/", 0) != 0)
            continue;
        const auto& m = r.metadata;
        const std::string variant = m["linear"].get<bool>() ? "linear" : "full";
        const std::string key = variant + m["levels"].dump() + m["seed"].dump();
        if (!seen.insert(key).second)
            continue;
        for (std::size_t l = 0; l < m["levels"].size(); ++l)
            os << variant << ',' << m["levels"][l].get<std::size_t>() << ','
               << fmt_num(m["D"][l]) << ',' << fmt_num(m["stderr"][l]) << ','
               << fmt_num(m["tail"][l]) << '\n';
    }
    return os.str();
}

std::string plot_feller(const std::vector<VerificationReport>& reports)
{
    std::ostringstream os;
    os << "model,f,t,x,y,distance,modulus,best_epsilon\n";
    for (const auto& r : reports) {
        if (r.name.rfind("feller_modulus/", 0) != 0 || !r.metadata.contains("best_epsilon"))
            continue;
        const auto& m = r.metadata;
        os << m["model"].get<std::string>() << ',' << m["f"].get<std::string>() << ','
           << fmt_num(m["t"]) << ',' << fmt_num(m["x"]) << ',' << fmt_num(m["y"]) << ','
           << fmt_num(m["distance"]) << ',' << fmt_num(m["modulus"]) << ','
           << fmt_num(m["best_epsilon"]) << '\n';
    }
    return os.str();
}

fs::path default_out_dir(const std::string& name)
{
    if (const char* env = std::getenv("HLAB_OUT_DIR"); env && *env)
        return fs::path(env) / name;
    return fs::path("hlab_out") / name;
}

}  // namespace

//---------------------------------------------------------------------------//

bool SuiteOutput::all_pass() const
{
    return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.pass; });
}

PresetRegistry load_registry(const std::optional<fs::path>& registry)
{
    PresetRegistry reg = PresetRegistry::builtin();
    if (registry)
        reg.load_user_file(*registry);
    return reg;
}

SuiteOutput run_config(const json& config, const fs::path& base_dir, const RunOptions& options)
{
    check_keys(config, kTopKeys, "config");
    if (!config.contains("name") || !config["name"].is_string() || config["name"].get<std::string>().empty())
        bad("config", "'name' must be a non-empty string");
    if (!config.contains("seed"))
        bad("config", "'seed' is mandatory");
    const std::string name = config["name"];
    if (name.find_first_of("/\\") != std::string::npos || name == "." || name == "..")
        bad("name", "must not contain path separators");
    const std::uint64_t seed = options.seed ? *options.seed : parse_seed(config["seed"]);
    if (!(options.tolerance_scale > 0.0) || !std::isfinite(options.tolerance_scale))
        throw UsageError("--tolerance-scale must be positive");

    std::optional<fs::path> registry = options.registry;
    if (!registry && config.contains("registry")) {
        if (!config["registry"].is_string())
            bad("registry", "expected a path string");
        registry = base_dir / config["registry"].get<std::string>();
    }
    const PresetRegistry reg = load_registry(registry);

    if (!config.contains("model"))
        bad("config", "missing 'model'");
    const json& mj = config["model"];
    check_keys(mj, {"preset", "params"}, "model");
    if (!mj.contains("preset") || !mj["preset"].is_string())
        bad("model", "'preset' must be a string");
    const std::string preset = mj["preset"];
    const ParamMap params = mj.contains("params") ? parse_params(mj["params"], "model.params") : ParamMap{};
    const PresetInfo& info = reg.find(preset);
    std::optional<DiffusionModel> model;
    std::optional<GalerkinModel> galerkin;
    if (info.galerkin)
        galerkin = reg.make_galerkin(preset, params);
    else
        model = reg.make_diffusion(preset, params);

    if (!config.contains("verifications") || !config["verifications"].is_array() ||
        config["verifications"].empty())
        bad("config", "'verifications' must be a non-empty array");

    auto need_1d = [&](const std::string& where) -> const DiffusionModel& {
        if (!model || model->dim() != 1)
            bad(where, "this verification needs a one-dimensional diffusion preset");
        return *model;
    };

    std::vector<Job> jobs;
    const json& list = config["verifications"];
    for (std::size_t idx = 0; idx < list.size(); ++idx) {
        const json& e = list[idx];
        const std::string where = "verifications[" + std::to_string(idx) + "]";
        if (!e.is_object() || !e.contains("type") || !e["type"].is_string())
            bad(where, "needs a string 'type'");
        const std::string type = e["type"];
        const auto keys = kVerificationKeys.find(type);
        if (keys == kVerificationKeys.end())
            bad(where, "unknown verification type '" + type + "'");
        std::set<std::string> allowed = keys->second;
        allowed.insert("type");
        check_keys(e, allowed, where);
        const Scope s{&config, &e, where};
        const std::uint64_t job_seed = derive_seed(seed, name + "/" + std::to_string(idx) + "/" + type);
        const std::string label = where + " " + type;

        if (type == "log_harnack") {
            const DiffusionModel& m = need_1d(where);
            const auto pairs = s.pairs();
            const auto times = s.nums("times");
            const auto fs_ = s.functions();
            const std::size_t n = s.size("samples", 100000);
            const SimConfig cfg = sim_config(s, job_seed);
            if (times.empty())
                bad(where, "'times' must not be empty");
            jobs.push_back({label, [=, &m](std::size_t w) {
                std::vector<double> starts;
                for (const auto& [x, y] : pairs) {
                    starts.push_back(x);
                    starts.push_back(y);
                }
                std::sort(starts.begin(), starts.end());
                starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
                std::map<double, EndpointSample> samples;
                for (double p : starts) {
                    const double x0[1] = {p};
                    samples.emplace(p, sample_endpoints(m, x0, times, n, cfg, w));
                }
                std::vector<VerificationReport> out;
                for (const auto& [x, y] : pairs)
                    for (double t : times)
                        for (const auto& f : fs_) {
                            SimConfig c = cfg;
                            c.t_final = *std::max_element(times.begin(), times.end());
                            out.push_back(log_harnack_from_samples(m, samples.at(x), samples.at(y),
                                                                   x, y, t, f, c.step(), cfg.seed));
                        }
                return out;
            }});
        } else if (type == "log_harnack_oracle") {
            const DiffusionModel& m = need_1d(where);
            const auto pairs = s.pairs();
            const auto times = s.nums("times");
            const auto fs_ = s.functions();
            const GridSpec g = s.grid();
            const double tol = s.num("tolerance", 1e-3);
            jobs.push_back({label, [=, &m](std::size_t) {
                std::vector<VerificationReport> out;
                const Grid1D grid = g.grid();
                for (const auto& [x, y] : pairs)
                    for (double t : times)
                        for (const auto& f : fs_)
                            out.push_back(verify_log_harnack_oracle(m, x, y, t, f, grid, g.dt_pde, tol));
                return out;
            }});
        } else if (type == "log_harnack_sharpness") {
            const DiffusionModel& m = need_1d(where);
            const double y = s.num("y", 0.0);
            const double t = s.num("t");
            const auto fs_ = s.functions();
            const GridSpec g = s.grid();
            std::vector<double> range = {0.0, 3.0};
            if (e.contains("d_range")) {
                range = numbers(e["d_range"], s.path("d_range"));
                if (range.size() != 2)
                    bad(s.path("d_range"), "expected [lo, hi]");
            }
            const double tol = s.num("tolerance", 1e-3);
            jobs.push_back({label, [=, &m](std::size_t) {
                std::vector<VerificationReport> out;
                for (const auto& f : fs_)
                    out.push_back(verify_log_harnack_sharpness(m, y, t, f, g.grid(), g.dt_pde,
                                                               range[0], range[1], tol));
                return out;
            }});
        } else if (type == "coupling_contraction") {
            const double t = s.num("t");
            const std::size_t n = s.size("samples", 20000);
            SimConfig cfg = sim_config(s, job_seed);
            cfg.scheme = scheme_of(e, s, galerkin ? Scheme::exponential_euler : Scheme::euler);
            const std::size_t dim = model ? model->dim() : galerkin->dim();
            std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
            if (e.contains("random_pairs")) {
                const json& rp = e["random_pairs"];
                check_keys(rp, {"count", "lo", "hi"}, s.path("random_pairs"));
                const std::size_t cnt = rp.contains("count") ? count(rp["count"], s.path("random_pairs.count")) : 10;
                const double lo = rp.contains("lo") ? number(rp["lo"], s.path("random_pairs.lo")) : -2.0;
                const double hi = rp.contains("hi") ? number(rp["hi"], s.path("random_pairs.hi")) : 2.0;
                if (!(hi > lo))
                    bad(s.path("random_pairs"), "need lo < hi");
                std::uint64_t state = job_seed;
                for (std::size_t k = 0; k < cnt; ++k) {
                    Eigen::VectorXd x(static_cast<Eigen::Index>(dim)), y(static_cast<Eigen::Index>(dim));
                    for (std::size_t d = 0; d < dim; ++d)
                        x[static_cast<Eigen::Index>(d)] = lo + (hi - lo) * uniform01(state);
                    for (std::size_t d = 0; d < dim; ++d)
                        y[static_cast<Eigen::Index>(d)] = lo + (hi - lo) * uniform01(state);
                    pairs.emplace_back(x, y);
                }
            } else {
                if (dim != 1)
                    bad(where, "explicit pairs need a one-dimensional model; use random_pairs");
                for (const auto& [x, y] : s.pairs())
                    pairs.emplace_back(Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Constant(1, y));
            }
            const DiffusionModel* mp = model ? &*model : nullptr;
            const GalerkinModel* gp = galerkin ? &*galerkin : nullptr;
            jobs.push_back({label, [=](std::size_t w) {
                std::vector<VerificationReport> out;
                for (std::size_t k = 0; k < pairs.size(); ++k) {
                    SimConfig c = cfg;
                    c.seed = derive_seed(cfg.seed, "pair/" + std::to_string(k));
                    VerificationReport r =
                        mp ? verify_coupling_contraction(*mp, pairs[k].first, pairs[k].second, t, n, c, w)
                           : verify_coupling_contraction(*gp, pairs[k].first, pairs[k].second, t, n, c, w);
                    char buf[16];
                    std::snprintf(buf, sizeof buf, "/#%02zu", k);
                    r.name += buf;
                    out.push_back(std::move(r));
                }
                return out;
            }});
        } else if (type == "gradient_estimate") {
            const DiffusionModel& m = need_1d(where);
            const double t = s.num("t");
            const auto fs_ = s.functions();
            const GridSpec g = s.grid();
            const bool equality = e.contains("equality") && boolean(e["equality"], s.path("equality"));
            const double eq_tol = s.num("equality_tolerance", 1e-3);
            jobs.push_back({label, [=, &m](std::size_t) {
                std::vector<VerificationReport> out;
                for (const auto& f : fs_)
                    out.push_back(verify_gradient_estimate(m, f, t, g.grid(), g.dt_pde, equality, eq_tol));
                return out;
            }});
        } else if (type == "dd_identity") {
            const DiffusionModel& m = need_1d(where);
            const double t = s.num("t");
            const double x = s.num("x", 0.5);
            std::vector<double> sl = e.contains("s") ? numbers(e["s"], s.path("s")) : std::vector<double>{t};
            const auto fs_ = s.functions();
            const GridSpec g = s.grid();
            const bool refine = e.contains("refine") && boolean(e["refine"], s.path("refine"));
            const double tol = s.num("tolerance", 2e-2);
            jobs.push_back({label, [=, &m](std::size_t) {
                std::vector<VerificationReport> out;
                for (const auto& f : fs_) {
                    VerificationReport coarse = verify_dd_identity(m, f, t, x, sl, g.grid(), g.dt_pde, tol);
                    if (refine) {
                        VerificationReport fine = verify_dd_identity(m, f, t, x, sl, g.grid().refined(),
                                                                     0.5 * g.dt_pde, tol);
                        const double gc = coarse.metadata["max_relative_gap"];
                        const double gf = fine.metadata["max_relative_gap"];
                        json meta = {{"model", m.name()}, {"f", f.name()},
                                     {"coarse_gap", gc}, {"fine_gap", gf},
                                     {"factor", gf > 0 ? gc / gf : 0.0}};
                        out.push_back(VerificationReport::make(coarse.name + "/refinement",
                                                               ReportKind::inequality, 3.0 * gf, gc,
                                                               0.0, std::move(meta)));
                        fine.name += "/fine";
                        out.push_back(std::move(fine));
                    }
                    out.push_back(std::move(coarse));
                }
                return out;
            }});
        } else if (type == "feller_modulus") {
            const DiffusionModel& m = need_1d(where);
            const double t = s.num("t");
            const double x = s.num("x", 0.0);
            const std::vector<double> dists = e.contains("distances")
                                                  ? numbers(e["distances"], s.path("distances"))
                                                  : std::vector<double>{0.5, 0.1, 0.02};
            const auto fs_ = s.functions();
            const GridSpec g = s.grid();
            const double noise = s.num("noise", 1e-4);
            const double small = s.num("small_bound", 0.05);
            jobs.push_back({label, [=, &m](std::size_t) {
                std::vector<VerificationReport> out;
                std::vector<double> ys;
                for (double d : dists)
                    ys.push_back(x + d);
                for (const auto& f : fs_) {
                    auto r = verify_feller_modulus(m, f, t, x, ys, g.grid(), g.dt_pde, noise, small);
                    out.insert(out.end(), r.begin(), r.end());
                }
                return out;
            }});
        } else if (type == "heat_kernel_entropy" || type == "entropy_cost") {
            const DiffusionModel& m = need_1d(where);
            const auto times = s.nums("times");
            const GridSpec g = s.grid();
            std::vector<double> xs;
            std::vector<std::string> dens;
            if (type == "heat_kernel_entropy") {
                xs = e.contains("x") ? numbers(e["x"], s.path("x")) : std::vector<double>{0.0};
            } else {
                dens = {"uniform", "shift", "right_half"};
                if (e.contains("densities")) {
                    dens.clear();
                    for (const auto& d : e["densities"]) {
                        if (!d.is_string())
                            bad(s.path("densities"), "expected names");
                        dens.push_back(d);
                    }
                }
            }
            const bool heat = type == "heat_kernel_entropy";
            jobs.push_back({label, [=, &m](std::size_t) {
                std::vector<VerificationReport> out;
                const Grid1D grid = g.grid();
                for (double t : times) {
                    const GridKernel k = build_kernel(m, t, grid);
                    if (heat) {
                        for (double x : xs)
                            out.push_back(verify_heat_kernel_entropy(k, m.norm(), m.K(), grid.index_of(x), m.name()));
                    } else {
                        for (const auto& d : dens)
                            out.push_back(verify_entropy_cost(k, m.norm(), m.K(), grid_density(k, d), d, m.name()));
                    }
                }
                return out;
            }});
        } else if (type == "galerkin_convergence") {
            if (!info.galerkin)
                bad(where, "needs a Galerkin preset");
            ParamMap gparams = params;
            if (e.contains("params"))
                for (const auto& [k, v] : parse_params(e["params"], s.path("params")))
                    gparams[k] = v;
            const GalerkinHeatParams base = reg.galerkin_params(preset, gparams);
            std::vector<std::size_t> levels;
            for (double v : e.contains("levels") ? numbers(e["levels"], s.path("levels"))
                                                 : std::vector<double>{4, 8, 16, 32, 64}) {
                if (v < 1 || std::floor(v) != v)
                    bad(s.path("levels"), "levels must be positive integers");
                levels.push_back(static_cast<std::size_t>(v));
            }
            const std::vector<double> x0v = e.contains("x0") ? numbers(e["x0"], s.path("x0"))
                                                             : std::vector<double>{1.0, 0.5, 0.25, 0.125};
            const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(x0v.data(), static_cast<Eigen::Index>(x0v.size()));
            const double t = s.num("t", 1.0);
            const std::size_t n = s.size("samples", 10000);
            SimConfig cfg = sim_config(s, job_seed);
            if (!e.contains("dt") && !config.contains("dt"))
                cfg.dt = 1e-2;
            cfg.scheme = scheme_of(e, s, Scheme::exponential_euler);
            GalerkinCheck check;
            check.ratio_max = s.num("ratio_max", 0.2);
            check.tail_factor = s.num("tail_factor", 10.0);
            jobs.push_back({label, [=](std::size_t w) {
                return verify_galerkin_convergence(base, levels, x0, t, n, cfg, check, w);
            }});
        }
    }

    const std::size_t W = std::max<std::size_t>(1, options.workers);
    const std::size_t pool = std::min(W, jobs.size());
    const std::size_t inner = std::max<std::size_t>(1, W / jobs.size());
    std::vector<std::vector<VerificationReport>> results(jobs.size());
    parallel_for(jobs.size(), pool, [&](std::size_t i) { results[i] = jobs[i].run(inner); });

    SuiteOutput out;
    out.name = name;
    for (auto& r : results)
        for (auto& rep : r) {
            if (options.tolerance_scale != 1.0)
                rep.rescale_tolerance(options.tolerance_scale);
            out.reports.push_back(std::move(rep));
        }
    out.reports = sorted(std::move(out.reports));
    for (std::size_t k = 1; k < out.reports.size(); ++k) {
        if (out.reports[k].name == out.reports[k - 1].name)
            bad("config", "two verifications produce the report '" + out.reports[k].name + "'");
    }

    if (options.out_dir)
        out.out_dir = *options.out_dir;
    else if (config.contains("output_dir")) {
        if (!config["output_dir"].is_string())
            bad("output_dir", "expected a path string");
        out.out_dir = config["output_dir"].get<std::string>();
    } else
        out.out_dir = default_out_dir(name);

    out.reports_json = reports_json(out.reports);
    out.summary_csv = summary_csv(out.reports);
    out.slack_vs_t_csv = plot_slack(out.reports);
    out.galerkin_csv = plot_galerkin(out.reports);
    out.feller_csv = plot_feller(out.reports);
    return out;
}

int run_suite(const fs::path& config_path, const RunOptions& options, std::ostream& out,
              std::ostream& err)
{
    try {
        std::ifstream in(config_path);
        if (!in)
            throw ConfigError("cannot read config '" + config_path.string() + "'");
        json config;
        try {
            config = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config '" + config_path.string() + "' is not valid JSON: " + e.what());
        }
        SuiteOutput res = run_config(config, config_path.parent_path(), options);
        if (options.write_outputs) {
            write_atomic(res.out_dir / "reports.json", res.reports_json);
            write_atomic(res.out_dir / "summary.csv", res.summary_csv);
            write_atomic(res.out_dir / "slack_vs_t.csv", res.slack_vs_t_csv);
            write_atomic(res.out_dir / "galerkin_D.csv", res.galerkin_csv);
            write_atomic(res.out_dir / "feller_modulus.csv", res.feller_csv);
        }
        std::size_t passed = 0;
        for (const auto& r : res.reports) {
            passed += r.pass ? 1 : 0;
            out << r.verdict() << "  " << r.name << "  slack=" << std::setprecision(6) << r.slack
                << "  tol=" << r.tolerance << '\n';
        }
        out << res.name << ": " << passed << "/" << res.reports.size() << " passed";
        if (options.write_outputs)
            out << "; outputs in " << res.out_dir.string();
        out << '\n';
        return res.all_pass() ? kExitPass : kExitFail;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DegeneratePairError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const json::exception& e) {
        err << "error: config: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitSolver;
    }
}

std::string list_presets(const std::optional<fs::path>& registry,
                         const std::optional<fs::path>& config_dir)
{
    std::ostringstream os;
    os << load_registry(registry).describe();
    if (!config_dir || !fs::is_directory(*config_dir))
        return os.str();
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(*config_dir))
        if (entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        return os.str();
    os << "Bundled configs:\n";
    for (const auto& f : files) {
        std::ifstream in(f);
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            continue;
        os << "  " << f.stem().string();
        if (j.contains("model") && j["model"].contains("preset"))
            os << "  (preset " << j["model"]["preset"].get<std::string>() << ")";
        os << "\n";
        std::set<std::string> seen;
        if (j.contains("verifications") && j["verifications"].is_array())
            for (const auto& v : j["verifications"]) {
                if (!v.contains("type") || !v["type"].is_string())
                    continue;
                const auto it = kExercises.find(v["type"].get<std::string>());
                if (it != kExercises.end() && seen.insert(it->second).second)
                    os << "      exercises: " << it->second << "\n";
            }
    }
    return os.str();
}

}  // namespace hlab
