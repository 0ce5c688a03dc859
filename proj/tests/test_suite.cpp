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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hlab/errors.hpp"
#include "hlab/suite.hpp"

using namespace hlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path source = HLAB_SOURCE_DIR;
const fs::path data = source / "tests" / "data";

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("hlab_suite_" + name);
    fs::remove_all(p);
    return p;
}

fs::path write_config(const std::string& name, const json& j)
{
    const fs::path dir = scratch(name + "_cfg");
    fs::create_directories(dir);
    const fs::path p = dir / (name + ".json");
    std::ofstream(p) << j.dump(2);
    return p;
}

int run(const fs::path& config, RunOptions opts, std::string* err_text = nullptr)
{
    std::ostringstream out, err;
    const int code = run_suite(config, opts, out, err);
    if (err_text)
        *err_text = err.str();
    return code;
}

json small_mixed()
{
    return json::parse(R"({
      "name": "small_mixed",
      "seed": 17,
      "model": {"preset": "tanh_perturbed"},
      "samples": 400,
      "dt": 1e-2,
      "grid": {"lo": -6.0, "hi": 6.0, "points": 241, "dt_pde": 1e-2},
      "test_functions": [{"kind": "logistic", "offset": 1.0}],
      "verifications": [
        {"type": "log_harnack", "points": [-1.0, 0.5], "times": [0.5, 1.0]},
        {"type": "log_harnack_oracle", "points": [-1.0, 0.5], "times": [0.5, 1.0]},
        {"type": "coupling_contraction", "t": 1.0, "samples": 300,
         "random_pairs": {"count": 3}},
        {"type": "gradient_estimate", "t": 1.0},
        {"type": "dd_identity", "t": 1.0, "x": 0.5, "s": [0.5, 1.0]}
      ]
    })");
}

}  // namespace

TEST_CASE("a small config runs and writes every output file")
{
    const fs::path cfg = write_config("mixed", small_mixed());
    RunOptions opts;
    opts.out_dir = scratch("mixed_out");
    CHECK(run(cfg, opts) == kExitPass);
    for (const char* f : {"reports.json", "summary.csv", "slack_vs_t.csv", "galerkin_D.csv",
                          "feller_modulus.csv"})
        CHECK(fs::exists(*opts.out_dir / f));
    std::ifstream in(*opts.out_dir / "reports.json");
    const json j = json::parse(in);
    CHECK(j["summary"]["failed"] == 0);
    CHECK(j["summary"]["total"] == j["reports"].size());
    for (const auto& r : j["reports"])
        CHECK(r.contains("metadata"));
    for (const auto& e : fs::directory_iterator(*opts.out_dir))
        CHECK(e.path().extension() != ".tmp");
}

TEST_CASE("reports are byte-identical across worker counts and repeated runs")
{
    const json cfg = small_mixed();
    RunOptions opts;
    opts.write_outputs = false;
    const std::string ref = run_config(cfg, source, opts).reports_json;
    for (std::size_t w : {1, 4, 8}) {
        opts.workers = w;
        CHECK(run_config(cfg, source, opts).reports_json == ref);
    }
}

TEST_CASE("the seed option changes the Monte Carlo draws")
{
    const json cfg = small_mixed();
    RunOptions opts;
    opts.write_outputs = false;
    const auto a = run_config(cfg, source, opts);
    opts.seed = 18;
    const auto b = run_config(cfg, source, opts);
    CHECK(a.reports_json != b.reports_json);
}

TEST_CASE("tolerance scale multiplies every tolerance")
{
    RunOptions opts;
    opts.write_outputs = false;
    const auto base = run_config(small_mixed(), source, opts);
    opts.tolerance_scale = 1e-9;
    const auto tight = run_config(small_mixed(), source, opts);
    REQUIRE(base.reports.size() == tight.reports.size());
    bool any_fail = false;
    for (std::size_t k = 0; k < base.reports.size(); ++k) {
        CHECK(tight.reports[k].tolerance == doctest::Approx(1e-9 * base.reports[k].tolerance));
        CHECK(tight.reports[k].slack == base.reports[k].slack);
        any_fail = any_fail || !tight.reports[k].pass;
    }
    CHECK(any_fail);
    opts.tolerance_scale = 0.0;
    CHECK_THROWS_AS(run_config(small_mixed(), source, opts), UsageError);
}

TEST_CASE("a falsified K fails with exit code 1")
{
    RunOptions opts;
    opts.out_dir = scratch("wrong_k");
    CHECK(run(data / "wrong_k.json", opts) == kExitFail);
}

TEST_CASE("an unknown preset is a config error naming the preset")
{
    RunOptions opts;
    opts.out_dir = scratch("unknown");
    std::string err;
    CHECK(run(data / "unknown_preset.json", opts, &err) == kExitUsage);
    CHECK(err.find("ornstein") != std::string::npos);
    CHECK_FALSE(fs::exists(*opts.out_dir / "reports.json"));
}

TEST_CASE("schema problems are config errors")
{
    RunOptions opts;
    opts.write_outputs = false;
    json j = small_mixed();
    j["verifications"][0]["sample"] = 10;
    CHECK_THROWS_WITH_AS(run_config(j, source, opts), doctest::Contains("sample"), ConfigError);
    j = small_mixed();
    j.erase("seed");
    CHECK_THROWS_AS(run_config(j, source, opts), ConfigError);
    j = small_mixed();
    j["model"]["params"] = {{"thetta", 1.0}};
    CHECK_THROWS_WITH_AS(run_config(j, source, opts), doctest::Contains("thetta"), ConfigError);
    j = small_mixed();
    j["verifications"][0]["type"] = "log_sobolev";
    CHECK_THROWS_AS(run_config(j, source, opts), ConfigError);
    j = small_mixed();
    j["dt"] = "fast";
    CHECK_THROWS_AS(run_config(j, source, opts), ConfigError);

    const fs::path bad = write_config("broken", json::object());
    std::ofstream(bad) << "{ not json";
    CHECK(run(bad, opts) == kExitUsage);
    CHECK(run(source / "no_such_config.json", opts) == kExitUsage);
}

TEST_CASE("solver failures map to exit code 3")
{
    const json j = json::parse(R"({
      "name": "stiff_euler",
      "seed": 3,
      "model": {"preset": "galerkin_heat", "params": {"level": 32}},
      "verifications": [
        {"type": "coupling_contraction", "t": 1.0, "dt": 1e-2, "samples": 100,
         "scheme": "euler", "random_pairs": {"count": 1}}
      ]
    })");
    RunOptions opts;
    opts.out_dir = scratch("stiff_out");
    CHECK(run(write_config("stiff", j), opts) == kExitSolver);
}

TEST_CASE("output directory falls back to the environment")
{
    json j = json::parse(R"({
      "name": "env_dir",
      "seed": 1,
      "model": {"preset": "ou"},
      "grid": {"lo": -10.0, "hi": 10.0, "points": 201},
      "verifications": [{"type": "heat_kernel_entropy", "times": [1.0], "x": [0.0]}]
    })");
    const fs::path env = scratch("env");
    ::setenv("HLAB_OUT_DIR", env.c_str(), 1);
    CHECK(run(write_config("env_dir", j), RunOptions{}) == kExitPass);
    CHECK(fs::exists(env / "env_dir" / "reports.json"));

    const fs::path explicit_dir = scratch("explicit");
    j["output_dir"] = explicit_dir.string();
    CHECK(run(write_config("env_dir2", j), RunOptions{}) == kExitPass);
    CHECK(fs::exists(explicit_dir / "reports.json"));
    ::unsetenv("HLAB_OUT_DIR");
}

TEST_CASE("preset listing")
{
    const std::string builtin = list_presets(std::nullopt);
    for (const char* name : {"ou", "tanh_perturbed", "galerkin_heat"})
        CHECK(builtin.find(std::string("  ") + name + "\n") != std::string::npos);
    CHECK(list_presets(data / "empty_registry.json") == builtin);
    const std::string user = list_presets(data / "user_presets.json");
    CHECK(user.find("slow_ou") != std::string::npos);
    CHECK(builtin.find("slow_ou") == std::string::npos);
    const std::string with_configs = list_presets(std::nullopt, source / "configs");
    CHECK(with_configs.find("ou_sharpness") != std::string::npos);
    CHECK(with_configs.find("sharpness of the log-Harnack constant") != std::string::npos);
}

TEST_CASE("user presets can be used by name")
{
    json j = json::parse(R"({
      "name": "user_preset",
      "seed": 5,
      "model": {"preset": "slow_ou"},
      "dt": 1e-2,
      "verifications": [{"type": "coupling_contraction", "t": 1.0, "samples": 100,
                         "pairs": [[1.0, 0.0]]}]
    })");
    j["registry"] = (data / "user_presets.json").string();
    RunOptions opts;
    opts.write_outputs = false;
    const auto out = run_config(j, source, opts);
    REQUIRE(out.reports.size() == 1);
    CHECK(out.reports[0].metadata["K"].get<double>() == doctest::Approx(-0.2));
    CHECK(out.reports[0].pass);
}
