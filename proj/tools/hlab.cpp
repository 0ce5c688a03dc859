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

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hlab/errors.hpp"
#include "hlab/suite.hpp"

#ifndef HLAB_CONFIG_DIR
#define HLAB_CONFIG_DIR ""
#endif

int main(int argc, char** argv)
{
    CLI::App app{"hlab: numerical checks of log-Harnack type inequalities"};
    app.require_subcommand(1);

    std::string config;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::string out_dir;
    double tolerance_scale = 1.0;
    std::string registry;

    auto* run = app.add_subcommand("run", "run the verifications of a config file");
    run->add_option("config", config, "experiment config (JSON)")->required();
    auto* seed_opt = run->add_option("--seed", seed, "override the config seed");
    run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    auto* out_opt = run->add_option("--out-dir", out_dir,
                                    "output directory (default: config output_dir, then "
                                    "$HLAB_OUT_DIR/<name>, then hlab_out/<name>)");
    run->add_option("--tolerance-scale", tolerance_scale, "multiply every tolerance")
        ->check(CLI::PositiveNumber);
    auto* reg_opt = run->add_option("--registry", registry, "user preset file");

    std::string list_registry;
    auto* list = app.add_subcommand("list-presets", "list model presets and bundled configs");
    auto* list_reg_opt = list->add_option("--registry", list_registry, "user preset file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : hlab::kExitUsage;
    }

    if (*run) {
        hlab::RunOptions opt;
        if (*seed_opt)
            opt.seed = seed;
        opt.workers = workers;
        if (*out_opt)
            opt.out_dir = out_dir;
        opt.tolerance_scale = tolerance_scale;
        if (*reg_opt)
            opt.registry = registry;
        return hlab::run_suite(config, opt, std::cout, std::cerr);
    }

    try {
        std::optional<std::filesystem::path> reg;
        if (*list_reg_opt)
            reg = list_registry;
        std::optional<std::filesystem::path> dir;
        if (std::string(HLAB_CONFIG_DIR).size())
            dir = std::filesystem::path(HLAB_CONFIG_DIR);
        std::cout << hlab::list_presets(reg, dir);
        return 0;
    } catch (const hlab::UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return hlab::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return hlab::kExitSolver;
    }
}
