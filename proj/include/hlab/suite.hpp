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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hlab/presets.hpp"
#include "hlab/report.hpp"

namespace hlab {

enum ExitCode : int {
    kExitPass = 0,
    kExitFail = 1,
    kExitUsage = 2,
    kExitSolver = 3,
};

struct RunOptions {
    std::optional<std::uint64_t> seed;          // replaces the config seed
    std::size_t workers = 1;
    std::optional<std::filesystem::path> out_dir;
    double tolerance_scale = 1.0;
    std::optional<std::filesystem::path> registry;  // user preset file
    bool write_outputs = true;
};

/// Everything a run produces; the file contents are exactly what gets written.
struct SuiteOutput {
    std::string name;
    std::vector<VerificationReport> reports;  // sorted by name
    std::filesystem::path out_dir;
    std::string reports_json;
    std::string summary_csv;
    std::string slack_vs_t_csv;
    std::string galerkin_csv;
    std::string feller_csv;

    bool all_pass() const;
};

/// Parses and runs a config document. `base_dir` resolves relative registry paths.
/// Throws ConfigError/UsageError on schema problems and library errors from the runs.
SuiteOutput run_config(const nlohmann::json& config, const std::filesystem::path& base_dir,
                       const RunOptions& options);

/// Reads the file, runs it, writes the outputs atomically and prints one line per report.
/// Returns 0 when every verdict passes, 1 on any FAIL, 2 on config or usage errors and 3
/// on solver, oracle, positivity or explosion errors.
int run_suite(const std::filesystem::path& config_path, const RunOptions& options,
              std::ostream& out, std::ostream& err);

/// Built-ins plus the presets of `registry`, if given.
PresetRegistry load_registry(const std::optional<std::filesystem::path>& registry);

/// Listing for `hlab list-presets`, followed by the bundled configs in `config_dir` when
/// that directory exists.
std::string list_presets(const std::optional<std::filesystem::path>& registry,
                         const std::optional<std::filesystem::path>& config_dir = std::nullopt);

}  // namespace hlab
