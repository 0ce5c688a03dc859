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

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hlab {

/// How a report turns (lhs, rhs, tolerance) into a verdict.
///   inequality: pass iff rhs - lhs >= -tolerance
///   identity, tightness: pass iff |rhs - lhs| <= tolerance
enum class ReportKind { inequality, identity, tightness };

const char* to_string(ReportKind k);

struct VerificationReport {
    std::string name;
    ReportKind kind = ReportKind::inequality;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    nlohmann::json metadata = nlohmann::json::object();

    static VerificationReport make(std::string name, ReportKind kind, double lhs, double rhs,
                                   double tolerance, nlohmann::json metadata = {});

    /// Re-evaluates the verdict after the tolerance has been rescaled.
    void rescale_tolerance(double factor);

    const char* verdict() const { return pass ? "PASS" : "FAIL"; }
    nlohmann::json to_json() const;
};

/// Reports sorted by name; ties keep their relative order.
std::vector<VerificationReport> sorted(std::vector<VerificationReport> reports);

/// {"reports": [...], "summary": {...}} with 17 significant digits for every double.
std::string reports_json(const std::vector<VerificationReport>& reports);
/// name,kind,lhs,rhs,slack,tolerance,verdict
std::string summary_csv(const std::vector<VerificationReport>& reports);

/// Writes `content` to `path` through a temporary file in the same directory and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace hlab
