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

#include "hlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hlab/errors.hpp"

namespace hlab {

namespace {

std::string num(double v)
{
    if (!std::isfinite(v))
        return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool decide(ReportKind kind, double slack, double tol)
{
    if (!std::isfinite(slack) || !(tol >= 0.0))
        return false;
    if (kind == ReportKind::inequality)
        return slack >= -tol;
    return std::abs(slack) <= tol;
}

nlohmann::json finite_or_string(double v)
{
    if (std::isfinite(v))
        return v;
    return num(v);
}

}  // namespace

const char* to_string(ReportKind k)
{
    switch (k) {
    case ReportKind::inequality: return "inequality";
    case ReportKind::identity: return "identity";
    case ReportKind::tightness: return "tightness";
    }
    return "?";
}

VerificationReport VerificationReport::make(std::string name, ReportKind kind, double lhs,
                                            double rhs, double tolerance,
                                            nlohmann::json metadata)
{
    VerificationReport r;
    r.name = std::move(name);
    r.kind = kind;
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = rhs - lhs;
    r.tolerance = tolerance;
    r.pass = decide(kind, r.slack, tolerance);
    r.metadata = metadata.is_null() ? nlohmann::json::object() : std::move(metadata);
    return r;
}

void VerificationReport::rescale_tolerance(double factor)
{
    if (!(factor > 0.0) || !std::isfinite(factor))
        throw UsageError("tolerance scale must be positive");
    tolerance *= factor;
    pass = decide(kind, slack, tolerance);
}

nlohmann::json VerificationReport::to_json() const
{
    return {{"name", name},
            {"kind", to_string(kind)},
            {"lhs", finite_or_string(lhs)},
            {"rhs", finite_or_string(rhs)},
            {"slack", finite_or_string(slack)},
            {"tolerance", finite_or_string(tolerance)},
            {"verdict", verdict()},
            {"metadata", metadata}};
}

std::vector<VerificationReport> sorted(std::vector<VerificationReport> reports)
{
    std::stable_sort(reports.begin(), reports.end(),
                     [](const auto& a, const auto& b) { return a.name < b.name; });
    return reports;
}

std::string reports_json(const std::vector<VerificationReport>& reports)
{
    nlohmann::json arr = nlohmann::json::array();
    std::size_t passed = 0;
    for (const auto& r : reports) {
        arr.push_back(r.to_json());
        passed += r.pass ? 1 : 0;
    }
    nlohmann::json doc = {{"reports", arr},
                          {"summary",
                           {{"total", reports.size()},
                            {"passed", passed},
                            {"failed", reports.size() - passed}}}};
    return doc.dump(2) + "\n";
}

std::string summary_csv(const std::vector<VerificationReport>& reports)
{
    std::ostringstream os;
    os << "name,kind,lhs,rhs,slack,tolerance,verdict\n";
    for (const auto& r : reports) {
        os << r.name << ',' << to_string(r.kind) << ',' << num(r.lhs) << ',' << num(r.rhs)
           << ',' << num(r.slack) << ',' << num(r.tolerance) << ',' << r.verdict() << '\n';
    }
    return os.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& content)
{
    namespace fs = std::filesystem;
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out)
            throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace hlab
