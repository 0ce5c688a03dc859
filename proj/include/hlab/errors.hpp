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

#include <stdexcept>
#include <string>

namespace hlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments, dimension mismatches, malformed configs.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Config file problems (unknown keys, unknown presets, schema errors).
class ConfigError : public UsageError {
public:
    using UsageError::UsageError;
};

/// x == y passed where a quotient in x - y is required.
class DegeneratePairError : public Error {
public:
    using Error::Error;
};

/// The simulated state left the blow-up guard.
class ExplosionError : public Error {
public:
    using Error::Error;
};

/// A test function evaluated to a non-positive value where log f is needed.
class PositivityError : public Error {
public:
    using Error::Error;
};

/// Numerical solver failure (residual, non-convergence).
class SolverError : public Error {
public:
    using Error::Error;
};

/// Failure inside the deterministic 1-D oracle.
class OracleError : public SolverError {
public:
    using SolverError::SolverError;
};

[[noreturn]] void throw_usage(const std::string& what);

}  // namespace hlab
