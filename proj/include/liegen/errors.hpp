// liegen/errors.hpp

// Copyright 2026 The LieGen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace liegen {

/// Base class for all liegen errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration, argument, or input file contents.
/// Mapped to process exit code 2 by the CLI.
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Numerical failure at run time (non-convergence, invalid state, ...).
/// Mapped to process exit code 3 by the CLI.
struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(what) {}
};

/// A matrix handed to matrix_to_coeffs is not in the Lie algebra of the
/// requested group kind (within tolerance).
struct NotInAlgebraError : NumericError {
  explicit NotInAlgebraError(const std::string& what) : NumericError(what) {}
};

/// File I/O or parse failure.
struct IoError : Error {
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace liegen
