// Copyright 2026 The eqkit Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace eqkit {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NegativeLoad : Error {
  using Error::Error;
};

struct NonConcaveUtility : Error {
  using Error::Error;
};

struct InfeasibleBalance : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct ZeroCurvature : Error {
  using Error::Error;
};

struct PartialOrderViolated : Error {
  using Error::Error;
};

struct SingularSystem : Error {
  using Error::Error;
};

struct InfeasibleScenario : Error {
  using Error::Error;
};

struct GridTooLarge : Error {
  using Error::Error;
};

struct InfeasiblePoint : Error {
  using Error::Error;
};

struct SchemaError : Error {
  using Error::Error;
};

}  // namespace eqkit
