// Copyright (c) 2026, The bcstage Authors. All rights reserved.
//
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

namespace bcstage {

/// Root of every domain error raised by the library. The CLI maps any
/// Error to exit code 1 and UsageError to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BCSTAGE_DEFINE_ERROR(Name) \
  class Name : public Error {      \
   public:                         \
    using Error::Error;            \
  }

// domain_core
BCSTAGE_DEFINE_ERROR(InvalidLogitsError);
BCSTAGE_DEFINE_ERROR(InvalidStageError);
BCSTAGE_DEFINE_ERROR(InvalidScoreError);
BCSTAGE_DEFINE_ERROR(EmptyBiopsyError);
BCSTAGE_DEFINE_ERROR(EmptyEvaluationError);
BCSTAGE_DEFINE_ERROR(EmptyEnsembleError);
BCSTAGE_DEFINE_ERROR(InvalidArgumentError);

// data_pipeline
BCSTAGE_DEFINE_ERROR(ManifestFormatError);
BCSTAGE_DEFINE_ERROR(ImageFormatError);
BCSTAGE_DEFINE_ERROR(IoError);

// model_zoo
BCSTAGE_DEFINE_ERROR(RegistryError);
BCSTAGE_DEFINE_ERROR(FetchError);
BCSTAGE_DEFINE_ERROR(ConfigError);
BCSTAGE_DEFINE_ERROR(DivergenceError);
BCSTAGE_DEFINE_ERROR(CorruptionError);
BCSTAGE_DEFINE_ERROR(FormatError);
BCSTAGE_DEFINE_ERROR(InputError);

// experiment_orchestrator
BCSTAGE_DEFINE_ERROR(NoMembersError);
BCSTAGE_DEFINE_ERROR(UsageError);

#undef BCSTAGE_DEFINE_ERROR

}  // namespace bcstage
