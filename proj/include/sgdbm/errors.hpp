/*
   Copyright 2026 The sgdbm Authors

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

namespace sgdbm {

/// Base of every domain error. kind() is the stable error-type name the CLI
/// reports; what() carries the details.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define SGDBM_DEFINE_ERROR(Name)                                             \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& message) : Error(#Name, message) {} \
    }

// numkernel
SGDBM_DEFINE_ERROR(NotPositiveDefinite);
SGDBM_DEFINE_ERROR(DimensionMismatch);
// rng
SGDBM_DEFINE_ERROR(InvalidDimension);
// sgd
SGDBM_DEFINE_ERROR(InvalidSchedule);
SGDBM_DEFINE_ERROR(InvalidConfig);
SGDBM_DEFINE_ERROR(OracleDimensionMismatch);
SGDBM_DEFINE_ERROR(NonFiniteIterate);
// batching
SGDBM_DEFINE_ERROR(InvalidBatchCount);
SGDBM_DEFINE_ERROR(InvalidAllocation);
SGDBM_DEFINE_ERROR(BatchTooSmall);
SGDBM_DEFINE_ERROR(FeedCountMismatch);
SGDBM_DEFINE_ERROR(DegenerateCovariance);
SGDBM_DEFINE_ERROR(BatchCountTooSmall);
// calibration / inference
SGDBM_DEFINE_ERROR(DegenerateDraw);
SGDBM_DEFINE_ERROR(KeyMismatch);
SGDBM_DEFINE_ERROR(CacheError);
// models
SGDBM_DEFINE_ERROR(ParseError);
SGDBM_DEFINE_ERROR(LabelDomainError);
SGDBM_DEFINE_ERROR(ExhaustedData);
// experiments
SGDBM_DEFINE_ERROR(TooManyDegenerate);

#undef SGDBM_DEFINE_ERROR

}  // namespace sgdbm
