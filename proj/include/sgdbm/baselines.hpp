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

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

#include "sgdbm/batching.hpp"
#include "sgdbm/inference.hpp"
#include "sgdbm/sgd.hpp"

namespace sgdbm {

using OracleFactory = std::function<std::unique_ptr<GradientOracle>()>;

/// Sectioning: m independent averaged-SGD runs treated as m equal batches.
struct SectioningResult {
    BatchMeansSummaryd summary;  ///< columns of xi are the per-run means
    std::uint64_t section_length = 0;
    std::optional<ConfidenceRegion> region;  ///< present when m > d
    MarginalIntervals intervals;
};

/**
 * Runs the m sections of floor(total_T / m) iterates each. Section s draws
 * from derive_stream(seed, s). `base.T` is ignored; x0, burn-in and the
 * schedule are shared by all sections.
 */
BatchMeansSummaryd run_sections(const OracleFactory& factory, int m, std::uint64_t total_T, const SgdRunConfig& base,
                                std::uint64_t seed, unsigned threads = 1);

/// Exact scaling for independent equal sections: the F(d, m-d) quantile.
ScalingQuantile sectioning_alpha(Index d, int m, double delta);

ConfidenceRegion sectioning_region(const BatchMeansSummaryd& sections, double delta);
MarginalIntervals sectioning_intervals(const BatchMeansSummaryd& sections, double delta);

SectioningResult sectioning_infer(const OracleFactory& factory, int m, std::uint64_t total_T,
                                  const SgdRunConfig& base, double delta, std::uint64_t seed, unsigned threads = 1);

/// Smallest m with m^4 >= T, i.e. ceil(T^{1/4}) without floating-point rounding.
int bmi_batch_count(std::uint64_t T);

/// IBS plan with bmi_batch_count(T) batches.
BatchPlan bmi_plan(std::uint64_t T, double r = StepSchedule::kDefaultExponent);

/**
 * BMI-style intervals Xbar(k) +- z sigma(k) / sqrt(m) with normal quantiles,
 * where sigma(k)^2 = sum_i (n_i / T) (Xi_i(k) - Xbar(k))^2 weights each batch
 * by its size n_i. `joint` uses the Bonferroni level delta / d.
 */
struct BmiResult {
    int m = 0;
    double z_marginal = 0.0;
    double z_joint = 0.0;
    MarginalIntervals marginal;
    MarginalIntervals joint;
};

BmiResult bmi_infer(const BatchMeansSummaryd& summary, double delta);

/// All d Bonferroni intervals cover x.
bool bmi_joint_covers(const BmiResult& result, const Vector& x);

}  // namespace sgdbm
