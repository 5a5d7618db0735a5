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
#include <string>

#include "sgdbm/batching.hpp"
#include "sgdbm/calibration.hpp"
#include "sgdbm/numkernel.hpp"

namespace sgdbm {

/// Ellipsoid {x : (center - x)^T shape^{-1} (center - x) <= scale}, closed.
struct ConfidenceRegion {
    Vector center;
    SymMatrixd shape;
    double scale = 0.0;  ///< d(m-1)/(m(m-d)) * alpha
    double alpha = 0.0;
    int m = 0;
    std::uint64_t T = 0;
    double delta = 0.0;
    std::string allocation;

    Index dim() const noexcept { return center.size(); }
};

struct MarginalIntervals {
    Vector center;
    Vector lower;
    Vector upper;
    Vector sigma;  ///< per-coordinate batch-means standard deviation
    double alpha_1d = 0.0;
    int m = 0;
    double delta = 0.0;

    Index dim() const noexcept { return center.size(); }
};

/**
 * Joint 100(1-delta)% confidence region from one batch-means summary.
 *
 * `alpha` must be calibrated for the summary's (d, m, allocation);
 * otherwise KeyMismatch. A singular S_m(T) raises DegenerateCovariance.
 */
ConfidenceRegion build_region(const BatchMeansSummaryd& summary, const ScalingQuantile& alpha);

bool contains(const ConfidenceRegion& region, const Vector& x);

/// d-dimensional volume of the unit ball, pi^{d/2} / Gamma(d/2 + 1).
double unit_ball_volume(Index d);

double region_volume(const ConfidenceRegion& region);

/// Per-coordinate intervals Xbar(k) +- sqrt(alpha_1d / m) sigma(k); alpha_1d calibrated at d = 1.
MarginalIntervals marginal_intervals(const BatchMeansSummaryd& summary, const ScalingQuantile& alpha_1d);

/// Fraction of coordinates of x inside their intervals.
double marginal_coverage(const MarginalIntervals& intervals, const Vector& x);

struct VolumeFactor {
    double value = 0.0;
    double standard_error = 0.0;
    double mean_det_sqrt = 0.0;
    double mean_det_sqrt_se = 0.0;
};

/**
 * Monte Carlo estimate of the limiting volume factor
 * (d(m-1)/(m(m-d)))^{d/2} E[det g_m(B, w)^{1/2}] alpha^{d/2}.
 *
 * The standard error combines the sampling error of the determinant mean
 * with the uncertainty of alpha implied by its CI (delta method).
 */
VolumeFactor expected_volume_factor(const LimitDrawSpec& spec, const ScalingQuantile& alpha, std::uint64_t reps,
                                    std::uint64_t base_seed, unsigned threads = 0);

}  // namespace sgdbm
