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

#include "sgdbm/inference.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "sgdbm/parallel.hpp"

namespace sgdbm {
namespace {

void check_key(const QuantileKey& key, Index d, int m, const std::string& allocation, const char* where) {
    if (key.d != d || key.m != m || key.allocation != allocation)
        throw KeyMismatch(std::string(where) + ": scaling parameter calibrated for (" + key.to_string() +
                          "), summary has d=" + std::to_string(d) + " m=" + std::to_string(m) +
                          " alloc=" + allocation);
}

}  // namespace

ConfidenceRegion build_region(const BatchMeansSummaryd& summary, const ScalingQuantile& alpha) {
    const Index d = summary.dim();
    const int m = summary.m();
    check_key(alpha.key, d, m, summary.plan.allocation, "build_region");
    if (m <= d)
        throw BatchCountTooSmall("build_region: need m > d, got m = " + std::to_string(m) +
                                 ", d = " + std::to_string(d));
    SymMatrixd shape = sample_cov(summary);
    try {
        (void)cholesky(shape);
    } catch (const NotPositiveDefinite& e) {
        throw DegenerateCovariance(std::string("build_region: ") + e.what());
    }
    ConfidenceRegion region{summary.xbar, std::move(shape), alpha.alpha_hat / gamma_scale(m, d), alpha.alpha_hat,
                            m, summary.plan.T, alpha.key.delta, summary.plan.allocation};
    return region;
}

bool contains(const ConfidenceRegion& region, const Vector& x) {
    if (x.size() != region.dim())
        throw DimensionMismatch("contains: point has length " + std::to_string(x.size()) + ", region dimension " +
                                std::to_string(region.dim()));
    // Closed boundary, up to a few ulps of roundoff in the quadratic form.
    constexpr double slack = 1.0 + 16.0 * std::numeric_limits<double>::epsilon();
    return quad_form_inv(region.shape, region.center - x) <= region.scale * slack;
}

double unit_ball_volume(Index d) {
    const double half = 0.5 * static_cast<double>(d);
    return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
}

double region_volume(const ConfidenceRegion& region) {
    const double half = 0.5 * static_cast<double>(region.dim());
    return std::pow(region.scale, half) * det_sqrt(region.shape) * unit_ball_volume(region.dim());
}

MarginalIntervals marginal_intervals(const BatchMeansSummaryd& summary, const ScalingQuantile& alpha_1d) {
    const int m = summary.m();
    check_key(alpha_1d.key, 1, m, summary.plan.allocation, "marginal_intervals");
    if (m < 2) throw InvalidBatchCount("marginal_intervals: m must be >= 2");

    const Matrix dev = summary.xi.colwise() - summary.xbar;
    MarginalIntervals out;
    out.center = summary.xbar;
    out.sigma = (dev.rowwise().squaredNorm() / static_cast<double>(m - 1)).cwiseSqrt();
    const Vector half = std::sqrt(alpha_1d.alpha_hat / m) * out.sigma;
    out.lower = out.center - half;
    out.upper = out.center + half;
    out.alpha_1d = alpha_1d.alpha_hat;
    out.m = m;
    out.delta = alpha_1d.key.delta;
    return out;
}

double marginal_coverage(const MarginalIntervals& intervals, const Vector& x) {
    if (x.size() != intervals.dim()) throw DimensionMismatch("marginal_coverage: dimension mismatch");
    Index hits = 0;
    for (Index k = 0; k < x.size(); ++k) hits += (intervals.lower(k) <= x(k) && x(k) <= intervals.upper(k));
    return static_cast<double>(hits) / static_cast<double>(x.size());
}

VolumeFactor expected_volume_factor(const LimitDrawSpec& spec, const ScalingQuantile& alpha, std::uint64_t reps,
                                    std::uint64_t base_seed, unsigned threads) {
    check_key(alpha.key, spec.d, spec.m, spec.allocation, "expected_volume_factor");
    if (reps < 2) throw InvalidConfig("expected_volume_factor: reps must be >= 2");

    std::vector<double> dets(reps);
    const std::uint64_t streams = (reps + kDrawsPerStream - 1) / kDrawsPerStream;
    parallel_for(streams, threads, [&](std::size_t j) {
        RandomStream stream = derive_stream(base_seed, j);
        const std::uint64_t end = std::min<std::uint64_t>(reps, (j + 1) * kDrawsPerStream);
        for (std::uint64_t k = j * kDrawsPerStream; k < end; ++k)
            dets[k] = det_sqrt(g_of_skeleton(sample_skeleton(spec, stream), spec.w));
    });

    double mean = 0.0;
    for (double v : dets) mean += v;
    mean /= static_cast<double>(reps);
    double ss = 0.0;
    for (double v : dets) ss += (v - mean) * (v - mean);
    const double det_se = std::sqrt(ss / static_cast<double>(reps - 1) / static_cast<double>(reps));

    const double half_d = 0.5 * static_cast<double>(spec.d);
    const double factor = std::pow(1.0 / gamma_scale(spec.m, spec.d), half_d);
    VolumeFactor out;
    out.mean_det_sqrt = mean;
    out.mean_det_sqrt_se = det_se;
    out.value = factor * mean * std::pow(alpha.alpha_hat, half_d);

    const double alpha_se = (alpha.ci_high - alpha.ci_low) / (2.0 * 1.959963984540054);
    const double rel_det = mean > 0.0 ? det_se / mean : 0.0;
    const double rel_alpha = half_d * alpha_se / alpha.alpha_hat;
    out.standard_error = out.value * std::sqrt(rel_det * rel_det + rel_alpha * rel_alpha);
    return out;
}

}  // namespace sgdbm
