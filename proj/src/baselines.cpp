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

#include "sgdbm/baselines.hpp"

#include <cmath>

#include "sgdbm/parallel.hpp"

namespace sgdbm {

BatchMeansSummaryd run_sections(const OracleFactory& factory, int m, std::uint64_t total_T, const SgdRunConfig& base,
                                std::uint64_t seed, unsigned threads) {
    if (m < 2) throw InvalidBatchCount("sectioning: m must be >= 2, got " + std::to_string(m));
    const std::uint64_t length = total_T / static_cast<std::uint64_t>(m);
    if (length < 1) throw BatchTooSmall("sectioning: total_T = " + std::to_string(total_T) + " < m");

    const Index d = factory()->dim();
    Matrix means(d, m);
    parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t s) {
        auto oracle = factory();
        SgdRunConfig config = base;
        config.T = length;
        RandomStream stream = derive_stream(seed, s);
        Vector sum = Vector::Zero(d);
        run_sgd(*oracle, config, stream, [&](const Vector& x) { sum += x; });
        means.col(static_cast<Index>(s)) = sum / static_cast<double>(length);
    });

    BatchPlan plan{length * m, m, {}, Allocation::es().descriptor()};
    plan.boundaries.resize(m + 1);
    for (int i = 0; i <= m; ++i) plan.boundaries[i] = static_cast<std::uint64_t>(i) * length;
    Vector pooled = means.rowwise().mean();
    return {std::move(plan), std::move(means), std::move(pooled)};
}

ScalingQuantile sectioning_alpha(Index d, int m, double delta) {
    ScalingQuantile q;
    q.alpha_hat = f_quantile(static_cast<int>(d), m - static_cast<int>(d), 1.0 - delta);
    q.ci_low = q.ci_high = q.alpha_hat;
    q.key = QuantileKey{d, m, Allocation::es().descriptor(), delta, 0, 0};
    return q;
}

ConfidenceRegion sectioning_region(const BatchMeansSummaryd& sections, double delta) {
    const Index d = sections.dim();
    if (sections.m() <= d)
        throw BatchCountTooSmall("sectioning: need m > d for a joint region, got m = " + std::to_string(sections.m()));
    return build_region(sections, sectioning_alpha(d, sections.m(), delta));
}

MarginalIntervals sectioning_intervals(const BatchMeansSummaryd& sections, double delta) {
    return marginal_intervals(sections, sectioning_alpha(1, sections.m(), delta));
}

SectioningResult sectioning_infer(const OracleFactory& factory, int m, std::uint64_t total_T,
                                  const SgdRunConfig& base, double delta, std::uint64_t seed, unsigned threads) {
    SectioningResult out;
    out.summary = run_sections(factory, m, total_T, base, seed, threads);
    out.section_length = out.summary.plan.T / static_cast<std::uint64_t>(m);
    if (m > out.summary.dim()) out.region = sectioning_region(out.summary, delta);
    out.intervals = sectioning_intervals(out.summary, delta);
    return out;
}

int bmi_batch_count(std::uint64_t T) {
    std::uint64_t m = 1;
    while (m * m * m * m < T) ++m;
    return static_cast<int>(m);
}

BatchPlan bmi_plan(std::uint64_t T, double r) {
    if (T < 16) throw InvalidConfig("BMI needs T >= 16 so that at least 2 batches exist");
    return make_plan(T, bmi_batch_count(T), Allocation::ibs(r));
}

namespace {

MarginalIntervals normal_intervals(const BatchMeansSummaryd& summary, double z, double delta) {
    const int m = summary.m();
    const Matrix dev = summary.xi.colwise() - summary.xbar;
    Vector w(m);
    for (int i = 0; i < m; ++i)
        w(i) = static_cast<double>(summary.plan.size(i)) / static_cast<double>(summary.plan.T);
    MarginalIntervals out;
    out.center = summary.xbar;
    out.sigma = (dev.cwiseAbs2() * w).cwiseSqrt();
    const Vector half = (z / std::sqrt(static_cast<double>(m))) * out.sigma;
    out.lower = out.center - half;
    out.upper = out.center + half;
    out.alpha_1d = z * z;
    out.m = m;
    out.delta = delta;
    return out;
}

}  // namespace

BmiResult bmi_infer(const BatchMeansSummaryd& summary, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidConfig("bmi_infer: delta must lie in (0, 1)");
    if (summary.m() < 2) throw InvalidBatchCount("bmi_infer: m must be >= 2");
    const double d = static_cast<double>(summary.dim());
    BmiResult out;
    out.m = summary.m();
    out.z_marginal = normal_quantile(1.0 - delta / 2.0);
    out.z_joint = normal_quantile(1.0 - delta / (2.0 * d));
    out.marginal = normal_intervals(summary, out.z_marginal, delta);
    out.joint = normal_intervals(summary, out.z_joint, delta / d);
    return out;
}

bool bmi_joint_covers(const BmiResult& result, const Vector& x) { return marginal_coverage(result.joint, x) == 1.0; }

}  // namespace sgdbm
