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
#include <vector>

#include "sgdbm/errors.hpp"
#include "sgdbm/numkernel.hpp"
#include "sgdbm/sgd.hpp"

namespace sgdbm {

enum class AllocationKind { IBS, ES, DBS, Custom };

/**
 * Batch-size allocation scheme.
 *
 * IBS places cumulative boundaries at (i/m)^(1/(1-r)), which equalizes the
 * sum of step sizes gamma_t = a t^(-r) across batches. DBS reverses the IBS
 * batch sizes. ES splits evenly. Custom weights are normalized to sum to 1.
 *
 * The IBS/DBS exponent accepts r = 1/2 (exponent 2) in addition to the
 * step-schedule range (1/2, 1).
 */
class Allocation {
public:
    static Allocation ibs(double r = StepSchedule::kDefaultExponent);
    static Allocation es();
    static Allocation dbs(double r = StepSchedule::kDefaultExponent);
    static Allocation custom(std::vector<double> weights);

    AllocationKind kind() const noexcept { return kind_; }
    double exponent() const noexcept { return r_; }
    const std::vector<double>& custom_weights() const noexcept { return weights_; }

    /// Continuous weights w_1..w_m (positive, summing to 1).
    std::vector<double> ideal_weights(int m) const;
    /// Stable text identifier, used in calibration keys.
    std::string descriptor() const;

private:
    Allocation(AllocationKind kind, double r, std::vector<double> weights)
        : kind_(kind), r_(r), weights_(std::move(weights)) {}

    AllocationKind kind_;
    double r_;
    std::vector<double> weights_;
};

Allocation parse_allocation(const std::string& name, double r, const std::vector<double>& custom_weights = {});

/// Cumulative points c_0 = 0, c_i = c_{i-1} + w_i.
std::vector<double> cumulative(const std::vector<double>& weights);

/// Integer partition 0 = tau_0 < tau_1 < ... < tau_m = T of the iterates 1..T.
struct BatchPlan {
    std::uint64_t T = 0;
    int m = 0;
    std::vector<std::uint64_t> boundaries;
    std::string allocation;

    std::uint64_t size(int i) const { return boundaries[i + 1] - boundaries[i]; }
    std::vector<std::uint64_t> sizes() const;
    /// Realized weights b_i / T.
    std::vector<double> weights() const;
};

/**
 * Boundaries at round(T c_i) with c_m pinned to 1. Collisions are repaired
 * by shifting the later boundary forward by one. DBS reverses the IBS sizes.
 */
BatchPlan make_plan(std::uint64_t T, int m, const Allocation& alloc);

/// Batch means Xi_1..Xi_m (columns of xi) and the overall mean of T iterates.
template <typename Scalar>
struct BatchMeansSummary {
    BatchPlan plan;
    MatrixX<Scalar> xi;
    VectorX<Scalar> xbar;

    Index dim() const noexcept { return xbar.size(); }
    int m() const noexcept { return plan.m; }
};

using BatchMeansSummaryd = BatchMeansSummary<double>;

/**
 * Streaming batch-means accumulator, O(m d) memory.
 *
 * Usable directly as the observer of run_sgd. The overall mean is a separate
 * running sum over all iterates in feed order.
 */
template <typename Scalar>
class BatchMeansAccumulator {
public:
    BatchMeansAccumulator(BatchPlan plan, Index d)
        : plan_(std::move(plan)), sums_(MatrixX<Scalar>::Zero(d, plan_.m)), total_(VectorX<Scalar>::Zero(d)) {
        if (d < 1) throw InvalidDimension("BatchMeansAccumulator: d must be >= 1");
    }

    template <typename Derived>
    void feed(const Eigen::MatrixBase<Derived>& x) {
        if (x.size() != total_.size())
            throw DimensionMismatch("feed: vector length " + std::to_string(x.size()) + ", expected " +
                                    std::to_string(total_.size()));
        if (fed_ == plan_.T) throw FeedCountMismatch("feed: more than T = " + std::to_string(plan_.T) + " iterates");
        ++fed_;
        while (fed_ > plan_.boundaries[batch_ + 1]) ++batch_;
        sums_.col(batch_) += x;
        total_ += x;
    }

    template <typename Derived>
    void operator()(const Eigen::MatrixBase<Derived>& x) {
        feed(x);
    }

    std::uint64_t fed() const noexcept { return fed_; }

    BatchMeansSummary<Scalar> finalize() const {
        if (fed_ != plan_.T)
            throw FeedCountMismatch("finalize: fed " + std::to_string(fed_) + " iterates, plan expects " +
                                    std::to_string(plan_.T));
        MatrixX<Scalar> xi = sums_;
        for (int i = 0; i < plan_.m; ++i) xi.col(i) /= static_cast<Scalar>(plan_.size(i));
        VectorX<Scalar> xbar = total_ / static_cast<Scalar>(plan_.T);
        return {plan_, std::move(xi), std::move(xbar)};
    }

private:
    BatchPlan plan_;
    MatrixX<Scalar> sums_;
    VectorX<Scalar> total_;
    std::uint64_t fed_ = 0;
    int batch_ = 0;
};

/**
 * S_m(T) = (m-1)^{-1} sum_i (Xi_i - Xbar)(Xi_i - Xbar)^T, carrying the Gram
 * factor implied by sum_i b_i (Xi_i - Xbar) = 0, so S is exactly singular
 * when m <= d.
 */
template <typename Scalar>
SymMatrix<Scalar> sample_cov(const BatchMeansSummary<Scalar>& summary) {
    const int m = summary.m();
    if (m < 2) throw InvalidBatchCount("sample_cov: m must be >= 2");
    const MatrixX<Scalar> dev = summary.xi.colwise() - summary.xbar;
    VectorX<Scalar> w(m);
    for (int i = 0; i < m; ++i) w(i) = static_cast<Scalar>(summary.plan.size(i));
    const Scalar inv = Scalar(1) / static_cast<Scalar>(m - 1);
    return SymMatrix<Scalar>((dev * dev.transpose()) * inv, reduce_constrained(dev, w) * std::sqrt(inv));
}

/// m(m-d) / (d(m-1)), the normalizing factor of the batch-means statistic.
inline double gamma_scale(int m, Index d) {
    return static_cast<double>(m) * static_cast<double>(m - d) / (static_cast<double>(d) * static_cast<double>(m - 1));
}

/// Gamma_T = m(m-d)/(d(m-1)) (Xbar - x_ref)^T S_m^{-1} (Xbar - x_ref).
template <typename Scalar, typename Derived>
Scalar gamma_statistic(const BatchMeansSummary<Scalar>& summary, const Eigen::MatrixBase<Derived>& x_ref) {
    const Index d = summary.dim();
    const int m = summary.m();
    if (x_ref.size() != d) throw DimensionMismatch("gamma_statistic: x_ref has wrong length");
    if (m <= d)
        throw BatchCountTooSmall("gamma_statistic: need m > d, got m = " + std::to_string(m) +
                                 ", d = " + std::to_string(d));
    CholFactor<Scalar> chol = [&] {
        try {
            return cholesky(sample_cov(summary));
        } catch (const NotPositiveDefinite& e) {
            throw DegenerateCovariance(std::string("gamma_statistic: ") + e.what());
        }
    }();
    const VectorX<Scalar> diff = summary.xbar - x_ref;
    return static_cast<Scalar>(gamma_scale(m, d)) * quad_form_inv(chol, diff);
}

}  // namespace sgdbm
