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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgdbm/batching.hpp"
#include "sgdbm/errors.hpp"
#include "sgdbm/numkernel.hpp"
#include "sgdbm/rng.hpp"

namespace sgdbm {

/// Limiting distribution parameters: dimension d, batch count m > d, weights w.
struct LimitDrawSpec {
    Index d = 1;
    int m = 2;
    std::vector<double> w;
    std::string allocation;

    LimitDrawSpec(Index d, int m, std::vector<double> w, std::string allocation);

    static LimitDrawSpec for_allocation(Index d, int m, const Allocation& alloc) {
        return LimitDrawSpec(d, m, alloc.ideal_weights(m), alloc.descriptor());
    }
};

/**
 * g_m evaluated on a Brownian skeleton.
 *
 * Column i of `increments` is D_i = B(c_i) - B(c_{i-1}); B(1) is their sum.
 * Returns (m-1)^{-1} sum_i (D_i / w_i - B(1)) (D_i / w_i - B(1))^T with the
 * Gram factor implied by sum_i w_i (D_i / w_i - B(1)) = 0.
 */
template <typename Derived>
SymMatrix<typename Derived::Scalar> g_of_skeleton(const Eigen::MatrixBase<Derived>& increments,
                                                  std::span<const double> w) {
    using Scalar = typename Derived::Scalar;
    const Index m = increments.cols();
    if (static_cast<Index>(w.size()) != m)
        throw DimensionMismatch("g_of_skeleton: " + std::to_string(m) + " increments but " +
                                std::to_string(w.size()) + " weights");
    if (m < 2) throw InvalidBatchCount("g_of_skeleton: m must be >= 2");
    const VectorX<Scalar> b1 = increments.rowwise().sum();
    MatrixX<Scalar> dev(increments.rows(), m);
    for (Index i = 0; i < m; ++i) dev.col(i) = increments.col(i) / static_cast<Scalar>(w[i]) - b1;
    VectorX<Scalar> wv(m);
    for (Index i = 0; i < m; ++i) wv(i) = static_cast<Scalar>(w[i]);
    const Scalar inv = Scalar(1) / static_cast<Scalar>(m - 1);
    return SymMatrix<Scalar>((dev * dev.transpose()) * inv, reduce_constrained(dev, wv) * std::sqrt(inv));
}

/// Draws D_i ~ N(0, w_i I_d) as the columns of a d x m matrix.
Matrix sample_skeleton(const LimitDrawSpec& spec, RandomStream& stream);

/**
 * One draw of m(m-d)/(d(m-1)) Z^T g_m(B, w)^{-1} Z with Z independent of B.
 *
 * A degenerate skeleton (probability zero) is redrawn once, then reported
 * as DegenerateDraw.
 */
double simulate_limit_draw(const LimitDrawSpec& spec, RandomStream& stream);

struct QuantileKey {
    Index d = 1;
    int m = 2;
    std::string allocation;
    double delta = 0.05;
    std::uint64_t reps = 0;
    std::uint64_t base_seed = 0;

    bool operator==(const QuantileKey&) const = default;
    std::string to_string() const;
};

/// Calibrated scaling parameter alpha_m(delta, w) with a 95% order-statistic CI.
struct ScalingQuantile {
    double alpha_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    QuantileKey key;
};

/// Draws per random stream in estimate_alpha; stream j covers draws [j*kChunk, (j+1)*kChunk).
inline constexpr std::uint64_t kDrawsPerStream = 4096;
inline constexpr std::uint64_t kMinCalibrationReps = 10000;

/// Empirical (1-delta)-quantile of `reps` limit draws. Independent of `threads`.
ScalingQuantile estimate_alpha(const LimitDrawSpec& spec, double delta, std::uint64_t reps,
                               std::uint64_t base_seed, unsigned threads = 0);

/// 1-based order-statistic ranks (point, low, high) for the p-quantile of n samples.
struct OrderStatRanks {
    std::uint64_t point, low, high;
};
OrderStatRanks quantile_ranks(std::uint64_t n, double p);

double regularized_incomplete_beta(double a, double b, double x);
double f_cdf(double x, int d1, int d2);
/// Inverse F CDF by bisection, absolute tolerance 1e-8.
double f_quantile(int d1, int d2, double p);
/// Inverse standard normal CDF by bisection on erfc.
double normal_quantile(double p);

/**
 * Persistent quantile cache: a JSON document holding one record per key.
 * save() writes to a sibling temporary file and renames it into place.
 */
class QuantileCache {
public:
    QuantileCache() = default;

    static QuantileCache load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    std::optional<ScalingQuantile> find(const QuantileKey& key) const;
    void insert(const ScalingQuantile& q);
    std::size_t size() const noexcept { return records_.size(); }

private:
    std::vector<ScalingQuantile> records_;
};

/// Looks up `cache` first (when given), otherwise estimates and inserts.
ScalingQuantile calibrate(const LimitDrawSpec& spec, double delta, std::uint64_t reps, std::uint64_t base_seed,
                          QuantileCache* cache = nullptr, unsigned threads = 0);

}  // namespace sgdbm
