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

// Helpers shared by the unit tests: random generators and offline oracles.

#pragma once

#include <cstdint>
#include <vector>

#include "sgdbm/batching.hpp"
#include "sgdbm/numkernel.hpp"
#include "sgdbm/rng.hpp"
#include "sgdbm/sgd.hpp"

namespace sgdbm::test {

inline Matrix random_matrix(RandomStream& rs, Index rows, Index cols) {
    Matrix a(rows, cols);
    rs.fill_std_normal(a);
    return a;
}

/// A A^T + eps I with A of standard normals.
inline SymMatrixd random_spd(RandomStream& rs, Index d, double eps = 1e-3) {
    const Matrix a = random_matrix(rs, d, d);
    return SymMatrixd(Matrix(a * a.transpose() + eps * Matrix::Identity(d, d)));
}

inline std::uint64_t uniform_int(RandomStream& rs, std::uint64_t lo, std::uint64_t hi) {
    return lo + static_cast<std::uint64_t>(rs.uniform() * static_cast<double>(hi - lo + 1));
}

inline double relative_frobenius(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

/// Batch means from a stored path (columns are iterates 1..T), by direct indexing.
inline BatchMeansSummaryd offline_batch_means(const BatchPlan& plan, const Matrix& path) {
    const Index d = path.rows();
    Matrix xi = Matrix::Zero(d, plan.m);
    for (int i = 0; i < plan.m; ++i) {
        for (std::uint64_t t = plan.boundaries[i]; t < plan.boundaries[i + 1]; ++t)
            xi.col(i) += path.col(static_cast<Index>(t));
        xi.col(i) /= static_cast<double>(plan.size(i));
    }
    Vector xbar = path.rowwise().mean();
    return {plan, xi, xbar};
}

/// Summary built directly from given batch means, with equal batch sizes.
inline BatchMeansSummaryd summary_from_means(const Matrix& xi, std::uint64_t batch_size = 1) {
    const int m = static_cast<int>(xi.cols());
    BatchPlan plan;
    plan.m = m;
    plan.T = batch_size * static_cast<std::uint64_t>(m);
    plan.allocation = "es";
    for (int i = 0; i <= m; ++i) plan.boundaries.push_back(batch_size * static_cast<std::uint64_t>(i));
    return {plan, xi, xi.rowwise().mean()};
}

/// Deterministic oracle G(x) = x - target.
class QuadraticOracle final : public GradientOracle {
public:
    explicit QuadraticOracle(Vector target) : target_(std::move(target)) {}
    Index dim() const override { return target_.size(); }
    void gradient(const Vector& x, RandomStream&, Vector& out) override { out = x - target_; }

private:
    Vector target_;
};

}  // namespace sgdbm::test
