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
#include <limits>
#include <random>

#include "sgdbm/numkernel.hpp"

namespace sgdbm {

/**
 * Deterministic random stream identified by its lineage (base_seed,
 * stream_index).
 *
 * Streams with equal lineage produce identical sequences on every platform:
 * the engine is std::mt19937_64 (fully specified by the standard) and the
 * uniform and normal transforms are implemented here rather than taken from
 * the implementation-defined std distributions. A stream is single-owner.
 */
class RandomStream {
public:
    using result_type = std::uint64_t;

    RandomStream(std::uint64_t base_seed, std::uint64_t stream_index);

    std::uint64_t base_seed() const noexcept { return base_seed_; }
    std::uint64_t stream_index() const noexcept { return stream_index_; }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Standard normal (Marsaglia polar method).
    double std_normal();

    template <typename Derived>
    void fill_std_normal(Eigen::DenseBase<Derived>& out) {
        for (Index j = 0; j < out.cols(); ++j)
            for (Index i = 0; i < out.rows(); ++i) out(i, j) = std_normal();
    }

private:
    std::uint64_t base_seed_;
    std::uint64_t stream_index_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Stream for replication `stream_index` under `base_seed`.
RandomStream derive_stream(std::uint64_t base_seed, std::uint64_t stream_index);

/// Seed for a nested family of streams (e.g. the sections of one replication).
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t stream_index);

/// d independent N(0, 1) draws; throws InvalidDimension when d < 1.
Vector sample_std_normal_vec(RandomStream& stream, Index d);

}  // namespace sgdbm
