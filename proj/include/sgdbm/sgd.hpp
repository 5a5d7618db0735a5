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
#include <utility>

#include "sgdbm/errors.hpp"
#include "sgdbm/numkernel.hpp"
#include "sgdbm/rng.hpp"

namespace sgdbm {

/// Step sizes gamma_t = a * t^(-r), a > 0, 1/2 < r < 1.
class StepSchedule {
public:
    static constexpr double kDefaultScale = 1.0;
    static constexpr double kDefaultExponent = 0.501;

    StepSchedule(double a = kDefaultScale, double r = kDefaultExponent);

    double scale() const noexcept { return a_; }
    double exponent() const noexcept { return r_; }
    double operator()(std::uint64_t t) const;

private:
    double a_;
    double r_;
};

double step_size(const StepSchedule& schedule, std::uint64_t t);

/**
 * Source of stochastic gradients G(x, zeta_t).
 *
 * Implementations are expected (not checked) to be conditionally unbiased
 * for the gradient of the loss they model. An oracle is single-owner; the
 * randomness for zeta_t comes from the stream passed in.
 */
class GradientOracle {
public:
    virtual ~GradientOracle() = default;

    virtual Index dim() const = 0;
    virtual void gradient(const Vector& x, RandomStream& stream, Vector& out) = 0;
};

struct SgdRunConfig {
    std::uint64_t T = 1;        ///< iterates delivered to the observer
    std::uint64_t burn_in = 0;  ///< iterates run but discarded first
    Vector x0;
    StepSchedule schedule;

    static SgdRunConfig with_defaults(Index dim, std::uint64_t T) {
        return SgdRunConfig{T, 0, Vector::Zero(dim), StepSchedule{}};
    }
};

/**
 * Runs X_t = X_{t-1} - gamma_t G(X_{t-1}, zeta_t) for t = 1 .. burn_in + T.
 *
 * The step index counts burn-in iterations. The last T iterates are passed
 * to `observer(const Vector&)` in order. Returns the final iterate.
 */
template <typename Observer>
Vector run_sgd(GradientOracle& oracle, const SgdRunConfig& config, RandomStream& stream, Observer&& observer) {
    const Index d = oracle.dim();
    if (config.T < 1) throw InvalidConfig("run_sgd: T must be >= 1");
    if (config.x0.size() != d)
        throw OracleDimensionMismatch("run_sgd: x0 has length " + std::to_string(config.x0.size()) +
                                      ", oracle dimension is " + std::to_string(d));

    Vector x = config.x0;
    Vector grad(d);
    const std::uint64_t total = config.burn_in + config.T;
    for (std::uint64_t t = 1; t <= total; ++t) {
        oracle.gradient(x, stream, grad);
        if (grad.size() != d)
            throw OracleDimensionMismatch("run_sgd: oracle returned length " + std::to_string(grad.size()) +
                                          " at t = " + std::to_string(t));
        x.noalias() -= config.schedule(t) * grad;
        if (!x.allFinite()) throw NonFiniteIterate("run_sgd: non-finite iterate at t = " + std::to_string(t));
        if (t > config.burn_in) observer(std::as_const(x));
    }
    return x;
}

}  // namespace sgdbm
