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

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "sgdbm/numkernel.hpp"
#include "sgdbm/rng.hpp"
#include "sgdbm/sgd.hpp"

namespace sgdbm {

enum class ModelKind { Linear, Logistic };

ModelKind parse_model(const std::string& name);
std::string to_string(ModelKind kind);

struct TrueParams {
    Vector x_star;
};

/// Coordinates (k-1)/(d-1), k = 1..d; the single coordinate is 0.5 when d = 1.
TrueParams linspace_params(Index d);

/// Covariates a and response b (real for linear, +-1 for logistic).
struct Sample {
    Vector a;
    double b = 0.0;
};

/// a ~ N(0, I), b = x*^T a + eps with eps ~ N(0, 1).
Sample draw_linear_sample(const TrueParams& truth, RandomStream& stream);
/// a ~ N(0, I), b = +1 with probability 1 / (1 + exp(-x*^T a)), else -1.
Sample draw_logistic_sample(const TrueParams& truth, RandomStream& stream);

/// Gradient of (b - x^T a)^2 in x.
Vector linear_loss_gradient(const Vector& x, const Vector& a, double b);
/// Gradient of log(1 + exp(-b x^T a)) in x.
Vector logistic_loss_gradient(const Vector& x, const Vector& a, double b);

/// Oracle that draws a fresh synthetic sample per call.
class SyntheticOracle final : public GradientOracle {
public:
    SyntheticOracle(ModelKind kind, TrueParams truth) : kind_(kind), truth_(std::move(truth)) {}

    Index dim() const override { return truth_.x_star.size(); }
    void gradient(const Vector& x, RandomStream& stream, Vector& out) override;

    ModelKind kind() const noexcept { return kind_; }
    const TrueParams& truth() const noexcept { return truth_; }

private:
    ModelKind kind_;
    TrueParams truth_;
    Vector scratch_;
};

std::unique_ptr<GradientOracle> linear_oracle(const TrueParams& truth);
std::unique_ptr<GradientOracle> logistic_oracle(const TrueParams& truth);
std::unique_ptr<GradientOracle> make_oracle(ModelKind kind, const TrueParams& truth);

/// Rows of a user data file, in file order.
struct Dataset {
    ModelKind kind = ModelKind::Linear;
    Index dim = 0;
    std::vector<Sample> rows;
};

/**
 * Reads a CSV with header a_1,...,a_d,b. Numeric fields only, '.' decimal
 * separator. Logistic labels must be -1 or 1.
 */
Dataset ingest_csv(const std::filesystem::path& path, ModelKind kind);

/// Oracle replaying dataset rows in order, one row per call; ExhaustedData past the end.
class ReplayOracle final : public GradientOracle {
public:
    explicit ReplayOracle(std::shared_ptr<const Dataset> data) : data_(std::move(data)) {}

    Index dim() const override { return data_->dim; }
    void gradient(const Vector& x, RandomStream& stream, Vector& out) override;

    std::size_t consumed() const noexcept { return next_; }

private:
    std::shared_ptr<const Dataset> data_;
    std::size_t next_ = 0;
};

}  // namespace sgdbm
