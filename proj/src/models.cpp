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

#include "sgdbm/models.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sgdbm {

ModelKind parse_model(const std::string& name) {
    if (name == "linear") return ModelKind::Linear;
    if (name == "logistic") return ModelKind::Logistic;
    throw InvalidConfig("unknown model '" + name + "' (expected linear or logistic)");
}

std::string to_string(ModelKind kind) { return kind == ModelKind::Linear ? "linear" : "logistic"; }

TrueParams linspace_params(Index d) {
    if (d < 1) throw InvalidDimension("linspace_params: d must be >= 1");
    if (d == 1) return {Vector::Constant(1, 0.5)};
    return {Vector::LinSpaced(d, 0.0, 1.0)};
}

Sample draw_linear_sample(const TrueParams& truth, RandomStream& stream) {
    Sample s{sample_std_normal_vec(stream, truth.x_star.size()), 0.0};
    s.b = truth.x_star.dot(s.a) + stream.std_normal();
    return s;
}

Sample draw_logistic_sample(const TrueParams& truth, RandomStream& stream) {
    Sample s{sample_std_normal_vec(stream, truth.x_star.size()), 0.0};
    const double p_one = 1.0 / (1.0 + std::exp(-truth.x_star.dot(s.a)));
    s.b = stream.uniform() < p_one ? 1.0 : -1.0;
    return s;
}

Vector linear_loss_gradient(const Vector& x, const Vector& a, double b) { return -2.0 * (b - x.dot(a)) * a; }

Vector logistic_loss_gradient(const Vector& x, const Vector& a, double b) {
    return (-b / (1.0 + std::exp(b * x.dot(a)))) * a;
}

void SyntheticOracle::gradient(const Vector& x, RandomStream& stream, Vector& out) {
    // Same draw order as draw_linear_sample / draw_logistic_sample, without allocating.
    scratch_.resize(dim());
    stream.fill_std_normal(scratch_);
    const double margin = truth_.x_star.dot(scratch_);
    double coef;
    if (kind_ == ModelKind::Linear) {
        const double b = margin + stream.std_normal();
        coef = -2.0 * (b - x.dot(scratch_));
    } else {
        const double b = stream.uniform() < 1.0 / (1.0 + std::exp(-margin)) ? 1.0 : -1.0;
        coef = -b / (1.0 + std::exp(b * x.dot(scratch_)));
    }
    out.resize(dim());
    out.noalias() = coef * scratch_;
}

std::unique_ptr<GradientOracle> linear_oracle(const TrueParams& truth) {
    return std::make_unique<SyntheticOracle>(ModelKind::Linear, truth);
}

std::unique_ptr<GradientOracle> logistic_oracle(const TrueParams& truth) {
    return std::make_unique<SyntheticOracle>(ModelKind::Logistic, truth);
}

std::unique_ptr<GradientOracle> make_oracle(ModelKind kind, const TrueParams& truth) {
    return std::make_unique<SyntheticOracle>(kind, truth);
}

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

Dataset ingest_csv(const std::filesystem::path& path, ModelKind kind) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open data file " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file, header a_1,...,a_d,b required");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_fields(line);
    if (header.size() < 2) throw ParseError(path.string() + ": header needs at least one covariate and b");
    for (std::size_t k = 0; k + 1 < header.size(); ++k)
        if (header[k] != "a_" + std::to_string(k + 1))
            throw ParseError(path.string() + ": header column " + std::to_string(k + 1) + " is '" + header[k] +
                             "', expected 'a_" + std::to_string(k + 1) + "'");
    if (header.back() != "b")
        throw ParseError(path.string() + ": last header column is '" + header.back() + "', expected 'b'");

    Dataset data;
    data.kind = kind;
    data.dim = static_cast<Index>(header.size() - 1);
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size())
            throw ParseError(path.string() + ": row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                             " columns, expected " + std::to_string(header.size()));
        Sample s{Vector(data.dim), 0.0};
        for (std::size_t k = 0; k < fields.size(); ++k) {
            double v = 0.0;
            const auto& f = fields[k];
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size() || f.empty() || !std::isfinite(v))
                throw ParseError(path.string() + ": row " + std::to_string(row) + ", column " + std::to_string(k + 1) +
                                 ": '" + f + "' is not a finite number");
            if (k + 1 < fields.size())
                s.a(static_cast<Index>(k)) = v;
            else
                s.b = v;
        }
        if (kind == ModelKind::Logistic && s.b != 1.0 && s.b != -1.0)
            throw LabelDomainError(path.string() + ": row " + std::to_string(row) + " has label " + fields.back() +
                                   ", logistic labels must be -1 or 1");
        data.rows.push_back(std::move(s));
    }
    return data;
}

void ReplayOracle::gradient(const Vector& x, RandomStream&, Vector& out) {
    if (next_ >= data_->rows.size())
        throw ExhaustedData("replay oracle: run requested row " + std::to_string(next_ + 1) + " but the data has " +
                            std::to_string(data_->rows.size()) + " rows");
    const Sample& s = data_->rows[next_++];
    out = data_->kind == ModelKind::Linear ? linear_loss_gradient(x, s.a, s.b) : logistic_loss_gradient(x, s.a, s.b);
}

}  // namespace sgdbm
