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

#include "sgdbm/batching.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

namespace sgdbm {
namespace {

void check_alloc_exponent(double r) {
    if (!(r >= 0.5 && r < 1.0))
        throw InvalidAllocation("IBS/DBS exponent r must lie in [1/2, 1), got " + std::to_string(r));
}

std::string format_r(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", r);
    return buf;
}

std::uint64_t fnv1a(const std::vector<double>& values) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int k = 0; k < 8; ++k) {
            h ^= (bits >> (8 * k)) & 0xffu;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

std::vector<std::uint64_t> round_and_repair(std::uint64_t T, const std::vector<double>& c) {
    const int m = static_cast<int>(c.size()) - 1;
    std::vector<std::uint64_t> tau(m + 1);
    tau[0] = 0;
    for (int i = 1; i < m; ++i) {
        auto t = static_cast<std::uint64_t>(std::llround(c[i] * static_cast<double>(T)));
        tau[i] = std::max(t, tau[i - 1] + 1);
    }
    tau[m] = T;
    if (tau[m - 1] >= T)
        throw BatchTooSmall("make_plan: T = " + std::to_string(T) + " leaves an empty batch for m = " +
                            std::to_string(m));
    return tau;
}

}  // namespace

Allocation Allocation::ibs(double r) {
    check_alloc_exponent(r);
    return Allocation(AllocationKind::IBS, r, {});
}

Allocation Allocation::es() { return Allocation(AllocationKind::ES, 0.0, {}); }

Allocation Allocation::dbs(double r) {
    check_alloc_exponent(r);
    return Allocation(AllocationKind::DBS, r, {});
}

Allocation Allocation::custom(std::vector<double> weights) {
    if (weights.size() < 2) throw InvalidBatchCount("custom allocation needs at least 2 weights");
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w)) throw InvalidAllocation("custom weights must be positive and finite");
        total += w;
    }
    for (double& w : weights) w /= total;
    return Allocation(AllocationKind::Custom, 0.0, std::move(weights));
}

std::vector<double> Allocation::ideal_weights(int m) const {
    if (m < 2) throw InvalidBatchCount("m must be >= 2, got " + std::to_string(m));
    std::vector<double> w(m);
    switch (kind_) {
    case AllocationKind::ES:
        std::fill(w.begin(), w.end(), 1.0 / m);
        break;
    case AllocationKind::IBS:
    case AllocationKind::DBS: {
        const double p = 1.0 / (1.0 - r_);
        double prev = 0.0;
        for (int i = 1; i <= m; ++i) {
            const double c = (i == m) ? 1.0 : std::pow(static_cast<double>(i) / m, p);
            w[i - 1] = c - prev;
            prev = c;
        }
        if (kind_ == AllocationKind::DBS) std::reverse(w.begin(), w.end());
        break;
    }
    case AllocationKind::Custom:
        if (static_cast<int>(weights_.size()) != m)
            throw InvalidAllocation("custom allocation has " + std::to_string(weights_.size()) +
                                    " weights, m = " + std::to_string(m));
        w = weights_;
        break;
    }
    return w;
}

std::string Allocation::descriptor() const {
    switch (kind_) {
    case AllocationKind::ES:
        return "es";
    case AllocationKind::IBS:
        return "ibs(r=" + format_r(r_) + ")";
    case AllocationKind::DBS:
        return "dbs(r=" + format_r(r_) + ")";
    case AllocationKind::Custom: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(weights_)));
        return std::string("custom(") + buf + ")";
    }
    }
    return "unknown";
}

Allocation parse_allocation(const std::string& name, double r, const std::vector<double>& custom_weights) {
    if (name == "ibs") return Allocation::ibs(r);
    if (name == "es") return Allocation::es();
    if (name == "dbs") return Allocation::dbs(r);
    if (name == "custom") return Allocation::custom(custom_weights);
    throw InvalidAllocation("unknown allocation '" + name + "' (expected ibs, es, dbs or custom)");
}

std::vector<double> cumulative(const std::vector<double>& weights) {
    std::vector<double> c(weights.size() + 1, 0.0);
    for (std::size_t i = 0; i < weights.size(); ++i) c[i + 1] = c[i] + weights[i];
    return c;
}

std::vector<std::uint64_t> BatchPlan::sizes() const {
    std::vector<std::uint64_t> out(m);
    for (int i = 0; i < m; ++i) out[i] = size(i);
    return out;
}

std::vector<double> BatchPlan::weights() const {
    std::vector<double> out(m);
    for (int i = 0; i < m; ++i) out[i] = static_cast<double>(size(i)) / static_cast<double>(T);
    return out;
}

BatchPlan make_plan(std::uint64_t T, int m, const Allocation& alloc) {
    if (m < 2) throw InvalidBatchCount("make_plan: m must be >= 2, got " + std::to_string(m));
    if (T < static_cast<std::uint64_t>(m))
        throw BatchTooSmall("make_plan: T = " + std::to_string(T) + " < m = " + std::to_string(m));

    BatchPlan plan{T, m, {}, alloc.descriptor()};
    switch (alloc.kind()) {
    case AllocationKind::ES:
        plan.boundaries.resize(m + 1);
        for (int i = 0; i <= m; ++i) plan.boundaries[i] = (2 * static_cast<std::uint64_t>(i) * T + m) / (2 * m);
        break;
    case AllocationKind::IBS:
    case AllocationKind::Custom:
        plan.boundaries = round_and_repair(T, cumulative(alloc.ideal_weights(m)));
        break;
    case AllocationKind::DBS: {
        const auto ibs = round_and_repair(T, cumulative(Allocation::ibs(alloc.exponent()).ideal_weights(m)));
        plan.boundaries.assign(m + 1, 0);
        for (int i = 1; i <= m; ++i) plan.boundaries[i] = plan.boundaries[i - 1] + (ibs[m - i + 1] - ibs[m - i]);
        break;
    }
    }
    return plan;
}

}  // namespace sgdbm
