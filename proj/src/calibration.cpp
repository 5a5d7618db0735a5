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

#include "sgdbm/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "sgdbm/parallel.hpp"

namespace sgdbm {

LimitDrawSpec::LimitDrawSpec(Index d_, int m_, std::vector<double> w_, std::string allocation_)
    : d(d_), m(m_), w(std::move(w_)), allocation(std::move(allocation_)) {
    if (d < 1) throw InvalidDimension("LimitDrawSpec: d must be >= 1");
    if (m <= d)
        throw BatchCountTooSmall("LimitDrawSpec: need m > d, got m = " + std::to_string(m) +
                                 ", d = " + std::to_string(d));
    if (static_cast<int>(w.size()) != m)
        throw DimensionMismatch("LimitDrawSpec: " + std::to_string(w.size()) + " weights for m = " +
                                std::to_string(m));
    double total = 0.0;
    for (double wi : w) {
        if (!(wi > 0.0)) throw InvalidAllocation("LimitDrawSpec: weights must be positive");
        total += wi;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidAllocation("LimitDrawSpec: weights must sum to 1");
}

Matrix sample_skeleton(const LimitDrawSpec& spec, RandomStream& stream) {
    Matrix inc(spec.d, spec.m);
    for (int i = 0; i < spec.m; ++i) {
        const double sd = std::sqrt(spec.w[i]);
        for (Index k = 0; k < spec.d; ++k) inc(k, i) = sd * stream.std_normal();
    }
    return inc;
}

double simulate_limit_draw(const LimitDrawSpec& spec, RandomStream& stream) {
    for (int attempt = 0; attempt < 2; ++attempt) {
        const Matrix inc = sample_skeleton(spec, stream);
        const Vector z = sample_std_normal_vec(stream, spec.d);
        try {
            const auto chol = cholesky(g_of_skeleton(inc, spec.w));
            return gamma_scale(spec.m, spec.d) * quad_form_inv(chol, z);
        } catch (const NotPositiveDefinite&) {
        }
    }
    throw DegenerateDraw("simulate_limit_draw: degenerate g_m(B, w) twice in a row (d = " + std::to_string(spec.d) +
                         ", m = " + std::to_string(spec.m) + ")");
}

std::string QuantileKey::to_string() const {
    std::ostringstream os;
    os.precision(10);
    os << "d=" << d << " m=" << m << " alloc=" << allocation << " delta=" << delta << " reps=" << reps
       << " seed=" << base_seed;
    return os.str();
}

OrderStatRanks quantile_ranks(std::uint64_t n, double p) {
    const double np = p * static_cast<double>(n);
    const double half = 1.959963984540054 * std::sqrt(np * (1.0 - p));
    auto clamp = [n](double r) {
        return static_cast<std::uint64_t>(std::clamp(r, 1.0, static_cast<double>(n)));
    };
    return {clamp(std::ceil(np - 1e-9)), clamp(std::floor(np - half)), clamp(std::ceil(np + half))};
}

ScalingQuantile estimate_alpha(const LimitDrawSpec& spec, double delta, std::uint64_t reps, std::uint64_t base_seed,
                               unsigned threads) {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidConfig("estimate_alpha: delta must lie in (0, 1)");
    if (reps < kMinCalibrationReps)
        throw InvalidConfig("estimate_alpha: reps must be >= " + std::to_string(kMinCalibrationReps));

    std::vector<double> draws(reps);
    const std::uint64_t streams = (reps + kDrawsPerStream - 1) / kDrawsPerStream;
    parallel_for(streams, threads, [&](std::size_t j) {
        RandomStream stream = derive_stream(base_seed, j);
        const std::uint64_t end = std::min<std::uint64_t>(reps, (j + 1) * kDrawsPerStream);
        for (std::uint64_t k = j * kDrawsPerStream; k < end; ++k) draws[k] = simulate_limit_draw(spec, stream);
    });
    std::sort(draws.begin(), draws.end());

    const auto ranks = quantile_ranks(reps, 1.0 - delta);
    ScalingQuantile q;
    q.alpha_hat = draws[ranks.point - 1];
    q.ci_low = draws[ranks.low - 1];
    q.ci_high = draws[ranks.high - 1];
    q.key = QuantileKey{spec.d, spec.m, spec.allocation, delta, reps, base_seed};
    return q;
}

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-16;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int k = 1; k <= 1000; ++k) {
        const int k2 = 2 * k;
        double aa = k * (b - k) * x / ((qam + k2) * (a + k2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + k) * (qab + k) * x / ((a + k2) * (qap + k2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double f_cdf(double x, int d1, int d2) {
    if (x <= 0.0) return 0.0;
    const double y = d1 * x / (d1 * x + d2);
    return regularized_incomplete_beta(0.5 * d1, 0.5 * d2, y);
}

double f_quantile(int d1, int d2, double p) {
    if (d1 < 1 || d2 < 1) throw InvalidConfig("f_quantile: degrees of freedom must be >= 1");
    if (!(p > 0.0 && p < 1.0)) throw InvalidConfig("f_quantile: p must lie in (0, 1)");
    double lo = 0.0, hi = 1.0;
    while (f_cdf(hi, d1, d2) < p && hi < 1e300) {
        lo = hi;
        hi *= 2.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-8; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f_cdf(mid, d1, d2) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidConfig("normal_quantile: p must lie in (0, 1)");
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

constexpr const char* kCacheFormat = "sgdbm-quantile-cache";

nlohmann::json to_json(const ScalingQuantile& q) {
    return {{"d", q.key.d},
            {"m", q.key.m},
            {"allocation", q.key.allocation},
            {"delta", q.key.delta},
            {"reps", q.key.reps},
            {"base_seed", q.key.base_seed},
            {"alpha_hat", q.alpha_hat},
            {"ci_low", q.ci_low},
            {"ci_high", q.ci_high}};
}

ScalingQuantile from_json(const nlohmann::json& j) {
    ScalingQuantile q;
    q.key.d = j.at("d").get<Index>();
    q.key.m = j.at("m").get<int>();
    q.key.allocation = j.at("allocation").get<std::string>();
    q.key.delta = j.at("delta").get<double>();
    q.key.reps = j.at("reps").get<std::uint64_t>();
    q.key.base_seed = j.at("base_seed").get<std::uint64_t>();
    q.alpha_hat = j.at("alpha_hat").get<double>();
    q.ci_low = j.at("ci_low").get<double>();
    q.ci_high = j.at("ci_high").get<double>();
    return q;
}

}  // namespace

QuantileCache QuantileCache::load(const std::filesystem::path& path) {
    QuantileCache cache;
    std::ifstream in(path);
    if (!in) return cache;
    try {
        const auto doc = nlohmann::json::parse(in);
        if (doc.value("format", "") != kCacheFormat)
            throw CacheError("quantile cache " + path.string() + ": unexpected format tag");
        for (const auto& rec : doc.at("records")) cache.records_.push_back(from_json(rec));
    } catch (const nlohmann::json::exception& e) {
        throw CacheError("quantile cache " + path.string() + ": " + e.what());
    }
    return cache;
}

void QuantileCache::save(const std::filesystem::path& path) const {
    nlohmann::json doc{{"format", kCacheFormat}, {"version", 1}, {"records", nlohmann::json::array()}};
    for (const auto& q : records_) doc["records"].push_back(to_json(q));

    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw CacheError("cannot write quantile cache " + tmp.string());
        out << doc.dump(2) << '\n';
        if (!out) throw CacheError("short write on quantile cache " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw CacheError("cannot replace quantile cache " + path.string() + ": " + ec.message());
}

std::optional<ScalingQuantile> QuantileCache::find(const QuantileKey& key) const {
    for (const auto& q : records_)
        if (q.key == key) return q;
    return std::nullopt;
}

void QuantileCache::insert(const ScalingQuantile& q) {
    for (auto& existing : records_)
        if (existing.key == q.key) {
            existing = q;
            return;
        }
    records_.push_back(q);
}

ScalingQuantile calibrate(const LimitDrawSpec& spec, double delta, std::uint64_t reps, std::uint64_t base_seed,
                          QuantileCache* cache, unsigned threads) {
    if (spec.m - spec.d < 5)
        std::cerr << "warning: m - d = " << spec.m - spec.d
                  << " < 5; the limiting statistic is heavy-tailed and the quantile estimate is noisy\n";
    const QuantileKey key{spec.d, spec.m, spec.allocation, delta, reps, base_seed};
    if (cache)
        if (auto hit = cache->find(key)) return *hit;
    auto q = estimate_alpha(spec, delta, reps, base_seed, threads);
    if (cache) cache->insert(q);
    return q;
}

}  // namespace sgdbm
