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

// Acceptance runner: one PASS/FAIL line per criterion, details indented below.
// Usage: sgdbm_acceptance [c1 c2 ...]   (no arguments runs everything)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sgdbm/baselines.hpp"
#include "sgdbm/experiments.hpp"
#include "support.hpp"

using namespace sgdbm;
using namespace sgdbm::test;

namespace {

// Pinned tolerances and budgets.
constexpr double kDelta = 0.05;
constexpr std::uint64_t kQuantileReps = 1000000;
constexpr double kQuantileTolerance = 0.04;
constexpr std::uint64_t kSkeletonDraws = 10000;
constexpr std::uint64_t kReplications = 300;
constexpr double kCoverageLow = 0.91;
constexpr double kCoverageHigh = 0.985;
constexpr double kSmallTCeiling = 0.80;
constexpr std::uint64_t kDetReplications = 200;
constexpr double kDetThreshold = 1e-6;
constexpr double kDetShare = 0.95;
constexpr std::uint64_t kVolumeReps = 200000;
constexpr double kVolumeSigmas = 2.0;
constexpr int kPropertyTrials = 200;

struct Check {
    std::ostringstream log;
    bool pass = true;

    void expect(bool ok, const std::string& what) {
        log << "    " << (ok ? "ok   " : "FAIL ") << what << "\n";
        pass = pass && ok;
    }
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// C1 ----------------------------------------------------------------------

void quantile_table(Check& c) {
    struct Cell {
        Index d;
        int m;
        double reference;
    };
    const std::vector<Cell> cells{{1, 10, 2.93}, {2, 10, 2.92}, {3, 10, 3.13}, {4, 10, 3.50},
                                  {1, 40, 1.76}, {2, 40, 1.55}, {3, 40, 1.47}, {4, 40, 1.50}};
    // Allocation exponent 1/(1-r) = 2 reproduces the reference quantiles.
    const Allocation ibs = Allocation::ibs(0.5);
    for (const Cell& cell : cells) {
        const auto spec = LimitDrawSpec::for_allocation(cell.d, cell.m, ibs);
        const ScalingQuantile q = estimate_alpha(spec, kDelta, kQuantileReps, 1);
        const double err = std::abs(q.alpha_hat - cell.reference);
        c.expect(err <= kQuantileTolerance, "d=" + std::to_string(cell.d) + " m=" + std::to_string(cell.m) +
                                                ": alpha " + fmt(q.alpha_hat) + " [" + fmt(q.ci_low) + ", " +
                                                fmt(q.ci_high) + "] vs " + fmt(cell.reference, 2) + " (|err| " +
                                                fmt(err) + " <= " + fmt(kQuantileTolerance, 2) + ")");
    }
    c.log << "    info: allocation exponent 3 (r = 2/3), 1e5 draws:";
    for (const Cell& cell : cells) {
        const auto spec = LimitDrawSpec::for_allocation(cell.d, cell.m, Allocation::ibs(2.0 / 3.0));
        c.log << " (" << cell.d << "," << cell.m << ")=" << fmt(estimate_alpha(spec, kDelta, 100000, 1).alpha_hat, 3);
    }
    c.log << "\n";
}

// C2 ----------------------------------------------------------------------

void f_cross_check(Check& c) {
    for (auto [d, m] : std::vector<std::pair<Index, int>>{{1, 10}, {2, 20}, {3, 30}}) {
        const auto spec = LimitDrawSpec::for_allocation(d, m, Allocation::es());
        const ScalingQuantile q = estimate_alpha(spec, kDelta, kQuantileReps, 1);
        const double f = f_quantile(static_cast<int>(d), m - static_cast<int>(d), 1.0 - kDelta);
        c.expect(q.ci_low <= f && f <= q.ci_high, "d=" + std::to_string(d) + " m=" + std::to_string(m) + ": CI [" +
                                                      fmt(q.ci_low) + ", " + fmt(q.ci_high) + "] vs F quantile " +
                                                      fmt(f));
    }
}

// C3 ----------------------------------------------------------------------

void degeneracy_law(Check& c) {
    RandomStream rs(1, 0);
    for (Index d : {1, 2, 5, 10}) {
        std::uint64_t wrong = 0, total = 0;
        for (int m = 2; m <= d + 1; ++m) {
            const auto w = Allocation::ibs().ideal_weights(m);
            for (std::uint64_t k = 0; k < kSkeletonDraws; ++k) {
                Matrix inc = random_matrix(rs, d, m);
                for (int i = 0; i < m; ++i) inc.col(i) *= std::sqrt(w[i]);
                const double det = det_sqrt(g_of_skeleton(inc, std::span<const double>(w)));
                wrong += m <= d ? det != 0.0 : !(det > 0.0);
                ++total;
            }
        }
        c.expect(wrong == 0, "d=" + std::to_string(d) + ": m in [2, " + std::to_string(d + 1) + "], " +
                                 std::to_string(total) + " draws, " + std::to_string(wrong) + " violations");
    }
}

// C4, C5 ------------------------------------------------------------------

CoverageConfig coverage_config(ModelKind model, Index d, std::uint64_t T, int m, Allocation alloc) {
    CoverageConfig c;
    c.model = model;
    c.d = d;
    c.T = T;
    c.m = m;
    c.method = Method::BmJoint;
    c.allocation = std::move(alloc);
    c.delta = kDelta;
    c.replications = kReplications;
    c.base_seed = 2024;
    c.calibration_reps = kQuantileReps;
    c.calibration_seed = 1;
    return c;
}

std::string describe(const CoverageReport& r) {
    return fmt(r.p_hat, 3) + " +- " + fmt(r.half_width, 3) + " (" + std::to_string(r.valid) + " valid)";
}

void desk_coverage(Check& c) {
    for (const Allocation& alloc : {Allocation::ibs(), Allocation::es()}) {
        const CoverageReport r = run_coverage(coverage_config(ModelKind::Linear, 2, 100000, 30, alloc));
        c.expect(r.p_hat >= kCoverageLow && r.p_hat <= kCoverageHigh,
                 "linear d=2 T=1e5 m=30 " + alloc.descriptor() + ": " + describe(r) + " in [" + fmt(kCoverageLow, 3) +
                     ", " + fmt(kCoverageHigh, 3) + "]");
    }
    const CoverageReport ibs = run_coverage(coverage_config(ModelKind::Linear, 2, 10000, 30, Allocation::ibs()));
    const CoverageReport dbs = run_coverage(coverage_config(ModelKind::Linear, 2, 10000, 30, Allocation::dbs()));
    const double gap = ibs.p_hat - dbs.p_hat, needed = ibs.half_width + dbs.half_width;
    c.expect(gap > needed, "T=1e4: IBS " + describe(ibs) + " vs DBS " + describe(dbs) + ", gap " + fmt(gap, 3) +
                               " > " + fmt(needed, 3));
}

void small_t_undercoverage(Check& c) {
    const CoverageReport r = run_coverage(coverage_config(ModelKind::Logistic, 3, 10000, 40, Allocation::ibs()));
    c.expect(r.p_hat <= kSmallTCeiling, "logistic d=3 T=1e4 m=40 IBS: " + describe(r) + " <= " + fmt(kSmallTCeiling, 2));
}

// C6 ----------------------------------------------------------------------

void determinant_study(Check& c) {
    for (Index d : {10, 20}) {
        DetStudyConfig cfg;
        cfg.model = ModelKind::Logistic;
        cfg.d = d;
        cfg.m = 18;
        cfg.T = 100000;
        cfg.replications = kDetReplications;
        cfg.base_seed = 2024;
        const auto dets = run_det_study(cfg);
        std::uint64_t small = 0;
        double lo = dets.front(), hi = dets.front();
        for (double v : dets) {
            small += v < kDetThreshold;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double share = d > cfg.m ? static_cast<double>(small) / static_cast<double>(dets.size())
                                       : 1.0 - static_cast<double>(small) / static_cast<double>(dets.size());
        c.expect(share >= kDetShare, "d=" + std::to_string(d) + " m=18: " + fmt(share, 3) + " of determinants " +
                                         (d > cfg.m ? "< " : "> ") + fmt_g(kDetThreshold) + " (range " + fmt_g(lo) +
                                         " .. " + fmt_g(hi) + ")");
    }
}

// C7 ----------------------------------------------------------------------

void volume_direction(Check& c) {
    for (Index d : {1, 2, 5}) {
        const std::vector<int> grid{static_cast<int>(d) + 5, 20, 40, 100};
        const auto rows = run_volume_study(d, grid, Allocation::ibs(), kDelta, kVolumeReps, 1);
        for (std::size_t k = 1; k < rows.size(); ++k) {
            const auto &a = rows[k - 1].volume, &b = rows[k].volume;
            const double drop = a.value - b.value;
            const double needed = kVolumeSigmas * std::hypot(a.standard_error, b.standard_error);
            c.expect(drop > needed, "d=" + std::to_string(d) + " m " + std::to_string(rows[k - 1].m) + "->" +
                                        std::to_string(rows[k].m) + ": v " + fmt_g(a.value) + " -> " +
                                        fmt_g(b.value) + ", drop " + fmt_g(drop) + " > " + fmt_g(needed));
        }
    }
}

// C8 ----------------------------------------------------------------------

BatchMeansSummaryd summarize(const BatchPlan& plan, const Matrix& path) {
    BatchMeansAccumulator<double> acc(plan, path.rows());
    for (Index t = 0; t < path.cols(); ++t) acc.feed(path.col(t));
    return acc.finalize();
}

Allocation random_allocation(RandomStream& gen) {
    switch (uniform_int(gen, 0, 2)) {
        case 0: return Allocation::es();
        case 1: return Allocation::ibs(0.5 + 0.49 * gen.uniform());
        default: return Allocation::dbs(0.5 + 0.49 * gen.uniform());
    }
}

void identities(Check& c) {
    RandomStream gen(1, 0);
    int streaming = 0, mean_identity = 0, region_interval = 0, cov_affine = 0, g_affine = 0, gamma_zero = 0;
    for (int trial = 0; trial < kPropertyTrials; ++trial) {
        const Index d = static_cast<Index>(uniform_int(gen, 1, 5));
        const int m = static_cast<int>(d) + static_cast<int>(uniform_int(gen, 1, 25));
        const std::uint64_t T = uniform_int(gen, static_cast<std::uint64_t>(m), 4000);
        const BatchPlan plan = make_plan(T, m, random_allocation(gen));
        const Matrix path = random_matrix(gen, d, static_cast<Index>(T));
        const auto s = summarize(plan, path);
        const auto offline = offline_batch_means(plan, path);
        streaming += s.xi == offline.xi && (s.xbar - offline.xbar).norm() <= 1e-12 * (1 + offline.xbar.norm());

        Vector weighted = Vector::Zero(d);
        for (int i = 0; i < m; ++i)
            weighted += (static_cast<double>(plan.size(i)) / static_cast<double>(T)) * s.xi.col(i);
        mean_identity += (weighted - s.xbar).norm() <= 1e-12 * (1 + s.xbar.norm());

        gamma_zero += gamma_statistic(s, s.xbar) == 0.0;

        const Matrix a = random_matrix(gen, d, d) + 3 * Matrix::Identity(d, d);
        const Vector shift = 5 * random_matrix(gen, d, 1);
        const Matrix moved = (a * path).colwise() + shift;
        const Matrix expected = a * sample_cov(s).matrix() * a.transpose();
        cov_affine += relative_frobenius(sample_cov(summarize(plan, moved)).matrix(), expected) < 1e-9;

        const auto w = plan.weights();
        Matrix inc = random_matrix(gen, d, m);
        Matrix drifted = a * inc;
        for (int i = 0; i < m; ++i) drifted.col(i) += w[i] * shift;
        const Matrix g = g_of_skeleton(inc, std::span<const double>(w)).matrix();
        const Matrix g2 = g_of_skeleton(drifted, std::span<const double>(w)).matrix();
        g_affine += relative_frobenius(g2, a * g * a.transpose()) < 1e-9;

        const Matrix line = random_matrix(gen, 1, m);
        const auto one = summary_from_means(line);
        const ScalingQuantile alpha{2.5, 2.5, 2.5, QuantileKey{1, m, "es", kDelta, 10000, 0}};
        const ConfidenceRegion r = build_region(one, alpha);
        const MarginalIntervals iv = marginal_intervals(one, alpha);
        const double half = std::sqrt(r.scale * r.shape(0, 0));
        region_interval += std::abs(r.center(0) - half - iv.lower(0)) <= 1e-10 * (1 + std::abs(iv.lower(0))) &&
                           std::abs(r.center(0) + half - iv.upper(0)) <= 1e-10 * (1 + std::abs(iv.upper(0)));
    }
    const std::string n = "/" + std::to_string(kPropertyTrials);
    c.expect(streaming == kPropertyTrials, "streaming batch means equal offline recomputation: " +
                                               std::to_string(streaming) + n);
    c.expect(mean_identity == kPropertyTrials, "Xbar equals the size-weighted batch means: " +
                                                   std::to_string(mean_identity) + n);
    c.expect(region_interval == kPropertyTrials, "d=1 region equals the marginal interval: " +
                                                     std::to_string(region_interval) + n);
    c.expect(cov_affine == kPropertyTrials, "sample_cov(A X + c) = A S A^T: " + std::to_string(cov_affine) + n);
    c.expect(g_affine == kPropertyTrials, "g(A D + w c) = A g A^T: " + std::to_string(g_affine) + n);
    c.expect(gamma_zero == kPropertyTrials, "gamma_statistic at Xbar is 0: " + std::to_string(gamma_zero) + n);

    // Thread-count invariance of every report.
    const auto spec = LimitDrawSpec::for_allocation(2, 12, Allocation::ibs());
    const auto q1 = estimate_alpha(spec, kDelta, 50000, 3, 1), q3 = estimate_alpha(spec, kDelta, 50000, 3, 3);
    c.expect(q1.alpha_hat == q3.alpha_hat && q1.ci_low == q3.ci_low && q1.ci_high == q3.ci_high,
             "estimate_alpha: 1 vs 3 threads identical");

    bool coverage_same = true;
    for (Method method : {Method::BmJoint, Method::BmMarginal, Method::SectioningJoint, Method::SectioningMarginal,
                          Method::BmiMarginal, Method::BmiJoint}) {
        CoverageConfig cfg = coverage_config(ModelKind::Logistic, 2, 4000, 10, Allocation::ibs());
        cfg.method = method;
        cfg.replications = 16;
        cfg.calibration_reps = 20000;
        const auto a = run_coverage(cfg, nullptr, 1), b = run_coverage(cfg, nullptr, 3);
        bool same = a.p_hat == b.p_hat && a.half_width == b.half_width && a.records.size() == b.records.size();
        for (std::size_t i = 0; same && i < a.records.size(); ++i)
            same = a.records[i].coverage == b.records[i].coverage && a.records[i].statistic == b.records[i].statistic;
        coverage_same = coverage_same && same;
    }
    c.expect(coverage_same, "run_coverage (all methods): 1 vs 3 threads identical");

    const auto v1 = run_volume_study(2, {5, 9}, Allocation::ibs(), kDelta, 20000, 3, nullptr, 1);
    const auto v3 = run_volume_study(2, {5, 9}, Allocation::ibs(), kDelta, 20000, 3, nullptr, 3);
    bool volume_same = v1.size() == v3.size();
    for (std::size_t k = 0; volume_same && k < v1.size(); ++k)
        volume_same = v1[k].volume.value == v3[k].volume.value &&
                      v1[k].volume.standard_error == v3[k].volume.standard_error;
    c.expect(volume_same, "run_volume_study: 1 vs 3 threads identical");

    DetStudyConfig det;
    det.d = 3;
    det.m = 6;
    det.T = 3000;
    det.replications = 12;
    c.expect(run_det_study(det, 1) == run_det_study(det, 3), "run_det_study: 1 vs 3 threads identical");
}

struct Criterion {
    std::string id;
    std::string title;
    std::function<void(Check&)> run;
    bool excluded = false;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {"c1", "IBS scaling quantiles within 0.04 of reference values (1e6 draws)", quantile_table},
        {"c2", "even-split Monte Carlo CI brackets the F quantile", f_cross_check},
        {"c3", "det g_m = 0 iff m <= d on 1e4 skeleton draws", degeneracy_law},
        {"c4", "linear d=2 coverage for IBS and ES; DBS below IBS at T=1e4", desk_coverage},
        {"c5", "logistic d=3, T=1e4, m=40 under-covers", small_t_undercoverage},
        {"c6", "determinant concentration at m=18, d=20 vs d=10", determinant_study},
        {"c7", "v_d decreasing in m beyond 2 standard errors", volume_direction},
        {"c8", "exact identities and thread-count invariance", identities},
        {"c9", "exact coverage values per cell and HiGrad comparisons", nullptr, true},
    };

    std::vector<std::string> selected(argv + 1, argv + argc);
    bool all_pass = true;
    for (const Criterion& cr : criteria) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), cr.id) == selected.end()) continue;
        if (cr.excluded) {
            std::cout << cr.id << " N/A  " << cr.title
                      << " (excluded: step schedule, covariate law and some batch counts are unpublished)\n";
            continue;
        }
        Check check;
        const auto start = std::chrono::steady_clock::now();
        try {
            cr.run(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << cr.id << " " << (check.pass ? "PASS" : "FAIL") << " " << cr.title << " [" << fmt(secs, 1)
                  << " s]\n"
                  << check.log.str() << std::flush;
        all_pass = all_pass && check.pass;
    }
    return all_pass ? 0 : 1;
}
