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

#include <cmath>
#include <iostream>
#include <vector>

#include "doctest.h"
#include "sgdbm/experiments.hpp"

using namespace sgdbm;

namespace {

CoverageConfig config(ModelKind model, Index d, std::uint64_t T, Method method, int m, Allocation alloc) {
    CoverageConfig c;
    c.model = model;
    c.d = d;
    c.T = T;
    c.method = method;
    c.m = m;
    c.allocation = std::move(alloc);
    c.replications = 300;
    c.base_seed = 2024;
    c.calibration_reps = 1000000;
    c.calibration_seed = 1;
    return c;
}

CoverageReport report(const CoverageConfig& c) {
    CoverageReport r = run_coverage(c, nullptr, 0);
    std::cout << to_string(c.model) << " d=" << c.d << " T=" << c.T << " " << to_string(c.method) << " "
              << c.allocation.descriptor() << " m=" << r.batches << ": " << r.p_hat << " +- " << r.half_width << "\n";
    return r;
}

}  // namespace

TEST_CASE("linear d=2, ES, m=30, T=1e5 covers near the nominal level") {
    const auto r = report(config(ModelKind::Linear, 2, 100000, Method::BmJoint, 30, Allocation::es()));
    CHECK(r.p_hat >= 0.91);
    CHECK(r.p_hat <= 0.975);
}

TEST_CASE("sectioning covers less than single-path batch means at equal budget") {
    const auto bm = report(config(ModelKind::Logistic, 2, 100000, Method::BmJoint, 30, Allocation::ibs()));
    const auto sec = report(config(ModelKind::Logistic, 2, 100000, Method::SectioningJoint, 30, Allocation::es()));
    CHECK(sec.p_hat < bm.p_hat);
}

TEST_CASE("logistic d=2, T=1e6: every joint method covers within [0.85, 0.98]") {
    for (Method m : {Method::BmJoint, Method::SectioningJoint, Method::BmiJoint}) {
        const Allocation alloc = m == Method::SectioningJoint ? Allocation::es() : Allocation::ibs();
        const auto r = report(config(ModelKind::Logistic, 2, 1000000, m, 30, alloc));
        INFO(to_string(m));
        CHECK(r.p_hat >= 0.85);
        CHECK(r.p_hat <= 0.98);
    }
}

TEST_CASE("logistic d=20, T=1e5: batch means covers at least as often as sectioning") {
    const auto bm = report(config(ModelKind::Logistic, 20, 100000, Method::BmJoint, 30, Allocation::ibs()));
    const auto sec = report(config(ModelKind::Logistic, 20, 100000, Method::SectioningJoint, 30, Allocation::es()));
    CHECK(bm.p_hat >= sec.p_hat);
}

TEST_CASE("coverage error shrinks as T grows") {
    std::vector<CoverageReport> runs;
    for (std::uint64_t T : {10000ULL, 100000ULL, 1000000ULL})
        runs.push_back(report(config(ModelKind::Logistic, 3, T, Method::BmJoint, 40, Allocation::ibs())));
    for (std::size_t k = 1; k < runs.size(); ++k) {
        const double before = std::abs(runs[k - 1].p_hat - 0.95);
        const double after = std::abs(runs[k].p_hat - 0.95);
        INFO("T step " << k << ": " << before << " -> " << after);
        CHECK(after <= before + 2 * runs[k].half_width);
    }
}
