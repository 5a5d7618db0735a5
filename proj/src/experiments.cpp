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

#include "sgdbm/experiments.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "sgdbm/baselines.hpp"
#include "sgdbm/parallel.hpp"

namespace sgdbm {

Method parse_method(const std::string& name) {
    if (name == "bm-joint") return Method::BmJoint;
    if (name == "bm-marginal") return Method::BmMarginal;
    if (name == "sectioning-joint") return Method::SectioningJoint;
    if (name == "sectioning-marginal") return Method::SectioningMarginal;
    if (name == "bmi-marginal") return Method::BmiMarginal;
    if (name == "bmi-joint") return Method::BmiJoint;
    throw InvalidConfig("unknown method '" + name +
                        "' (expected bm-joint, bm-marginal, sectioning-joint, sectioning-marginal, bmi-marginal, "
                        "bmi-joint)");
}

std::string to_string(Method method) {
    switch (method) {
    case Method::BmJoint: return "bm-joint";
    case Method::BmMarginal: return "bm-marginal";
    case Method::SectioningJoint: return "sectioning-joint";
    case Method::SectioningMarginal: return "sectioning-marginal";
    case Method::BmiMarginal: return "bmi-marginal";
    case Method::BmiJoint: return "bmi-joint";
    }
    return "unknown";
}

bool is_joint(Method method) {
    return method == Method::BmJoint || method == Method::SectioningJoint || method == Method::BmiJoint;
}

namespace {

bool is_sectioning(Method method) { return method == Method::SectioningJoint || method == Method::SectioningMarginal; }
bool is_bmi(Method method) { return method == Method::BmiJoint || method == Method::BmiMarginal; }

void validate(const CoverageConfig& c) {
    if (c.replications < 1) throw InvalidConfig("coverage: replications must be >= 1");
    if (c.d < 1) throw InvalidDimension("coverage: d must be >= 1");
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw InvalidConfig("coverage: delta must lie in (0, 1)");
    if (!is_bmi(c.method) && c.m < 2) throw InvalidBatchCount("coverage: m must be >= 2");
    if ((c.method == Method::BmJoint || c.method == Method::SectioningJoint) && c.m <= c.d)
        throw BatchCountTooSmall("coverage: joint inference needs m > d, got m = " + std::to_string(c.m) +
                                 ", d = " + std::to_string(c.d));
}

double max_deviation_ratio(const MarginalIntervals& iv, const Vector& x) {
    double worst = 0.0;
    for (Index k = 0; k < x.size(); ++k) {
        const double dev = std::abs(iv.center(k) - x(k));
        const double half = iv.upper(k) - iv.center(k);
        const double ratio = half > 0.0 ? dev / half : (dev > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        worst = std::max(worst, ratio);
    }
    return worst;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

CoverageReport run_coverage(const CoverageConfig& config, QuantileCache* cache, unsigned threads) {
    validate(config);
    const auto start = std::chrono::steady_clock::now();
    const TrueParams truth = linspace_params(config.d);
    const Index d = config.d;

    CoverageReport report;
    report.config = config;

    ScalingQuantile alpha;
    BatchPlan plan;
    switch (config.method) {
    case Method::BmJoint:
    case Method::BmMarginal: {
        const Index calib_d = config.method == Method::BmJoint ? d : 1;
        alpha = calibrate(LimitDrawSpec::for_allocation(calib_d, config.m, config.allocation), config.delta,
                          config.calibration_reps, config.calibration_seed, cache, threads);
        plan = make_plan(config.T, config.m, config.allocation);
        report.alpha = alpha.alpha_hat;
        report.batches = config.m;
        break;
    }
    case Method::SectioningJoint:
    case Method::SectioningMarginal:
        alpha = sectioning_alpha(config.method == Method::SectioningJoint ? d : 1, config.m, config.delta);
        report.alpha = alpha.alpha_hat;
        report.batches = config.m;
        break;
    case Method::BmiMarginal:
    case Method::BmiJoint:
        plan = bmi_plan(config.T, config.schedule.exponent());
        report.batches = plan.m;
        {
            const double z = config.method == Method::BmiJoint
                                 ? normal_quantile(1.0 - config.delta / (2.0 * static_cast<double>(d)))
                                 : normal_quantile(1.0 - config.delta / 2.0);
            report.alpha = z * z;
        }
        break;
    }

    SgdRunConfig run{config.T, config.burn_in, Vector::Zero(d), config.schedule};
    const OracleFactory factory = [&] { return make_oracle(config.model, truth); };

    std::vector<ReplicationRecord> records(config.replications);
    parallel_for(config.replications, threads, [&](std::size_t i) {
        ReplicationRecord& rec = records[i];
        rec.index = i;

        BatchMeansSummaryd summary;
        if (is_sectioning(config.method)) {
            summary = run_sections(factory, config.m, config.T, run, derive_seed(config.base_seed, i), 1);
        } else {
            auto oracle = factory();
            RandomStream stream = derive_stream(config.base_seed, i);
            BatchMeansAccumulator<double> acc(plan, d);
            run_sgd(*oracle, run, stream, acc);
            summary = acc.finalize();
        }

        switch (config.method) {
        case Method::BmJoint:
        case Method::SectioningJoint:
            try {
                const ConfidenceRegion region = build_region(summary, alpha);
                const bool covered = contains(region, truth.x_star);
                rec.outcome = covered ? Outcome::Covered : Outcome::Missed;
                rec.coverage = covered ? 1.0 : 0.0;
                rec.statistic = gamma_statistic(summary, truth.x_star);
            } catch (const DegenerateCovariance&) {
                rec.outcome = Outcome::Degenerate;
            }
            break;
        case Method::BmMarginal:
        case Method::SectioningMarginal: {
            const MarginalIntervals iv = marginal_intervals(summary, alpha);
            rec.coverage = marginal_coverage(iv, truth.x_star);
            rec.statistic = max_deviation_ratio(iv, truth.x_star);
            break;
        }
        case Method::BmiMarginal:
        case Method::BmiJoint: {
            const BmiResult bmi = bmi_infer(summary, config.delta);
            const MarginalIntervals& iv = config.method == Method::BmiJoint ? bmi.joint : bmi.marginal;
            rec.coverage = config.method == Method::BmiJoint ? (bmi_joint_covers(bmi, truth.x_star) ? 1.0 : 0.0)
                                                             : marginal_coverage(iv, truth.x_star);
            rec.statistic = max_deviation_ratio(iv, truth.x_star);
            break;
        }
        }
        if (rec.outcome != Outcome::Degenerate) rec.outcome = rec.coverage == 1.0 ? Outcome::Covered : Outcome::Missed;
    });

    for (const auto& rec : records) {
        if (rec.outcome == Outcome::Degenerate) {
            ++report.degenerate;
            continue;
        }
        ++report.valid;
        report.hits += rec.coverage;
    }
    if (static_cast<double>(report.degenerate) > kMaxDegenerateFraction * static_cast<double>(config.replications))
        throw TooManyDegenerate("coverage: " + std::to_string(report.degenerate) + " of " +
                                std::to_string(config.replications) + " replications had a degenerate covariance");
    if (report.valid > 0) {
        report.p_hat = report.hits / static_cast<double>(report.valid);
        report.half_width = 1.96 * std::sqrt(report.p_hat * (1.0 - report.p_hat) / static_cast<double>(report.valid));
    }
    report.records = std::move(records);
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::vector<VolumeRow> run_volume_study(Index d, const std::vector<int>& m_list, const Allocation& alloc, double delta,
                                        std::uint64_t reps, std::uint64_t base_seed, QuantileCache* cache,
                                        unsigned threads) {
    std::vector<VolumeRow> rows;
    rows.reserve(m_list.size());
    for (int m : m_list) {
        const auto spec = LimitDrawSpec::for_allocation(d, m, alloc);
        VolumeRow row;
        row.m = m;
        row.alpha = calibrate(spec, delta, reps, base_seed, cache, threads);
        row.volume = expected_volume_factor(spec, row.alpha, reps, derive_seed(base_seed, 0x766f6c), threads);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<double> run_det_study(const DetStudyConfig& config, unsigned threads) {
    if (config.replications < 1) throw InvalidConfig("det study: replications must be >= 1");
    const TrueParams truth = linspace_params(config.d);
    const BatchPlan plan = make_plan(config.T, config.m, config.allocation);
    const SgdRunConfig run{config.T, config.burn_in, Vector::Zero(config.d), config.schedule};
    const double scale = static_cast<double>(config.T);

    std::vector<double> dets(config.replications);
    parallel_for(config.replications, threads, [&](std::size_t i) {
        auto oracle = make_oracle(config.model, truth);
        RandomStream stream = derive_stream(config.base_seed, i);
        BatchMeansAccumulator<double> acc(plan, config.d);
        run_sgd(*oracle, run, stream, acc);
        const double root = det_sqrt(sample_cov(acc.finalize()).scaled(scale));
        dets[i] = root * root;
    });
    return dets;
}

std::vector<ComparisonCell> run_comparison(const std::vector<CoverageConfig>& configs, QuantileCache* cache,
                                           unsigned threads) {
    for (const auto& c : configs)
        if (c.model != configs.front().model || c.d != configs.front().d || c.T != configs.front().T)
            throw InvalidConfig("comparison: all methods must share model, d and T");
    std::vector<ComparisonCell> cells;
    for (const auto& c : configs) {
        ComparisonCell cell{c, std::nullopt, {}};
        try {
            cell.report = run_coverage(c, cache, threads);
        } catch (const Error& e) {
            cell.error = e.kind() + ": " + e.what();
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

std::string coverage_csv_header() {
    return "model,d,T,a,r,burn_in,method,m,allocation,delta,replications,base_seed,calibration_reps,"
           "calibration_seed,alpha,p_hat,half_width,hits,valid,degenerate_count,wall_time,error";
}

std::string coverage_csv_row(const CoverageConfig& c, const CoverageReport* r, const std::string& error) {
    std::string row = to_string(c.model) + "," + std::to_string(c.d) + "," + std::to_string(c.T) + "," +
                      format_double(c.schedule.scale()) + "," + format_double(c.schedule.exponent()) + "," + std::to_string(c.burn_in) +
                      "," + to_string(c.method) + "," + std::to_string(r ? r->batches : c.m) + "," +
                      c.allocation.descriptor() + "," + format_double(c.delta) + "," + std::to_string(c.replications) + "," +
                      std::to_string(c.base_seed) + "," + std::to_string(c.calibration_reps) + "," +
                      std::to_string(c.calibration_seed) + ",";
    if (r) {
        row += format_double(r->alpha) + "," + format_double(r->p_hat) + "," + format_double(r->half_width) + "," + format_double(r->hits) + "," +
               std::to_string(r->valid) + "," + std::to_string(r->degenerate) + "," + format_double(r->wall_time) + ",";
    } else {
        row += ",,,,,,,";
    }
    std::string clean = error;
    for (char& ch : clean)
        if (ch == ',' || ch == '\n') ch = ';';
    return row + clean;
}

void write_coverage_csv(const std::filesystem::path& path, const std::vector<ComparisonCell>& cells) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InvalidConfig("cannot write " + path.string());
    out << coverage_csv_header() << '\n';
    for (const auto& cell : cells)
        out << coverage_csv_row(cell.config, cell.report ? &*cell.report : nullptr, cell.error) << '\n';
}

void write_replication_log(const std::filesystem::path& path, const CoverageReport& report) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InvalidConfig("cannot write " + path.string());
    out << "base_seed,replication,outcome,coverage,statistic\n";
    for (const auto& rec : report.records) {
        const char* outcome = rec.outcome == Outcome::Covered ? "covered"
                              : rec.outcome == Outcome::Missed ? "missed"
                                                               : "degenerate";
        out << report.config.base_seed << ',' << rec.index << ',' << outcome << ',' << format_double(rec.coverage) << ','
            << format_double(rec.statistic) << '\n';
    }
}

}  // namespace sgdbm
