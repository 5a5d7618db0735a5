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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sgdbm/batching.hpp"
#include "sgdbm/calibration.hpp"
#include "sgdbm/inference.hpp"
#include "sgdbm/models.hpp"
#include "sgdbm/sgd.hpp"

namespace sgdbm {

enum class Method { BmJoint, BmMarginal, SectioningJoint, SectioningMarginal, BmiMarginal, BmiJoint };

Method parse_method(const std::string& name);
std::string to_string(Method method);
bool is_joint(Method method);

struct CoverageConfig {
    ModelKind model = ModelKind::Logistic;
    Index d = 2;
    std::uint64_t T = 100000;
    StepSchedule schedule;
    std::uint64_t burn_in = 0;
    Method method = Method::BmJoint;
    int m = 30;  ///< batches (BM) or sections (sectioning); BMI derives its own
    Allocation allocation = Allocation::ibs();
    double delta = 0.05;
    std::uint64_t replications = 300;
    std::uint64_t base_seed = 0;
    std::uint64_t calibration_reps = 1000000;
    std::uint64_t calibration_seed = 1;
};

enum class Outcome { Covered, Missed, Degenerate };

struct ReplicationRecord {
    std::uint64_t index = 0;
    Outcome outcome = Outcome::Missed;
    double coverage = 0.0;   ///< 1/0 for joint methods, fraction of coordinates for marginal
    double statistic = 0.0;  ///< Gamma_T for BM/sectioning joint; otherwise max_k |Xbar(k) - x*(k)| / half-width(k)
};

struct CoverageReport {
    CoverageConfig config;
    double alpha = 0.0;  ///< scaling parameter used (z^2 for BMI)
    int batches = 0;     ///< effective m
    double hits = 0.0;
    std::uint64_t valid = 0;
    std::uint64_t degenerate = 0;
    double p_hat = 0.0;
    double half_width = 0.0;
    double wall_time = 0.0;  ///< seconds; the only non-reproducible field
    std::vector<ReplicationRecord> records;
};

/// Allowed share of degenerate replications before run_coverage aborts.
inline constexpr double kMaxDegenerateFraction = 0.01;

/**
 * Coverage of x* over independent replications.
 *
 * Replication i draws all randomness from streams derived from
 * (base_seed, i), so the report does not depend on `threads`. Degenerate
 * covariances are a third outcome, excluded from p_hat.
 */
CoverageReport run_coverage(const CoverageConfig& config, QuantileCache* cache = nullptr, unsigned threads = 0);

struct VolumeRow {
    int m = 0;
    ScalingQuantile alpha;
    VolumeFactor volume;
};

std::vector<VolumeRow> run_volume_study(Index d, const std::vector<int>& m_list, const Allocation& alloc, double delta,
                                        std::uint64_t reps, std::uint64_t base_seed, QuantileCache* cache = nullptr,
                                        unsigned threads = 0);

struct DetStudyConfig {
    ModelKind model = ModelKind::Logistic;
    Index d = 10;
    int m = 18;
    std::uint64_t T = 100000;
    StepSchedule schedule;
    std::uint64_t burn_in = 0;
    Allocation allocation = Allocation::ibs();
    std::uint64_t replications = 200;
    std::uint64_t base_seed = 0;
};

/// det(T S_m(T)) per replication; m <= d is allowed and yields 0.
std::vector<double> run_det_study(const DetStudyConfig& config, unsigned threads = 0);

struct ComparisonCell {
    CoverageConfig config;
    std::optional<CoverageReport> report;
    std::string error;  ///< set when the cell failed
};

/// One coverage run per config. Configs must share model, d and T; failed cells are recorded, not fatal.
std::vector<ComparisonCell> run_comparison(const std::vector<CoverageConfig>& configs, QuantileCache* cache = nullptr,
                                           unsigned threads = 0);

/// Header plus one row per report (failed comparison cells carry an error column).
void write_coverage_csv(const std::filesystem::path& path, const std::vector<ComparisonCell>& cells);
std::string coverage_csv_header();
std::string coverage_csv_row(const CoverageConfig& config, const CoverageReport* report, const std::string& error);

void write_replication_log(const std::filesystem::path& path, const CoverageReport& report);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace sgdbm
