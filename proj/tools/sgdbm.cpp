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

// Command-line front end: calibrate, infer, experiment {coverage,volume,detcov}, compare.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sgdbm/baselines.hpp"
#include "sgdbm/batching.hpp"
#include "sgdbm/calibration.hpp"
#include "sgdbm/experiments.hpp"
#include "sgdbm/inference.hpp"
#include "sgdbm/models.hpp"
#include "sgdbm/sgd.hpp"

using nlohmann::json;
using namespace sgdbm;

namespace {

constexpr const char* kDefaultCache = "sgdbm_quantiles.json";
constexpr const char* kCacheEnv = "SGDBM_CACHE";

/// Numbers and booleans as JSON scalars, anything else as a string.
json scalar(const std::string& text) {
    json v = json::parse(text, nullptr, false);
    return v.is_number() || v.is_boolean() ? v : json(text);
}

/// Flag values of a subcommand after parsing: given values, else defaults.
json effective_config(const CLI::App* app) {
    json out = json::object();
    out["subcommand"] = app->get_name();
    for (const CLI::Option* opt : app->get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config") continue;
        if (opt->get_expected_max() == 0) {
            out[name] = opt->count() > 0;
        } else if (opt->count() > 0) {
            const auto& results = opt->results();
            if (results.size() == 1) {
                out[name] = scalar(results.front());
            } else {
                json list = json::array();
                for (const auto& r : results) list.push_back(scalar(r));
                out[name] = list;
            }
        } else {
            out[name] = scalar(opt->get_default_str());
        }
    }
    return out;
}

void write_json(const std::string& path, const json& doc) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InvalidConfig("cannot write " + path);
    out << doc.dump(2) << '\n';
}

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vector(m.row(i).transpose())));
    return rows;
}

json to_json(const ScalingQuantile& q) {
    return {{"alpha_hat", q.alpha_hat},
            {"ci_low", q.ci_low},
            {"ci_high", q.ci_high},
            {"key", {{"d", q.key.d},
                     {"m", q.key.m},
                     {"allocation", q.key.allocation},
                     {"delta", q.key.delta},
                     {"reps", q.key.reps},
                     {"base_seed", q.key.base_seed}}}};
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InvalidConfig("cannot parse list entry '" + item + "'");
        }
    }
    return out;
}

/// Options shared by commands that build an allocation.
struct AllocOptions {
    std::string alloc = "ibs";
    double r = StepSchedule::kDefaultExponent;
    std::string weights;

    void add(CLI::App* app) {
        app->add_option("--alloc", alloc, "Batch allocation: ibs, es, dbs or custom")
            ->check(CLI::IsMember({"ibs", "es", "dbs", "custom"}))
            ->capture_default_str();
        app->add_option("--r", r, "Step exponent r; also sets the IBS/DBS allocation exponent")
            ->capture_default_str();
        app->add_option("--weights", weights, "Comma-separated custom weights (with --alloc custom)")
            ->capture_default_str();
    }

    Allocation build() const {
        if (!weights.empty() && alloc != "custom") throw InvalidConfig("--weights requires --alloc custom");
        if (alloc == "custom" && weights.empty()) throw InvalidConfig("--alloc custom requires --weights");
        return parse_allocation(alloc, r, alloc == "custom" ? parse_list(weights) : std::vector<double>{});
    }
};

struct CacheOptions {
    std::string path;
    bool disabled = false;

    void add(CLI::App* app) {
        auto* cache = app->add_option("--cache", path,
                                      std::string("Quantile cache file (default: $") + kCacheEnv + " or " +
                                          kDefaultCache + ")");
        app->add_flag("--no-cache", disabled, "Recompute quantiles without reading or writing the cache")
            ->excludes(cache);
    }

    std::string resolved() const {
        if (!path.empty()) return path;
        if (const char* env = std::getenv(kCacheEnv); env && *env) return env;
        return kDefaultCache;
    }
};

struct ScheduleOptions {
    double a = StepSchedule::kDefaultScale;
    std::uint64_t burn_in = 0;

    void add(CLI::App* app) {
        app->add_option("--a", a, "Step scale a in gamma_t = a t^-r")->capture_default_str();
        app->add_option("--burn-in", burn_in, "Iterations discarded before batching")->capture_default_str();
    }
};

/// Loads the cache (unless disabled), runs fn(cache*), and saves it back.
template <typename Fn>
auto with_cache(const CacheOptions& opts, Fn&& fn) {
    if (opts.disabled) return fn(static_cast<QuantileCache*>(nullptr));
    const std::string path = opts.resolved();
    QuantileCache cache = QuantileCache::load(path);
    auto result = fn(&cache);
    cache.save(path);
    return result;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Batch-means confidence regions for averaged SGD"};
    app.set_config("--config", "", "Read flags from a TOML/INI file ([subcommand] sections)");
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = all cores); results do not depend on it")
        ->capture_default_str();

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Estimate the scaling parameter alpha_m(delta, w) by simulation");
    Index cal_d = 1;
    int cal_m = 10;
    double cal_delta = 0.05;
    std::uint64_t cal_reps = 1000000, cal_seed = 1;
    std::string cal_out;
    AllocOptions cal_alloc;
    CacheOptions cal_cache;
    cal->add_option("--d", cal_d, "Dimension")->required();
    cal->add_option("--m", cal_m, "Number of batches (> d)")->required();
    cal_alloc.add(cal);
    cal->add_option("--delta", cal_delta, "1 - confidence level")->capture_default_str();
    cal->add_option("--reps", cal_reps, "Monte Carlo draws (>= 10000)")->capture_default_str();
    cal->add_option("--seed", cal_seed, "Base seed")->capture_default_str();
    cal->add_option("--out", cal_out, "Also write the result as JSON here")->capture_default_str();
    cal_cache.add(cal);

    // infer
    auto* inf = app.add_subcommand("infer", "Confidence region or intervals from a data file");
    std::string inf_data, inf_model = "linear", inf_mode = "joint", inf_out;
    int inf_m = 30;
    double inf_delta = 0.05;
    std::uint64_t inf_seed = 1, inf_calib_reps = 1000000, inf_calib_seed = 1;
    AllocOptions inf_alloc;
    CacheOptions inf_cache;
    ScheduleOptions inf_sched;
    inf->add_option("--data", inf_data, "CSV with header a_1,...,a_d,b")->required()->check(CLI::ExistingFile);
    inf->add_option("--model", inf_model, "linear or logistic")
        ->check(CLI::IsMember({"linear", "logistic"}))
        ->capture_default_str();
    inf->add_option("--m", inf_m, "Number of batches")->capture_default_str();
    inf_alloc.add(inf);
    inf_sched.add(inf);
    inf->add_option("--delta", inf_delta, "1 - confidence level")->capture_default_str();
    inf->add_option("--mode", inf_mode, "joint or marginal")
        ->check(CLI::IsMember({"joint", "marginal"}))
        ->capture_default_str();
    inf->add_option("--seed", inf_seed, "Base seed (unused by data replay; recorded)")->capture_default_str();
    inf->add_option("--calib-reps", inf_calib_reps, "Monte Carlo draws for alpha")->capture_default_str();
    inf->add_option("--calib-seed", inf_calib_seed, "Seed for alpha calibration")->capture_default_str();
    inf->add_option("--out", inf_out, "Output JSON document")->required();
    inf_cache.add(inf);

    // experiment
    auto* exp = app.add_subcommand("experiment", "Replication studies");
    exp->require_subcommand(1);

    auto* cov = exp->add_subcommand("coverage", "Coverage rate of one method");
    std::string cov_model = "logistic", cov_method = "bm-joint", cov_out, cov_summary, cov_log;
    Index cov_d = 2;
    std::uint64_t cov_T = 100000, cov_reps = 300, cov_seed = 0, cov_calib_reps = 1000000, cov_calib_seed = 1;
    int cov_m = 30;
    double cov_delta = 0.05;
    AllocOptions cov_alloc;
    CacheOptions cov_cache;
    ScheduleOptions cov_sched;
    cov->add_option("--model", cov_model, "linear or logistic")
        ->check(CLI::IsMember({"linear", "logistic"}))
        ->capture_default_str();
    cov->add_option("--d", cov_d, "Dimension")->capture_default_str();
    cov->add_option("--T", cov_T, "Iterations per replication (total budget for sectioning)")->capture_default_str();
    cov->add_option("--m", cov_m, "Batches (BM) or sections (sectioning)")->capture_default_str();
    cov_alloc.add(cov);
    cov_sched.add(cov);
    cov->add_option("--method", cov_method,
                    "bm-joint, bm-marginal, sectioning-joint, sectioning-marginal, bmi-marginal, bmi-joint")
        ->capture_default_str();
    cov->add_option("--delta", cov_delta, "1 - confidence level")->capture_default_str();
    cov->add_option("--reps", cov_reps, "Replications R")->capture_default_str();
    cov->add_option("--seed", cov_seed, "Base seed")->capture_default_str();
    cov->add_option("--calib-reps", cov_calib_reps, "Monte Carlo draws for alpha")->capture_default_str();
    cov->add_option("--calib-seed", cov_calib_seed, "Seed for alpha calibration")->capture_default_str();
    cov->add_option("--out", cov_out, "CSV report")->required();
    cov->add_option("--summary", cov_summary, "JSON summary with the effective configuration")->capture_default_str();
    cov->add_option("--log", cov_log, "Per-replication CSV log")->capture_default_str();
    cov_cache.add(cov);

    auto* vol = exp->add_subcommand("volume", "Limiting volume factor v_d(m, w) across m");
    Index vol_d = 1;
    std::string vol_mlist = "10,20,40,100", vol_out;
    double vol_delta = 0.05;
    std::uint64_t vol_reps = 200000, vol_seed = 1;
    AllocOptions vol_alloc;
    CacheOptions vol_cache;
    vol->add_option("--d", vol_d, "Dimension")->capture_default_str();
    vol->add_option("--m-list", vol_mlist, "Comma-separated batch counts, each > d")->capture_default_str();
    vol_alloc.add(vol);
    vol->add_option("--delta", vol_delta, "1 - confidence level")->capture_default_str();
    vol->add_option("--reps", vol_reps, "Monte Carlo draws per m")->capture_default_str();
    vol->add_option("--seed", vol_seed, "Base seed")->capture_default_str();
    vol->add_option("--out", vol_out, "CSV output")->required();
    vol_cache.add(vol);

    auto* det = exp->add_subcommand("detcov", "Distribution of det(T S_m(T)) over replications");
    std::string det_model = "logistic", det_out;
    Index det_d = 10;
    int det_m = 18;
    std::uint64_t det_T = 100000, det_reps = 200, det_seed = 0;
    AllocOptions det_alloc;
    ScheduleOptions det_sched;
    det->add_option("--model", det_model, "linear or logistic")
        ->check(CLI::IsMember({"linear", "logistic"}))
        ->capture_default_str();
    det->add_option("--d", det_d, "Dimension")->capture_default_str();
    det->add_option("--m", det_m, "Batches (m <= d allowed)")->capture_default_str();
    det->add_option("--T", det_T, "Iterations")->capture_default_str();
    det_alloc.add(det);
    det_sched.add(det);
    det->add_option("--reps", det_reps, "Replications R")->capture_default_str();
    det->add_option("--seed", det_seed, "Base seed")->capture_default_str();
    det->add_option("--out", det_out, "CSV output")->required();

    // compare
    auto* cmp = app.add_subcommand("compare", "BM, sectioning and BMI coverage under one budget");
    std::string cmp_model = "logistic", cmp_mode = "both", cmp_out;
    Index cmp_d = 2;
    std::uint64_t cmp_T = 100000, cmp_reps = 300, cmp_seed = 0, cmp_calib_reps = 1000000, cmp_calib_seed = 1;
    int cmp_m = 30, cmp_sections = 30;
    double cmp_delta = 0.05;
    AllocOptions cmp_alloc;
    CacheOptions cmp_cache;
    ScheduleOptions cmp_sched;
    cmp->add_option("--model", cmp_model, "linear or logistic")
        ->check(CLI::IsMember({"linear", "logistic"}))
        ->capture_default_str();
    cmp->add_option("--d", cmp_d, "Dimension")->capture_default_str();
    cmp->add_option("--T", cmp_T, "Iteration budget per replication")->capture_default_str();
    cmp->add_option("--m", cmp_m, "Batches for BM")->capture_default_str();
    cmp->add_option("--sections", cmp_sections, "Sections for sectioning")->capture_default_str();
    cmp_alloc.add(cmp);
    cmp_sched.add(cmp);
    cmp->add_option("--mode", cmp_mode, "joint, marginal or both")
        ->check(CLI::IsMember({"joint", "marginal", "both"}))
        ->capture_default_str();
    cmp->add_option("--delta", cmp_delta, "1 - confidence level")->capture_default_str();
    cmp->add_option("--reps", cmp_reps, "Replications R")->capture_default_str();
    cmp->add_option("--seed", cmp_seed, "Base seed")->capture_default_str();
    cmp->add_option("--calib-reps", cmp_calib_reps, "Monte Carlo draws for alpha")->capture_default_str();
    cmp->add_option("--calib-seed", cmp_calib_seed, "Seed for alpha calibration")->capture_default_str();
    cmp->add_option("--out", cmp_out, "CSV report")->required();
    cmp_cache.add(cmp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << "\n" << app.help();
        return 2;
    }

    try {
        if (cal->parsed()) {
            const Allocation alloc = cal_alloc.build();
            const auto spec = LimitDrawSpec::for_allocation(cal_d, cal_m, alloc);
            const ScalingQuantile q = with_cache(cal_cache, [&](QuantileCache* cache) {
                return calibrate(spec, cal_delta, cal_reps, cal_seed, cache, threads);
            });
            std::cout << "alpha_hat = " << q.alpha_hat << "  95% CI [" << q.ci_low << ", " << q.ci_high << "]  ("
                      << q.key.to_string() << ")\n";
            if (!cal_out.empty()) {
                json doc = to_json(q);
                doc["config"] = effective_config(cal);
                write_json(cal_out, doc);
            }
        } else if (inf->parsed()) {
            const ModelKind kind = parse_model(inf_model);
            auto data = std::make_shared<const Dataset>(ingest_csv(inf_data, kind));
            if (data->rows.size() <= inf_sched.burn_in)
                throw ExhaustedData("infer: data has " + std::to_string(data->rows.size()) +
                                    " rows, burn-in alone needs " + std::to_string(inf_sched.burn_in));
            const std::uint64_t T = data->rows.size() - inf_sched.burn_in;
            const Allocation alloc = inf_alloc.build();
            const BatchPlan plan = make_plan(T, inf_m, alloc);
            ReplayOracle oracle(data);
            SgdRunConfig run{T, inf_sched.burn_in, Vector::Zero(data->dim), StepSchedule(inf_sched.a, inf_alloc.r)};
            RandomStream stream = derive_stream(inf_seed, 0);
            BatchMeansAccumulator<double> acc(plan, data->dim);
            run_sgd(oracle, run, stream, acc);
            const BatchMeansSummaryd summary = acc.finalize();

            const Index calib_d = inf_mode == "joint" ? data->dim : 1;
            const auto spec = LimitDrawSpec::for_allocation(calib_d, inf_m, alloc);
            const ScalingQuantile q = with_cache(inf_cache, [&](QuantileCache* cache) {
                return calibrate(spec, inf_delta, inf_calib_reps, inf_calib_seed, cache, threads);
            });

            json doc;
            doc["T"] = T;
            doc["m"] = inf_m;
            doc["allocation"] = plan.allocation;
            doc["batch_sizes"] = plan.sizes();
            doc["delta"] = inf_delta;
            doc["alpha"] = to_json(q);
            if (inf_mode == "joint") {
                const ConfidenceRegion region = build_region(summary, q);
                doc["type"] = "joint-region";
                doc["center"] = to_json(region.center);
                doc["shape"] = to_json(region.shape.matrix());
                doc["scale"] = region.scale;
                doc["volume"] = region_volume(region);
            } else {
                const MarginalIntervals iv = marginal_intervals(summary, q);
                doc["type"] = "marginal-intervals";
                doc["center"] = to_json(iv.center);
                doc["lower"] = to_json(iv.lower);
                doc["upper"] = to_json(iv.upper);
                doc["sigma"] = to_json(iv.sigma);
            }
            doc["config"] = effective_config(inf);
            write_json(inf_out, doc);
            std::cout << "wrote " << inf_out << "\n";
        } else if (cov->parsed()) {
            CoverageConfig c;
            c.model = parse_model(cov_model);
            c.d = cov_d;
            c.T = cov_T;
            c.schedule = StepSchedule(cov_sched.a, cov_alloc.r);
            c.burn_in = cov_sched.burn_in;
            c.method = parse_method(cov_method);
            c.m = cov_m;
            c.allocation = cov_alloc.build();
            c.delta = cov_delta;
            c.replications = cov_reps;
            c.base_seed = cov_seed;
            c.calibration_reps = cov_calib_reps;
            c.calibration_seed = cov_calib_seed;
            const CoverageReport report =
                with_cache(cov_cache, [&](QuantileCache* cache) { return run_coverage(c, cache, threads); });
            write_coverage_csv(cov_out, {ComparisonCell{c, report, {}}});
            if (!cov_log.empty()) write_replication_log(cov_log, report);
            if (!cov_summary.empty()) {
                write_json(cov_summary, {{"p_hat", report.p_hat},
                                         {"half_width", report.half_width},
                                         {"hits", report.hits},
                                         {"valid", report.valid},
                                         {"degenerate_count", report.degenerate},
                                         {"alpha", report.alpha},
                                         {"batches", report.batches},
                                         {"wall_time", report.wall_time},
                                         {"config", effective_config(cov)}});
            }
            std::cout << to_string(c.method) << ": coverage " << report.p_hat << " +- " << report.half_width << " ("
                      << report.valid << " valid, " << report.degenerate << " degenerate)\n";
        } else if (vol->parsed()) {
            const Allocation alloc = vol_alloc.build();
            std::vector<int> ms;
            for (double v : parse_list(vol_mlist)) ms.push_back(static_cast<int>(v));
            const auto rows = with_cache(vol_cache, [&](QuantileCache* cache) {
                return run_volume_study(vol_d, ms, alloc, vol_delta, vol_reps, vol_seed, cache, threads);
            });
            std::ofstream out(vol_out, std::ios::trunc);
            if (!out) throw InvalidConfig("cannot write " + vol_out);
            out << "d,m,allocation,delta,reps,seed,alpha,alpha_ci_low,alpha_ci_high,mean_det_sqrt,mean_det_sqrt_se,"
                   "v,v_se\n";
            for (const auto& row : rows)
                out << vol_d << ',' << row.m << ',' << alloc.descriptor() << ',' << format_double(vol_delta) << ','
                    << vol_reps << ',' << vol_seed << ',' << format_double(row.alpha.alpha_hat) << ','
                    << format_double(row.alpha.ci_low) << ',' << format_double(row.alpha.ci_high) << ','
                    << format_double(row.volume.mean_det_sqrt) << ',' << format_double(row.volume.mean_det_sqrt_se)
                    << ',' << format_double(row.volume.value) << ',' << format_double(row.volume.standard_error)
                    << '\n';
            std::cout << "wrote " << rows.size() << " rows to " << vol_out << "\n";
        } else if (det->parsed()) {
            DetStudyConfig c;
            c.model = parse_model(det_model);
            c.d = det_d;
            c.m = det_m;
            c.T = det_T;
            c.schedule = StepSchedule(det_sched.a, det_alloc.r);
            c.burn_in = det_sched.burn_in;
            c.allocation = det_alloc.build();
            c.replications = det_reps;
            c.base_seed = det_seed;
            const auto dets = run_det_study(c, threads);
            std::ofstream out(det_out, std::ios::trunc);
            if (!out) throw InvalidConfig("cannot write " + det_out);
            out << "model,d,m,T,a,r,burn_in,allocation,base_seed,replication,det_TS\n";
            for (std::size_t i = 0; i < dets.size(); ++i)
                out << det_model << ',' << c.d << ',' << c.m << ',' << c.T << ',' << format_double(c.schedule.scale())
                    << ',' << format_double(c.schedule.exponent()) << ',' << c.burn_in << ',' << c.allocation.descriptor() << ','
                    << c.base_seed << ',' << i << ',' << format_double(dets[i]) << '\n';
            std::cout << "wrote " << dets.size() << " determinants to " << det_out << "\n";
        } else if (cmp->parsed()) {
            CoverageConfig base;
            base.model = parse_model(cmp_model);
            base.d = cmp_d;
            base.T = cmp_T;
            base.schedule = StepSchedule(cmp_sched.a, cmp_alloc.r);
            base.burn_in = cmp_sched.burn_in;
            base.allocation = cmp_alloc.build();
            base.delta = cmp_delta;
            base.replications = cmp_reps;
            base.base_seed = cmp_seed;
            base.calibration_reps = cmp_calib_reps;
            base.calibration_seed = cmp_calib_seed;
            std::vector<CoverageConfig> configs;
            auto push = [&](Method method, int m) {
                CoverageConfig c = base;
                c.method = method;
                c.m = m;
                configs.push_back(c);
            };
            if (cmp_mode != "marginal") {
                push(Method::BmJoint, cmp_m);
                push(Method::BmiJoint, cmp_m);
                push(Method::SectioningJoint, cmp_sections);
            }
            if (cmp_mode != "joint") {
                push(Method::BmMarginal, cmp_m);
                push(Method::BmiMarginal, cmp_m);
                push(Method::SectioningMarginal, cmp_sections);
            }
            const auto cells =
                with_cache(cmp_cache, [&](QuantileCache* cache) { return run_comparison(configs, cache, threads); });
            write_coverage_csv(cmp_out, cells);
            for (const auto& cell : cells) {
                std::cout << to_string(cell.config.method) << ": ";
                if (cell.report)
                    std::cout << cell.report->p_hat << " +- " << cell.report->half_width << "\n";
                else
                    std::cout << "failed (" << cell.error << ")\n";
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
