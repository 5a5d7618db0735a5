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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "sgdbm/models.hpp"

using namespace sgdbm;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "sgdbm_cli_test";

struct Run {
    int status;
    std::string output;
};

Run run(const std::string& args) {
    fs::create_directories(kDir);
    const fs::path log = kDir / "output.txt";
    const std::string cmd = std::string(SGDBM_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream text;
    text << in.rdbuf();
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, text.str()};
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    return json::parse(in);
}

fs::path write_linear_data(std::uint64_t rows) {
    const fs::path path = kDir / "linear.csv";
    fs::create_directories(kDir);
    std::ofstream out(path);
    out << "a_1,a_2,b\n";
    RandomStream rs(7, 0);
    const TrueParams truth = linspace_params(2);
    out.precision(17);
    for (std::uint64_t k = 0; k < rows; ++k) {
        const Sample s = draw_linear_sample(truth, rs);
        out << s.a(0) << ',' << s.a(1) << ',' << s.b << '\n';
    }
    return path;
}

}  // namespace

TEST_CASE("calibrate writes the quantile and fills the cache") {
    const fs::path cache = kDir / "cache.json", out = kDir / "alpha.json";
    fs::remove(cache);
    const std::string args = "calibrate --d 1 --m 10 --alloc es --reps 20000 --seed 3 --cache " + cache.string() +
                             " --out " + out.string();
    const Run first = run(args);
    REQUIRE_MESSAGE(first.status == 0, first.output);
    CHECK(first.output.find("alpha_hat") != std::string::npos);
    CHECK(fs::exists(cache));
    const json doc = read_json(out);
    CHECK(doc["key"]["m"] == 10);
    CHECK(doc["ci_low"].get<double>() <= doc["alpha_hat"].get<double>());
    CHECK(doc["alpha_hat"].get<double>() <= doc["ci_high"].get<double>());
    CHECK(doc["config"]["reps"] == 20000);

    const Run second = run(args);
    CHECK(second.status == 0);
    CHECK(read_json(out)["alpha_hat"] == doc["alpha_hat"]);
}

TEST_CASE("infer produces a joint region and marginal intervals") {
    const fs::path data = write_linear_data(3000);
    const fs::path joint = kDir / "joint.json", marginal = kDir / "marginal.json";
    const std::string common =
        "infer --data " + data.string() + " --model linear --m 8 --calib-reps 20000 --no-cache --out ";
    const Run a = run(common + joint.string());
    REQUIRE_MESSAGE(a.status == 0, a.output);
    const json region = read_json(joint);
    CHECK(region["type"] == "joint-region");
    CHECK(region["center"].size() == 2);
    CHECK(region["shape"].size() == 2);
    CHECK(region["volume"].get<double>() > 0);
    CHECK(region["batch_sizes"].size() == 8);

    const Run b = run(common + marginal.string() + " --mode marginal");
    REQUIRE_MESSAGE(b.status == 0, b.output);
    const json iv = read_json(marginal);
    CHECK(iv["type"] == "marginal-intervals");
    for (int k = 0; k < 2; ++k) CHECK(iv["lower"][k].get<double>() <= iv["upper"][k].get<double>());

    const Run exhausted = run("infer --data " + data.string() + " --model linear --m 8 --burn-in 3000 --no-cache --out " +
                              joint.string());
    CHECK(exhausted.status == 1);
}

TEST_CASE("experiment coverage writes a CSV") {
    const fs::path out = kDir / "coverage.csv";
    const Run r = run("experiment coverage --model linear --d 2 --T 2000 --m 10 --reps 5 --calib-reps 20000 --no-cache "
                      "--out " + out.string());
    REQUIRE_MESSAGE(r.status == 0, r.output);
    std::ifstream in(out);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header.rfind("model,d,T,", 0) == 0);
    CHECK(row.rfind("linear,2,2000,", 0) == 0);
}

TEST_CASE("usage and domain errors") {
    const Run usage = run("calibrate --d 1");
    CHECK(usage.status == 2);
    CHECK(usage.output.find("--m") != std::string::npos);
    CHECK(run("").status == 2);
    CHECK(run("calibrate --d 1 --m 10 --alloc bogus --no-cache").status == 2);

    const Run domain = run("calibrate --d 1 --m 10 --delta 1.5 --no-cache");
    CHECK(domain.status == 1);
    CHECK(domain.output.find("error:") != std::string::npos);
    const Run custom = run("calibrate --d 1 --m 10 --alloc custom --no-cache");
    CHECK(custom.status == 1);
    CHECK(custom.output.find("InvalidConfig") != std::string::npos);

    const Run help = run("--help");
    CHECK(help.status == 0);
    CHECK(help.output.find("calibrate") != std::string::npos);
}
