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

#include "sgdbm/sgd.hpp"

#include <cmath>

namespace sgdbm {

StepSchedule::StepSchedule(double a, double r) : a_(a), r_(r) {
    if (!(a > 0.0) || !std::isfinite(a))
        throw InvalidSchedule("step scale a must be positive, got " + std::to_string(a));
    if (!(r > 0.5 && r < 1.0))
        throw InvalidSchedule("step exponent r must lie in (1/2, 1), got " + std::to_string(r));
}

double StepSchedule::operator()(std::uint64_t t) const { return a_ * std::pow(static_cast<double>(t), -r_); }

double step_size(const StepSchedule& schedule, std::uint64_t t) { return schedule(t); }

}  // namespace sgdbm
