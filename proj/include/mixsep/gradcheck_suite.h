// Copyright 2026 The mixsep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MIXSEP_GRADCHECK_SUITE_H_
#define MIXSEP_GRADCHECK_SUITE_H_

#include <string>
#include <vector>

namespace mixsep {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass() const { return max_rel_err <= tolerance; }
};

// Finite-difference verification of every differentiable op, in 64-bit,
// over `seeds_per_op` random small-shape instances each. Tolerance 1e-5.
std::vector<GradCheckEntry> RunOpGradChecks(int seeds_per_op = 20);

// End-to-end check of the toy separation model (12x18 spectrogram,
// embed 16, two encoders/decoders, two heads, two sources) through the
// greedy-bijection loss. Probes up to max_coords_per_param coordinates of
// each parameter (<= 0 probes all). Tolerance 1e-4.
GradCheckEntry RunToyModelGradCheck(int max_coords_per_param = 24);

}  // namespace mixsep

#endif  // MIXSEP_GRADCHECK_SUITE_H_
