// Copyright 2026 The StegGuard Authors
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


#include "accept_gradients.hpp"

#include <algorithm>

#include "gradient_checks.hpp"

static_assert(sizeof(sg::Real) == sizeof(double), "gradient checks need double");

namespace accept {

GradientSummary run_gradient_checks() {
  using namespace sg::gradcheck;
  GradientSummary s;
  for (const GroupResult& r : composite_groups()) {
    ++s.groups;
    const double scale = std::max(r.analytic_norm, r.numeric_norm);
    const double err = scale < 1e-8 ? r.diff_norm : r.diff_norm / scale;
    s.worst_composite = std::max(s.worst_composite, err);
    if (!r.ok()) {
      ++s.failed_groups;
      s.failing += (s.failing.empty() ? "" : ",") + r.name;
    }
  }
  for (double e : heatmap_block_errors()) s.worst_heatmap = std::max(s.worst_heatmap, e);
  return s;
}

}  // namespace accept
