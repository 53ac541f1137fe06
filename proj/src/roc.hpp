// Copyright 2026 The midiv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <span>
#include <vector>

#include "core.hpp"

namespace midiv {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

// Scores follow the "lower means more POS-like" convention throughout.

// Mann-Whitney AUC: P(score_pos < score_neg) + P(tie) / 2, by sort and rank.
double auc(std::span<const double> scores, std::span<const Label> labels);

// One point per distinct score, sweeping the rule "POS iff score <= t" from
// the lowest score upward, bracketed by (0,0) and (1,1).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const Label> labels);

double trapezoid_area(std::span<const RocPoint> roc);

}  // namespace midiv
