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

#include "roc.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>

#include "error.hpp"

namespace midiv {

namespace {

struct Counts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

Counts check_inputs(std::span<const double> scores, std::span<const Label> labels) {
  require(scores.size() == labels.size(), "scores and labels differ in length");
  Counts c;
  for (Label l : labels) (l == Label::kPos ? c.pos : c.neg)++;
  require(c.pos > 0 && c.neg > 0, "AUC needs both POS and NEG labels");
  return c;
}

std::vector<std::size_t> ascending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return order;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const Label> labels) {
  const Counts c = check_inputs(scores, labels);
  const auto order = ascending_order(scores);
  // Twice the Mann-Whitney U of NEG over POS: each (POS < NEG) pair counts 2,
  // each tie counts 1. Integer arithmetic keeps the result exact.
  std::uint64_t twice_u = 0;
  std::uint64_t pos_below = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::uint64_t pos_here = 0;
    std::uint64_t neg_here = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == Label::kPos ? pos_here : neg_here)++;
      ++j;
    }
    twice_u += neg_here * (2 * pos_below + pos_here);
    pos_below += pos_here;
    i = j;
  }
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const Label> labels) {
  const Counts c = check_inputs(scores, labels);
  const auto order = ascending_order(scores);
  std::vector<RocPoint> roc{{0.0, 0.0}};
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] == Label::kPos ? tp : fp)++;
      ++i;
    }
    roc.push_back({static_cast<double>(fp) / static_cast<double>(c.neg),
                   static_cast<double>(tp) / static_cast<double>(c.pos)});
  }
  return roc;
}

double trapezoid_area(std::span<const RocPoint> roc) {
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i)
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2.0;
  return area;
}

}  // namespace midiv
