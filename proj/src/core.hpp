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

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace midiv {

enum class Label { kNeg = 0, kPos = 1 };

const char* label_name(Label label);

// One bag: n instances of dimension d stored row-major.
class Bag {
 public:
  Bag(std::string id, std::size_t dimension, std::vector<double> values,
      std::optional<Label> label = std::nullopt);

  // Convenience for 1-D bags.
  static Bag from_scalars(std::string id, std::vector<double> values,
                          std::optional<Label> label = std::nullopt);

  const std::string& id() const { return id_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return values_.size() / dimension_; }
  const std::optional<Label>& label() const { return label_; }
  const std::vector<double>& values() const { return values_; }

  std::span<const double> instance(std::size_t i) const {
    return {values_.data() + i * dimension_, dimension_};
  }
  // Coordinate j of every instance.
  std::vector<double> column(std::size_t j) const;

 private:
  std::string id_;
  std::size_t dimension_;
  std::vector<double> values_;
  std::optional<Label> label_;
};

struct Dataset {
  std::string name;
  std::size_t dimension = 0;
  std::vector<Bag> bags;

  std::size_t count(Label label) const;
  std::size_t instance_count() const;
  // Coordinate j of every instance of every bag carrying label, in bag order.
  std::vector<double> pooled_column(std::size_t j, Label label) const;
  // Throws unless every bag has the declared dimension.
  void validate() const;
};

// BAG_CSV: header "bag_id,label,f1,...,fd", one instance per row,
// label in {0,1,NA}. Rows of one bag need not be contiguous.
Dataset parse_bag_csv(std::istream& in, const std::string& name = "");
Dataset load_dataset(const std::filesystem::path& path);
void write_bag_csv(std::ostream& out, const Dataset& data);
void write_dataset(const std::filesystem::path& path, const Dataset& data);

struct PcaTransform {
  std::vector<double> mean;
  // components[c] is a unit vector of length d.
  std::vector<std::vector<double>> components;
  std::vector<double> explained_variance;

  std::size_t input_dimension() const { return mean.size(); }
  std::size_t output_dimension() const { return components.size(); }
  std::vector<double> project(std::span<const double> x) const;
};

// Pooled-instance PCA. Each component's largest-magnitude coordinate is
// made positive so the result is deterministic.
PcaTransform fit_pca(const Dataset& train, std::size_t m);
Dataset apply_pca(const PcaTransform& t, const Dataset& data);

}  // namespace midiv
