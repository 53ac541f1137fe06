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

#include "core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "error.hpp"

namespace midiv {

const char* label_name(Label label) {
  return label == Label::kPos ? "POS" : "NEG";
}

Bag::Bag(std::string id, std::size_t dimension, std::vector<double> values,
         std::optional<Label> label)
    : id_(std::move(id)),
      dimension_(dimension),
      values_(std::move(values)),
      label_(label) {
  require(dimension_ >= 1, "bag " + id_ + ": dimension must be >= 1");
  require(!values_.empty(), "bag " + id_ + ": a bag needs at least one instance");
  if (values_.size() % dimension_ != 0)
    fail(ErrorCode::kDimensionMismatch,
         "bag " + id_ + ": value count is not a multiple of the dimension");
  for (double v : values_)
    require(std::isfinite(v), "bag " + id_ + ": non-finite instance value");
}

Bag Bag::from_scalars(std::string id, std::vector<double> values,
                      std::optional<Label> label) {
  return Bag(std::move(id), 1, std::move(values), label);
}

std::vector<double> Bag::column(std::size_t j) const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = values_[i * dimension_ + j];
  return out;
}

std::size_t Dataset::count(Label label) const {
  return static_cast<std::size_t>(std::count_if(
      bags.begin(), bags.end(), [&](const Bag& b) { return b.label() == label; }));
}

std::size_t Dataset::instance_count() const {
  std::size_t n = 0;
  for (const auto& b : bags) n += b.size();
  return n;
}

std::vector<double> Dataset::pooled_column(std::size_t j, Label label) const {
  std::vector<double> out;
  for (const auto& b : bags) {
    if (b.label() != label) continue;
    auto col = b.column(j);
    out.insert(out.end(), col.begin(), col.end());
  }
  return out;
}

void Dataset::validate() const {
  for (const auto& b : bags)
    if (b.dimension() != dimension)
      fail(ErrorCode::kDimensionMismatch,
           "bag " + b.id() + " has dimension " + std::to_string(b.dimension()) +
               ", dataset declares " + std::to_string(dimension));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    auto b = f.find_first_not_of(" \t");
    auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

[[noreturn]] void parse_error(std::size_t line_no, const std::string& msg) {
  fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + msg);
}

double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty())
    parse_error(line_no, "invalid number '" + s + "'");
  if (!std::isfinite(v)) parse_error(line_no, "non-finite value '" + s + "'");
  return v;
}

struct BagAccumulator {
  std::vector<double> values;
  std::optional<Label> label;
  std::size_t dimension = 0;
  std::size_t first_line = 0;
};

}  // namespace

Dataset parse_bag_csv(std::istream& in, const std::string& name) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    have_header = true;
    break;
  }
  if (!have_header) fail(ErrorCode::kParse, "empty file");

  auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "bag_id" || header[1] != "label")
    parse_error(line_no, "header must be bag_id,label,f1,...,fd");
  const std::size_t dimension = header.size() - 2;

  std::vector<std::string> order;
  std::map<std::string, BagAccumulator> acc;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_csv_line(line);
    if (fields.size() < 3) parse_error(line_no, "expected bag_id,label,values");
    const std::string& id = fields[0];
    if (id.empty()) parse_error(line_no, "empty bag_id");

    std::optional<Label> label;
    if (fields[1] == "1")
      label = Label::kPos;
    else if (fields[1] == "0")
      label = Label::kNeg;
    else if (fields[1] != "NA")
      parse_error(line_no, "label must be 0, 1 or NA, got '" + fields[1] + "'");

    auto [it, inserted] = acc.try_emplace(id);
    auto& bag = it->second;
    const std::size_t row_dim = fields.size() - 2;
    if (inserted) {
      order.push_back(id);
      bag.label = label;
      bag.dimension = row_dim;
      bag.first_line = line_no;
    } else {
      if (bag.label != label)
        parse_error(line_no, "conflicting labels within bag " + id);
      if (bag.dimension != row_dim)
        fail(ErrorCode::kDimensionMismatch,
             "line " + std::to_string(line_no) + ": dimension mismatch in bag " +
                 id + " (" + std::to_string(row_dim) + " vs " +
                 std::to_string(bag.dimension) + ")");
    }
    for (std::size_t j = 2; j < fields.size(); ++j)
      bag.values.push_back(parse_double(fields[j], line_no));
  }

  Dataset data;
  data.name = name;
  data.dimension = dimension;
  if (order.empty()) fail(ErrorCode::kParse, "no data rows");
  for (const auto& id : order) {
    auto& a = acc.at(id);
    if (a.dimension != dimension)
      fail(ErrorCode::kDimensionMismatch,
           "dimension mismatch in bag " + id + ": " + std::to_string(a.dimension) +
               " values, header declares " + std::to_string(dimension));
    data.bags.emplace_back(id, dimension, std::move(a.values), a.label);
  }
  return data;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return parse_bag_csv(in, path.stem().string());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_bag_csv(std::ostream& out, const Dataset& data) {
  out << "bag_id,label";
  for (std::size_t j = 0; j < data.dimension; ++j) out << ",f" << (j + 1);
  out << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& bag : data.bags) {
    const char* label = !bag.label() ? "NA" : (*bag.label() == Label::kPos ? "1" : "0");
    for (std::size_t i = 0; i < bag.size(); ++i) {
      out << bag.id() << ',' << label;
      for (double v : bag.instance(i)) out << ',' << v;
      out << '\n';
    }
  }
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  write_bag_csv(out, data);
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<double> PcaTransform::project(std::span<const double> x) const {
  if (x.size() != mean.size())
    fail(ErrorCode::kDimensionMismatch, "PCA input dimension mismatch");
  std::vector<double> out(components.size(), 0.0);
  for (std::size_t c = 0; c < components.size(); ++c) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - mean[j]) * components[c][j];
    out[c] = s;
  }
  return out;
}

PcaTransform fit_pca(const Dataset& train, std::size_t m) {
  train.validate();
  const std::size_t d = train.dimension;
  require(m >= 1 && m <= d, "PCA component count must be in [1, d]");
  const std::size_t n = train.instance_count();
  require(n >= 2, "PCA needs at least two instances");

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (const auto& bag : train.bags)
    for (std::size_t i = 0; i < bag.size(); ++i)
      mean += Eigen::Map<const Eigen::VectorXd>(bag.instance(i).data(),
                                                static_cast<Eigen::Index>(d));
  mean /= static_cast<double>(n);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                              static_cast<Eigen::Index>(d));
  for (const auto& bag : train.bags) {
    for (std::size_t i = 0; i < bag.size(); ++i) {
      Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(
                              bag.instance(i).data(), static_cast<Eigen::Index>(d)) -
                          mean;
      cov.noalias() += x * x.transpose();
    }
  }
  cov /= static_cast<double>(n - 1);
  if (cov.trace() <= 0.0)
    fail(ErrorCode::kNumeric, "degenerate covariance: all instances identical");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) fail(ErrorCode::kNumeric, "eigen decomposition failed");

  PcaTransform t;
  t.mean.assign(mean.data(), mean.data() + d);
  // Eigenvalues come back ascending.
  for (std::size_t c = 0; c < m; ++c) {
    const auto col = static_cast<Eigen::Index>(d - 1 - c);
    Eigen::VectorXd v = eig.eigenvectors().col(col);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    t.components.emplace_back(v.data(), v.data() + d);
    t.explained_variance.push_back(std::max(0.0, eig.eigenvalues()(col)));
  }
  return t;
}

Dataset apply_pca(const PcaTransform& t, const Dataset& data) {
  data.validate();
  if (data.dimension != t.input_dimension())
    fail(ErrorCode::kDimensionMismatch,
         "dataset dimension " + std::to_string(data.dimension) +
             " does not match PCA input dimension " +
             std::to_string(t.input_dimension()));
  Dataset out;
  out.name = data.name;
  out.dimension = t.output_dimension();
  for (const auto& bag : data.bags) {
    std::vector<double> values;
    values.reserve(bag.size() * out.dimension);
    for (std::size_t i = 0; i < bag.size(); ++i) {
      auto p = t.project(bag.instance(i));
      values.insert(values.end(), p.begin(), p.end());
    }
    out.bags.emplace_back(bag.id(), out.dimension, std::move(values), bag.label());
  }
  return out;
}

}  // namespace midiv
