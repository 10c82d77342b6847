#include "stabilab/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "stabilab/rng.hpp"

namespace stabilab {

Dataset::Dataset(Eigen::MatrixXd features, Eigen::VectorXi labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
  if (features_.rows() != labels_.size()) {
    throw std::invalid_argument("dataset: feature rows and label count differ");
  }
  if (!features_.allFinite()) {
    throw std::invalid_argument("dataset: non-finite feature value");
  }
  for (Eigen::Index i = 0; i < labels_.size(); ++i) {
    if (labels_(i) != 0 && labels_(i) != 1) {
      throw std::invalid_argument("dataset: label outside {0,1} at index " +
                                  std::to_string(i));
    }
  }
}

bool operator==(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size() || a.dim() != b.dim()) return false;
  if (a.size() == 0) return true;
  return (a.features().array() == b.features().array()).all() &&
         (a.labels().array() == b.labels().array()).all();
}

int hastie_label(const Eigen::Ref<const Eigen::VectorXd>& features) {
  return features.squaredNorm() > kHastieThreshold ? 1 : 0;
}

Dataset hastie_from_features(const Eigen::MatrixXd& features) {
  Eigen::VectorXi labels(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    labels(i) = hastie_label(features.row(i).transpose());
  }
  return Dataset(features, std::move(labels));
}

Dataset generate_hastie(Eigen::Index m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("generate_hastie: m must be >= 1");
  SplitMix64 rng(seed);
  Eigen::MatrixXd features(m, kHastieDim);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < kHastieDim; ++j) {
      features(i, j) = rng.next_normal();
    }
  }
  return hastie_from_features(features);
}

namespace {

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& tok, Eigen::Index row, Eigen::Index col) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || tok.empty()) {
    throw std::runtime_error("csv: row " + std::to_string(row) + ", column " +
                             std::to_string(col) + ": not a number: '" + tok +
                             "'");
  }
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("csv: missing header row in " + path);
  }
  strip_cr(line);
  const auto header = split_fields(line);
  if (header.size() < 2) {
    throw std::runtime_error("csv: header needs at least one feature column "
                             "and a label column in " + path);
  }
  const Eigen::Index d = static_cast<Eigen::Index>(header.size()) - 1;

  std::vector<double> values;
  std::vector<int> labels;
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty() && in.eof()) break;
    ++row;
    const auto fields = split_fields(line);
    if (static_cast<Eigen::Index>(fields.size()) != d + 1) {
      throw std::runtime_error(
          "csv: row " + std::to_string(row) + ": expected " +
          std::to_string(d + 1) + " columns, got " +
          std::to_string(fields.size()));
    }
    for (Eigen::Index c = 0; c < d; ++c) {
      values.push_back(parse_number(fields[c], row, c + 1));
    }
    const double y = parse_number(fields[d], row, d + 1);
    if (y != 0.0 && y != 1.0) {
      throw std::runtime_error("csv: row " + std::to_string(row) +
                               ": label must be 0 or 1, got '" +
                               fields[d] + "'");
    }
    labels.push_back(static_cast<int>(y));
  }

  const Eigen::Index m = static_cast<Eigen::Index>(labels.size());
  Eigen::MatrixXd features(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) features(i, j) = values[i * d + j];
  }
  Eigen::VectorXi label_vec =
      Eigen::Map<const Eigen::VectorXi>(labels.data(), m);
  return Dataset(std::move(features), std::move(label_vec));
}

void save_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write file: " + path);
  for (Eigen::Index j = 0; j < d.dim(); ++j) out << 'f' << j << ',';
  out << "label\n";
  char buf[64];
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    for (Eigen::Index j = 0; j < d.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", d.features()(i, j));
      out << buf << ',';
    }
    out << d.label(i) << '\n';
  }
  if (!out) throw std::runtime_error("csv: write failed: " + path);
}

Dataset select_examples(const Dataset& d,
                        const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd features(static_cast<Eigen::Index>(rows.size()), d.dim());
  Eigen::VectorXi labels(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    features.row(static_cast<Eigen::Index>(j)) = d.features().row(rows[j]);
    labels(static_cast<Eigen::Index>(j)) = d.label(rows[j]);
  }
  return Dataset(std::move(features), std::move(labels));
}

Dataset remove_example(const Dataset& d, Eigen::Index i) {
  if (i < 0 || i >= d.size()) {
    throw std::out_of_range("remove_example: index " + std::to_string(i) +
                            " out of range for m=" + std::to_string(d.size()));
  }
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(d.size()) - 1);
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    if (j != i) keep.push_back(j);
  }
  return select_examples(d, keep);
}

Dataset replace_example(const Dataset& d, Eigen::Index i, const Example& z) {
  if (i < 0 || i >= d.size()) {
    throw std::out_of_range("replace_example: index " + std::to_string(i) +
                            " out of range for m=" + std::to_string(d.size()));
  }
  if (z.features.size() != d.dim()) {
    throw std::invalid_argument(
        "replace_example: feature dimension " +
        std::to_string(z.features.size()) + " does not match d=" +
        std::to_string(d.dim()));
  }
  if (z.label != 0 && z.label != 1) {
    throw std::invalid_argument("replace_example: label outside {0,1}");
  }
  Eigen::MatrixXd features = d.features();
  Eigen::VectorXi labels = d.labels();
  features.row(i) = z.features.transpose();
  labels(i) = z.label;
  return Dataset(std::move(features), std::move(labels));
}

BootstrapSample bootstrap_sample(const Dataset& d, std::uint64_t seed) {
  if (d.size() == 0) {
    throw std::invalid_argument("bootstrap_sample: empty dataset");
  }
  SplitMix64 rng(seed);
  const auto m = static_cast<std::uint64_t>(d.size());
  std::vector<Eigen::Index> indices(d.size());
  for (auto& idx : indices) idx = static_cast<Eigen::Index>(rng.next_below(m));
  return BootstrapSample{select_examples(d, indices), std::move(indices)};
}

OosSplit oos_split(const Dataset& d, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("oos_split: fraction must lie in (0,1)");
  }
  const Eigen::Index m = d.size();
  const auto eval_count = static_cast<Eigen::Index>(
      std::lround(fraction * static_cast<double>(m)));
  if (eval_count < 1) {
    throw EmptyEvalSetError("oos_split: evaluation part would be empty");
  }
  if (eval_count >= m) {
    throw std::invalid_argument("oos_split: training part would be empty");
  }

  std::vector<Eigen::Index> order(m);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  SplitMix64 rng(seed);
  for (Eigen::Index j = m - 1; j > 0; --j) {  // Fisher-Yates
    const auto k = static_cast<Eigen::Index>(
        rng.next_below(static_cast<std::uint64_t>(j) + 1));
    std::swap(order[j], order[k]);
  }

  OosSplit split;
  split.eval_indices.assign(order.begin(), order.begin() + eval_count);
  split.train_indices.assign(order.begin() + eval_count, order.end());
  std::sort(split.eval_indices.begin(), split.eval_indices.end());
  std::sort(split.train_indices.begin(), split.train_indices.end());
  split.eval = select_examples(d, split.eval_indices);
  split.train = select_examples(d, split.train_indices);
  return split;
}

Dataset build_eval_set(const Dataset& d,
                       const std::vector<BootstrapSample>& samples,
                       const EvalStrategy& strategy, std::uint64_t seed) {
  switch (strategy.kind) {
    case EvalKind::All:
      return d;
    case EvalKind::Oos:
      return oos_split(d, strategy.oos_fraction, seed).eval;
    case EvalKind::Oob: {
      if (samples.empty()) {
        throw std::invalid_argument(
            "build_eval_set: OOB needs at least one bootstrap sample");
      }
      std::vector<char> seen(static_cast<std::size_t>(d.size()), 0);
      for (const auto& s : samples) {
        for (const Eigen::Index idx : s.source_indices) {
          seen[static_cast<std::size_t>(idx)] = 1;
        }
      }
      std::vector<Eigen::Index> oob;
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (!seen[static_cast<std::size_t>(i)]) oob.push_back(i);
      }
      if (oob.empty()) {
        throw EmptyEvalSetError(
            "build_eval_set: out-of-bag evaluation set is empty; fall back "
            "to the ALL strategy");
      }
      return select_examples(d, oob);
    }
  }
  throw std::logic_error("build_eval_set: unknown strategy");
}

const char* eval_kind_name(EvalKind kind) {
  switch (kind) {
    case EvalKind::All: return "all";
    case EvalKind::Oob: return "oob";
    case EvalKind::Oos: return "oos";
  }
  return "?";
}

}  // namespace stabilab
