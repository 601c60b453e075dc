#include "smmal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace smmal {

MaskedColumn MaskedColumn::absent(Eigen::Index n) {
  MaskedColumn col;
  col.value = Eigen::ArrayXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  col.present = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, false);
  return col;
}

std::vector<Eigen::Index> SemiSupervisedDataset::labeled_indices() const {
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(n_labeled()));
  for (Eigen::Index i = 0; i < n_rows(); ++i)
    if (label_flag(i) == 1) idx.push_back(i);
  return idx;
}

bool ValidationReport::has(const std::string& tag) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const std::string& v) { return v.find(tag) != std::string::npos; });
}

ValidationReport validate_dataset(const SemiSupervisedDataset& data) {
  ValidationReport report;
  const Eigen::Index n = data.n_rows();

  if (data.treatment.present.size() != n || data.outcome.present.size() != n ||
      data.confounders.rows() != n || data.surrogates.rows() != n) {
    report.violations.push_back("shape: per-row fields disagree on N");
    return report;
  }

  bool masking_ok = true;
  for (Eigen::Index i = 0; i < n && masking_ok; ++i) {
    const bool labeled = data.label_flag(i) == 1;
    if (data.treatment.present(i) != labeled || data.outcome.present(i) != labeled)
      masking_ok = false;
  }
  if (!masking_ok)
    report.violations.push_back("masking: A/Y presence must match label flag");

  if (data.confounders.cols() < 1 ||
      (data.confounders.col(0).array() != 1.0).any())
    report.violations.push_back("intercept column: first confounder must be 1");

  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.label_flag(i) == 1 && data.outcome.present(i) &&
        std::abs(data.outcome.value(i)) > data.bound_M) {
      report.violations.push_back("outcome bound: |Y| exceeds bound_M on a labeled row");
      break;
    }
  }

  const Eigen::Index n_lab = data.n_labeled();
  if (n_lab == 0 || n_lab == n)
    report.violations.push_back("labeling: need at least one labeled and one unlabeled row");

  return report;
}

LabeledFraction labeled_fraction(const SemiSupervisedDataset& data) {
  return LabeledFraction{static_cast<double>(data.n_labeled()) /
                         static_cast<double>(data.n_rows())};
}

SemiSupervisedDataset labeled_subset(const SemiSupervisedDataset& data) {
  const auto idx = data.labeled_indices();
  const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
  SemiSupervisedDataset out;
  out.label_flag = Eigen::ArrayXi::Ones(m);
  out.treatment = MaskedColumn::absent(m);
  out.outcome = MaskedColumn::absent(m);
  out.confounders.resize(m, data.confounders.cols());
  out.surrogates.resize(m, data.surrogates.cols());
  out.bound_M = data.bound_M;
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = idx[static_cast<std::size_t>(r)];
    out.treatment.set(r, data.treatment.value(i));
    out.outcome.set(r, data.outcome.value(i));
    out.confounders.row(r) = data.confounders.row(i);
    out.surrogates.row(r) = data.surrogates.row(i);
  }
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace

void write_dataset_csv(const SemiSupervisedDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  const Eigen::Index px = data.confounders.cols();
  const Eigen::Index q = data.surrogates.cols();
  out << "R,A,Y";
  for (Eigen::Index j = 0; j < px; ++j) out << ",X" << (j + 1);
  for (Eigen::Index j = 0; j < q; ++j) out << ",S" << (j + 1);
  out << "\n";

  for (Eigen::Index i = 0; i < data.n_rows(); ++i) {
    out << data.label_flag(i);
    out << ',';
    if (data.treatment.present(i)) out << format_double(data.treatment.value(i));
    out << ',';
    if (data.outcome.present(i)) out << format_double(data.outcome.value(i));
    for (Eigen::Index j = 0; j < px; ++j)
      out << ',' << format_double(data.confounders(i, j));
    for (Eigen::Index j = 0; j < q; ++j)
      out << ',' << format_double(data.surrogates(i, j));
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

SemiSupervisedDataset read_dataset_csv(const std::string& path, double bound_M) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty dataset file: " + path);
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "R" || header[1] != "A" || header[2] != "Y")
    throw std::runtime_error("dataset header must start with R,A,Y: " + path);

  Eigen::Index px = 0, q = 0;
  for (std::size_t j = 3; j < header.size(); ++j) {
    if (!header[j].empty() && header[j][0] == 'X')
      ++px;
    else if (!header[j].empty() && header[j][0] == 'S')
      ++q;
    else
      throw std::runtime_error("unrecognized dataset column: " + header[j]);
  }
  if (px < 1) throw std::runtime_error("dataset needs at least the intercept X column");

  std::vector<int> flags;
  std::vector<std::optional<double>> a_vals, y_vals;
  std::vector<double> x_vals, s_vals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error("dataset row with wrong cell count: " + path);
    flags.push_back(std::stoi(cells[0]));
    a_vals.push_back(cells[1].empty() ? std::nullopt
                                      : std::optional<double>(std::stod(cells[1])));
    y_vals.push_back(cells[2].empty() ? std::nullopt
                                      : std::optional<double>(std::stod(cells[2])));
    for (Eigen::Index j = 0; j < px; ++j)
      x_vals.push_back(std::stod(cells[3 + static_cast<std::size_t>(j)]));
    for (Eigen::Index j = 0; j < q; ++j)
      s_vals.push_back(std::stod(cells[3 + static_cast<std::size_t>(px + j)]));
  }

  const Eigen::Index n = static_cast<Eigen::Index>(flags.size());
  SemiSupervisedDataset data;
  data.bound_M = bound_M;
  data.label_flag.resize(n);
  data.treatment = MaskedColumn::absent(n);
  data.outcome = MaskedColumn::absent(n);
  data.confounders.resize(n, px);
  data.surrogates.resize(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.label_flag(i) = flags[static_cast<std::size_t>(i)];
    if (a_vals[static_cast<std::size_t>(i)])
      data.treatment.set(i, *a_vals[static_cast<std::size_t>(i)]);
    if (y_vals[static_cast<std::size_t>(i)])
      data.outcome.set(i, *y_vals[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < px; ++j)
      data.confounders(i, j) = x_vals[static_cast<std::size_t>(i * px + j)];
    for (Eigen::Index j = 0; j < q; ++j)
      data.surrogates(i, j) = s_vals[static_cast<std::size_t>(i * q + j)];
  }
  return data;
}

}  // namespace smmal
