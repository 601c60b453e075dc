#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

namespace smmal {

/// Column observed only on a subset of rows. Absent slots are backed by NaN
/// and gated by the presence mask; nothing downstream reads a masked value.
struct MaskedColumn {
  Eigen::ArrayXd value;
  Eigen::Array<bool, Eigen::Dynamic, 1> present;

  static MaskedColumn absent(Eigen::Index n);

  std::optional<double> at(Eigen::Index i) const {
    if (i < 0 || i >= present.size() || !present(i)) return std::nullopt;
    return value(i);
  }
  void set(Eigen::Index i, double v) {
    value(i) = v;
    present(i) = true;
  }
};

/// N rows of (R, R*A, R*Y, X, S). Confounders carry a leading constant-one
/// column; treatment and outcome are present exactly on labeled rows.
/// Immutable by convention after construction; safe for shared reads.
struct SemiSupervisedDataset {
  Eigen::ArrayXi label_flag;      // R, one per row
  MaskedColumn treatment;         // A, labeled rows only
  MaskedColumn outcome;           // Y, labeled rows only
  Eigen::MatrixXd confounders;    // N x (p+1), first column == 1
  Eigen::MatrixXd surrogates;     // N x q
  double bound_M = 1.0;

  Eigen::Index n_rows() const { return label_flag.size(); }
  Eigen::Index n_labeled() const {
    return static_cast<Eigen::Index>(label_flag.sum());
  }
  std::vector<Eigen::Index> labeled_indices() const;
};

struct LabeledFraction {
  double rho_hat;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool pass() const { return violations.empty(); }
  bool has(const std::string& tag) const;
};

/// Report-only structural checks: masking consistency, intercept column,
/// outcome bound, non-degenerate labeling. Never mutates or throws.
ValidationReport validate_dataset(const SemiSupervisedDataset& data);

LabeledFraction labeled_fraction(const SemiSupervisedDataset& data);

/// Dataset with only the labeled rows retained (R identically 1); the input
/// to the supervised benchmark estimators.
SemiSupervisedDataset labeled_subset(const SemiSupervisedDataset& data);

/// CSV with header R,A,Y,X1..Xp+1,S1..Sq and empty cells for masked A/Y.
/// Values round-trip bit-exactly.
void write_dataset_csv(const SemiSupervisedDataset& data,
                       const std::string& path);
SemiSupervisedDataset read_dataset_csv(const std::string& path,
                                       double bound_M = 1.0);

}  // namespace smmal
