#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace smmal {

/// Balanced K-fold assignment. Fold sizes differ by at most one; the
/// assignment is a uniformly random partition, deterministic given seed.
struct FoldPlan {
  int n_folds = 0;
  Eigen::ArrayXi assignment;  // fold index per row
  std::uint64_t seed = 0;

  std::vector<std::vector<Eigen::Index>> fold_indices() const;
};

FoldPlan assign_folds(Eigen::Index n, int k, std::uint64_t seed);

}  // namespace smmal
