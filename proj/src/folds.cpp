#include "smmal/folds.hpp"

#include <numeric>
#include <stdexcept>

#include "smmal/rng.hpp"

namespace smmal {

std::vector<std::vector<Eigen::Index>> FoldPlan::fold_indices() const {
  std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(n_folds));
  for (Eigen::Index i = 0; i < assignment.size(); ++i)
    out[static_cast<std::size_t>(assignment(i))].push_back(i);
  return out;
}

FoldPlan assign_folds(Eigen::Index n, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("assign_folds: need at least 2 folds");
  if (static_cast<Eigen::Index>(k) > n)
    throw std::invalid_argument("assign_folds: more folds than rows");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(derive_seed(seed, 0xf01d5ULL));
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }

  FoldPlan plan;
  plan.n_folds = k;
  plan.seed = seed;
  plan.assignment.resize(n);
  // first (n mod k) folds get the extra row
  Eigen::Index pos = 0;
  const Eigen::Index base = n / k, extra = n % k;
  for (int f = 0; f < k; ++f) {
    const Eigen::Index size = base + (f < extra ? 1 : 0);
    for (Eigen::Index t = 0; t < size; ++t)
      plan.assignment(order[static_cast<std::size_t>(pos++)]) = f;
  }
  return plan;
}

}  // namespace smmal
