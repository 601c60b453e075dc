#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "smmal/dataset.hpp"
#include "smmal/folds.hpp"

namespace smmal {

/// Cross-fitted nuisance values: row i of each member holds the model value
/// for arms 0 and 1, evaluated by models trained with row i's fold held out.
struct NuisancePredictions {
  Eigen::MatrixXd ps;               // pi-hat(a, X_i), N x 2
  Eigen::MatrixXd outcome_reg;      // mu-hat(a, X_i)
  Eigen::MatrixXd imputed_ps;       // Pi-hat(a, W_i)
  Eigen::MatrixXd imputed_outcome;  // m-hat(a, W_i)

  Eigen::Index n_rows() const { return ps.rows(); }
};

/// A cross-fitting split that cannot be trained (e.g. a one-arm training
/// fold); carries the fold coordinates for diagnostics.
class ReplicationAbort : public std::runtime_error {
 public:
  explicit ReplicationAbort(const std::string& msg) : std::runtime_error(msg) {}
};

struct LowdimLearnerConfig {
  int order = 1;
  int max_degree_x = 0;  // 0 = floor(sqrt(n_train)) - 1
  int max_degree_w = 0;  // 0 = same rule
  int cv_folds = 10;
  double ps_clamp_M = 20.0;  // predictions kept inside [1/M, 1-1/M]
};

struct DrLearnerConfig {
  int lambda_grid_size = 50;
  double lambda_min_ratio = 0.01;
  int cv_folds = 10;
  double tolerance = 1e-7;
  int max_iterations = 200;
  double lambda_override = -1.0;  // >= 0 fixes every penalty level (skips CV)
};

/// Single-level cross-fitting with B-spline learners: per fold, PS and OR
/// models over X and imputation models over W = (X, S) are fit on the
/// out-of-fold labeled rows and evaluated on the held fold.
NuisancePredictions crossfit_lowdim(const SemiSupervisedDataset& data,
                                    const FoldPlan& plan,
                                    const LowdimLearnerConfig& config,
                                    std::uint64_t seed);

/// Two-level cross-fitted calibrated-Lasso pipeline: imputation fits per
/// fold, initial PS/OR fits per fold pair, calibrated fits per fold, and
/// truncated predictions. Requires K >= 3.
NuisancePredictions crossfit_dr(const SemiSupervisedDataset& data,
                                const FoldPlan& plan, const DrLearnerConfig& config,
                                double M, std::uint64_t seed);

/// The calibrated pipeline restricted to X (no imputation stage); used by the
/// supervised doubly robust benchmark. Fills ps and outcome_reg only.
NuisancePredictions crossfit_dr_xonly(const SemiSupervisedDataset& data,
                                      const FoldPlan& plan,
                                      const DrLearnerConfig& config, double M,
                                      std::uint64_t seed);

}  // namespace smmal
