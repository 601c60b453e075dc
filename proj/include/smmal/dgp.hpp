#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>

#include "smmal/dataset.hpp"
#include "smmal/rng.hpp"

namespace smmal {

/// Mixture-Beta surrogate sharpness; alpha >= 1, with AUC increasing in
/// alpha. The calibrated (AUC, alpha) pairs are exposed via
/// surrogate_alpha_for_auc.
struct SurrogateSpec {
  double alpha_A = 2.99;
  double alpha_Y = 2.99;
};

enum class Scenario { lowdim, highdim };
enum class ModelFlags { correct_both, wrong_ps, wrong_or };

struct ScenarioSpec {
  Scenario scenario = Scenario::lowdim;
  ModelFlags flags = ModelFlags::correct_both;
  Eigen::Index N = 10000;
  Eigen::Index n_labels = 500;
  int p = 100;  // highdim only
  std::uint64_t seed = 1;
};

/// Generating truth carried alongside each simulated dataset.
struct TruthRecord {
  Scenario scenario = Scenario::lowdim;
  ModelFlags flags = ModelFlags::correct_both;
  double ate = 0.0;
  double ate_mc_se = 0.0;  // 0 when the value is exact
  SurrogateSpec surrogates;
};

/// Calibrated alpha for the supported AUC levels
/// {0.80, 0.90, 0.95, 0.99, 0.999}.
double surrogate_alpha_for_auc(double auc);

/// Closed-form AUC of Beta(alpha,1) against Beta(1,alpha): 1 - alpha B(alpha, alpha+1).
double surrogate_auc_analytic(double alpha);

/// One draw: Beta(alpha,1) when label=1, Beta(1,alpha) when label=0, by
/// inverse-CDF sampling.
double sample_surrogate(int label, double alpha, Rng& rng);

std::pair<SemiSupervisedDataset, TruthRecord> gen_lowdim(const ScenarioSpec& spec,
                                                         const SurrogateSpec& surrogates);

std::pair<SemiSupervisedDataset, TruthRecord> gen_highdim(const ScenarioSpec& spec,
                                                          const SurrogateSpec& surrogates);

enum class NuisanceKind { ps, outcome };

/// Generating pi* or mu* evaluated at rows of the confounder matrix
/// (intercept-augmented, as stored in the dataset).
Eigen::ArrayXd true_nuisance(const TruthRecord& truth, NuisanceKind which, int arm,
                             const Eigen::MatrixXd& confounders);

/// Closed-form P(A=a | x, sA, sY) for the lowdim scenario.
Eigen::ArrayXd true_imputed_ps_lowdim(const TruthRecord& truth, int arm,
                                      const Eigen::ArrayXd& x,
                                      const Eigen::ArrayXd& s_a,
                                      const Eigen::ArrayXd& s_y);

/// Closed-form E[Y | A=a, x, sY] for the lowdim scenario.
Eigen::ArrayXd true_imputed_outcome_lowdim(const TruthRecord& truth, int arm,
                                           const Eigen::ArrayXd& x,
                                           const Eigen::ArrayXd& s_y);

/// Monte-Carlo oracle for the highdim ATE; returns (estimate, standard error).
/// The shipped truth records use frozen values from a 1e7-draw run.
std::pair<double, double> highdim_ate_mc(ModelFlags flags, Eigen::Index n_draws,
                                         std::uint64_t seed);

/// Frozen 1e7-draw oracle values (with their MC standard errors).
double highdim_ate_frozen(ModelFlags flags);
double highdim_ate_frozen_se(ModelFlags flags);

}  // namespace smmal
