#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>

#include "smmal/crossfit.hpp"
#include "smmal/dataset.hpp"

namespace smmal {

struct AteEstimate {
  double point = 0.0;
  double variance_scaled = 0.0;  // variance of sqrt(n)-scaled error
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double alpha = 0.05;
  Eigen::ArrayXd influence_values;  // one per row of the input data
  Eigen::Index n_labeled = 0;
};

/// Inverse standard normal CDF (rational approximation refined by one Halley
/// step; absolute error well below 1e-9).
double normal_quantile(double p);

/// point -/+ z_{alpha/2} sqrt(variance_scaled / n).
std::pair<double, double> confidence_interval(double point, double variance_scaled,
                                              Eigen::Index n, double alpha);

/// Semi-supervised estimate from cross-fitted nuisance values: influence
/// values with imputation corrections on all rows and R/rho-weighted labeled
/// corrections, variance on the sqrt(n) scale, and the normal CI.
AteEstimate smmal_estimate(const SemiSupervisedDataset& data,
                           const NuisancePredictions& preds, double alpha);

/// Complete-data AIPW from cross-fitted PS/OR values; data must be all
/// labeled. Used by both supervised benchmarks.
AteEstimate aipw_estimate(const SemiSupervisedDataset& data,
                          const NuisancePredictions& preds, double alpha);

/// Supervised benchmark: cross-fitted AIPW on the labeled rows with the
/// B-spline learners.
AteEstimate supervised_dml_estimate(const SemiSupervisedDataset& labeled_data, int K,
                                    const LowdimLearnerConfig& config, double alpha,
                                    std::uint64_t seed);

/// Supervised benchmark: the calibrated pipeline over X only on the labeled
/// rows, evaluated through the complete-data influence function.
AteEstimate supervised_dr_estimate(const SemiSupervisedDataset& labeled_data, int K,
                                   const DrLearnerConfig& config, double M,
                                   double alpha, std::uint64_t seed);

/// {point, variance_scaled, ci, n, N, method, seed} JSON record.
std::string estimate_to_json(const AteEstimate& est, const std::string& method,
                             std::uint64_t seed, Eigen::Index N);

}  // namespace smmal
