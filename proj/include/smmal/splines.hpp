#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

namespace smmal {

/// Tensor-product B-spline basis specification. `order` is the polynomial
/// degree (1 = piecewise linear); `degrees_per_dim` the number of basis
/// functions per input dimension.
struct SplineBasisSpec {
  int order = 1;
  std::vector<int> degrees_per_dim;
  std::vector<std::pair<double, double>> domain_box;

  Eigen::Index basis_count() const;
};

/// Evaluates the tensor-product basis at each input row. Inputs outside the
/// domain box are clamped to the boundary. Rows are nonnegative and sum to 1.
Eigen::MatrixXd bspline_basis(const Eigen::MatrixXd& x, const SplineBasisSpec& spec);

struct SplineModel {
  SplineBasisSpec basis_spec;
  Eigen::VectorXd coefficients;
  double truncation_M = 20.0;
};

struct SplineFitDiagnostics {
  int selected_degree = 0;
  std::vector<int> skipped_degrees;
  std::vector<double> cv_entropy;  // aligned with candidate degrees
  std::vector<int> candidates;
};

/// Cross-validated spline logistic regression: candidate degrees
/// {order+1, ..., max_degree} per dimension, scored by out-of-fold entropy,
/// refit on all rows at the winner. Degrees whose tensor basis cannot be
/// identified from the training rows are skipped with a diagnostic.
SplineModel fit_spline_nuisance(const Eigen::MatrixXd& inputs,
                                const Eigen::ArrayXd& response,
                                const Eigen::ArrayXd& weights, int max_degree,
                                int folds, int order, double M, std::uint64_t seed,
                                SplineFitDiagnostics* diagnostics = nullptr);

/// g(basis * coefficients), clamped to [clamp.first, clamp.second].
Eigen::ArrayXd predict_spline(const SplineModel& model, const Eigen::MatrixXd& inputs,
                              std::pair<double, double> clamp);

}  // namespace smmal
