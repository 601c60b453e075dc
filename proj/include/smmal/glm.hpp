#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace smmal {

/// g(x) = 1/(1+e^{-x}), saturating stably for large |x|.
double sigmoid(double x);
Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& x);

/// g'(x) = e^x/(1+e^x)^2.
double sigmoid_deriv(double x);

/// tau(x) = sgn(x) (|x| ^ 2M): clamps linear predictors to [-2M, 2M].
double truncate_tau(double x, double M);
Eigen::ArrayXd truncate_tau(const Eigen::ArrayXd& x, double M);

/// log(1+e^x) without overflow.
double softplus(double x);

/// Entropy loss l(y, x) = log(1+e^x) - y x.
double entropy_loss(double y, double eta);

struct SparseLinearModel {
  Eigen::VectorXd coefficients;   // over the intercept-augmented design
  double lambda = 0.0;
  double objective_value = 0.0;
  double kkt_residual = 0.0;
  int n_iterations = 0;
  std::vector<double> objective_history;  // one entry per outer iteration
};

struct FitSpec {
  Eigen::ArrayXd sample_weights;    // empty => all ones
  Eigen::ArrayXd penalty_weights;   // empty => 0 on column 0, 1 elsewhere
  std::vector<double> lambda_grid;  // strictly decreasing; empty => default grid
  double tolerance = 1e-7;          // KKT residual target
  int max_iterations = 200;         // outer iterations
};

class FitError : public std::runtime_error {
 public:
  FitError(const std::string& msg, double kkt = 0.0, int iters = 0)
      : std::runtime_error(msg), kkt_residual(kkt), n_iterations(iters) {}
  double kkt_residual;
  int n_iterations;
};

enum class GlmLoss {
  logistic,     ///< l(y, eta) = log(1+e^eta) - y eta
  calibration,  ///< l_a(A, eta) = (a-A) eta + I(A=a) e^{(-1)^a eta}
};

/// Smooth part of a penalized fit, (1/normalizer) sum_i w_i l_i(x_i' b).
/// Exposed so tests can run finite-difference and convexity checks against
/// the exact objective the solver minimizes.
struct GlmProblem {
  Eigen::MatrixXd design;       // rows x d, includes the intercept column
  Eigen::ArrayXd response;      // y for logistic, A for calibration
  Eigen::ArrayXd weights;       // per-row, nonnegative
  double normalizer = 0.0;      // explicit divisor (sum of weights or a count)
  GlmLoss loss = GlmLoss::logistic;
  int arm = 1;                  // calibration only

  Eigen::Index n_rows() const { return design.rows(); }
  Eigen::Index n_coef() const { return design.cols(); }

  double value(const Eigen::VectorXd& beta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& beta) const;
  double value_from_eta(const Eigen::ArrayXd& eta) const;
  /// First and second derivatives of the weighted loss w.r.t. eta, already
  /// scaled by w_i / normalizer.
  void eta_derivatives(const Eigen::ArrayXd& eta, Eigen::ArrayXd& d1,
                       Eigen::ArrayXd& d2) const;
};

/// Full penalized objective value(beta) + lambda * sum_j p_j |beta_j|.
double penalized_objective(const GlmProblem& problem, const Eigen::ArrayXd& penalty,
                           double lambda, const Eigen::VectorXd& beta);

/// Max violation of the L1 stationarity conditions at beta.
double kkt_residual(const GlmProblem& problem, const Eigen::ArrayXd& penalty,
                    double lambda, const Eigen::VectorXd& beta);

/// Proximal Newton with cyclic coordinate-descent inner sweeps over an active
/// set; convergence is declared on the exact KKT residual.
SparseLinearModel solve_l1(const GlmProblem& problem, const Eigen::ArrayXd& penalty,
                           double lambda, double tolerance, int max_iterations,
                           const Eigen::VectorXd* warm_start = nullptr);

/// Smallest lambda at which all penalized coordinates stay at zero, computed
/// from the gradient at the intercept-only fit.
double lambda_max(const GlmProblem& problem, const Eigen::ArrayXd& penalty);

std::vector<double> default_lambda_grid(const GlmProblem& problem,
                                        const Eigen::ArrayXd& penalty,
                                        int n_points = 50, double min_ratio = 0.01);

Eigen::ArrayXd resolve_weights(const FitSpec& spec, Eigen::Index rows);
Eigen::ArrayXd resolve_penalty(const FitSpec& spec, Eigen::Index cols);

SparseLinearModel fit_lasso_logistic(const Eigen::MatrixXd& design,
                                     const Eigen::ArrayXd& response,
                                     const FitSpec& spec, double lambda);

/// Calibrated PS fit for one arm: weights gdot_tau(x' beta_init) / normalizer,
/// loss (a-A) a'x + I(A=a) exp((-1)^a a'x). Rows must be labeled rows.
SparseLinearModel fit_calibrated_ps(const Eigen::MatrixXd& design,
                                    const Eigen::ArrayXd& treatment, int arm,
                                    const SparseLinearModel& or_init,
                                    const FitSpec& spec, double lambda, double M,
                                    Eigen::Index normalizer);

/// Calibrated OR fit: weighted Lasso logistic with per-row weight
/// exp(tau((-1)^arm x' alpha_init)), normalized by the row count. Rows must be
/// labeled rows with A = arm.
SparseLinearModel fit_calibrated_or(const Eigen::MatrixXd& design,
                                    const Eigen::ArrayXd& outcome, int arm,
                                    const SparseLinearModel& ps_init,
                                    const FitSpec& spec, double lambda, double M);

enum class CvObjective { entropy };

/// Grid lambda minimizing mean out-of-fold entropy; deterministic given seed.
double select_lambda_cv(const Eigen::MatrixXd& design, const Eigen::ArrayXd& response,
                        const FitSpec& spec, int folds, CvObjective objective,
                        std::uint64_t seed);

/// Same selection driven by an arbitrary GlmProblem (used for the calibrated
/// stages, scoring held-out rows by the problem's own loss).
double select_lambda_cv_problem(const GlmProblem& problem, const Eigen::ArrayXd& penalty,
                                const std::vector<double>& grid, int folds,
                                double tolerance, int max_iterations,
                                std::uint64_t seed);

}  // namespace smmal
