#include "smmal/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smmal/folds.hpp"
#include "smmal/rng.hpp"

namespace smmal {

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& x) {
  Eigen::ArrayXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = sigmoid(x(i));
  return out;
}

double sigmoid_deriv(double x) {
  const double g = sigmoid(x);
  return g * (1.0 - g);
}

double truncate_tau(double x, double M) {
  const double cap = 2.0 * M;
  return std::copysign(std::min(std::abs(x), cap), x);
}

Eigen::ArrayXd truncate_tau(const Eigen::ArrayXd& x, double M) {
  Eigen::ArrayXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = truncate_tau(x(i), M);
  return out;
}

double softplus(double x) {
  if (x > 35.0) return x;
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double entropy_loss(double y, double eta) { return softplus(eta) - y * eta; }

namespace {

inline double cal_sign(int arm) { return arm == 1 ? -1.0 : 1.0; }

inline double safe_exp(double x) {
  return std::exp(std::min(x, 700.0));
}

}  // namespace

double GlmProblem::value_from_eta(const Eigen::ArrayXd& eta) const {
  double acc = 0.0;
  if (loss == GlmLoss::logistic) {
    for (Eigen::Index i = 0; i < eta.size(); ++i)
      acc += weights(i) * entropy_loss(response(i), eta(i));
  } else {
    const double s = cal_sign(arm);
    const double a = static_cast<double>(arm);
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const bool in_arm = response(i) == a;
      acc += weights(i) * ((a - response(i)) * eta(i) +
                           (in_arm ? safe_exp(s * eta(i)) : 0.0));
    }
  }
  return acc / normalizer;
}

double GlmProblem::value(const Eigen::VectorXd& beta) const {
  return value_from_eta((design * beta).array());
}

void GlmProblem::eta_derivatives(const Eigen::ArrayXd& eta, Eigen::ArrayXd& d1,
                                 Eigen::ArrayXd& d2) const {
  const Eigen::Index n = eta.size();
  d1.resize(n);
  d2.resize(n);
  if (loss == GlmLoss::logistic) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = sigmoid(eta(i));
      const double w = weights(i) / normalizer;
      d1(i) = w * (p - response(i));
      d2(i) = w * p * (1.0 - p);
    }
  } else {
    const double s = cal_sign(arm);
    const double a = static_cast<double>(arm);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = weights(i) / normalizer;
      if (response(i) == a) {
        const double e = safe_exp(s * eta(i));
        d1(i) = w * ((a - response(i)) + s * e);
        d2(i) = w * e;
      } else {
        d1(i) = w * (a - response(i));
        d2(i) = 0.0;
      }
    }
  }
}

Eigen::VectorXd GlmProblem::gradient(const Eigen::VectorXd& beta) const {
  Eigen::ArrayXd d1, d2;
  eta_derivatives((design * beta).array(), d1, d2);
  return design.transpose() * d1.matrix();
}

double penalized_objective(const GlmProblem& problem, const Eigen::ArrayXd& penalty,
                           double lambda, const Eigen::VectorXd& beta) {
  return problem.value(beta) +
         lambda * (penalty * beta.array().abs()).sum();
}

namespace {

double kkt_from_gradient(const Eigen::VectorXd& grad, const Eigen::ArrayXd& penalty,
                         double lambda, const Eigen::VectorXd& beta) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double reach = lambda * penalty(j);
    double v;
    if (penalty(j) == 0.0)
      v = std::abs(grad(j));
    else if (beta(j) != 0.0)
      v = std::abs(grad(j) + reach * (beta(j) > 0 ? 1.0 : -1.0));
    else
      v = std::max(0.0, std::abs(grad(j)) - reach);
    worst = std::max(worst, v);
  }
  return worst;
}

inline double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

}  // namespace

double kkt_residual(const GlmProblem& problem, const Eigen::ArrayXd& penalty,
                    double lambda, const Eigen::VectorXd& beta) {
  return kkt_from_gradient(problem.gradient(beta), penalty, lambda, beta);
}

SparseLinearModel solve_l1(const GlmProblem& problem, const Eigen::ArrayXd& penalty,
                           double lambda, double tolerance, int max_iterations,
                           const Eigen::VectorXd* warm_start) {
  const Eigen::Index rows = problem.n_rows();
  const Eigen::Index d = problem.n_coef();
  if (problem.response.size() != rows || problem.weights.size() != rows)
    throw std::invalid_argument("solve_l1: row count mismatch");
  if (penalty.size() != d)
    throw std::invalid_argument("solve_l1: penalty length mismatch");
  if (!(problem.normalizer > 0.0))
    throw std::invalid_argument("solve_l1: normalizer must be positive");

  Eigen::VectorXd beta = (warm_start && warm_start->size() == d)
                             ? *warm_start
                             : Eigen::VectorXd::Zero(d);
  Eigen::ArrayXd eta = (problem.design * beta).array();
  double obj = problem.value_from_eta(eta) +
               lambda * (penalty * beta.array().abs()).sum();

  SparseLinearModel model;
  model.lambda = lambda;
  model.objective_history.push_back(obj);

  Eigen::ArrayXd d1, d2;
  Eigen::VectorXd grad(d), bnew(d);
  std::vector<char> in_active(static_cast<std::size_t>(d));
  std::vector<Eigen::Index> active;
  active.reserve(static_cast<std::size_t>(d));

  double kkt = std::numeric_limits<double>::infinity();
  for (int outer = 0; outer < max_iterations; ++outer) {
    problem.eta_derivatives(eta, d1, d2);
    grad.noalias() = problem.design.transpose() * d1.matrix();
    kkt = kkt_from_gradient(grad, penalty, lambda, beta);
    if (kkt <= tolerance) {
      model.coefficients = beta;
      model.objective_value = obj;
      model.kkt_residual = kkt;
      model.n_iterations = outer;
      return model;
    }

    const double curv_floor = std::max(1e-12, 1e-9 * d2.maxCoeff());
    const Eigen::ArrayXd d2f = d2.max(curv_floor);

    // coordinate descent on the local quadratic model, over the Gram matrix
    // restricted to the active set so coordinate touches cost O(|active|)
    std::fill(in_active.begin(), in_active.end(), 0);
    active.clear();
    for (Eigen::Index j = 0; j < d; ++j) {
      const double reach = lambda * penalty(j);
      const bool violated = penalty(j) == 0.0
                                ? std::abs(grad(j)) > tolerance
                                : (beta(j) != 0.0 ||
                                   std::abs(grad(j)) > reach + 0.25 * tolerance);
      if (violated) {
        active.push_back(j);
        in_active[static_cast<std::size_t>(j)] = 1;
      }
    }

    Eigen::MatrixXd gram;          // |active| x |active|
    Eigen::VectorXd g0_act, s_act; // model gradient pieces over the active set
    Eigen::VectorXd delta_act;     // b_act - b0_act
    auto build_active = [&](std::size_t from) {
      const std::size_t m_act = active.size();
      gram.conservativeResize(static_cast<Eigen::Index>(m_act),
                              static_cast<Eigen::Index>(m_act));
      g0_act.conservativeResize(static_cast<Eigen::Index>(m_act));
      s_act.conservativeResize(static_cast<Eigen::Index>(m_act));
      delta_act.conservativeResize(static_cast<Eigen::Index>(m_act));
      for (std::size_t a = from; a < m_act; ++a) {
        const Eigen::Index j = active[a];
        const Eigen::ArrayXd wcol = d2f * problem.design.col(j).array();
        for (std::size_t b = 0; b < m_act; ++b) {
          const double v = (wcol * problem.design.col(active[b]).array()).sum();
          gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
          gram(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
        }
        g0_act(static_cast<Eigen::Index>(a)) = grad(j);
        delta_act(static_cast<Eigen::Index>(a)) = 0.0;
      }
      // s_act = gram * delta_act for the extended system
      s_act.noalias() = gram * delta_act;
    };
    build_active(0);
    bnew = beta;

    const double inner_tol = std::max(0.05 * tolerance, 1e-14);
    const int max_inner = 400;
    for (int add_round = 0; add_round < 50; ++add_round) {
      const Eigen::Index m_act = static_cast<Eigen::Index>(active.size());
      for (int sweep = 0; sweep < max_inner; ++sweep) {
        double max_step = 0.0;
        for (Eigen::Index a = 0; a < m_act; ++a) {
          const Eigen::Index j = active[static_cast<std::size_t>(a)];
          const double h = std::max(gram(a, a), curv_floor);
          const double gm = g0_act(a) + s_act(a);
          const double u = bnew(j);
          double unew;
          if (penalty(j) > 0.0)
            unew = soft_threshold(h * u - gm, lambda * penalty(j)) / h;
          else
            unew = u - gm / h;
          if (unew != u) {
            const double step = unew - u;
            s_act.noalias() += step * gram.col(a);
            delta_act(a) += step;
            bnew(j) = unew;
            max_step = std::max(max_step, std::abs(step) * std::sqrt(h));
          }
        }
        if (max_step < inner_tol) break;
      }
      // pull in coordinates the quadratic model now wants to move
      const Eigen::ArrayXd delta_eta =
          (problem.design * (bnew - beta)).array() * d2f;
      bool added = false;
      const std::size_t old_size = active.size();
      for (Eigen::Index j = 0; j < d; ++j) {
        if (in_active[static_cast<std::size_t>(j)]) continue;
        const double gm = grad(j) + problem.design.col(j).dot(delta_eta.matrix());
        const double reach = lambda * penalty(j);
        const double viol = penalty(j) == 0.0
                                ? std::abs(gm)
                                : std::max(0.0, std::abs(gm) - reach);
        if (viol > 0.25 * tolerance) {
          active.push_back(j);
          in_active[static_cast<std::size_t>(j)] = 1;
          added = true;
        }
      }
      if (!added) break;
      // rebuild incremental state for the enlarged active set
      for (std::size_t a = 0; a < old_size; ++a)
        delta_act(static_cast<Eigen::Index>(a)) = bnew(active[a]) - beta(active[a]);
      build_active(old_size);
    }

    // line search on the exact penalized objective
    const Eigen::VectorXd step = bnew - beta;
    if (step.isZero(0.0)) break;
    const Eigen::ArrayXd eta_step = (problem.design * step).array();
    double t = 1.0;
    bool accepted = false;
    while (t >= 1e-12) {
      const Eigen::VectorXd cand = beta + t * step;
      const Eigen::ArrayXd eta_cand = eta + t * eta_step;
      const double val = problem.value_from_eta(eta_cand) +
                         lambda * (penalty * cand.array().abs()).sum();
      if (std::isfinite(val) && val <= obj + 1e-14 * (1.0 + std::abs(obj))) {
        beta = cand;
        eta = eta_cand;
        obj = std::min(val, obj);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    model.objective_history.push_back(obj);

    if (beta.array().abs().maxCoeff() > 250.0)
      throw FitError("solve_l1: coefficients diverging (separation or unbounded direction)",
                     kkt, outer);
  }

  kkt = kkt_residual(problem, penalty, lambda, beta);
  if (kkt <= tolerance) {
    model.coefficients = beta;
    model.objective_value = obj;
    model.kkt_residual = kkt;
    model.n_iterations = max_iterations;
    return model;
  }
  throw FitError("solve_l1: KKT residual " + std::to_string(kkt) +
                     " above tolerance after max iterations",
                 kkt, max_iterations);
}

Eigen::ArrayXd resolve_weights(const FitSpec& spec, Eigen::Index rows) {
  if (spec.sample_weights.size() == 0) return Eigen::ArrayXd::Ones(rows);
  if (spec.sample_weights.size() != rows)
    throw std::invalid_argument("sample_weights length mismatch");
  if ((spec.sample_weights < 0.0).any())
    throw std::invalid_argument("sample_weights must be nonnegative");
  return spec.sample_weights;
}

Eigen::ArrayXd resolve_penalty(const FitSpec& spec, Eigen::Index cols) {
  if (spec.penalty_weights.size() == 0) {
    Eigen::ArrayXd p = Eigen::ArrayXd::Ones(cols);
    p(0) = 0.0;  // intercept exempt by default
    return p;
  }
  if (spec.penalty_weights.size() != cols)
    throw std::invalid_argument("penalty_weights length mismatch");
  return spec.penalty_weights;
}

namespace {

double intercept_only_optimum(const GlmProblem& problem) {
  if (problem.loss == GlmLoss::logistic) {
    const double wsum = problem.weights.sum();
    const double ybar = (problem.weights * problem.response).sum() / wsum;
    const double eps = 1e-12;
    const double c = std::min(std::max(ybar, eps), 1.0 - eps);
    return std::log(c / (1.0 - c));
  }
  double s_treated = 0.0, s_control = 0.0;
  for (Eigen::Index i = 0; i < problem.n_rows(); ++i) {
    if (problem.response(i) == 1.0)
      s_treated += problem.weights(i);
    else
      s_control += problem.weights(i);
  }
  // optimum of the calibration loss restricted to the intercept; the same
  // expression holds for both arms
  return std::log(std::max(s_treated, 1e-300) / std::max(s_control, 1e-300));
}

}  // namespace

double lambda_max(const GlmProblem& problem, const Eigen::ArrayXd& penalty) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(problem.n_coef());
  beta(0) = intercept_only_optimum(problem);
  const Eigen::VectorXd grad = problem.gradient(beta);
  double lmax = 0.0;
  for (Eigen::Index j = 0; j < penalty.size(); ++j)
    if (penalty(j) > 0.0) lmax = std::max(lmax, std::abs(grad(j)) / penalty(j));
  return lmax;
}

std::vector<double> default_lambda_grid(const GlmProblem& problem,
                                        const Eigen::ArrayXd& penalty,
                                        int n_points, double min_ratio) {
  const double lmax = std::max(lambda_max(problem, penalty), 1e-10);
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(n_points));
  const double lmin = lmax * min_ratio;
  for (int i = 0; i < n_points; ++i) {
    const double f = n_points == 1
                         ? 0.0
                         : static_cast<double>(i) / static_cast<double>(n_points - 1);
    grid.push_back(lmax * std::pow(lmin / lmax, f));
  }
  return grid;
}

namespace {

void check_binary_response(const Eigen::ArrayXd& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (!(y(i) >= 0.0 && y(i) <= 1.0))
      throw std::invalid_argument("response must lie in [0,1]");
}

void check_separation(const Eigen::ArrayXd& y, const Eigen::ArrayXd& w) {
  const double wsum = w.sum();
  if (!(wsum > 0.0)) throw std::invalid_argument("weights sum to zero");
  const double ybar = (w * y).sum() / wsum;
  if (ybar < 1e-12 || ybar > 1.0 - 1e-12)
    throw FitError("separation: response is constant under the given weights");
}

}  // namespace

SparseLinearModel fit_lasso_logistic(const Eigen::MatrixXd& design,
                                     const Eigen::ArrayXd& response,
                                     const FitSpec& spec, double lambda) {
  if (design.rows() != response.size())
    throw std::invalid_argument("fit_lasso_logistic: row count mismatch");
  check_binary_response(response);
  const Eigen::ArrayXd w = resolve_weights(spec, design.rows());
  const Eigen::ArrayXd penalty = resolve_penalty(spec, design.cols());
  check_separation(response, w);

  GlmProblem problem;
  problem.design = design;
  problem.response = response;
  problem.weights = w;
  problem.normalizer = w.sum();
  problem.loss = GlmLoss::logistic;
  return solve_l1(problem, penalty, lambda, spec.tolerance, spec.max_iterations);
}

SparseLinearModel fit_calibrated_ps(const Eigen::MatrixXd& design,
                                    const Eigen::ArrayXd& treatment, int arm,
                                    const SparseLinearModel& or_init,
                                    const FitSpec& spec, double lambda, double M,
                                    Eigen::Index normalizer) {
  if (design.rows() != treatment.size())
    throw std::invalid_argument("fit_calibrated_ps: row count mismatch");
  if (arm != 0 && arm != 1) throw std::invalid_argument("arm must be 0 or 1");
  if (or_init.coefficients.size() != design.cols())
    throw std::invalid_argument("fit_calibrated_ps: or_init dimension mismatch");
  if (normalizer <= 0) throw std::invalid_argument("normalizer must be positive");
  check_binary_response(treatment);

  const double a = static_cast<double>(arm);
  Eigen::Index n_arm = 0;
  for (Eigen::Index i = 0; i < treatment.size(); ++i)
    if (treatment(i) == a) ++n_arm;
  if (n_arm == 0)
    throw FitError("fit_calibrated_ps: no rows with A=arm (empty arm)");
  if (n_arm == treatment.size())
    throw FitError("fit_calibrated_ps: all rows in arm, objective has an unbounded direction");

  const Eigen::ArrayXd eta_init = (design * or_init.coefficients).array();
  Eigen::ArrayXd w = resolve_weights(spec, design.rows());
  for (Eigen::Index i = 0; i < w.size(); ++i)
    w(i) *= sigmoid_deriv(truncate_tau(eta_init(i), M));

  GlmProblem problem;
  problem.design = design;
  problem.response = treatment;
  problem.weights = w;
  problem.normalizer = static_cast<double>(normalizer);
  problem.loss = GlmLoss::calibration;
  problem.arm = arm;
  return solve_l1(problem, resolve_penalty(spec, design.cols()), lambda,
                  spec.tolerance, spec.max_iterations);
}

SparseLinearModel fit_calibrated_or(const Eigen::MatrixXd& design,
                                    const Eigen::ArrayXd& outcome, int arm,
                                    const SparseLinearModel& ps_init,
                                    const FitSpec& spec, double lambda, double M) {
  if (design.rows() == 0)
    throw FitError("fit_calibrated_or: no qualifying rows (empty arm)");
  if (design.rows() != outcome.size())
    throw std::invalid_argument("fit_calibrated_or: row count mismatch");
  if (arm != 0 && arm != 1) throw std::invalid_argument("arm must be 0 or 1");
  if (ps_init.coefficients.size() != design.cols())
    throw std::invalid_argument("fit_calibrated_or: ps_init dimension mismatch");
  check_binary_response(outcome);

  const double s = cal_sign(arm);  // (-1)^arm
  const Eigen::ArrayXd u = s * (design * ps_init.coefficients).array();
  Eigen::ArrayXd w = resolve_weights(spec, design.rows());
  for (Eigen::Index i = 0; i < w.size(); ++i)
    w(i) *= std::exp(truncate_tau(u(i), M));
  check_separation(outcome, w);

  GlmProblem problem;
  problem.design = design;
  problem.response = outcome;
  problem.weights = w;
  problem.normalizer = static_cast<double>(design.rows());
  problem.loss = GlmLoss::logistic;
  return solve_l1(problem, resolve_penalty(spec, design.cols()), lambda,
                  spec.tolerance, spec.max_iterations);
}

namespace {

struct CvScore {
  double loss_sum = 0.0;
  double weight_sum = 0.0;
  int folds_ok = 0;
};

GlmProblem subset_problem(const GlmProblem& full, const std::vector<Eigen::Index>& rows) {
  GlmProblem sub;
  sub.design.resize(static_cast<Eigen::Index>(rows.size()), full.design.cols());
  sub.response.resize(static_cast<Eigen::Index>(rows.size()));
  sub.weights.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    sub.design.row(static_cast<Eigen::Index>(r)) = full.design.row(rows[r]);
    sub.response(static_cast<Eigen::Index>(r)) = full.response(rows[r]);
    sub.weights(static_cast<Eigen::Index>(r)) = full.weights(rows[r]);
  }
  sub.loss = full.loss;
  sub.arm = full.arm;
  sub.normalizer = full.loss == GlmLoss::logistic
                       ? sub.weights.sum()
                       : full.normalizer * static_cast<double>(rows.size()) /
                             static_cast<double>(full.n_rows());
  return sub;
}

/// Held-out score: weighted mean of the problem's rowwise loss.
double heldout_loss(const GlmProblem& full, const std::vector<Eigen::Index>& rows,
                    const Eigen::VectorXd& beta, double* weight_sum) {
  const double a = static_cast<double>(full.arm);
  const double s = cal_sign(full.arm);
  double acc = 0.0, wsum = 0.0;
  for (const Eigen::Index i : rows) {
    const double eta = full.design.row(i) * beta;
    double li;
    if (full.loss == GlmLoss::logistic) {
      li = entropy_loss(full.response(i), eta);
    } else {
      li = (a - full.response(i)) * eta +
           (full.response(i) == a ? safe_exp(s * eta) : 0.0);
    }
    acc += full.weights(i) * li;
    wsum += full.weights(i);
  }
  *weight_sum = wsum;
  return acc;
}

}  // namespace

double select_lambda_cv_problem(const GlmProblem& problem, const Eigen::ArrayXd& penalty,
                                const std::vector<double>& grid, int folds,
                                double tolerance, int max_iterations,
                                std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("select_lambda_cv: need folds >= 2");
  if (grid.empty()) throw std::invalid_argument("select_lambda_cv: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] < grid[i - 1]))
      throw std::invalid_argument("select_lambda_cv: grid must be strictly decreasing");

  const FoldPlan plan = assign_folds(problem.n_rows(), folds, seed);
  std::vector<CvScore> scores(grid.size());

  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, held;
    for (Eigen::Index i = 0; i < problem.n_rows(); ++i)
      (plan.assignment(i) == f ? held : train).push_back(i);
    GlmProblem sub = subset_problem(problem, train);
    if (sub.loss == GlmLoss::logistic) {
      const double ybar = (sub.weights * sub.response).sum() /
                          std::max(sub.weights.sum(), 1e-300);
      if (ybar < 1e-12 || ybar > 1.0 - 1e-12) continue;  // degenerate fold
    }
    Eigen::VectorXd warm;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      try {
        const SparseLinearModel fit =
            solve_l1(sub, penalty, grid[gi], tolerance, max_iterations,
                     warm.size() ? &warm : nullptr);
        warm = fit.coefficients;
        double wsum = 0.0;
        const double loss = heldout_loss(problem, held, fit.coefficients, &wsum);
        scores[gi].loss_sum += loss;
        scores[gi].weight_sum += wsum;
        scores[gi].folds_ok += 1;
      } catch (const FitError&) {
        // candidate unusable on this fold
      }
    }
  }

  int best = -1;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    if (scores[gi].folds_ok == 0 || !(scores[gi].weight_sum > 0.0)) continue;
    const double score = scores[gi].loss_sum / scores[gi].weight_sum;
    if (score < best_score) {
      best_score = score;
      best = static_cast<int>(gi);
    }
  }
  if (best < 0)
    throw FitError("select_lambda_cv: grid exhausted without any successful fit");
  return grid[static_cast<std::size_t>(best)];
}

double select_lambda_cv(const Eigen::MatrixXd& design, const Eigen::ArrayXd& response,
                        const FitSpec& spec, int folds, CvObjective objective,
                        std::uint64_t seed) {
  (void)objective;  // single objective: out-of-fold entropy
  check_binary_response(response);
  GlmProblem problem;
  problem.design = design;
  problem.response = response;
  problem.weights = resolve_weights(spec, design.rows());
  problem.normalizer = problem.weights.sum();
  problem.loss = GlmLoss::logistic;
  const Eigen::ArrayXd penalty = resolve_penalty(spec, design.cols());
  const std::vector<double> grid =
      spec.lambda_grid.empty() ? default_lambda_grid(problem, penalty)
                               : spec.lambda_grid;
  return select_lambda_cv_problem(problem, penalty, grid, folds, spec.tolerance,
                                  spec.max_iterations, seed);
}

}  // namespace smmal
