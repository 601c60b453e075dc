#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "smmal/glm.hpp"
#include "smmal/rng.hpp"

using namespace smmal;
using Eigen::ArrayXd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

using Objective = std::function<double(const VectorXd&)>;

/// Independent coarse-to-fine grid search over a small coefficient space.
/// Each round evaluates a pts^d grid and recenters on the argmin; the next
/// grid spans one step around it.
VectorXd refine_grid_search(const Objective& f, VectorXd center, double halfwidth,
                            int rounds, int pts) {
  const int d = static_cast<int>(center.size());
  for (int round = 0; round < rounds; ++round) {
    const double step = 2.0 * halfwidth / (pts - 1);
    VectorXd best = center;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    long total = 1;
    for (int j = 0; j < d; ++j) total *= pts;
    for (long t = 0; t < total; ++t) {
      long rem = t;
      VectorXd point(d);
      for (int j = 0; j < d; ++j) {
        const int ij = static_cast<int>(rem % pts);
        rem /= pts;
        point(j) = center(j) + (ij - (pts - 1) / 2.0) * step;
      }
      const double val = f(point);
      if (val < best_val) {
        best_val = val;
        best = point;
      }
    }
    center = best;
    halfwidth = step;
  }
  return center;
}

/// Independent IRLS solve for an unpenalized 2-coefficient weighted logistic
/// regression (closed-form 2x2 inverse).
Eigen::Vector2d newton_logistic_oracle(const MatrixXd& design, const ArrayXd& y,
                                       const ArrayXd& w) {
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  const double wsum = w.sum();
  for (int iter = 0; iter < 200; ++iter) {
    const ArrayXd eta = (design * b).array();
    ArrayXd p(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) p(i) = sigmoid(eta(i));
    const Eigen::Vector2d grad = design.transpose() * ((w * (p - y)) / wsum).matrix();
    if (grad.array().abs().maxCoeff() < 1e-13) break;
    const ArrayXd d2 = w * p * (1.0 - p) / wsum;
    const double h00 = (d2 * design.col(0).array().square()).sum();
    const double h01 = (d2 * design.col(0).array() * design.col(1).array()).sum();
    const double h11 = (d2 * design.col(1).array().square()).sum();
    const double det = h00 * h11 - h01 * h01;
    b(0) -= (h11 * grad(0) - h01 * grad(1)) / det;
    b(1) -= (-h01 * grad(0) + h00 * grad(1)) / det;
  }
  return b;
}

MatrixXd toy_design(Eigen::Index n, int extra_cols, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd design(n, extra_cols + 1);
  design.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 1; j <= extra_cols; ++j) design(i, j) = rng.normal();
  return design;
}

ArrayXd bernoulli_from_logit(const ArrayXd& eta, std::uint64_t seed) {
  Rng rng(seed);
  ArrayXd y(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    y(i) = rng.uniform() < sigmoid(eta(i)) ? 1.0 : 0.0;
  return y;
}

GlmProblem logistic_problem_of(const MatrixXd& design, const ArrayXd& y) {
  GlmProblem problem;
  problem.design = design;
  problem.response = y;
  problem.weights = ArrayXd::Ones(design.rows());
  problem.normalizer = static_cast<double>(design.rows());
  problem.loss = GlmLoss::logistic;
  return problem;
}

ArrayXd default_penalty(Eigen::Index cols) {
  ArrayXd p = ArrayXd::Ones(cols);
  p(0) = 0.0;
  return p;
}

}  // namespace

TEST_SUITE("glm") {
  TEST_CASE("sigmoid basics") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(50.0) == doctest::Approx(1.0).epsilon(1e-15));
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
      const double x = (rng.uniform() - 0.5) * 60.0;
      CHECK(sigmoid(x) + sigmoid(-x) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(sigmoid(x) > 0.0);
      CHECK(sigmoid(x) < 1.0);
    }
  }

  TEST_CASE("truncate_tau clamps at 2M and is odd and idempotent") {
    CHECK(truncate_tau(3.0, 1.0) == 2.0);
    CHECK(truncate_tau(-0.5, 1.0) == -0.5);
    CHECK(truncate_tau(-5.0, 1.0) == -2.0);
    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
      const double x = (rng.uniform() - 0.5) * 20.0;
      const double M = 0.5 + 2.0 * rng.uniform();
      const double t = truncate_tau(x, M);
      CHECK(std::abs(t) <= 2.0 * M);
      CHECK(truncate_tau(t, M) == t);
      CHECK(truncate_tau(-x, M) == -t);
    }
  }

  TEST_CASE("lasso at lambda >= lambda_max returns the null model exactly") {
    const MatrixXd design = toy_design(60, 3, 101);
    const ArrayXd y = bernoulli_from_logit((design.col(1) * 0.8).array(), 102);
    GlmProblem problem = logistic_problem_of(design, y);
    const double lmax = lambda_max(problem, default_penalty(design.cols()));

    FitSpec spec;
    const SparseLinearModel fit = fit_lasso_logistic(design, y, spec, lmax * 1.0001);
    for (Eigen::Index j = 1; j < design.cols(); ++j)
      CHECK(fit.coefficients(j) == 0.0);
    CHECK(fit.kkt_residual <= spec.tolerance);
  }

  TEST_CASE("lasso matches a dense grid-search oracle on a 2-predictor problem") {
    // 20 rows, fixed seed, lambda = 0.1
    const Eigen::Index n = 20;
    const MatrixXd design = toy_design(n, 2, 201);
    const ArrayXd y =
        bernoulli_from_logit((0.9 * design.col(1) - 1.2 * design.col(2)).array(), 202);
    const double lambda = 0.1;

    FitSpec spec;
    spec.tolerance = 1e-9;
    const SparseLinearModel fit = fit_lasso_logistic(design, y, spec, lambda);

    GlmProblem problem = logistic_problem_of(design, y);
    const ArrayXd penalty = default_penalty(3);
    const Objective objective = [&](const VectorXd& b) {
      return penalized_objective(problem, penalty, lambda, b);
    };
    const VectorXd oracle = refine_grid_search(objective, VectorXd::Zero(3), 6.0, 10, 9);

    for (int j = 0; j < 3; ++j)
      CHECK(fit.coefficients(j) == doctest::Approx(oracle(j)).epsilon(1e-3));
  }

  TEST_CASE("unpenalized fit matches the closed-form Newton oracle") {
    const Eigen::Index n = 80;
    const MatrixXd design = toy_design(n, 1, 301);
    const ArrayXd y = bernoulli_from_logit((0.7 * design.col(1)).array(), 302);

    FitSpec spec;
    spec.tolerance = 1e-10;
    const SparseLinearModel fit = fit_lasso_logistic(design, y, spec, 0.0);
    const Eigen::Vector2d oracle =
        newton_logistic_oracle(design, y, ArrayXd::Ones(n));
    CHECK(fit.coefficients(0) == doctest::Approx(oracle(0)).epsilon(1e-6));
    CHECK(fit.coefficients(1) == doctest::Approx(oracle(1)).epsilon(1e-6));
  }

  TEST_CASE("separation raises a diagnostic error") {
    const MatrixXd design = toy_design(30, 1, 401);
    FitSpec spec;
    CHECK_THROWS_AS(fit_lasso_logistic(design, ArrayXd::Ones(30), spec, 0.0), FitError);
    CHECK_THROWS_AS(fit_lasso_logistic(design, ArrayXd::Zero(30), spec, 0.1), FitError);
  }

  TEST_CASE("objective history is nonincreasing") {
    const MatrixXd design = toy_design(100, 4, 501);
    const ArrayXd y = bernoulli_from_logit(
        (design.col(1) - 0.5 * design.col(3)).array(), 502);
    FitSpec spec;
    const SparseLinearModel fit = fit_lasso_logistic(design, y, spec, 0.02);
    for (std::size_t t = 1; t < fit.objective_history.size(); ++t)
      CHECK(fit.objective_history[t] <= fit.objective_history[t - 1] + 1e-12);
  }

  TEST_CASE("calibrated PS detects a single-arm objective as unbounded") {
    const MatrixXd design = toy_design(25, 1, 601);
    SparseLinearModel or_init;
    or_init.coefficients = VectorXd::Zero(2);
    FitSpec spec;
    CHECK_THROWS_AS(fit_calibrated_ps(design, ArrayXd::Ones(25), 1, or_init, spec,
                                      5.0, 1.0, 25),
                    FitError);
    CHECK_THROWS_AS(fit_calibrated_ps(design, ArrayXd::Zero(25), 1, or_init, spec,
                                      5.0, 1.0, 25),
                    FitError);
  }

  TEST_CASE("calibrated PS matches a grid-search oracle with uniform weights") {
    // beta_init = 0 makes every weight gdot_tau(0) = 0.25
    const Eigen::Index n = 40;
    const MatrixXd design = toy_design(n, 1, 701);
    ArrayXd a(n);
    for (Eigen::Index i = 0; i < n; ++i) a(i) = i % 2 == 0 ? 1.0 : 0.0;
    SparseLinearModel or_init;
    or_init.coefficients = VectorXd::Zero(2);
    const double lambda = 0.05, M = 1.0;

    FitSpec spec;
    spec.tolerance = 1e-9;
    const SparseLinearModel fit =
        fit_calibrated_ps(design, a, 1, or_init, spec, lambda, M, n);

    GlmProblem problem;
    problem.design = design;
    problem.response = a;
    problem.weights = ArrayXd::Constant(n, sigmoid_deriv(0.0));
    problem.normalizer = static_cast<double>(n);
    problem.loss = GlmLoss::calibration;
    problem.arm = 1;
    const ArrayXd penalty = default_penalty(2);
    const Objective objective = [&](const VectorXd& b) {
      return penalized_objective(problem, penalty, lambda, b);
    };
    const VectorXd oracle = refine_grid_search(objective, VectorXd::Zero(2), 6.0, 10, 9);
    CHECK(fit.coefficients(0) == doctest::Approx(oracle(0)).epsilon(1e-3));
    CHECK(fit.coefficients(1) == doctest::Approx(oracle(1)).epsilon(1e-3));
  }

  TEST_CASE("analytic gradients match central finite differences") {
    const Eigen::Index n = 50;
    const MatrixXd design = toy_design(n, 2, 801);
    const ArrayXd a = bernoulli_from_logit((0.6 * design.col(1)).array(), 802);
    Rng rng(803);

    std::vector<GlmProblem> problems;
    {
      GlmProblem logistic = logistic_problem_of(design, a);
      problems.push_back(logistic);
      GlmProblem weighted = logistic;
      for (Eigen::Index i = 0; i < n; ++i) weighted.weights(i) = 0.2 + rng.uniform();
      weighted.normalizer = weighted.weights.sum();
      problems.push_back(weighted);  // the calibrated-OR objective is this family
      for (int arm = 0; arm < 2; ++arm) {
        GlmProblem cal = logistic_problem_of(design, a);
        cal.loss = GlmLoss::calibration;
        cal.arm = arm;
        for (Eigen::Index i = 0; i < n; ++i) cal.weights(i) = 0.05 + 0.2 * rng.uniform();
        problems.push_back(cal);
      }
    }

    for (const GlmProblem& problem : problems) {
      for (int rep = 0; rep < 5; ++rep) {
        VectorXd beta(design.cols());
        for (Eigen::Index j = 0; j < design.cols(); ++j)
          beta(j) = (rng.uniform() - 0.5) * 2.0;
        const VectorXd grad = problem.gradient(beta);
        const double h = 1e-5;
        for (Eigen::Index j = 0; j < design.cols(); ++j) {
          VectorXd up = beta, dn = beta;
          up(j) += h;
          dn(j) -= h;
          const double fd = (problem.value(up) - problem.value(dn)) / (2.0 * h);
          CHECK(grad(j) == doctest::Approx(fd).epsilon(1e-6));
        }
      }
    }
  }

  TEST_CASE("calibrated objectives are convex along random chords") {
    const Eigen::Index n = 30;
    const MatrixXd design = toy_design(n, 2, 901);
    ArrayXd a(n);
    for (Eigen::Index i = 0; i < n; ++i) a(i) = i % 3 == 0 ? 0.0 : 1.0;
    Rng rng(902);
    for (int arm = 0; arm < 2; ++arm) {
      GlmProblem problem = logistic_problem_of(design, a);
      problem.loss = GlmLoss::calibration;
      problem.arm = arm;
      for (Eigen::Index i = 0; i < n; ++i) problem.weights(i) = 0.1 + 0.15 * rng.uniform();
      const ArrayXd penalty = default_penalty(design.cols());
      for (int rep = 0; rep < 50; ++rep) {
        VectorXd b1(design.cols()), b2(design.cols());
        for (Eigen::Index j = 0; j < design.cols(); ++j) {
          b1(j) = (rng.uniform() - 0.5) * 4.0;
          b2(j) = (rng.uniform() - 0.5) * 4.0;
        }
        const double t = rng.uniform();
        const double lhs =
            penalized_objective(problem, penalty, 0.07, t * b1 + (1.0 - t) * b2);
        const double rhs = t * penalized_objective(problem, penalty, 0.07, b1) +
                           (1.0 - t) * penalized_objective(problem, penalty, 0.07, b2);
        CHECK(lhs <= rhs + 1e-10);
      }
    }
  }

  TEST_CASE("calibrated OR with zero ps_init equals the plain lasso fit") {
    const Eigen::Index n = 45;
    const MatrixXd design = toy_design(n, 2, 1001);
    const ArrayXd y = bernoulli_from_logit((0.8 * design.col(2)).array(), 1002);
    SparseLinearModel ps_init;
    ps_init.coefficients = VectorXd::Zero(3);
    FitSpec spec;
    spec.tolerance = 1e-10;
    const SparseLinearModel calibrated =
        fit_calibrated_or(design, y, 1, ps_init, spec, 0.03, 1.0);
    const SparseLinearModel plain = fit_lasso_logistic(design, y, spec, 0.03);
    for (Eigen::Index j = 0; j < 3; ++j)
      CHECK(calibrated.coefficients(j) ==
            doctest::Approx(plain.coefficients(j)).epsilon(1e-8));
  }

  TEST_CASE("calibrated OR weights apply tau before exponentiation") {
    // one row with x' alpha = 3M gets weight e^2 exactly at M=1, arm=0
    const Eigen::Index n = 24;
    MatrixXd design = toy_design(n, 1, 1101);
    design(0, 1) = 3.0;
    const ArrayXd y = bernoulli_from_logit((0.5 * design.col(1)).array(), 1102);
    SparseLinearModel ps_init;
    ps_init.coefficients = VectorXd::Zero(2);
    ps_init.coefficients(1) = 1.0;  // x' alpha = x

    FitSpec plain_spec;
    plain_spec.tolerance = 1e-10;
    const SparseLinearModel calibrated =
        fit_calibrated_or(design, y, 0, ps_init, plain_spec, 0.02, 1.0);

    ArrayXd manual_weights(n);
    for (Eigen::Index i = 0; i < n; ++i)
      manual_weights(i) = std::exp(truncate_tau(design(i, 1), 1.0));
    CHECK(manual_weights(0) == std::exp(2.0));

    GlmProblem manual;
    manual.design = design;
    manual.response = y;
    manual.weights = manual_weights;
    manual.normalizer = static_cast<double>(n);
    manual.loss = GlmLoss::logistic;
    const SparseLinearModel direct =
        solve_l1(manual, default_penalty(2), 0.02, 1e-10, 200);
    for (Eigen::Index j = 0; j < 2; ++j)
      CHECK(calibrated.coefficients(j) ==
            doctest::Approx(direct.coefficients(j)).epsilon(1e-10));
  }

  TEST_CASE("weighted unpenalized calibrated OR matches the weighted Newton oracle") {
    const Eigen::Index n = 70;
    const MatrixXd design = toy_design(n, 1, 1201);
    const ArrayXd y =
        bernoulli_from_logit(0.6 * design.col(1).array() - 0.2, 1202);
    SparseLinearModel ps_init;
    ps_init.coefficients = VectorXd::Zero(2);
    ps_init.coefficients(1) = 0.4;

    FitSpec spec;
    spec.tolerance = 1e-11;
    const SparseLinearModel fit = fit_calibrated_or(design, y, 1, ps_init, spec, 0.0, 1.0);

    ArrayXd w(n);
    for (Eigen::Index i = 0; i < n; ++i)
      w(i) = std::exp(truncate_tau(-design(i, 1) * 0.4, 1.0));
    const Eigen::Vector2d oracle = newton_logistic_oracle(design, y, w);
    CHECK(fit.coefficients(0) == doctest::Approx(oracle(0)).epsilon(1e-6));
    CHECK(fit.coefficients(1) == doctest::Approx(oracle(1)).epsilon(1e-6));
  }

  TEST_CASE("row permutation leaves coefficients unchanged") {
    const Eigen::Index n = 90;
    const MatrixXd design = toy_design(n, 3, 1301);
    const ArrayXd y =
        bernoulli_from_logit((0.5 * design.col(1) + 0.3 * design.col(2)).array(), 1302);
    FitSpec spec;
    spec.tolerance = 1e-10;
    const SparseLinearModel fit = fit_lasso_logistic(design, y, spec, 0.05);

    Rng rng(1303);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    for (Eigen::Index i = n - 1; i > 0; --i)
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i + 1)))]);
    MatrixXd design_p(n, design.cols());
    ArrayXd y_p(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      design_p.row(i) = design.row(perm[static_cast<std::size_t>(i)]);
      y_p(i) = y(perm[static_cast<std::size_t>(i)]);
    }
    const SparseLinearModel fit_p = fit_lasso_logistic(design_p, y_p, spec, 0.05);
    for (Eigen::Index j = 0; j < design.cols(); ++j)
      CHECK(fit.coefficients(j) == doctest::Approx(fit_p.coefficients(j)).epsilon(1e-8));
  }

  TEST_CASE("lambda selection by out-of-fold entropy") {
    SUBCASE("pure noise selects the null model") {
      const Eigen::Index n = 200;
      const MatrixXd design = toy_design(n, 6, 1401);
      Rng rng(1402);
      ArrayXd y(n);
      for (Eigen::Index i = 0; i < n; ++i) y(i) = rng.uniform() < 0.5 ? 1.0 : 0.0;
      GlmProblem problem = logistic_problem_of(design, y);
      const double lmax = lambda_max(problem, default_penalty(design.cols()));
      FitSpec spec;
      spec.lambda_grid = {lmax, lmax / 2.0};
      const double chosen = select_lambda_cv(design, y, spec, 5, CvObjective::entropy, 99);
      CHECK(chosen == lmax);
    }
    SUBCASE("single-element grid returns that element") {
      const MatrixXd design = toy_design(50, 2, 1501);
      const ArrayXd y = bernoulli_from_logit((design.col(1)).array(), 1502);
      FitSpec spec;
      spec.lambda_grid = {0.123};
      CHECK(select_lambda_cv(design, y, spec, 5, CvObjective::entropy, 7) == 0.123);
    }
    SUBCASE("informative data selects the small lambda") {
      const Eigen::Index n = 300;
      const MatrixXd design = toy_design(n, 1, 1601);
      const ArrayXd y = bernoulli_from_logit((3.0 * design.col(1)).array(), 1602);
      FitSpec spec;
      spec.lambda_grid = {1e3, 1e-3};
      CHECK(select_lambda_cv(design, y, spec, 5, CvObjective::entropy, 7) == 1e-3);
    }
  }

  TEST_CASE("kkt residual certificates hold across a small fuzz sweep") {
    Rng rng(1701);
    int checked = 0;
    for (int rep = 0; rep < 60; ++rep) {
      const Eigen::Index n = 30 + static_cast<Eigen::Index>(rng.below(50));
      const int extra = 2 + static_cast<int>(rng.below(6));
      const MatrixXd design = toy_design(n, extra, 1800 + static_cast<std::uint64_t>(rep));
      const ArrayXd y = bernoulli_from_logit(
          (0.8 * design.col(1) - 0.4 * design.col(2)).array(),
          1900 + static_cast<std::uint64_t>(rep));
      GlmProblem problem = logistic_problem_of(design, y);
      const ArrayXd penalty = default_penalty(design.cols());
      const double lmax = lambda_max(problem, penalty);
      const double lambda = lmax * (0.02 + 0.9 * rng.uniform());
      FitSpec spec;
      spec.tolerance = 1e-8;
      const SparseLinearModel fit = fit_lasso_logistic(design, y, spec, lambda);
      CHECK(kkt_residual(problem, penalty, lambda, fit.coefficients) <= 1e-6);
      ++checked;
    }
    CHECK(checked == 60);
  }
}
