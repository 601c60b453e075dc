#include "smmal/crossfit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "smmal/glm.hpp"
#include "smmal/rng.hpp"
#include "smmal/splines.hpp"

namespace smmal {

namespace {

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = m.row(idx[r]);
  return out;
}

Eigen::ArrayXd gather(const Eigen::ArrayXd& v, const std::vector<Eigen::Index>& idx) {
  Eigen::ArrayXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r)
    out(static_cast<Eigen::Index>(r)) = v(idx[r]);
  return out;
}

void require_clean_masking(const SemiSupervisedDataset& data) {
  for (Eigen::Index i = 0; i < data.n_rows(); ++i) {
    const bool labeled = data.label_flag(i) == 1;
    if (data.treatment.present(i) != labeled || data.outcome.present(i) != labeled)
      throw std::invalid_argument("crossfit: A/Y presence must match label flag");
  }
  if (data.confounders.cols() < 1 || (data.confounders.col(0).array() != 1.0).any())
    throw std::invalid_argument("crossfit: first confounder column must be 1");
}

int auto_max_degree(Eigen::Index rows, int order, int configured) {
  if (configured > 0) return std::max(configured, order + 1);
  const int d = static_cast<int>(std::floor(std::sqrt(static_cast<double>(rows)))) - 1;
  return std::max(d, order + 1);
}

}  // namespace

NuisancePredictions crossfit_lowdim(const SemiSupervisedDataset& data,
                                    const FoldPlan& plan,
                                    const LowdimLearnerConfig& config,
                                    std::uint64_t seed) {
  require_clean_masking(data);
  const Eigen::Index n = data.n_rows();
  if (plan.assignment.size() != n)
    throw std::invalid_argument("crossfit_lowdim: fold plan size mismatch");
  const Eigen::Index p_raw = data.confounders.cols() - 1;
  if (p_raw < 1)
    throw std::invalid_argument("crossfit_lowdim: need at least one non-constant confounder");

  Eigen::MatrixXd x_raw = data.confounders.rightCols(p_raw);
  Eigen::MatrixXd w_raw(n, p_raw + data.surrogates.cols());
  w_raw << x_raw, data.surrogates;

  NuisancePredictions preds;
  preds.ps.resize(n, 2);
  preds.outcome_reg.resize(n, 2);
  preds.imputed_ps.resize(n, 2);
  preds.imputed_outcome.resize(n, 2);

  const double clamp_lo = 1.0 / config.ps_clamp_M;
  const std::pair<double, double> ps_clamp{clamp_lo, 1.0 - clamp_lo};
  const std::pair<double, double> unit_clamp{0.0, 1.0};

  for (int k = 0; k < plan.n_folds; ++k) {
    std::vector<Eigen::Index> train_lab, fold_rows, arm1, arm0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (plan.assignment(i) == k) {
        fold_rows.push_back(i);
        continue;
      }
      if (data.label_flag(i) != 1) continue;
      train_lab.push_back(i);
      (data.treatment.value(i) == 1.0 ? arm1 : arm0).push_back(i);
    }
    if (arm1.empty() || arm0.empty())
      throw ReplicationAbort("crossfit_lowdim: fold " + std::to_string(k) +
                             " training split lacks a treatment arm");
    if (fold_rows.empty()) continue;

    auto fit_model = [&](const Eigen::MatrixXd& full_inputs,
                         const std::vector<Eigen::Index>& rows, bool from_outcome,
                         int configured_degree, int model_id) {
      Eigen::MatrixXd in = rows_of(full_inputs, rows);
      Eigen::ArrayXd y(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r)
        y(static_cast<Eigen::Index>(r)) = from_outcome
                                              ? data.outcome.value(rows[r])
                                              : data.treatment.value(rows[r]);
      const Eigen::Index rows_n = in.rows();
      if (rows_n < 4)
        throw ReplicationAbort("crossfit_lowdim: fewer than 4 training rows at fold " +
                               std::to_string(k));
      int folds = static_cast<int>(std::min<Eigen::Index>(config.cv_folds, rows_n / 2));
      folds = std::max(folds, 2);
      const int max_deg = auto_max_degree(rows_n, config.order, configured_degree);
      return fit_spline_nuisance(in, y, Eigen::ArrayXd(), max_deg, folds,
                                 config.order, config.ps_clamp_M,
                                 derive_seed(seed, static_cast<std::uint64_t>(k),
                                             static_cast<std::uint64_t>(model_id)));
    };

    const SplineModel ps_model = fit_model(x_raw, train_lab, false, config.max_degree_x, 0);
    const SplineModel or1_model = fit_model(x_raw, arm1, true, config.max_degree_x, 1);
    const SplineModel or0_model = fit_model(x_raw, arm0, true, config.max_degree_x, 2);
    const SplineModel imp_ps_model = fit_model(w_raw, train_lab, false, config.max_degree_w, 3);
    const SplineModel imp_or1_model = fit_model(w_raw, arm1, true, config.max_degree_w, 4);
    const SplineModel imp_or0_model = fit_model(w_raw, arm0, true, config.max_degree_w, 5);

    const Eigen::MatrixXd x_fold = rows_of(x_raw, fold_rows);
    const Eigen::MatrixXd w_fold = rows_of(w_raw, fold_rows);
    const Eigen::ArrayXd ps1 = predict_spline(ps_model, x_fold, ps_clamp);
    const Eigen::ArrayXd or1 = predict_spline(or1_model, x_fold, unit_clamp);
    const Eigen::ArrayXd or0 = predict_spline(or0_model, x_fold, unit_clamp);
    const Eigen::ArrayXd ip1 = predict_spline(imp_ps_model, w_fold, unit_clamp);
    const Eigen::ArrayXd io1 = predict_spline(imp_or1_model, w_fold, unit_clamp);
    const Eigen::ArrayXd io0 = predict_spline(imp_or0_model, w_fold, unit_clamp);

    for (std::size_t r = 0; r < fold_rows.size(); ++r) {
      const Eigen::Index i = fold_rows[r];
      const Eigen::Index ri = static_cast<Eigen::Index>(r);
      preds.ps(i, 1) = ps1(ri);
      preds.ps(i, 0) = 1.0 - ps1(ri);
      preds.outcome_reg(i, 1) = or1(ri);
      preds.outcome_reg(i, 0) = or0(ri);
      preds.imputed_ps(i, 1) = ip1(ri);
      preds.imputed_ps(i, 0) = 1.0 - ip1(ri);
      preds.imputed_outcome(i, 1) = io1(ri);
      preds.imputed_outcome(i, 0) = io0(ri);
    }
  }
  return preds;
}

namespace {

/// Shared state for the two-level calibrated pipeline.
struct DrContext {
  const SemiSupervisedDataset& data;
  const FoldPlan& plan;
  const DrLearnerConfig& cfg;
  double M;
  std::uint64_t seed;

  std::vector<Eigen::Index> labeled;
  Eigen::MatrixXd x_lab;  // labeled rows of the intercept-augmented X
  Eigen::ArrayXd a_lab;
  Eigen::ArrayXd y_lab;
  Eigen::ArrayXi fold_lab;  // fold of each labeled row
  Eigen::ArrayXd penalty_x;
  int n_folds = 0;

  Eigen::Index n_lab() const { return static_cast<Eigen::Index>(labeled.size()); }
};

GlmProblem logistic_problem(const Eigen::MatrixXd& design, const Eigen::ArrayXd& y,
                            double normalizer = 0.0) {
  GlmProblem problem;
  problem.design = design;
  problem.response = y;
  problem.weights = Eigen::ArrayXd::Ones(design.rows());
  problem.normalizer = normalizer > 0.0 ? normalizer : static_cast<double>(design.rows());
  problem.loss = GlmLoss::logistic;
  return problem;
}

void check_trainable(const Eigen::ArrayXd& y, const std::string& where) {
  const double ybar = y.mean();
  if (y.size() == 0 || ybar < 1e-12 || ybar > 1.0 - 1e-12)
    throw ReplicationAbort("crossfit_dr: degenerate training split at " + where);
}

SparseLinearModel fit_fixed_lambda(const GlmProblem& problem,
                                   const Eigen::ArrayXd& penalty, double lambda,
                                   const DrLearnerConfig& cfg,
                                   const Eigen::VectorXd* warm) {
  return solve_l1(problem, penalty, lambda, cfg.tolerance, cfg.max_iterations, warm);
}

/// Lambda for one model family: default grid on the full-data problem,
/// selected by out-of-fold loss.
double pick_lambda(const GlmProblem& problem, const Eigen::ArrayXd& penalty,
                   const DrLearnerConfig& cfg, std::uint64_t seed) {
  if (cfg.lambda_override >= 0.0) return cfg.lambda_override;
  const std::vector<double> grid = default_lambda_grid(
      problem, penalty, cfg.lambda_grid_size, cfg.lambda_min_ratio);
  return select_lambda_cv_problem(problem, penalty, grid, cfg.cv_folds,
                                  cfg.tolerance, cfg.max_iterations, seed);
}

struct CalibratedFits {
  // indexed [fold][arm]
  std::vector<std::array<Eigen::VectorXd, 2>> alpha;
  std::vector<std::array<Eigen::VectorXd, 2>> beta;
};

/// Initial fits per fold pair plus calibrated fits per fold over X.
CalibratedFits run_calibrated_stage(const DrContext& ctx) {
  const int K = ctx.n_folds;
  const Eigen::Index m = ctx.n_lab();

  // full-data fits: warm starts and lambda anchors
  GlmProblem ps_full = logistic_problem(ctx.x_lab, ctx.a_lab);
  check_trainable(ctx.a_lab, "initial PS (full data)");
  const double lam_alpha_init =
      pick_lambda(ps_full, ctx.penalty_x, ctx.cfg, derive_seed(ctx.seed, 11));
  const SparseLinearModel alpha_init_full =
      fit_fixed_lambda(ps_full, ctx.penalty_x, lam_alpha_init, ctx.cfg, nullptr);

  std::array<std::vector<Eigen::Index>, 2> arm_rows;
  for (Eigen::Index r = 0; r < m; ++r)
    arm_rows[ctx.a_lab(r) == 1.0 ? 1 : 0].push_back(r);

  std::array<SparseLinearModel, 2> beta_init_full;
  std::array<double, 2> lam_beta_init{};
  for (int a = 0; a < 2; ++a) {
    if (arm_rows[a].empty())
      throw ReplicationAbort("crossfit_dr: arm " + std::to_string(a) +
                             " absent from labeled data");
    const Eigen::MatrixXd xa = rows_of(ctx.x_lab, arm_rows[a]);
    const Eigen::ArrayXd ya = gather(ctx.y_lab, arm_rows[a]);
    check_trainable(ya, "initial OR arm " + std::to_string(a) + " (full data)");
    GlmProblem prob = logistic_problem(xa, ya);
    lam_beta_init[a] =
        pick_lambda(prob, ctx.penalty_x, ctx.cfg, derive_seed(ctx.seed, 12, a));
    beta_init_full[a] =
        fit_fixed_lambda(prob, ctx.penalty_x, lam_beta_init[a], ctx.cfg, nullptr);
  }

  // lambdas for the calibrated stages, scored on the stage's own loss
  std::array<double, 2> lam_alpha_cal{}, lam_beta_cal{};
  std::array<SparseLinearModel, 2> alpha_cal_full, beta_cal_full;
  for (int a = 0; a < 2; ++a) {
    GlmProblem cal;
    cal.design = ctx.x_lab;
    cal.response = ctx.a_lab;
    cal.weights = Eigen::ArrayXd(m);
    const Eigen::ArrayXd eta_beta = (ctx.x_lab * beta_init_full[a].coefficients).array();
    for (Eigen::Index r = 0; r < m; ++r)
      cal.weights(r) = sigmoid_deriv(truncate_tau(eta_beta(r), ctx.M));
    cal.normalizer = static_cast<double>(m);
    cal.loss = GlmLoss::calibration;
    cal.arm = a;
    lam_alpha_cal[a] = pick_lambda(cal, ctx.penalty_x, ctx.cfg, derive_seed(ctx.seed, 13, a));
    alpha_cal_full[a] =
        fit_fixed_lambda(cal, ctx.penalty_x, lam_alpha_cal[a], ctx.cfg, nullptr);

    GlmProblem orw;
    orw.design = rows_of(ctx.x_lab, arm_rows[a]);
    orw.response = gather(ctx.y_lab, arm_rows[a]);
    orw.weights = Eigen::ArrayXd(static_cast<Eigen::Index>(arm_rows[a].size()));
    const double sign = a == 1 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < arm_rows[a].size(); ++r) {
      const double u = sign * (ctx.x_lab.row(arm_rows[a][r]) *
                               alpha_init_full.coefficients)(0);
      orw.weights(static_cast<Eigen::Index>(r)) = std::exp(truncate_tau(u, ctx.M));
    }
    orw.normalizer = static_cast<double>(arm_rows[a].size());
    orw.loss = GlmLoss::logistic;
    lam_beta_cal[a] = pick_lambda(orw, ctx.penalty_x, ctx.cfg, derive_seed(ctx.seed, 14, a));
    beta_cal_full[a] =
        fit_fixed_lambda(orw, ctx.penalty_x, lam_beta_cal[a], ctx.cfg, nullptr);
  }

  // initial fits per unordered fold pair
  const auto pair_id = [K](int k1, int k2) {
    if (k1 > k2) std::swap(k1, k2);
    return k1 * K + k2;
  };
  std::vector<Eigen::VectorXd> alpha_init_pair(static_cast<std::size_t>(K * K));
  std::vector<std::array<Eigen::VectorXd, 2>> beta_init_pair(static_cast<std::size_t>(K * K));
  for (int k1 = 0; k1 < K; ++k1) {
    for (int k2 = k1 + 1; k2 < K; ++k2) {
      std::vector<Eigen::Index> rows;
      for (Eigen::Index r = 0; r < m; ++r)
        if (ctx.fold_lab(r) != k1 && ctx.fold_lab(r) != k2) rows.push_back(r);
      const std::string where = "pair (" + std::to_string(k1) + "," + std::to_string(k2) + ")";
      if (rows.empty()) throw ReplicationAbort("crossfit_dr: empty training set at " + where);
      const Eigen::MatrixXd xp = rows_of(ctx.x_lab, rows);
      const Eigen::ArrayXd ap = gather(ctx.a_lab, rows);
      check_trainable(ap, where + " PS");
      GlmProblem prob = logistic_problem(xp, ap);
      alpha_init_pair[static_cast<std::size_t>(pair_id(k1, k2))] =
          fit_fixed_lambda(prob, ctx.penalty_x, lam_alpha_init, ctx.cfg,
                           &alpha_init_full.coefficients)
              .coefficients;
      for (int a = 0; a < 2; ++a) {
        std::vector<Eigen::Index> rows_a;
        for (const Eigen::Index r : rows)
          if (ctx.a_lab(r) == static_cast<double>(a)) rows_a.push_back(r);
        if (rows_a.empty())
          throw ReplicationAbort("crossfit_dr: arm " + std::to_string(a) +
                                 " empty at " + where);
        const Eigen::MatrixXd xa = rows_of(ctx.x_lab, rows_a);
        const Eigen::ArrayXd ya = gather(ctx.y_lab, rows_a);
        check_trainable(ya, where + " OR arm " + std::to_string(a));
        GlmProblem oprob = logistic_problem(xa, ya);
        beta_init_pair[static_cast<std::size_t>(pair_id(k1, k2))][a] =
            fit_fixed_lambda(oprob, ctx.penalty_x, lam_beta_init[a], ctx.cfg,
                             &beta_init_full[a].coefficients)
                .coefficients;
      }
    }
  }

  // calibrated fits per fold
  CalibratedFits fits;
  fits.alpha.resize(static_cast<std::size_t>(K));
  fits.beta.resize(static_cast<std::size_t>(K));
  for (int k1 = 0; k1 < K; ++k1) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index r = 0; r < m; ++r)
      if (ctx.fold_lab(r) != k1) rows.push_back(r);
    const std::string where = "fold " + std::to_string(k1);
    for (int a = 0; a < 2; ++a) {
      // calibrated PS: weights from the pair-fitted initial OR of the row's fold
      GlmProblem cal;
      cal.design = rows_of(ctx.x_lab, rows);
      cal.response = gather(ctx.a_lab, rows);
      cal.weights = Eigen::ArrayXd(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const int k2 = ctx.fold_lab(rows[r]);
        const Eigen::VectorXd& binit =
            beta_init_pair[static_cast<std::size_t>(pair_id(k1, k2))][a];
        const double u = ctx.x_lab.row(rows[r]).dot(binit);
        cal.weights(static_cast<Eigen::Index>(r)) =
            sigmoid_deriv(truncate_tau(u, ctx.M));
      }
      cal.normalizer = static_cast<double>(m);  // R_i / n with n all labeled
      cal.loss = GlmLoss::calibration;
      cal.arm = a;
      const double abar = cal.response.mean();
      if (abar < 1e-12 || abar > 1.0 - 1e-12)
        throw ReplicationAbort("crossfit_dr: single-arm calibration split at " + where);
      fits.alpha[static_cast<std::size_t>(k1)][a] =
          fit_fixed_lambda(cal, ctx.penalty_x, lam_alpha_cal[a], ctx.cfg,
                           &alpha_cal_full[a].coefficients)
              .coefficients;

      // calibrated OR: weighted Lasso on arm rows, weights from the
      // pair-fitted initial PS of the row's fold
      std::vector<Eigen::Index> rows_a;
      for (const Eigen::Index r : rows)
        if (ctx.a_lab(r) == static_cast<double>(a)) rows_a.push_back(r);
      if (rows_a.empty())
        throw ReplicationAbort("crossfit_dr: arm " + std::to_string(a) +
                               " empty at " + where);
      GlmProblem orw;
      orw.design = rows_of(ctx.x_lab, rows_a);
      orw.response = gather(ctx.y_lab, rows_a);
      orw.weights = Eigen::ArrayXd(static_cast<Eigen::Index>(rows_a.size()));
      const double sign = a == 1 ? -1.0 : 1.0;
      for (std::size_t r = 0; r < rows_a.size(); ++r) {
        const int k2 = ctx.fold_lab(rows_a[r]);
        const Eigen::VectorXd& ainit =
            alpha_init_pair[static_cast<std::size_t>(pair_id(k1, k2))];
        const double u = sign * ctx.x_lab.row(rows_a[r]).dot(ainit);
        orw.weights(static_cast<Eigen::Index>(r)) = std::exp(truncate_tau(u, ctx.M));
      }
      orw.normalizer = static_cast<double>(rows_a.size());
      orw.loss = GlmLoss::logistic;
      check_trainable(orw.response, where + " calibrated OR arm " + std::to_string(a));
      fits.beta[static_cast<std::size_t>(k1)][a] =
          fit_fixed_lambda(orw, ctx.penalty_x, lam_beta_cal[a], ctx.cfg,
                           &beta_cal_full[a].coefficients)
              .coefficients;
    }
  }
  return fits;
}

DrContext make_context(const SemiSupervisedDataset& data, const FoldPlan& plan,
                       const DrLearnerConfig& cfg, double M, std::uint64_t seed) {
  require_clean_masking(data);
  if (plan.assignment.size() != data.n_rows())
    throw std::invalid_argument("crossfit_dr: fold plan size mismatch");
  if (plan.n_folds < 3)
    throw std::invalid_argument("crossfit_dr: two-level cross-fitting needs K >= 3");

  DrContext ctx{data, plan, cfg, M, seed, {}, {}, {}, {}, {}, {}, plan.n_folds};
  ctx.labeled = data.labeled_indices();
  if (ctx.labeled.empty()) throw std::invalid_argument("crossfit_dr: no labeled rows");
  ctx.x_lab = rows_of(data.confounders, ctx.labeled);
  const Eigen::Index m = ctx.n_lab();
  ctx.a_lab.resize(m);
  ctx.y_lab.resize(m);
  ctx.fold_lab.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = ctx.labeled[static_cast<std::size_t>(r)];
    ctx.a_lab(r) = data.treatment.value(i);
    ctx.y_lab(r) = data.outcome.value(i);
    ctx.fold_lab(r) = plan.assignment(i);
  }
  ctx.penalty_x = Eigen::ArrayXd::Ones(ctx.x_lab.cols());
  ctx.penalty_x(0) = 0.0;
  return ctx;
}

}  // namespace

NuisancePredictions crossfit_dr(const SemiSupervisedDataset& data,
                                const FoldPlan& plan, const DrLearnerConfig& config,
                                double M, std::uint64_t seed) {
  DrContext ctx = make_context(data, plan, config, M, seed);
  const Eigen::Index n = data.n_rows();
  const Eigen::Index m = ctx.n_lab();
  const int K = plan.n_folds;

  Eigen::MatrixXd w_all(n, data.confounders.cols() + data.surrogates.cols());
  w_all << data.confounders, data.surrogates;
  const Eigen::MatrixXd w_lab = rows_of(w_all, ctx.labeled);
  Eigen::ArrayXd penalty_w = Eigen::ArrayXd::Ones(w_all.cols());
  penalty_w(0) = 0.0;

  // imputation fits: lambda once, then per fold
  check_trainable(ctx.a_lab, "imputation PS (full data)");
  GlmProblem eta_full_prob = logistic_problem(w_lab, ctx.a_lab);
  const double lam_eta =
      pick_lambda(eta_full_prob, penalty_w, config, derive_seed(seed, 21));
  const SparseLinearModel eta_full =
      fit_fixed_lambda(eta_full_prob, penalty_w, lam_eta, config, nullptr);

  std::array<std::vector<Eigen::Index>, 2> arm_rows;
  for (Eigen::Index r = 0; r < m; ++r)
    arm_rows[ctx.a_lab(r) == 1.0 ? 1 : 0].push_back(r);
  std::array<SparseLinearModel, 2> zeta_full;
  std::array<double, 2> lam_zeta{};
  for (int a = 0; a < 2; ++a) {
    if (arm_rows[a].empty())
      throw ReplicationAbort("crossfit_dr: arm " + std::to_string(a) +
                             " absent from labeled data");
    const Eigen::MatrixXd wa = rows_of(w_lab, arm_rows[a]);
    const Eigen::ArrayXd ya = gather(ctx.y_lab, arm_rows[a]);
    check_trainable(ya, "imputation OR arm " + std::to_string(a) + " (full data)");
    GlmProblem prob = logistic_problem(wa, ya);
    lam_zeta[a] = pick_lambda(prob, penalty_w, config, derive_seed(seed, 22, a));
    zeta_full[a] = fit_fixed_lambda(prob, penalty_w, lam_zeta[a], config, nullptr);
  }

  std::vector<Eigen::VectorXd> eta_fold(static_cast<std::size_t>(K));
  std::vector<std::array<Eigen::VectorXd, 2>> zeta_fold(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index r = 0; r < m; ++r)
      if (ctx.fold_lab(r) != k) rows.push_back(r);
    const std::string where = "fold " + std::to_string(k);
    if (rows.empty()) throw ReplicationAbort("crossfit_dr: no labeled training rows at " + where);
    const Eigen::MatrixXd wk = rows_of(w_lab, rows);
    const Eigen::ArrayXd ak = gather(ctx.a_lab, rows);
    check_trainable(ak, where + " imputation PS");
    GlmProblem prob = logistic_problem(wk, ak);
    eta_fold[static_cast<std::size_t>(k)] =
        fit_fixed_lambda(prob, penalty_w, lam_eta, config, &eta_full.coefficients)
            .coefficients;
    for (int a = 0; a < 2; ++a) {
      std::vector<Eigen::Index> rows_a;
      for (const Eigen::Index r : rows)
        if (ctx.a_lab(r) == static_cast<double>(a)) rows_a.push_back(r);
      if (rows_a.empty())
        throw ReplicationAbort("crossfit_dr: arm " + std::to_string(a) + " empty at " + where);
      const Eigen::MatrixXd wa = rows_of(w_lab, rows_a);
      const Eigen::ArrayXd ya = gather(ctx.y_lab, rows_a);
      check_trainable(ya, where + " imputation OR arm " + std::to_string(a));
      GlmProblem oprob = logistic_problem(wa, ya);
      zeta_fold[static_cast<std::size_t>(k)][a] =
          fit_fixed_lambda(oprob, penalty_w, lam_zeta[a], config,
                           &zeta_full[a].coefficients)
              .coefficients;
    }
  }

  const CalibratedFits fits = run_calibrated_stage(ctx);

  NuisancePredictions preds;
  preds.ps.resize(n, 2);
  preds.outcome_reg.resize(n, 2);
  preds.imputed_ps.resize(n, 2);
  preds.imputed_outcome.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = plan.assignment(i);
    const auto& alpha = fits.alpha[static_cast<std::size_t>(k)];
    const auto& beta = fits.beta[static_cast<std::size_t>(k)];
    const double eta1 = data.confounders.row(i).dot(alpha[1]);
    const double eta0 = data.confounders.row(i).dot(alpha[0]);
    preds.ps(i, 1) = sigmoid(truncate_tau(eta1, M));
    preds.ps(i, 0) = sigmoid(truncate_tau(-eta0, M));
    preds.outcome_reg(i, 1) = sigmoid(data.confounders.row(i).dot(beta[1]));
    preds.outcome_reg(i, 0) = sigmoid(data.confounders.row(i).dot(beta[0]));
    const double imp1 = sigmoid(w_all.row(i).dot(eta_fold[static_cast<std::size_t>(k)]));
    preds.imputed_ps(i, 1) = imp1;
    preds.imputed_ps(i, 0) = 1.0 - imp1;
    preds.imputed_outcome(i, 1) =
        sigmoid(w_all.row(i).dot(zeta_fold[static_cast<std::size_t>(k)][1]));
    preds.imputed_outcome(i, 0) =
        sigmoid(w_all.row(i).dot(zeta_fold[static_cast<std::size_t>(k)][0]));
  }
  return preds;
}

NuisancePredictions crossfit_dr_xonly(const SemiSupervisedDataset& data,
                                      const FoldPlan& plan,
                                      const DrLearnerConfig& config, double M,
                                      std::uint64_t seed) {
  DrContext ctx = make_context(data, plan, config, M, seed);
  const CalibratedFits fits = run_calibrated_stage(ctx);

  const Eigen::Index n = data.n_rows();
  NuisancePredictions preds;
  preds.ps.resize(n, 2);
  preds.outcome_reg.resize(n, 2);
  preds.imputed_ps.resize(0, 2);
  preds.imputed_outcome.resize(0, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = plan.assignment(i);
    const auto& alpha = fits.alpha[static_cast<std::size_t>(k)];
    const auto& beta = fits.beta[static_cast<std::size_t>(k)];
    const double eta1 = data.confounders.row(i).dot(alpha[1]);
    const double eta0 = data.confounders.row(i).dot(alpha[0]);
    preds.ps(i, 1) = sigmoid(truncate_tau(eta1, M));
    preds.ps(i, 0) = sigmoid(truncate_tau(-eta0, M));
    preds.outcome_reg(i, 1) = sigmoid(data.confounders.row(i).dot(beta[1]));
    preds.outcome_reg(i, 0) = sigmoid(data.confounders.row(i).dot(beta[0]));
  }
  return preds;
}

}  // namespace smmal
