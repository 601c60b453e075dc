#include "smmal/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "smmal/rng.hpp"
#include "smmal/splines.hpp"

namespace smmal {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_quantile: p must be in (0,1)");

  // Acklam's rational approximation
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;

  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // one Halley refinement against the exact CDF
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

std::pair<double, double> confidence_interval(double point, double variance_scaled,
                                              Eigen::Index n, double alpha) {
  if (variance_scaled < 0.0)
    throw std::invalid_argument("confidence_interval: negative variance");
  if (n <= 0) throw std::invalid_argument("confidence_interval: n must be positive");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("confidence_interval: alpha must be in (0,1)");
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const double half = z * std::sqrt(variance_scaled / static_cast<double>(n));
  return {point - half, point + half};
}

namespace {

AteEstimate assemble(const Eigen::ArrayXd& influence, Eigen::Index n_labeled,
                     double rho, double alpha) {
  AteEstimate est;
  est.alpha = alpha;
  est.n_labeled = n_labeled;
  est.influence_values = influence;
  est.point = influence.mean();
  const Eigen::Index n_rows = influence.size();
  est.variance_scaled =
      rho / static_cast<double>(n_rows) * (influence - est.point).square().sum();
  // with no labeled rows the variance prefactor is 0 and the CI degenerates
  const auto ci = confidence_interval(est.point, est.variance_scaled,
                                      std::max<Eigen::Index>(n_labeled, 1), alpha);
  est.ci_lower = ci.first;
  est.ci_upper = ci.second;
  return est;
}

}  // namespace

AteEstimate smmal_estimate(const SemiSupervisedDataset& data,
                           const NuisancePredictions& preds, double alpha) {
  const Eigen::Index n = data.n_rows();
  if (preds.ps.rows() != n || preds.outcome_reg.rows() != n ||
      preds.imputed_ps.rows() != n || preds.imputed_outcome.rows() != n)
    throw std::invalid_argument("smmal_estimate: prediction length mismatch");
  const Eigen::Index n_lab = data.n_labeled();
  // rho = 0 is allowed: labeled corrections are gated by R and the variance
  // prefactor rho/N vanishes, leaving the pure imputation estimate
  const double rho = static_cast<double>(n_lab) / static_cast<double>(n);

  Eigen::ArrayXd influence(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ps1 = preds.ps(i, 1), ps0 = preds.ps(i, 0);
    const double mu1 = preds.outcome_reg(i, 1), mu0 = preds.outcome_reg(i, 0);
    const double ip1 = preds.imputed_ps(i, 1), ip0 = preds.imputed_ps(i, 0);
    const double io1 = preds.imputed_outcome(i, 1), io0 = preds.imputed_outcome(i, 0);
    if (ps1 == 0.0 || ps0 == 0.0)
      throw std::invalid_argument("smmal_estimate: zero propensity at row " +
                                  std::to_string(i));

    double v = mu1 + ip1 / ps1 * (io1 - mu1) - mu0 - ip0 / ps0 * (io0 - mu0);
    if (data.label_flag(i) == 1) {
      const double a = data.treatment.value(i);
      const double y = data.outcome.value(i);
      v += (a * y - a * mu1 - ip1 * io1 + ip1 * mu1) / (rho * ps1);
      v -= ((1.0 - a) * y - (1.0 - a) * mu0 - ip0 * io0 + ip0 * mu0) / (rho * ps0);
    }
    influence(i) = v;
  }
  return assemble(influence, n_lab, rho, alpha);
}

AteEstimate aipw_estimate(const SemiSupervisedDataset& data,
                          const NuisancePredictions& preds, double alpha) {
  const Eigen::Index n = data.n_rows();
  if (preds.ps.rows() != n || preds.outcome_reg.rows() != n)
    throw std::invalid_argument("aipw_estimate: prediction length mismatch");
  if (data.n_labeled() != n)
    throw std::invalid_argument("aipw_estimate: all rows must be labeled");

  Eigen::ArrayXd influence(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ps1 = preds.ps(i, 1), ps0 = preds.ps(i, 0);
    const double mu1 = preds.outcome_reg(i, 1), mu0 = preds.outcome_reg(i, 0);
    if (ps1 == 0.0 || ps0 == 0.0)
      throw std::invalid_argument("aipw_estimate: zero propensity at row " +
                                  std::to_string(i));
    const double a = data.treatment.value(i);
    const double y = data.outcome.value(i);
    influence(i) = mu1 - mu0 + a * (y - mu1) / ps1 - (1.0 - a) * (y - mu0) / ps0;
  }
  return assemble(influence, n, 1.0, alpha);
}

AteEstimate supervised_dml_estimate(const SemiSupervisedDataset& labeled_data, int K,
                                    const LowdimLearnerConfig& config, double alpha,
                                    std::uint64_t seed) {
  const Eigen::Index n = labeled_data.n_rows();
  if (labeled_data.n_labeled() != n)
    throw std::invalid_argument("supervised_dml_estimate: rows must all be labeled");

  const FoldPlan plan = assign_folds(n, K, derive_seed(seed, 31));
  const Eigen::Index p_raw = labeled_data.confounders.cols() - 1;
  if (p_raw < 1)
    throw std::invalid_argument("supervised_dml_estimate: need a non-constant confounder");
  const Eigen::MatrixXd x_raw = labeled_data.confounders.rightCols(p_raw);

  NuisancePredictions preds;
  preds.ps.resize(n, 2);
  preds.outcome_reg.resize(n, 2);
  const double clamp_lo = 1.0 / config.ps_clamp_M;
  const std::pair<double, double> ps_clamp{clamp_lo, 1.0 - clamp_lo};
  const std::pair<double, double> unit_clamp{0.0, 1.0};

  for (int k = 0; k < K; ++k) {
    std::vector<Eigen::Index> train, fold_rows, arm1, arm0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (plan.assignment(i) == k) {
        fold_rows.push_back(i);
        continue;
      }
      train.push_back(i);
      (labeled_data.treatment.value(i) == 1.0 ? arm1 : arm0).push_back(i);
    }
    if (arm1.empty() || arm0.empty())
      throw ReplicationAbort("supervised_dml: fold " + std::to_string(k) +
                             " training split lacks a treatment arm");

    auto fit_one = [&](const std::vector<Eigen::Index>& rows, bool from_outcome,
                       int model_id) {
      Eigen::MatrixXd in(static_cast<Eigen::Index>(rows.size()), x_raw.cols());
      Eigen::ArrayXd y(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        in.row(static_cast<Eigen::Index>(r)) = x_raw.row(rows[r]);
        y(static_cast<Eigen::Index>(r)) = from_outcome
                                              ? labeled_data.outcome.value(rows[r])
                                              : labeled_data.treatment.value(rows[r]);
      }
      if (in.rows() < 4)
        throw ReplicationAbort("supervised_dml: fewer than 4 training rows at fold " +
                               std::to_string(k));
      int folds = static_cast<int>(std::min<Eigen::Index>(config.cv_folds, in.rows() / 2));
      folds = std::max(folds, 2);
      const int max_deg =
          config.max_degree_x > 0
              ? std::max(config.max_degree_x, config.order + 1)
              : std::max(static_cast<int>(std::floor(std::sqrt(
                             static_cast<double>(in.rows())))) - 1,
                         config.order + 1);
      return fit_spline_nuisance(in, y, Eigen::ArrayXd(), max_deg, folds, config.order,
                                 config.ps_clamp_M,
                                 derive_seed(seed, static_cast<std::uint64_t>(k),
                                             static_cast<std::uint64_t>(model_id)));
    };

    const SplineModel ps_model = fit_one(train, false, 0);
    const SplineModel or1_model = fit_one(arm1, true, 1);
    const SplineModel or0_model = fit_one(arm0, true, 2);

    Eigen::MatrixXd x_fold(static_cast<Eigen::Index>(fold_rows.size()), x_raw.cols());
    for (std::size_t r = 0; r < fold_rows.size(); ++r)
      x_fold.row(static_cast<Eigen::Index>(r)) = x_raw.row(fold_rows[r]);
    const Eigen::ArrayXd ps1 = predict_spline(ps_model, x_fold, ps_clamp);
    const Eigen::ArrayXd or1 = predict_spline(or1_model, x_fold, unit_clamp);
    const Eigen::ArrayXd or0 = predict_spline(or0_model, x_fold, unit_clamp);
    for (std::size_t r = 0; r < fold_rows.size(); ++r) {
      const Eigen::Index i = fold_rows[r];
      const Eigen::Index ri = static_cast<Eigen::Index>(r);
      preds.ps(i, 1) = ps1(ri);
      preds.ps(i, 0) = 1.0 - ps1(ri);
      preds.outcome_reg(i, 1) = or1(ri);
      preds.outcome_reg(i, 0) = or0(ri);
    }
  }
  return aipw_estimate(labeled_data, preds, alpha);
}

AteEstimate supervised_dr_estimate(const SemiSupervisedDataset& labeled_data, int K,
                                   const DrLearnerConfig& config, double M,
                                   double alpha, std::uint64_t seed) {
  const Eigen::Index n = labeled_data.n_rows();
  if (labeled_data.n_labeled() != n)
    throw std::invalid_argument("supervised_dr_estimate: rows must all be labeled");
  const FoldPlan plan = assign_folds(n, K, derive_seed(seed, 41));
  const NuisancePredictions preds =
      crossfit_dr_xonly(labeled_data, plan, config, M, derive_seed(seed, 42));
  return aipw_estimate(labeled_data, preds, alpha);
}

std::string estimate_to_json(const AteEstimate& est, const std::string& method,
                             std::uint64_t seed, Eigen::Index N) {
  std::ostringstream out;
  out.precision(17);
  out << "{\"point\":" << est.point << ",\"variance_scaled\":" << est.variance_scaled
      << ",\"ci\":[" << est.ci_lower << "," << est.ci_upper << "]"
      << ",\"n\":" << est.n_labeled << ",\"N\":" << N << ",\"method\":\"" << method
      << "\",\"seed\":" << seed << "}";
  return out.str();
}

}  // namespace smmal
