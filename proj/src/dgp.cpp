#include "smmal/dgp.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "smmal/glm.hpp"

namespace smmal {

namespace {

// Table of calibrated (AUC, alpha) pairs for the mixture-Beta surrogates.
constexpr double kAucLevels[] = {0.80, 0.90, 0.95, 0.99, 0.999};
constexpr double kAlphaLevels[] = {1.84, 2.39, 2.99, 4.26, 5.88};

// Frozen 1e7-draw Monte-Carlo oracle values for the highdim ATE, one per
// outcome-model variant (PS flags do not move the ATE). Regenerate with
// highdim_ate_mc(flags, 10'000'000, 20240713).
constexpr double kAteCorrectOr = 0.048435668765;
constexpr double kAteCorrectOrSe = 5.495e-05;
constexpr double kAteWrongOr = 0.030522207585;
constexpr double kAteWrongOrSe = 5.814e-05;

double lowdim_mu1(double x) { return 1.0 - 1.2 / (3.0 - x * x); }
double lowdim_mu0(double x) { return 1.0 - 1.2 / (3.0 - (1.0 - x) * (1.0 - x)); }

double highdim_ps_lin(double x1, double x2, double x3) {
  return 0.5 * x1 + 0.25 * x2 + 0.125 * x3;
}
double highdim_or_lin(double x1, double x2, double x3) {
  return 0.1 + 0.25 * x1 + 0.125 * x2 + 0.0625 * x3;
}
double highdim_interaction(double x1, double x2, double x3) {
  return 1.0 + 0.0625 * x1 + 0.125 * x2 - 0.5 * x3;
}

double highdim_ps_value(ModelFlags flags, double x1, double x2, double x3) {
  const double lin = highdim_ps_lin(x1, x2, x3);
  if (flags == ModelFlags::wrong_ps)
    return sigmoid(lin * highdim_interaction(x1, x2, x3));
  return sigmoid(lin);
}

double highdim_or_value(ModelFlags flags, int arm, double x1, double x2, double x3) {
  const double lin = highdim_or_lin(x1, x2, x3);
  const double signed_lin = arm == 1 ? lin : -lin;
  if (flags == ModelFlags::wrong_or)
    return sigmoid(signed_lin * highdim_interaction(x1, x2, x3));
  return sigmoid(signed_lin);
}

/// Uniformly random subset of exactly n_labels rows.
std::vector<char> draw_label_flags(Eigen::Index n_rows, Eigen::Index n_labels, Rng& rng) {
  if (n_labels < 0 || n_labels > n_rows)
    throw std::invalid_argument("n_labels must lie in [0, N]");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_rows));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (Eigen::Index i = n_rows - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  std::vector<char> flags(static_cast<std::size_t>(n_rows), 0);
  for (Eigen::Index t = 0; t < n_labels; ++t)
    flags[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])] = 1;
  return flags;
}

void attach_labels_and_surrogates(SemiSupervisedDataset& data,
                                  const Eigen::ArrayXd& a_full,
                                  const Eigen::ArrayXd& y_full,
                                  const SurrogateSpec& surrogates,
                                  Eigen::Index n_labels, Rng& rng) {
  const Eigen::Index n = a_full.size();
  data.surrogates.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i)
    data.surrogates(i, 0) =
        sample_surrogate(static_cast<int>(a_full(i)), surrogates.alpha_A, rng);
  for (Eigen::Index i = 0; i < n; ++i)
    data.surrogates(i, 1) =
        sample_surrogate(static_cast<int>(y_full(i)), surrogates.alpha_Y, rng);

  const std::vector<char> flags = draw_label_flags(n, n_labels, rng);
  data.treatment = MaskedColumn::absent(n);
  data.outcome = MaskedColumn::absent(n);
  data.label_flag.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.label_flag(i) = flags[static_cast<std::size_t>(i)];
    if (flags[static_cast<std::size_t>(i)]) {
      data.treatment.set(i, a_full(i));
      data.outcome.set(i, y_full(i));
    }
  }
}

}  // namespace

double surrogate_alpha_for_auc(double auc) {
  for (int i = 0; i < 5; ++i)
    if (std::abs(auc - kAucLevels[i]) < 1e-9) return kAlphaLevels[i];
  throw std::invalid_argument("unsupported surrogate AUC level");
}

double surrogate_auc_analytic(double alpha) {
  const double log_beta =
      std::lgamma(alpha) + std::lgamma(alpha + 1.0) - std::lgamma(2.0 * alpha + 1.0);
  return 1.0 - alpha * std::exp(log_beta);
}

double sample_surrogate(int label, double alpha, Rng& rng) {
  if (alpha < 1.0) throw std::invalid_argument("surrogate alpha must be >= 1");
  const double u = rng.uniform();
  if (label == 1) return std::pow(u, 1.0 / alpha);        // Beta(alpha, 1)
  return 1.0 - std::pow(1.0 - u, 1.0 / alpha);            // Beta(1, alpha)
}

std::pair<SemiSupervisedDataset, TruthRecord> gen_lowdim(const ScenarioSpec& spec,
                                                         const SurrogateSpec& surrogates) {
  if (spec.N < 10) throw std::invalid_argument("gen_lowdim: N must be at least 10");
  Rng rng(derive_seed(spec.seed, 0x10d1ULL));
  const Eigen::Index n = spec.N;

  SemiSupervisedDataset data;
  data.bound_M = 1.0;
  data.confounders.resize(n, 2);
  data.confounders.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) data.confounders(i, 1) = rng.uniform();

  Eigen::ArrayXd a_full(n), y_full(n);
  for (Eigen::Index i = 0; i < n; ++i)
    a_full(i) = rng.uniform() < lowdim_mu1(data.confounders(i, 1)) ? 1.0 : 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = data.confounders(i, 1);
    const double mu = a_full(i) == 1.0 ? lowdim_mu1(x) : lowdim_mu0(x);
    y_full(i) = rng.uniform() < mu ? 1.0 : 0.0;
  }

  attach_labels_and_surrogates(data, a_full, y_full, surrogates, spec.n_labels, rng);

  TruthRecord truth;
  truth.scenario = Scenario::lowdim;
  truth.flags = spec.flags;
  truth.ate = 0.0;  // mu0(x) = mu1(1-x) and X uniform: the integrals cancel
  truth.ate_mc_se = 0.0;
  truth.surrogates = surrogates;
  return {std::move(data), truth};
}

std::pair<SemiSupervisedDataset, TruthRecord> gen_highdim(const ScenarioSpec& spec,
                                                          const SurrogateSpec& surrogates) {
  if (spec.p < 3) throw std::invalid_argument("gen_highdim: p must be at least 3");
  Rng rng(derive_seed(spec.seed, 0x81d1ULL));
  const Eigen::Index n = spec.N;
  const int p = spec.p;

  SemiSupervisedDataset data;
  data.bound_M = 1.0;
  data.confounders.resize(n, p + 1);
  data.confounders.col(0).setOnes();
  const double ar_innov = std::sqrt(0.75);
  for (Eigen::Index i = 0; i < n; ++i) {
    double prev = rng.normal();
    data.confounders(i, 1) = prev;
    for (int j = 2; j <= p; ++j) {
      prev = 0.5 * prev + ar_innov * rng.normal();
      data.confounders(i, j) = prev;
    }
  }

  Eigen::ArrayXd a_full(n), y_full(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x1 = data.confounders(i, 1);
    const double x2 = data.confounders(i, 2);
    const double x3 = data.confounders(i, 3);
    a_full(i) = rng.uniform() < highdim_ps_value(spec.flags, x1, x2, x3) ? 1.0 : 0.0;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x1 = data.confounders(i, 1);
    const double x2 = data.confounders(i, 2);
    const double x3 = data.confounders(i, 3);
    const double mu = highdim_or_value(spec.flags, static_cast<int>(a_full(i)), x1, x2, x3);
    y_full(i) = rng.uniform() < mu ? 1.0 : 0.0;
  }

  attach_labels_and_surrogates(data, a_full, y_full, surrogates, spec.n_labels, rng);

  TruthRecord truth;
  truth.scenario = Scenario::highdim;
  truth.flags = spec.flags;
  truth.ate = highdim_ate_frozen(spec.flags);
  truth.ate_mc_se = highdim_ate_frozen_se(spec.flags);
  truth.surrogates = surrogates;
  return {std::move(data), truth};
}

Eigen::ArrayXd true_nuisance(const TruthRecord& truth, NuisanceKind which, int arm,
                             const Eigen::MatrixXd& confounders) {
  if (arm != 0 && arm != 1) throw std::invalid_argument("true_nuisance: arm must be 0 or 1");
  const Eigen::Index n = confounders.rows();
  Eigen::ArrayXd out(n);
  if (truth.scenario == Scenario::lowdim) {
    if (confounders.cols() < 2)
      throw std::invalid_argument("true_nuisance: lowdim confounders need 2 columns");
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = confounders(i, 1);
      if (which == NuisanceKind::ps)
        out(i) = arm == 1 ? lowdim_mu1(x) : 1.0 - lowdim_mu1(x);
      else
        out(i) = arm == 1 ? lowdim_mu1(x) : lowdim_mu0(x);
    }
    return out;
  }
  if (confounders.cols() < 4)
    throw std::invalid_argument("true_nuisance: highdim confounders need 4 columns");
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x1 = confounders(i, 1);
    const double x2 = confounders(i, 2);
    const double x3 = confounders(i, 3);
    if (which == NuisanceKind::ps) {
      const double p1 = highdim_ps_value(truth.flags, x1, x2, x3);
      out(i) = arm == 1 ? p1 : 1.0 - p1;
    } else {
      out(i) = highdim_or_value(truth.flags, arm, x1, x2, x3);
    }
  }
  return out;
}

namespace {

double beta_density(double s, double alpha, int label) {
  // Beta(alpha,1) for label 1, Beta(1,alpha) for label 0; alpha >= 1 keeps
  // these bounded on [0,1]
  if (label == 1) return alpha * std::pow(s, alpha - 1.0);
  return alpha * std::pow(1.0 - s, alpha - 1.0);
}

}  // namespace

Eigen::ArrayXd true_imputed_outcome_lowdim(const TruthRecord& truth, int arm,
                                           const Eigen::ArrayXd& x,
                                           const Eigen::ArrayXd& s_y) {
  if (truth.scenario != Scenario::lowdim)
    throw std::invalid_argument("true_imputed_outcome_lowdim: lowdim truth required");
  const double ay = truth.surrogates.alpha_Y;
  Eigen::ArrayXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double mu = arm == 1 ? lowdim_mu1(x(i)) : lowdim_mu0(x(i));
    const double f1 = beta_density(s_y(i), ay, 1);
    const double f0 = beta_density(s_y(i), ay, 0);
    out(i) = mu * f1 / (mu * f1 + (1.0 - mu) * f0);
  }
  return out;
}

Eigen::ArrayXd true_imputed_ps_lowdim(const TruthRecord& truth, int arm,
                                      const Eigen::ArrayXd& x,
                                      const Eigen::ArrayXd& s_a,
                                      const Eigen::ArrayXd& s_y) {
  if (truth.scenario != Scenario::lowdim)
    throw std::invalid_argument("true_imputed_ps_lowdim: lowdim truth required");
  const double aa = truth.surrogates.alpha_A;
  const double ay = truth.surrogates.alpha_Y;
  Eigen::ArrayXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double pi1 = lowdim_mu1(x(i));
    const double mu1 = lowdim_mu1(x(i));
    const double mu0 = lowdim_mu0(x(i));
    const double fy1 = beta_density(s_y(i), ay, 1);
    const double fy0 = beta_density(s_y(i), ay, 0);
    const double like1 = pi1 * beta_density(s_a(i), aa, 1) *
                         (mu1 * fy1 + (1.0 - mu1) * fy0);
    const double like0 = (1.0 - pi1) * beta_density(s_a(i), aa, 0) *
                         (mu0 * fy1 + (1.0 - mu0) * fy0);
    const double p1 = like1 / (like1 + like0);
    out(i) = arm == 1 ? p1 : 1.0 - p1;
  }
  return out;
}

std::pair<double, double> highdim_ate_mc(ModelFlags flags, Eigen::Index n_draws,
                                         std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xa7eULL));
  const double ar_innov = std::sqrt(0.75);
  double sum = 0.0, sumsq = 0.0;
  for (Eigen::Index t = 0; t < n_draws; ++t) {
    const double x1 = rng.normal();
    const double x2 = 0.5 * x1 + ar_innov * rng.normal();
    const double x3 = 0.5 * x2 + ar_innov * rng.normal();
    const double diff = highdim_or_value(flags, 1, x1, x2, x3) -
                        highdim_or_value(flags, 0, x1, x2, x3);
    sum += diff;
    sumsq += diff * diff;
  }
  const double mean = sum / static_cast<double>(n_draws);
  const double var =
      (sumsq - static_cast<double>(n_draws) * mean * mean) /
      static_cast<double>(n_draws - 1);
  return {mean, std::sqrt(var / static_cast<double>(n_draws))};
}

double highdim_ate_frozen(ModelFlags flags) {
  return flags == ModelFlags::wrong_or ? kAteWrongOr : kAteCorrectOr;
}

double highdim_ate_frozen_se(ModelFlags flags) {
  return flags == ModelFlags::wrong_or ? kAteWrongOrSe : kAteCorrectOrSe;
}

}  // namespace smmal
