#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "doctest.h"
#include "smmal/crossfit.hpp"
#include "smmal/dgp.hpp"
#include "smmal/estimators.hpp"
#include "smmal/glm.hpp"
#include "smmal/rng.hpp"

using namespace smmal;
using Eigen::ArrayXd;
using Eigen::MatrixXd;

namespace {

NuisancePredictions constant_preds(Eigen::Index n, double ps1, double ip1, double mu1,
                                   double mu0, double io1, double io0) {
  NuisancePredictions preds;
  preds.ps.resize(n, 2);
  preds.outcome_reg.resize(n, 2);
  preds.imputed_ps.resize(n, 2);
  preds.imputed_outcome.resize(n, 2);
  preds.ps.col(1).setConstant(ps1);
  preds.ps.col(0).setConstant(1.0 - ps1);
  preds.imputed_ps.col(1).setConstant(ip1);
  preds.imputed_ps.col(0).setConstant(1.0 - ip1);
  preds.outcome_reg.col(1).setConstant(mu1);
  preds.outcome_reg.col(0).setConstant(mu0);
  preds.imputed_outcome.col(1).setConstant(io1);
  preds.imputed_outcome.col(0).setConstant(io0);
  return preds;
}

SemiSupervisedDataset dataset_shell(Eigen::Index n) {
  SemiSupervisedDataset data;
  data.label_flag = Eigen::ArrayXi::Zero(n);
  data.treatment = MaskedColumn::absent(n);
  data.outcome = MaskedColumn::absent(n);
  data.confounders = MatrixXd::Ones(n, 2);
  data.surrogates = MatrixXd::Zero(n, 2);
  data.bound_M = 1.0;
  return data;
}

SemiSupervisedDataset random_labeled_dataset(Eigen::Index n, std::uint64_t seed) {
  SemiSupervisedDataset data = dataset_shell(n);
  data.label_flag.setOnes();
  Rng rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.confounders(i, 1) = rng.normal();
    data.treatment.set(i, rng.uniform() < 0.5 ? 1.0 : 0.0);
    data.outcome.set(i, rng.uniform() < 0.5 ? 1.0 : 0.0);
  }
  return data;
}

NuisancePredictions random_preds(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  NuisancePredictions preds;
  preds.ps.resize(n, 2);
  preds.outcome_reg.resize(n, 2);
  preds.imputed_ps.resize(n, 2);
  preds.imputed_outcome.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ps1 = 0.1 + 0.8 * rng.uniform();
    preds.ps(i, 1) = ps1;
    preds.ps(i, 0) = 1.0 - ps1;
    for (int a = 0; a < 2; ++a) {
      preds.outcome_reg(i, a) = rng.uniform();
      preds.imputed_ps(i, a) = rng.uniform();
      preds.imputed_outcome(i, a) = rng.uniform();
    }
  }
  return preds;
}

}  // namespace

TEST_SUITE("estimators") {
  TEST_CASE("normal quantile and confidence intervals") {
    SUBCASE("zero variance degenerates") {
      const auto ci = confidence_interval(0.7, 0.0, 50, 0.05);
      CHECK(ci.first == 0.7);
      CHECK(ci.second == 0.7);
    }
    SUBCASE("alpha=0.05, variance 1, n=100") {
      const auto ci = confidence_interval(0.0, 1.0, 100, 0.05);
      CHECK(std::abs((ci.second - ci.first) / 2.0 - 0.19600) <= 1e-4);
    }
    SUBCASE("alpha=0.32, variance 1, n=1") {
      const auto ci = confidence_interval(0.0, 1.0, 1, 0.32);
      CHECK(std::abs((ci.second - ci.first) / 2.0 - 0.9944578832) <= 1e-4);
    }
    SUBCASE("quantile spot values") {
      CHECK(std::abs(normal_quantile(0.975) - 1.959963985) <= 1e-8);
      CHECK(std::abs(normal_quantile(0.84) - 0.9944578832) <= 1e-8);
      CHECK(std::abs(normal_quantile(0.5)) <= 1e-12);
      CHECK(normal_quantile(0.001) == doctest::Approx(-3.0902323062).epsilon(1e-8));
    }
  }

  TEST_CASE("hand-evaluated 4-row fixture") {
    // pi = 0.5, Pi = 0.4, mu1 = 0.6, mu0 = 0.3, m1 = 0.7, m0 = 0.2; rows 0,1
    // labeled with (A,Y) = (1,1), (0,0). Frozen values from evaluating the
    // influence formula by hand: unlabeled part 0.5, corrections 1.2 and 0.8,
    // so point = (1.7 + 1.3 + 0.5 + 0.5)/4 = 1 and variance = 0.125*1.08.
    SemiSupervisedDataset data = dataset_shell(4);
    data.label_flag(0) = 1;
    data.label_flag(1) = 1;
    data.treatment.set(0, 1.0);
    data.outcome.set(0, 1.0);
    data.treatment.set(1, 0.0);
    data.outcome.set(1, 0.0);
    const NuisancePredictions preds = constant_preds(4, 0.5, 0.4, 0.6, 0.3, 0.7, 0.2);
    const AteEstimate est = smmal_estimate(data, preds, 0.05);

    CHECK(est.point == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(est.variance_scaled == doctest::Approx(0.135).epsilon(1e-12));
    CHECK(est.n_labeled == 2);
    CHECK(est.influence_values(0) == doctest::Approx(1.7).epsilon(1e-12));
    CHECK(est.influence_values(1) == doctest::Approx(1.3).epsilon(1e-12));
    CHECK(est.influence_values(2) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(est.ci_lower == doctest::Approx(1.0 - 0.5092147).epsilon(1e-6));
    CHECK(est.ci_upper == doctest::Approx(1.0 + 0.5092147).epsilon(1e-6));
  }

  TEST_CASE("all-unlabeled data reduces to the imputation difference") {
    const SemiSupervisedDataset data = dataset_shell(12);
    const NuisancePredictions preds = constant_preds(12, 0.5, 0.4, 0.62, 0.31, 0.62, 0.31);
    const AteEstimate est = smmal_estimate(data, preds, 0.05);
    CHECK(est.point == doctest::Approx(0.62 - 0.31).epsilon(1e-14));
    CHECK(est.variance_scaled == 0.0);
    CHECK(est.ci_lower == est.ci_upper);
  }

  TEST_CASE("fully labeled SMMAL equals AIPW regardless of imputations") {
    for (int rep = 0; rep < 25; ++rep) {
      const Eigen::Index n = 40;
      const SemiSupervisedDataset data =
          random_labeled_dataset(n, 500 + static_cast<std::uint64_t>(rep));
      const NuisancePredictions preds = random_preds(n, 600 + static_cast<std::uint64_t>(rep));
      const AteEstimate ssl = smmal_estimate(data, preds, 0.05);
      const AteEstimate aipw = aipw_estimate(data, preds, 0.05);
      CHECK(std::abs(ssl.point - aipw.point) <= 1e-12);
      CHECK(std::abs(ssl.variance_scaled - aipw.variance_scaled) <= 1e-12);
    }
  }

  TEST_CASE("outcome shift with consistent predictions leaves the point unchanged") {
    const Eigen::Index n = 60;
    SemiSupervisedDataset data = dataset_shell(n);
    Rng rng(700);
    for (Eigen::Index i = 0; i < n; ++i) {
      data.confounders(i, 1) = rng.uniform();
      if (i % 3 != 0) continue;
      data.label_flag(i) = 1;
      data.treatment.set(i, rng.uniform() < 0.5 ? 1.0 : 0.0);
      data.outcome.set(i, rng.uniform() < 0.5 ? 1.0 : 0.0);
    }
    NuisancePredictions preds = random_preds(n, 701);
    const AteEstimate base = smmal_estimate(data, preds, 0.05);

    const double shift = 0.37;
    SemiSupervisedDataset shifted = data;
    for (Eigen::Index i = 0; i < n; ++i)
      if (shifted.outcome.present(i))
        shifted.outcome.set(i, shifted.outcome.value(i) + shift);
    shifted.bound_M = 2.0;
    NuisancePredictions shifted_preds = preds;
    shifted_preds.outcome_reg.array() += shift;
    shifted_preds.imputed_outcome.array() += shift;
    const AteEstimate moved = smmal_estimate(shifted, shifted_preds, 0.05);
    CHECK(moved.point == doctest::Approx(base.point).epsilon(1e-10));
  }

  TEST_CASE("true-nuisance AIPW is consistent on generated data") {
    ScenarioSpec spec;
    spec.N = 20000;
    spec.n_labels = 19999;
    spec.seed = 88;
    const auto [full, truth] = gen_lowdim(spec, SurrogateSpec{2.99, 2.99});
    const SemiSupervisedDataset labeled = labeled_subset(full);
    const Eigen::Index n = labeled.n_rows();
    NuisancePredictions preds;
    preds.ps.resize(n, 2);
    preds.outcome_reg.resize(n, 2);
    preds.imputed_ps.resize(0, 2);
    preds.imputed_outcome.resize(0, 2);
    preds.ps.col(1) = true_nuisance(truth, NuisanceKind::ps, 1, labeled.confounders);
    preds.ps.col(0) = true_nuisance(truth, NuisanceKind::ps, 0, labeled.confounders);
    preds.outcome_reg.col(1) =
        true_nuisance(truth, NuisanceKind::outcome, 1, labeled.confounders);
    preds.outcome_reg.col(0) =
        true_nuisance(truth, NuisanceKind::outcome, 0, labeled.confounders);
    const AteEstimate est = aipw_estimate(labeled, preds, 0.05);
    const double mc_se = std::sqrt(est.variance_scaled / static_cast<double>(n));
    CHECK(std::abs(est.point - truth.ate) <= 3.0 * mc_se);
  }

  TEST_CASE("supervised DML rejects a single-arm dataset") {
    SemiSupervisedDataset data = random_labeled_dataset(60, 800);
    for (Eigen::Index i = 0; i < data.n_rows(); ++i) data.treatment.set(i, 1.0);
    LowdimLearnerConfig cfg;
    cfg.max_degree_x = 3;
    cfg.cv_folds = 3;
    CHECK_THROWS_AS(supervised_dml_estimate(data, 3, cfg, 0.05, 5), ReplicationAbort);
  }

  TEST_CASE("uninformative imputations track the supervised DML point") {
    // replacing Pi-hat and m-hat by the X-only models must not move the
    // estimate beyond Monte-Carlo noise
    const int reps = 24;
    std::vector<double> diffs;
    for (int rep = 0; rep < reps; ++rep) {
      ScenarioSpec spec;
      spec.N = 1200;
      spec.n_labels = 400;
      spec.seed = 900 + static_cast<std::uint64_t>(rep);
      const auto [data, truth] = gen_lowdim(spec, SurrogateSpec{1.84, 1.84});
      LowdimLearnerConfig cfg;
      cfg.max_degree_x = 4;
      cfg.max_degree_w = 2;
      cfg.cv_folds = 4;
      const FoldPlan plan = assign_folds(data.n_rows(), 5, spec.seed + 1);
      NuisancePredictions preds = crossfit_lowdim(data, plan, cfg, spec.seed + 2);
      preds.imputed_ps = preds.ps;
      preds.imputed_outcome = preds.outcome_reg;
      const AteEstimate ssl = smmal_estimate(data, preds, 0.05);
      CHECK(ssl.variance_scaled >= 0.0);
      const AteEstimate dml =
          supervised_dml_estimate(labeled_subset(data), 5, cfg, 0.05, spec.seed + 3);
      diffs.push_back(ssl.point - dml.point);
    }
    double mean = 0.0;
    for (const double d : diffs) mean += d;
    mean /= diffs.size();
    double ss = 0.0;
    for (const double d : diffs) ss += (d - mean) * (d - mean);
    const double se = std::sqrt(ss / (diffs.size() - 1) / diffs.size());
    CHECK(std::abs(mean) <= 3.0 * se + 1e-12);
  }

  TEST_CASE("huge lambda collapses the DR pipeline to fold-wise intercepts") {
    // with every fit forced to the null model the predictions have closed
    // forms in fold-wise arm counts and weighted means
    ArrayXd dummy;
    const Eigen::Index n = 120;
    SemiSupervisedDataset data = random_labeled_dataset(n, 1000);
    Rng rng(1001);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = data.confounders(i, 1);
      data.treatment.set(i, rng.uniform() < sigmoid(0.8 * x) ? 1.0 : 0.0);
      data.outcome.set(i, rng.uniform() < sigmoid(-0.5 + x) ? 1.0 : 0.0);
    }
    data.surrogates = MatrixXd::Zero(n, 2);

    const int K = 3;
    const FoldPlan plan = assign_folds(n, K, 77);
    DrLearnerConfig cfg;
    cfg.lambda_override = 1e6;
    const double M = 1.0;
    const NuisancePredictions preds = crossfit_dr_xonly(data, plan, cfg, M, 78);

    const auto pair_key = [&](int k1, int k2) {
      if (k1 > k2) std::swap(k1, k2);
      return k1 * K + k2;
    };
    // pair-wise intercept-only initial fits: logit of the arm-1 share (PS)
    // and logit of the arm-conditional outcome mean (OR)
    std::vector<double> pair_alpha0(static_cast<std::size_t>(K * K), 0.0);
    std::vector<std::array<double, 2>> pair_beta0(static_cast<std::size_t>(K * K));
    for (int k1 = 0; k1 < K; ++k1)
      for (int k2 = k1 + 1; k2 < K; ++k2) {
        double n1 = 0.0, n0 = 0.0;
        double ysum[2] = {0.0, 0.0}, count[2] = {0.0, 0.0};
        for (Eigen::Index i = 0; i < n; ++i) {
          if (plan.assignment(i) == k1 || plan.assignment(i) == k2) continue;
          const int a = data.treatment.value(i) == 1.0 ? 1 : 0;
          (a == 1 ? n1 : n0) += 1.0;
          ysum[a] += data.outcome.value(i);
          count[a] += 1.0;
        }
        pair_alpha0[static_cast<std::size_t>(pair_key(k1, k2))] = std::log(n1 / n0);
        for (int a = 0; a < 2; ++a) {
          const double mean = ysum[a] / count[a];
          pair_beta0[static_cast<std::size_t>(pair_key(k1, k2))][a] =
              std::log(mean / (1.0 - mean));
        }
      }

    for (int k1 = 0; k1 < K; ++k1) {
      // calibrated PS intercept per arm: weighted arm-count log ratio with
      // weights gdot_tau of the row's pair-fitted initial OR intercept
      double alpha0_arm[2];
      for (int a = 0; a < 2; ++a) {
        double w1 = 0.0, w0 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const int k2 = plan.assignment(i);
          if (k2 == k1) continue;
          const double b0 = pair_beta0[static_cast<std::size_t>(pair_key(k1, k2))][a];
          const double w = sigmoid_deriv(truncate_tau(b0, M));
          (data.treatment.value(i) == 1.0 ? w1 : w0) += w;
        }
        alpha0_arm[a] = std::log(w1 / w0);
      }
      // calibrated OR intercept per arm: weighted mean with pair-model weights
      double expect_mu[2];
      for (int a = 0; a < 2; ++a) {
        const double sign = a == 1 ? -1.0 : 1.0;
        double wsum = 0.0, wy = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const int k2 = plan.assignment(i);
          if (k2 == k1 || data.treatment.value(i) != static_cast<double>(a)) continue;
          const double u =
              sign * pair_alpha0[static_cast<std::size_t>(pair_key(k1, k2))];
          const double w = std::exp(truncate_tau(u, M));
          wsum += w;
          wy += w * data.outcome.value(i);
        }
        const double mean = wy / wsum;
        expect_mu[a] = mean;
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        if (plan.assignment(i) != k1) continue;
        CHECK(preds.ps(i, 1) ==
              doctest::Approx(sigmoid(truncate_tau(alpha0_arm[1], M))).epsilon(1e-6));
        CHECK(preds.ps(i, 0) ==
              doctest::Approx(sigmoid(truncate_tau(-alpha0_arm[0], M))).epsilon(1e-6));
        CHECK(preds.outcome_reg(i, 1) == doctest::Approx(expect_mu[1]).epsilon(1e-6));
        CHECK(preds.outcome_reg(i, 0) == doctest::Approx(expect_mu[0]).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("supervised DR covers the truth on a correct sparse DGP") {
    // p=50, n=500, 100 replications; the outcome contrast g(u) - g(-u) with
    // a mean-zero symmetric linear index makes the true ATE exactly 0
    const int reps = 100;
    const Eigen::Index n = 500;
    const int p = 50;
    std::vector<int> covered(reps, 0);
    std::atomic<int> next{0};
    auto work = [&]() {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= reps) return;
        Rng rng(derive_seed(424242, static_cast<std::uint64_t>(r)));
        SemiSupervisedDataset data;
        data.bound_M = 1.0;
        data.label_flag = Eigen::ArrayXi::Ones(n);
        data.treatment = MaskedColumn::absent(n);
        data.outcome = MaskedColumn::absent(n);
        data.confounders.resize(n, p + 1);
        data.confounders.col(0).setOnes();
        data.surrogates = MatrixXd::Zero(n, 1);
        for (Eigen::Index i = 0; i < n; ++i) {
          for (int j = 1; j <= p; ++j) data.confounders(i, j) = rng.normal();
          const double ps = sigmoid(0.5 * data.confounders(i, 1) -
                                    0.4 * data.confounders(i, 3));
          const double a = rng.uniform() < ps ? 1.0 : 0.0;
          const double u = 0.4 * data.confounders(i, 1) + 0.3 * data.confounders(i, 2);
          const double mu = sigmoid(a == 1.0 ? u : -u);
          data.treatment.set(i, a);
          data.outcome.set(i, rng.uniform() < mu ? 1.0 : 0.0);
        }
        DrLearnerConfig cfg;
        cfg.lambda_grid_size = 25;
        cfg.cv_folds = 4;
        const AteEstimate est = supervised_dr_estimate(
            data, 5, cfg, 1.0, 0.05, derive_seed(31337, static_cast<std::uint64_t>(r)));
        covered[static_cast<std::size_t>(r)] =
            (est.ci_lower <= 0.0 && 0.0 <= est.ci_upper) ? 1 : 0;
      }
    };
    std::thread t1(work), t2(work);
    t1.join();
    t2.join();
    double coverage = 0.0;
    for (const int c : covered) coverage += c;
    coverage /= reps;
    CHECK(coverage >= 0.88);
    CHECK(coverage <= 0.99);
  }

  TEST_CASE("supervised DR estimate is deterministic") {
    ArrayXd dummy;
    SemiSupervisedDataset data = random_labeled_dataset(150, 1100);
    Rng rng(1101);
    for (Eigen::Index i = 0; i < data.n_rows(); ++i) {
      const double x = data.confounders(i, 1);
      data.treatment.set(i, rng.uniform() < sigmoid(x) ? 1.0 : 0.0);
      data.outcome.set(i, rng.uniform() < sigmoid(0.5 * x) ? 1.0 : 0.0);
    }
    DrLearnerConfig cfg;
    cfg.lambda_grid_size = 12;
    cfg.cv_folds = 3;
    const AteEstimate e1 = supervised_dr_estimate(data, 3, cfg, 1.0, 0.05, 9);
    const AteEstimate e2 = supervised_dr_estimate(data, 3, cfg, 1.0, 0.05, 9);
    CHECK(e1.point == e2.point);
    CHECK(e1.variance_scaled == e2.variance_scaled);
  }

  TEST_CASE("estimate serializes to the JSON record") {
    AteEstimate est;
    est.point = 0.25;
    est.variance_scaled = 1.5;
    est.ci_lower = 0.1;
    est.ci_upper = 0.4;
    est.n_labeled = 42;
    const std::string json = estimate_to_json(est, "smmal_spline", 7, 100);
    CHECK(json.find("\"point\":0.25") != std::string::npos);
    CHECK(json.find("\"method\":\"smmal_spline\"") != std::string::npos);
    CHECK(json.find("\"n\":42") != std::string::npos);
    CHECK(json.find("\"N\":100") != std::string::npos);
    CHECK(json.find("\"seed\":7") != std::string::npos);
  }
}
