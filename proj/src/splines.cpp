#include "smmal/splines.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "smmal/folds.hpp"
#include "smmal/glm.hpp"
#include "smmal/rng.hpp"

namespace smmal {

Eigen::Index SplineBasisSpec::basis_count() const {
  Eigen::Index n = 1;
  for (const int d : degrees_per_dim) n *= d;
  return n;
}

namespace {

/// Open-uniform knot vector for `degree` basis functions of polynomial
/// order k on [lo, hi]: boundary knots repeated k+1 times, interior knots
/// uniform.
std::vector<double> make_knots(int degree, int k, double lo, double hi) {
  if (hi - lo < 1e-12) hi = lo + 1.0;  // degenerate (constant) input column
  const int n_interior = degree - k - 1;
  std::vector<double> t(static_cast<std::size_t>(degree + k + 1));
  for (int i = 0; i <= k; ++i) t[static_cast<std::size_t>(i)] = lo;
  const double h = (hi - lo) / static_cast<double>(n_interior + 1);
  for (int i = 1; i <= n_interior; ++i)
    t[static_cast<std::size_t>(k + i)] = lo + h * static_cast<double>(i);
  for (int i = 0; i <= k; ++i) t[static_cast<std::size_t>(degree + i)] = hi;
  return t;
}

/// Cox-de Boor: values of the k+1 basis functions that are nonzero on the
/// span containing x. Returns the span index; values go to N[0..k].
int basis_funs(double x, int degree, int k, const std::vector<double>& t,
               double lo, double hi, double* N) {
  if (hi - lo < 1e-12) hi = lo + 1.0;
  x = std::min(std::max(x, lo), hi);
  const int n_spans = degree - k;  // distinct intervals
  int interval = static_cast<int>((x - lo) / (hi - lo) * n_spans);
  interval = std::min(std::max(interval, 0), n_spans - 1);
  const int span = k + interval;

  double left[8], right[8];
  N[0] = 1.0;
  for (int j = 1; j <= k; ++j) {
    left[j] = x - t[static_cast<std::size_t>(span + 1 - j)];
    right[j] = t[static_cast<std::size_t>(span + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom != 0.0 ? N[r] / denom : 0.0;
      N[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    N[j] = saved;
  }
  return span;
}

}  // namespace

Eigen::MatrixXd bspline_basis(const Eigen::MatrixXd& x, const SplineBasisSpec& spec) {
  const Eigen::Index dims = x.cols();
  if (spec.order < 1) throw std::invalid_argument("spline order must be >= 1");
  if (spec.order > 7) throw std::invalid_argument("spline order above 7 unsupported");
  if (static_cast<Eigen::Index>(spec.degrees_per_dim.size()) != dims ||
      static_cast<Eigen::Index>(spec.domain_box.size()) != dims)
    throw std::invalid_argument("spline spec dimension mismatch");
  for (Eigen::Index j = 0; j < dims; ++j) {
    if (spec.degrees_per_dim[static_cast<std::size_t>(j)] < spec.order + 1)
      throw std::invalid_argument("spline degrees must be at least order+1");
    if (!(spec.domain_box[static_cast<std::size_t>(j)].first <=
          spec.domain_box[static_cast<std::size_t>(j)].second))
      throw std::invalid_argument("spline domain must have lo <= hi");
  }

  const Eigen::Index rows = x.rows();
  const Eigen::Index total = spec.basis_count();
  const int k = spec.order;

  std::vector<std::vector<double>> knots(static_cast<std::size_t>(dims));
  for (Eigen::Index j = 0; j < dims; ++j)
    knots[static_cast<std::size_t>(j)] =
        make_knots(spec.degrees_per_dim[static_cast<std::size_t>(j)], k,
                   spec.domain_box[static_cast<std::size_t>(j)].first,
                   spec.domain_box[static_cast<std::size_t>(j)].second);

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, total);
  std::vector<double> row_acc(static_cast<std::size_t>(total));
  std::vector<double> dim_vals(static_cast<std::size_t>(total));
  double N[8];

  for (Eigen::Index i = 0; i < rows; ++i) {
    Eigen::Index acc_len = 1;
    row_acc[0] = 1.0;
    for (Eigen::Index j = 0; j < dims; ++j) {
      const int degree = spec.degrees_per_dim[static_cast<std::size_t>(j)];
      const double lo = spec.domain_box[static_cast<std::size_t>(j)].first;
      const double hi = spec.domain_box[static_cast<std::size_t>(j)].second;
      const int span =
          basis_funs(x(i, j), degree, k, knots[static_cast<std::size_t>(j)], lo, hi, N);
      // dense per-dimension value vector (degree entries, k+1 nonzero)
      std::fill(dim_vals.begin(), dim_vals.begin() + degree, 0.0);
      for (int r = 0; r <= k; ++r) dim_vals[static_cast<std::size_t>(span - k + r)] = N[r];
      // row-wise Kronecker accumulation
      for (Eigen::Index a = acc_len; a-- > 0;) {
        const double base = row_acc[static_cast<std::size_t>(a)];
        for (int b = degree - 1; b >= 0; --b)
          row_acc[static_cast<std::size_t>(a * degree + b)] =
              base * dim_vals[static_cast<std::size_t>(b)];
      }
      acc_len *= degree;
    }
    for (Eigen::Index c = 0; c < total; ++c) out(i, c) = row_acc[static_cast<std::size_t>(c)];
  }
  return out;
}

namespace {

/// Unpenalized weighted logistic ML on a basis matrix via Newton with step
/// halving; falls back to a 1e-8 ridge on the Gram diagonal when the solve
/// fails. Throws FitError when no usable step exists.
Eigen::VectorXd newton_logistic(const Eigen::MatrixXd& B, const Eigen::ArrayXd& y,
                                const Eigen::ArrayXd& w) {
  const Eigen::Index m = B.cols();
  const double wsum = w.sum();
  if (!(wsum > 0.0)) throw FitError("spline fit: weights sum to zero");
  const double ybar = (w * y).sum() / wsum;
  if (ybar < 1e-10 || ybar > 1.0 - 1e-10) {
    const double c = std::min(std::max(ybar, 1e-10), 1.0 - 1e-10);
    return Eigen::VectorXd::Constant(m, std::log(c / (1.0 - c)));
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
  Eigen::ArrayXd eta = Eigen::ArrayXd::Zero(B.rows());
  auto loss = [&](const Eigen::ArrayXd& e) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i)
      acc += w(i) * entropy_loss(y(i), e(i));
    return acc / wsum;
  };
  double cur = loss(eta);

  for (int iter = 0; iter < 60; ++iter) {
    const Eigen::ArrayXd p = sigmoid(eta);
    const Eigen::VectorXd grad = B.transpose() * ((w * (p - y)) / wsum).matrix();
    if (grad.array().abs().maxCoeff() <= 1e-9) break;

    const Eigen::ArrayXd w2 = w * p * (1.0 - p) / wsum;
    Eigen::MatrixXd H = B.transpose() * w2.matrix().asDiagonal() * B;
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) {
      H.diagonal().array() += 1e-8 * std::max(1.0, H.diagonal().maxCoeff());
      llt.compute(H);
      if (llt.info() != Eigen::Success)
        throw FitError("spline fit: singular basis Gram");
    }
    const Eigen::VectorXd step = -llt.solve(grad);

    double t = 1.0;
    bool ok = false;
    const Eigen::ArrayXd eta_step = (B * step).array();
    while (t >= 1e-8) {
      const Eigen::ArrayXd eta_cand = eta + t * eta_step;
      const double cand = loss(eta_cand);
      if (std::isfinite(cand) && cand <= cur + 1e-14 * (1.0 + std::abs(cur))) {
        beta += t * step;
        eta = eta_cand;
        cur = cand;
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) break;
    if (beta.array().abs().maxCoeff() > 40.0) break;  // saturated fit
  }
  return beta;
}

}  // namespace

SplineModel fit_spline_nuisance(const Eigen::MatrixXd& inputs,
                                const Eigen::ArrayXd& response,
                                const Eigen::ArrayXd& weights, int max_degree,
                                int folds, int order, double M, std::uint64_t seed,
                                SplineFitDiagnostics* diagnostics) {
  const Eigen::Index rows = inputs.rows();
  const Eigen::Index dims = inputs.cols();
  if (rows != response.size())
    throw std::invalid_argument("fit_spline_nuisance: row count mismatch");
  if (folds < 2) throw std::invalid_argument("fit_spline_nuisance: folds >= 2 required");
  if (rows < 2 * static_cast<Eigen::Index>(folds))
    throw std::invalid_argument("fit_spline_nuisance: need at least folds*2 rows");
  if (max_degree < order + 1)
    throw std::invalid_argument("fit_spline_nuisance: max_degree below order+1");
  const Eigen::ArrayXd w =
      weights.size() == 0 ? Eigen::ArrayXd::Ones(rows) : weights;
  if (w.size() != rows)
    throw std::invalid_argument("fit_spline_nuisance: weights length mismatch");

  SplineBasisSpec spec;
  spec.order = order;
  spec.degrees_per_dim.assign(static_cast<std::size_t>(dims), 0);
  spec.domain_box.resize(static_cast<std::size_t>(dims));
  for (Eigen::Index j = 0; j < dims; ++j)
    spec.domain_box[static_cast<std::size_t>(j)] = {inputs.col(j).minCoeff(),
                                                    inputs.col(j).maxCoeff()};

  const FoldPlan plan = assign_folds(rows, folds, derive_seed(seed, 0x59711e5ULL));
  std::vector<std::vector<Eigen::Index>> held = plan.fold_indices();
  std::vector<std::vector<Eigen::Index>> train(static_cast<std::size_t>(folds));
  for (int f = 0; f < folds; ++f)
    for (Eigen::Index i = 0; i < rows; ++i)
      if (plan.assignment(i) != f) train[static_cast<std::size_t>(f)].push_back(i);
  Eigen::Index min_train = rows;
  for (const auto& tr : train)
    min_train = std::min(min_train, static_cast<Eigen::Index>(tr.size()));

  int best_degree = -1;
  double best_entropy = std::numeric_limits<double>::infinity();
  if (diagnostics) *diagnostics = SplineFitDiagnostics{};

  for (int deg = order + 1; deg <= max_degree; ++deg) {
    double count = 1.0;
    for (Eigen::Index j = 0; j < dims; ++j) count *= deg;
    if (count > static_cast<double>(min_train)) {
      // more basis functions than training rows: Gram is rank-deficient
      if (diagnostics) diagnostics->skipped_degrees.push_back(deg);
      continue;
    }

    std::fill(spec.degrees_per_dim.begin(), spec.degrees_per_dim.end(), deg);
    Eigen::MatrixXd B;
    try {
      B = bspline_basis(inputs, spec);
    } catch (const std::exception&) {
      if (diagnostics) diagnostics->skipped_degrees.push_back(deg);
      continue;
    }

    double loss_sum = 0.0, weight_sum = 0.0;
    bool failed = false;
    for (int f = 0; f < folds && !failed; ++f) {
      const auto& tr = train[static_cast<std::size_t>(f)];
      const auto& he = held[static_cast<std::size_t>(f)];
      Eigen::MatrixXd Bt(static_cast<Eigen::Index>(tr.size()), B.cols());
      Eigen::ArrayXd yt(static_cast<Eigen::Index>(tr.size()));
      Eigen::ArrayXd wt(static_cast<Eigen::Index>(tr.size()));
      for (std::size_t r = 0; r < tr.size(); ++r) {
        Bt.row(static_cast<Eigen::Index>(r)) = B.row(tr[r]);
        yt(static_cast<Eigen::Index>(r)) = response(tr[r]);
        wt(static_cast<Eigen::Index>(r)) = w(tr[r]);
      }
      try {
        const Eigen::VectorXd beta = newton_logistic(Bt, yt, wt);
        for (const Eigen::Index i : he) {
          const double eta = B.row(i) * beta;
          loss_sum += w(i) * entropy_loss(response(i), eta);
          weight_sum += w(i);
        }
      } catch (const FitError&) {
        failed = true;
      }
    }
    if (failed || !(weight_sum > 0.0)) {
      if (diagnostics) diagnostics->skipped_degrees.push_back(deg);
      continue;
    }
    const double entropy = loss_sum / weight_sum;
    if (diagnostics) {
      diagnostics->candidates.push_back(deg);
      diagnostics->cv_entropy.push_back(entropy);
    }
    if (entropy < best_entropy) {
      best_entropy = entropy;
      best_degree = deg;
    }
  }

  if (best_degree < 0)
    throw FitError("fit_spline_nuisance: every candidate degree failed");

  std::fill(spec.degrees_per_dim.begin(), spec.degrees_per_dim.end(), best_degree);
  const Eigen::MatrixXd B = bspline_basis(inputs, spec);
  SplineModel model;
  model.basis_spec = spec;
  model.coefficients = newton_logistic(B, response, w);
  model.truncation_M = M;
  if (diagnostics) diagnostics->selected_degree = best_degree;
  return model;
}

Eigen::ArrayXd predict_spline(const SplineModel& model, const Eigen::MatrixXd& inputs,
                              std::pair<double, double> clamp) {
  const Eigen::MatrixXd B = bspline_basis(inputs, model.basis_spec);
  Eigen::ArrayXd p = sigmoid((B * model.coefficients).array());
  return p.max(clamp.first).min(clamp.second);
}

}  // namespace smmal
