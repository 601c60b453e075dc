#include "smmal/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "smmal/glm.hpp"
#include "smmal/rng.hpp"
#include "smmal/splines.hpp"

namespace smmal {

std::string method_name(Method m) {
  switch (m) {
    case Method::smmal_spline: return "smmal_spline";
    case Method::smmal_dr: return "smmal_dr";
    case Method::dml_supervised: return "dml_supervised";
    case Method::dr_supervised: return "dr_supervised";
  }
  return "unknown";
}

Method method_from_name(const std::string& name) {
  if (name == "smmal_spline") return Method::smmal_spline;
  if (name == "smmal_dr") return Method::smmal_dr;
  if (name == "dml_supervised") return Method::dml_supervised;
  if (name == "dr_supervised") return Method::dr_supervised;
  throw std::invalid_argument("unknown method: " + name);
}

std::string flags_name(ModelFlags flags) {
  switch (flags) {
    case ModelFlags::correct_both: return "correct_both";
    case ModelFlags::wrong_ps: return "wrong_ps";
    case ModelFlags::wrong_or: return "wrong_or";
  }
  return "unknown";
}

ModelFlags flags_from_name(const std::string& name) {
  if (name == "correct_both") return ModelFlags::correct_both;
  if (name == "wrong_ps") return ModelFlags::wrong_ps;
  if (name == "wrong_or") return ModelFlags::wrong_or;
  throw std::invalid_argument("unknown model flags: " + name);
}

std::vector<CellInfo> expand_cells(const ExperimentConfig& config) {
  std::vector<CellInfo> cells;
  int index = 0;
  for (const ModelFlags flags : config.flag_variants) {
    for (const CellSpec& cell : config.cells) {
      CellInfo info;
      info.index = index++;
      info.flags = flags;
      info.cell = cell;
      if (config.scenario == Scenario::lowdim) {
        info.ate_truth = 0.0;
        info.scenario_label = "lowdim";
      } else {
        info.ate_truth = highdim_ate_frozen(flags);
        info.scenario_label = "highdim:" + flags_name(flags);
      }
      cells.push_back(info);
    }
  }
  return cells;
}

namespace {

AteEstimate run_method(Method method, const SemiSupervisedDataset& data,
                       const ExperimentConfig& config, std::uint64_t seed) {
  switch (method) {
    case Method::smmal_spline: {
      const FoldPlan plan = assign_folds(data.n_rows(), config.K, derive_seed(seed, 1));
      const NuisancePredictions preds =
          crossfit_lowdim(data, plan, config.lowdim_cfg, derive_seed(seed, 2));
      return smmal_estimate(data, preds, config.alpha);
    }
    case Method::smmal_dr: {
      const FoldPlan plan = assign_folds(data.n_rows(), config.K, derive_seed(seed, 1));
      const NuisancePredictions preds =
          crossfit_dr(data, plan, config.dr_cfg, config.bound_M, derive_seed(seed, 2));
      return smmal_estimate(data, preds, config.alpha);
    }
    case Method::dml_supervised: {
      const SemiSupervisedDataset labeled = labeled_subset(data);
      return supervised_dml_estimate(labeled, config.K, config.lowdim_cfg,
                                     config.alpha, seed);
    }
    case Method::dr_supervised: {
      const SemiSupervisedDataset labeled = labeled_subset(data);
      return supervised_dr_estimate(labeled, config.K, config.dr_cfg, config.bound_M,
                                    config.alpha, seed);
    }
  }
  throw std::logic_error("unreachable method");
}

std::pair<SemiSupervisedDataset, TruthRecord> generate_cell_dataset(
    const ExperimentConfig& config, const CellInfo& cell, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.scenario = config.scenario;
  spec.flags = cell.flags;
  spec.N = config.N;
  spec.n_labels = config.n_labels;
  spec.p = config.p;
  spec.seed = seed;
  SurrogateSpec surrogates{surrogate_alpha_for_auc(cell.cell.auc_A),
                           surrogate_alpha_for_auc(cell.cell.auc_Y)};
  return config.scenario == Scenario::lowdim ? gen_lowdim(spec, surrogates)
                                             : gen_highdim(spec, surrogates);
}

}  // namespace

std::vector<ReplicationRecord> run_replication(const ExperimentConfig& config,
                                               int cell_index, int replicate) {
  const std::vector<CellInfo> cells = expand_cells(config);
  if (cell_index < 0 || cell_index >= static_cast<int>(cells.size()))
    throw std::invalid_argument("run_replication: cell index out of range");
  const CellInfo& cell = cells[static_cast<std::size_t>(cell_index)];
  const std::uint64_t dataset_seed =
      derive_seed(config.base_seed, static_cast<std::uint64_t>(cell_index),
                  static_cast<std::uint64_t>(replicate), 0xda7aULL);

  std::vector<ReplicationRecord> records;
  records.reserve(config.methods.size());

  SemiSupervisedDataset data;
  bool generated = false;
  std::string gen_error;
  try {
    data = generate_cell_dataset(config, cell, dataset_seed).first;
    generated = true;
  } catch (const std::exception& e) {
    gen_error = std::string("dataset generation failed: ") + e.what();
  }

  for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
    const Method method = config.methods[mi];
    ReplicationRecord rec;
    rec.cell = cell_index;
    rec.replicate = replicate;
    rec.seed = dataset_seed;
    rec.method = method;
    rec.N = config.N;
    if (!generated) {
      rec.success = false;
      rec.error = gen_error;
      records.push_back(rec);
      continue;
    }
    const std::uint64_t method_seed =
        derive_seed(dataset_seed, 0x3e7ULL, static_cast<std::uint64_t>(mi));
    const auto start = std::chrono::steady_clock::now();
    try {
      const AteEstimate est = run_method(method, data, config, method_seed);
      rec.success = true;
      rec.point = est.point;
      rec.variance_scaled = est.variance_scaled;
      rec.ci_lower = est.ci_lower;
      rec.ci_upper = est.ci_upper;
      rec.n = est.n_labeled;
    } catch (const std::exception& e) {
      rec.success = false;
      rec.error = e.what();
    }
    rec.elapsed_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    records.push_back(rec);
  }
  return records;
}

namespace {

Method designated_benchmark(Method method, const std::vector<Method>& methods) {
  const auto present = [&](Method m) {
    for (const Method mm : methods)
      if (mm == m) return true;
    return false;
  };
  Method want = method;
  if (method == Method::smmal_spline) want = Method::dml_supervised;
  if (method == Method::smmal_dr) want = Method::dr_supervised;
  if (present(want)) return want;
  if (present(Method::dml_supervised)) return Method::dml_supervised;
  if (present(Method::dr_supervised)) return Method::dr_supervised;
  return method;
}

struct MethodStats {
  int n_success = 0;
  double mean = 0.0;
  double sd = std::numeric_limits<double>::quiet_NaN();
  double avg_se = std::numeric_limits<double>::quiet_NaN();
  double coverage = std::numeric_limits<double>::quiet_NaN();
};

MethodStats collect(const std::vector<ReplicationRecord>& records, int cell,
                    Method method, double truth) {
  std::vector<double> points, ses;
  int covered = 0;
  for (const ReplicationRecord& r : records) {
    if (r.cell != cell || r.method != method || !r.success) continue;
    points.push_back(r.point);
    ses.push_back(std::sqrt(r.variance_scaled / static_cast<double>(r.n)));
    if (r.ci_lower <= truth && truth <= r.ci_upper) ++covered;
  }
  MethodStats s;
  s.n_success = static_cast<int>(points.size());
  if (s.n_success == 0) return s;
  double acc = 0.0;
  for (const double p : points) acc += p;
  s.mean = acc / points.size();
  if (s.n_success >= 2) {
    double ss = 0.0;
    for (const double p : points) ss += (p - s.mean) * (p - s.mean);
    s.sd = std::sqrt(ss / (points.size() - 1));
  }
  double se_acc = 0.0;
  for (const double se : ses) se_acc += se;
  s.avg_se = se_acc / ses.size();
  s.coverage = static_cast<double>(covered) / points.size();
  return s;
}

}  // namespace

std::vector<MetricsRow> summarize(const std::vector<ReplicationRecord>& records,
                                  const CellInfo& cell,
                                  const std::vector<Method>& methods) {
  std::vector<MetricsRow> rows;
  for (const Method method : methods) {
    const MethodStats stats = collect(records, cell.index, method, cell.ate_truth);
    MetricsRow row;
    row.method = method;
    row.scenario = cell.scenario_label;
    row.auc_A = cell.cell.auc_A;
    row.auc_Y = cell.cell.auc_Y;
    row.n_success = stats.n_success;
    if (stats.n_success < 2) {
      // insufficient cell: metrics are NaN but the row (with its success
      // count) is still reported
      row.bias = row.sd = row.avg_se = row.coverage = row.rel_efficiency =
          std::numeric_limits<double>::quiet_NaN();
      rows.push_back(row);
      continue;
    }
    row.bias = stats.mean - cell.ate_truth;
    row.sd = stats.sd;
    row.avg_se = stats.avg_se;
    row.coverage = stats.coverage;
    const Method bench = designated_benchmark(method, methods);
    const MethodStats bstats =
        bench == method ? stats : collect(records, cell.index, bench, cell.ate_truth);
    row.rel_efficiency = (bstats.n_success >= 2 && row.sd > 0.0)
                             ? (bstats.sd * bstats.sd) / (row.sd * row.sd)
                             : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  }
  return rows;
}

namespace {

int resolve_threads(int configured) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  int t = configured > 0 ? configured : static_cast<int>(hw);
  if (const char* env = std::getenv("SMMAL_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) t = std::min(t, cap);
  }
  return std::max(1, t);
}

}  // namespace

StudyResult run_study(const ExperimentConfig& config) {
  if (config.replications < 1)
    throw std::invalid_argument("run_study: replications must be >= 1");
  if (config.methods.empty())
    throw std::invalid_argument("run_study: methods must be nonempty");

  StudyResult result;
  result.cells = expand_cells(config);
  const int n_cells = static_cast<int>(result.cells.size());
  const int tasks = n_cells * config.replications;
  std::vector<std::vector<ReplicationRecord>> slots(static_cast<std::size_t>(tasks));

  const int workers = std::min(resolve_threads(config.threads), tasks);
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= tasks) return;
      const int cell = t / config.replications;
      const int rep = t % config.replications;
      slots[static_cast<std::size_t>(t)] = run_replication(config, cell, rep);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (std::thread& th : pool) th.join();
  }

  for (const auto& slot : slots)
    result.records.insert(result.records.end(), slot.begin(), slot.end());

  for (const CellInfo& cell : result.cells) {
    const std::vector<MetricsRow> rows = summarize(result.records, cell, config.methods);
    result.metrics.insert(result.metrics.end(), rows.begin(), rows.end());
  }
  return result;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_metrics_csv(const StudyResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "method,scenario,auc_a,auc_y,bias,sd,avg_se,coverage,rel_eff,n_success\n";
  for (const MetricsRow& row : result.metrics) {
    out << method_name(row.method) << ',' << row.scenario << ',' << fmt17(row.auc_A)
        << ',' << fmt17(row.auc_Y) << ',' << fmt17(row.bias) << ',' << fmt17(row.sd)
        << ',' << fmt17(row.avg_se) << ',' << fmt17(row.coverage) << ','
        << fmt17(row.rel_efficiency) << ',' << row.n_success << "\n";
  }
}

void write_records_jsonl(const StudyResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const ReplicationRecord& rec : result.records) {
    const CellInfo& cell = result.cells[static_cast<std::size_t>(rec.cell)];
    nlohmann::json j{{"cell", rec.cell},
                     {"scenario", cell.scenario_label},
                     {"auc_a", cell.cell.auc_A},
                     {"auc_y", cell.cell.auc_Y},
                     {"ate_truth", cell.ate_truth},
                     {"replicate", rec.replicate},
                     {"seed", rec.seed},
                     {"method", method_name(rec.method)},
                     {"success", rec.success},
                     {"elapsed_ms", rec.elapsed_ms}};
    if (rec.success) {
      j["point"] = rec.point;
      j["variance_scaled"] = rec.variance_scaled;
      j["ci"] = {rec.ci_lower, rec.ci_upper};
      j["n"] = rec.n;
      j["N"] = rec.N;
    } else {
      j["error"] = rec.error;
    }
    out << j.dump() << "\n";
  }
}

void write_long_csv(const StudyResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "method,scenario,auc_a,auc_y,rel_eff\n";
  for (const MetricsRow& row : result.metrics)
    out << method_name(row.method) << ',' << row.scenario << ',' << fmt17(row.auc_A)
        << ',' << fmt17(row.auc_Y) << ',' << fmt17(row.rel_efficiency) << "\n";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (const char c : s) {
    if (c == ',') {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  const std::string last = trim(cur);
  if (!last.empty()) parts.push_back(last);
  return parts;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected boolean, got: " + v);
}

}  // namespace

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  ExperimentConfig config;
  bool cells_set = false, methods_set = false, flags_set = false;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "scenario") {
      if (value == "lowdim")
        config.scenario = Scenario::lowdim;
      else if (value == "highdim")
        config.scenario = Scenario::highdim;
      else
        throw std::runtime_error("unknown scenario: " + value);
    } else if (key == "model_flags") {
      config.flag_variants.clear();
      for (const std::string& f : split_list(value))
        config.flag_variants.push_back(flags_from_name(f));
      flags_set = true;
    } else if (key == "N") {
      config.N = std::stoll(value);
    } else if (key == "n_labels") {
      config.n_labels = std::stoll(value);
    } else if (key == "p") {
      config.p = std::stoi(value);
    } else if (key == "cells") {
      config.cells.clear();
      for (const std::string& pair : split_list(value)) {
        const auto slash = pair.find('/');
        if (slash == std::string::npos)
          throw std::runtime_error("cells entries must be aucA/aucY, got: " + pair);
        CellSpec cell;
        cell.auc_A = std::stod(pair.substr(0, slash));
        cell.auc_Y = std::stod(pair.substr(slash + 1));
        config.cells.push_back(cell);
      }
      cells_set = true;
    } else if (key == "methods") {
      config.methods.clear();
      for (const std::string& m : split_list(value))
        config.methods.push_back(method_from_name(m));
      methods_set = true;
    } else if (key == "replications") {
      config.replications = std::stoi(value);
    } else if (key == "base_seed") {
      config.base_seed = std::stoull(value);
    } else if (key == "K") {
      config.K = std::stoi(value);
    } else if (key == "alpha") {
      config.alpha = std::stod(value);
    } else if (key == "bound_M") {
      config.bound_M = std::stod(value);
    } else if (key == "output_prefix") {
      config.output_prefix = value;
    } else if (key == "threads") {
      config.threads = std::stoi(value);
    } else if (key == "long_format") {
      config.long_format = parse_bool(value);
    } else if (key == "spline_order") {
      config.lowdim_cfg.order = std::stoi(value);
    } else if (key == "spline_max_degree_x") {
      config.lowdim_cfg.max_degree_x = std::stoi(value);
    } else if (key == "spline_max_degree_w") {
      config.lowdim_cfg.max_degree_w = std::stoi(value);
    } else if (key == "spline_cv_folds") {
      config.lowdim_cfg.cv_folds = std::stoi(value);
    } else if (key == "spline_clamp_M") {
      config.lowdim_cfg.ps_clamp_M = std::stod(value);
    } else if (key == "lasso_grid_size") {
      config.dr_cfg.lambda_grid_size = std::stoi(value);
    } else if (key == "lasso_lambda_min_ratio") {
      config.dr_cfg.lambda_min_ratio = std::stod(value);
    } else if (key == "lasso_cv_folds") {
      config.dr_cfg.cv_folds = std::stoi(value);
    } else if (key == "lasso_tolerance") {
      config.dr_cfg.tolerance = std::stod(value);
    } else if (key == "lasso_max_iterations") {
      config.dr_cfg.max_iterations = std::stoi(value);
    } else {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": unknown config key: " + key);
    }
  }
  if (!cells_set && config.scenario == Scenario::highdim)
    config.cells = {CellSpec{0.95, 0.95}};
  if (!flags_set) config.flag_variants = {ModelFlags::correct_both};
  if (!methods_set && config.scenario == Scenario::highdim)
    config.methods = {Method::smmal_dr, Method::dr_supervised};
  return config;
}

// ---------------------------------------------------------------------------
// validate: quick invariant suites

namespace {

bool suite_line(std::ostream& out, const std::string& name, bool ok,
                const std::string& detail = "") {
  out << (ok ? "[ok]  " : "[FAIL] ") << name;
  if (!detail.empty()) out << " - " << detail;
  out << "\n";
  return ok;
}

bool validate_glm_basics(std::ostream& out) {
  bool ok = std::abs(sigmoid(0.0) - 0.5) < 1e-15;
  Rng rng(7);
  for (int i = 0; i < 200 && ok; ++i) {
    const double x = (rng.uniform() - 0.5) * 40.0;
    ok = std::abs(sigmoid(x) + sigmoid(-x) - 1.0) < 1e-12;
    const double t = truncate_tau(x, 1.0);
    ok = ok && std::abs(truncate_tau(t, 1.0) - t) < 1e-15 && std::abs(t) <= 2.0;
    ok = ok && std::abs(truncate_tau(-x, 1.0) + t) < 1e-15;
  }
  return suite_line(out, "glm basics (sigmoid/tau identities)", ok);
}

bool validate_datasets(std::ostream& out) {
  ScenarioSpec low;
  low.N = 400;
  low.n_labels = 60;
  low.seed = 11;
  const auto [ld, lt] = gen_lowdim(low, SurrogateSpec{2.99, 2.99});
  bool ok = validate_dataset(ld).pass();
  ok = ok && std::abs(labeled_fraction(ld).rho_hat - 60.0 / 400.0) < 1e-15;

  ScenarioSpec high;
  high.scenario = Scenario::highdim;
  high.N = 300;
  high.n_labels = 80;
  high.p = 5;
  high.seed = 12;
  const auto [hd, ht] = gen_highdim(high, SurrogateSpec{2.99, 2.99});
  ok = ok && validate_dataset(hd).pass();
  return suite_line(out, "datasets (generators satisfy invariants)", ok);
}

bool validate_splines(std::ostream& out, bool quick) {
  Rng rng(13);
  bool ok = true;
  const int points = quick ? 400 : 2000;
  for (int rep = 0; rep < points && ok; ++rep) {
    const int dims = 1 + static_cast<int>(rng.below(3));
    const int deg = 2 + static_cast<int>(rng.below(4));
    SplineBasisSpec spec;
    spec.order = 1;
    spec.degrees_per_dim.assign(static_cast<std::size_t>(dims), deg);
    for (int j = 0; j < dims; ++j) spec.domain_box.push_back({0.0, 1.0});
    Eigen::MatrixXd x(1, dims);
    for (int j = 0; j < dims; ++j) x(0, j) = rng.uniform();
    const Eigen::MatrixXd b = bspline_basis(x, spec);
    ok = std::abs(b.row(0).sum() - 1.0) < 1e-12 && (b.array() >= 0.0).all();
  }
  return suite_line(out, "splines (partition of unity)", ok);
}

bool validate_folds(std::ostream& out) {
  const FoldPlan plan = assign_folds(101, 10, 3);
  std::vector<int> sizes(10, 0);
  for (Eigen::Index i = 0; i < 101; ++i) ++sizes[static_cast<std::size_t>(plan.assignment(i))];
  bool ok = true;
  for (const int s : sizes) ok = ok && (s == 10 || s == 11);
  const FoldPlan again = assign_folds(101, 10, 3);
  ok = ok && (plan.assignment == again.assignment).all();
  return suite_line(out, "folds (balance and determinism)", ok);
}

bool validate_kkt(std::ostream& out, bool quick) {
  Rng rng(17);
  bool ok = true;
  const int fits = quick ? 8 : 24;
  for (int rep = 0; rep < fits && ok; ++rep) {
    const Eigen::Index n = 40 + static_cast<Eigen::Index>(rng.below(40));
    const Eigen::Index d = 3 + static_cast<Eigen::Index>(rng.below(5));
    Eigen::MatrixXd design(n, d);
    design.col(0).setOnes();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 1; j < d; ++j) design(i, j) = rng.normal();
    Eigen::ArrayXd y(n);
    for (Eigen::Index i = 0; i < n; ++i)
      y(i) = rng.uniform() < sigmoid(design(i, 1)) ? 1.0 : 0.0;
    FitSpec spec;
    spec.tolerance = 1e-8;
    const double lambda = 0.02 + 0.2 * rng.uniform();
    try {
      const SparseLinearModel fit = fit_lasso_logistic(design, y, spec, lambda);
      GlmProblem problem;
      problem.design = design;
      problem.response = y;
      problem.weights = Eigen::ArrayXd::Ones(n);
      problem.normalizer = static_cast<double>(n);
      Eigen::ArrayXd penalty = Eigen::ArrayXd::Ones(d);
      penalty(0) = 0.0;
      ok = kkt_residual(problem, penalty, lambda, fit.coefficients) <= 1e-6;
    } catch (const FitError&) {
      ok = false;
    }
  }
  return suite_line(out, "glm fits (KKT certificates)", ok);
}

bool validate_reduction(std::ostream& out, bool quick) {
  Rng rng(19);
  bool ok = true;
  const int fixtures = quick ? 20 : 100;
  for (int rep = 0; rep < fixtures && ok; ++rep) {
    const Eigen::Index n = 30;
    SemiSupervisedDataset data;
    data.label_flag = Eigen::ArrayXi::Ones(n);
    data.treatment = MaskedColumn::absent(n);
    data.outcome = MaskedColumn::absent(n);
    data.confounders = Eigen::MatrixXd::Ones(n, 2);
    data.surrogates = Eigen::MatrixXd::Zero(n, 1);
    NuisancePredictions preds;
    preds.ps.resize(n, 2);
    preds.outcome_reg.resize(n, 2);
    preds.imputed_ps.resize(n, 2);
    preds.imputed_outcome.resize(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      data.treatment.set(i, rng.uniform() < 0.5 ? 1.0 : 0.0);
      data.outcome.set(i, rng.uniform() < 0.5 ? 1.0 : 0.0);
      data.confounders(i, 1) = rng.normal();
      const double ps1 = 0.1 + 0.8 * rng.uniform();
      preds.ps(i, 1) = ps1;
      preds.ps(i, 0) = 1.0 - ps1;
      preds.outcome_reg(i, 1) = rng.uniform();
      preds.outcome_reg(i, 0) = rng.uniform();
      preds.imputed_ps(i, 1) = rng.uniform();
      preds.imputed_ps(i, 0) = rng.uniform();
      preds.imputed_outcome(i, 1) = rng.uniform();
      preds.imputed_outcome(i, 0) = rng.uniform();
    }
    const AteEstimate ssl = smmal_estimate(data, preds, 0.05);
    const AteEstimate aipw = aipw_estimate(data, preds, 0.05);
    ok = std::abs(ssl.point - aipw.point) <= 1e-12;
  }
  return suite_line(out, "reduction (all-labeled SMMAL equals AIPW)", ok);
}

bool validate_surrogates(std::ostream& out, bool quick) {
  Rng rng(23);
  const Eigen::Index per_class = quick ? 20000 : 50000;
  std::vector<double> pos, neg;
  pos.reserve(static_cast<std::size_t>(per_class));
  neg.reserve(static_cast<std::size_t>(per_class));
  for (Eigen::Index i = 0; i < per_class; ++i) pos.push_back(sample_surrogate(1, 2.99, rng));
  for (Eigen::Index i = 0; i < per_class; ++i) neg.push_back(sample_surrogate(0, 2.99, rng));
  // rank-based AUC
  std::vector<std::pair<double, int>> all;
  for (const double v : pos) all.push_back({v, 1});
  for (const double v : neg) all.push_back({v, 0});
  std::sort(all.begin(), all.end());
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (all[i].second == 1) rank_sum += static_cast<double>(i + 1);
  const double n1 = static_cast<double>(per_class);
  const double auc = (rank_sum - n1 * (n1 + 1) / 2.0) / (n1 * n1);
  const bool ok = std::abs(auc - 0.95) < 0.02;
  return suite_line(out, "surrogates (AUC calibration spot check)", ok,
                    "empirical AUC " + std::to_string(auc));
}

}  // namespace

bool run_validation(std::ostream& out, bool quick) {
  bool ok = true;
  ok &= validate_glm_basics(out);
  ok &= validate_datasets(out);
  ok &= validate_splines(out, quick);
  ok &= validate_folds(out);
  ok &= validate_kkt(out, quick);
  ok &= validate_reduction(out, quick);
  ok &= validate_surrogates(out, quick);
  out << (ok ? "all invariant suites passed\n" : "invariant suite FAILURES\n");
  return ok;
}

// ---------------------------------------------------------------------------
// CLI

namespace {

int cmd_simulate(const std::string& scenario, const std::string& flags, long long N,
                 long long n_labels, int p, double auc_a, double auc_y,
                 std::uint64_t seed, const std::string& out_path,
                 const std::string& truth_path) {
  ScenarioSpec spec;
  spec.scenario = scenario == "highdim" ? Scenario::highdim : Scenario::lowdim;
  spec.flags = flags_from_name(flags);
  spec.N = N;
  spec.n_labels = n_labels;
  spec.p = p;
  spec.seed = seed;
  SurrogateSpec surrogates{surrogate_alpha_for_auc(auc_a), surrogate_alpha_for_auc(auc_y)};
  const auto [data, truth] = spec.scenario == Scenario::lowdim
                                 ? gen_lowdim(spec, surrogates)
                                 : gen_highdim(spec, surrogates);
  write_dataset_csv(data, out_path);
  if (!truth_path.empty()) {
    nlohmann::json j{{"scenario", scenario},
                     {"flags", flags_name(truth.flags)},
                     {"ate", truth.ate},
                     {"ate_mc_se", truth.ate_mc_se},
                     {"alpha_A", truth.surrogates.alpha_A},
                     {"alpha_Y", truth.surrogates.alpha_Y}};
    std::ofstream tout(truth_path);
    if (!tout) throw std::runtime_error("cannot open for writing: " + truth_path);
    tout << j.dump(2) << "\n";
  }
  std::cout << "wrote " << data.n_rows() << " rows to " << out_path << "\n";
  return 0;
}

int cmd_estimate(const ExperimentConfig& config, const std::string& method_str,
                 const std::string& data_path, std::uint64_t seed) {
  const Method method = method_from_name(method_str);
  const SemiSupervisedDataset data = read_dataset_csv(data_path, config.bound_M);
  const ValidationReport report = validate_dataset(data);
  const bool supervised =
      method == Method::dml_supervised || method == Method::dr_supervised;
  for (const std::string& v : report.violations) {
    // supervised estimators run on all-labeled files, which the SSL
    // labeling invariant intentionally flags
    if (supervised && v.rfind("labeling", 0) == 0) continue;
    throw std::runtime_error("invalid dataset: " + v);
  }
  const AteEstimate est = run_method(method, data, config, seed);
  std::cout << estimate_to_json(est, method_str, seed, data.n_rows()) << "\n";
  return 0;
}

int cmd_study(const std::string& config_path) {
  const ExperimentConfig config = parse_config_file(config_path);
  const StudyResult result = run_study(config);
  const std::string metrics_path = config.output_prefix + "_metrics.csv";
  const std::string jsonl_path = config.output_prefix + "_replications.jsonl";
  write_metrics_csv(result, metrics_path);
  write_records_jsonl(result, jsonl_path);
  if (config.long_format)
    write_long_csv(result, config.output_prefix + "_long.csv");
  std::cout << "study complete: " << result.records.size() << " records, metrics in "
            << metrics_path << "\n";
  for (const MetricsRow& row : result.metrics)
    std::printf("  %-16s %-22s auc=(%.3g,%.3g) bias=%+.4f sd=%.4f cover=%.3f re=%.3f ok=%d\n",
                method_name(row.method).c_str(), row.scenario.c_str(), row.auc_A,
                row.auc_Y, row.bias, row.sd, row.coverage, row.rel_efficiency,
                row.n_success);
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"SMMAL: semi-supervised ATE estimation and simulation studies"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a dataset CSV (+ truth JSON)");
  std::string sim_scenario = "lowdim", sim_flags = "correct_both";
  long long sim_N = 10000, sim_n = 500;
  int sim_p = 100;
  double sim_auc_a = 0.95, sim_auc_y = 0.95;
  std::uint64_t sim_seed = 1;
  std::string sim_out = "data.csv", sim_truth;
  sim->add_option("--scenario", sim_scenario)->check(CLI::IsMember({"lowdim", "highdim"}));
  sim->add_option("--flags", sim_flags)
      ->check(CLI::IsMember({"correct_both", "wrong_ps", "wrong_or"}));
  sim->add_option("--N", sim_N);
  sim->add_option("--n", sim_n);
  sim->add_option("--p", sim_p);
  sim->add_option("--auc-a", sim_auc_a);
  sim->add_option("--auc-y", sim_auc_y);
  sim->add_option("--seed", sim_seed);
  sim->add_option("--out", sim_out)->required();
  sim->add_option("--truth-out", sim_truth);

  // estimate
  auto* est = app.add_subcommand("estimate", "run one method on a dataset file");
  std::string est_method, est_data;
  std::uint64_t est_seed = 1;
  ExperimentConfig est_cfg;
  est->add_option("--method", est_method)->required();
  est->add_option("--data", est_data)->required();
  est->add_option("--K", est_cfg.K);
  est->add_option("--alpha", est_cfg.alpha);
  est->add_option("--seed", est_seed);
  est->add_option("--bound-M", est_cfg.bound_M);
  est->add_option("--spline-order", est_cfg.lowdim_cfg.order);
  est->add_option("--spline-max-degree-x", est_cfg.lowdim_cfg.max_degree_x);
  est->add_option("--spline-max-degree-w", est_cfg.lowdim_cfg.max_degree_w);
  est->add_option("--spline-cv-folds", est_cfg.lowdim_cfg.cv_folds);
  est->add_option("--lasso-grid", est_cfg.dr_cfg.lambda_grid_size);
  est->add_option("--lasso-min-ratio", est_cfg.dr_cfg.lambda_min_ratio);
  est->add_option("--lasso-cv-folds", est_cfg.dr_cfg.cv_folds);

  // study
  auto* study = app.add_subcommand("study", "run a full study grid from a config file");
  std::string study_config;
  study->add_option("--config", study_config)->required();

  // validate
  auto* val = app.add_subcommand("validate", "run the invariant suites");
  bool val_quick = false;
  val->add_flag("--quick", val_quick);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(sim))
      return cmd_simulate(sim_scenario, sim_flags, sim_N, sim_n, sim_p, sim_auc_a,
                          sim_auc_y, sim_seed, sim_out, sim_truth);
    if (app.got_subcommand(est)) return cmd_estimate(est_cfg, est_method, est_data, est_seed);
    if (app.got_subcommand(study)) return cmd_study(study_config);
    if (app.got_subcommand(val))
      return run_validation(std::cout, val_quick) ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace smmal
