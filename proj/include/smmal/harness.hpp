#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "smmal/crossfit.hpp"
#include "smmal/dgp.hpp"
#include "smmal/estimators.hpp"

namespace smmal {

enum class Method { smmal_spline, smmal_dr, dml_supervised, dr_supervised };

std::string method_name(Method m);
Method method_from_name(const std::string& name);
std::string flags_name(ModelFlags flags);
ModelFlags flags_from_name(const std::string& name);

struct CellSpec {
  double auc_A = 0.95;
  double auc_Y = 0.95;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::lowdim;
  std::vector<ModelFlags> flag_variants = {ModelFlags::correct_both};
  Eigen::Index N = 10000;
  Eigen::Index n_labels = 500;
  int p = 100;  // highdim only
  std::vector<CellSpec> cells = {CellSpec{}};
  std::vector<Method> methods = {Method::smmal_spline, Method::dml_supervised};
  int replications = 1;
  std::uint64_t base_seed = 1;
  int K = 10;
  double alpha = 0.05;
  double bound_M = 1.0;
  std::string output_prefix = "smmal_study";
  int threads = 0;  // 0 = available parallelism (capped by SMMAL_THREADS)
  bool long_format = false;
  LowdimLearnerConfig lowdim_cfg;
  DrLearnerConfig dr_cfg;
};

/// One flattened grid cell: a model-flag variant plus a surrogate AUC pair.
struct CellInfo {
  int index = 0;
  ModelFlags flags = ModelFlags::correct_both;
  CellSpec cell;
  double ate_truth = 0.0;
  std::string scenario_label;
};

struct ReplicationRecord {
  int cell = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  Method method = Method::smmal_spline;
  bool success = false;
  std::string error;
  double point = 0.0;
  double variance_scaled = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  Eigen::Index n = 0;
  Eigen::Index N = 0;
  double elapsed_ms = 0.0;
};

struct MetricsRow {
  Method method = Method::smmal_spline;
  std::string scenario;
  double auc_A = 0.0;
  double auc_Y = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  double avg_se = 0.0;
  double coverage = 0.0;
  double rel_efficiency = 1.0;
  int n_success = 0;
};

struct StudyResult {
  std::vector<CellInfo> cells;
  std::vector<ReplicationRecord> records;  // ordered by (cell, replicate, method)
  std::vector<MetricsRow> metrics;
};

std::vector<CellInfo> expand_cells(const ExperimentConfig& config);

/// Generates the replicate's dataset (seed = mix of base seed, cell and
/// replicate) and runs every requested method; a failing method records a
/// diagnostic without disturbing the others.
std::vector<ReplicationRecord> run_replication(const ExperimentConfig& config,
                                               int cell_index, int replicate);

/// bias / sd / average SE / coverage / relative efficiency per method within
/// one cell. Cells with fewer than 2 successes are marked insufficient
/// (NaN metrics, n_success kept).
std::vector<MetricsRow> summarize(const std::vector<ReplicationRecord>& records,
                                  const CellInfo& cell,
                                  const std::vector<Method>& methods);

/// Full grid with replication-level parallelism; records are reduced in
/// replicate order so output is independent of scheduling.
StudyResult run_study(const ExperimentConfig& config);

void write_metrics_csv(const StudyResult& result, const std::string& path);
void write_records_jsonl(const StudyResult& result, const std::string& path);
void write_long_csv(const StudyResult& result, const std::string& path);

/// `key = value` configuration file; '#' starts a comment.
ExperimentConfig parse_config_file(const std::string& path);

/// Invariant suites behind the `validate` subcommand; returns true when all
/// suites pass.
bool run_validation(std::ostream& out, bool quick);

int cli_main(int argc, const char* const* argv);

}  // namespace smmal
