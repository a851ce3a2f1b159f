#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fieldst/dataset.hpp"
#include "fieldst/train.hpp"

namespace fieldst {

// Mean over samples of the mean absolute pixel error.
double mae(const std::vector<std::vector<double>>& predictions,
           const std::vector<std::vector<double>>& truths);

double median(std::vector<double> values);

// Test-time metric: predictions and truths compared in de-normalized
// (physical) units.
double evaluate_mae(const DenseNet& net, const std::vector<Sample>& samples,
                    const Normalization& norm);

// Same, against the per-pixel mean of an ensemble's predictions.
double evaluate_ensemble_mae(const std::vector<DenseNet>& nets,
                             const std::vector<Sample>& samples, const Normalization& norm);

// Pseudo-label quality against the ground truth retained on unlabeled
// samples, in de-normalized units.
double pseudo_label_mae(const PseudoLabelSet& pseudo,
                        const std::vector<Sample>& unlabeled, const Normalization& norm);

enum class Aggregate { median, mean };

Aggregate aggregate_from_string(std::string_view name);
std::string to_string(Aggregate aggregate);

// Label-budget protocol: for every (method, budget, seed) cell, train on the
// first `budget` entries of a per-seed permutation of the labeled pool
// (subsets are nested across budgets) and evaluate on the fixed test split.
struct ProtocolSpec {
  std::vector<int> label_budgets;
  std::vector<Method> methods;
  std::vector<uint64_t> seeds;
  Aggregate aggregate = Aggregate::median;
  TrainConfig base;
  int jobs = 1;
};

struct CellResult {
  Method method = Method::supervised;
  int budget = 0;
  uint64_t seed = 0;
  double mae = 0.0;
  bool ok = false;
  std::string error;
};

struct ResultTable {
  std::vector<CellResult> cells;
  Aggregate aggregate = Aggregate::median;
  uint64_t dataset_hash = 0;
  uint64_t config_hash = 0;

  // Aggregate over the cell's successful seeds; NaN when none succeeded.
  double aggregate_mae(Method method, int budget) const;
  bool all_ok() const;
};

// Indices of the labeled subset for a budget; the subset for budget b is a
// prefix of the subset for any larger budget under the same seed.
std::vector<int> nested_budget_indices(size_t pool_size, int budget, uint64_t seed);

// Failures are recorded per cell and the run continues.
ResultTable run_protocol(const Dataset& dataset, const ProtocolSpec& spec);

std::string result_table_csv(const ResultTable& table);
std::string result_table_summary_json(const ResultTable& table);
void save_result_table(const ResultTable& table, const std::filesystem::path& csv_path,
                       const std::filesystem::path& json_path);

// --- Ablation harnesses -----------------------------------------------
// All ablations run at the first budget of spec.label_budgets (the full
// labeled pool when the list is empty), one row per (point, seed).

// Ensemble-size sweep, the pipeline run without uncertainty weighting:
// pseudo-label MAE (vs retained unlabeled truth), pre-trained student MAE
// and fine-tuned student MAE, per ensemble size.
struct EnsembleAblationRow {
  int ensemble_size = 0;
  uint64_t seed = 0;
  double pseudo_mae = 0.0;
  double pt_student_mae = 0.0;
  double uge_st_mae = 0.0;
};

struct EnsembleAblation {
  std::vector<EnsembleAblationRow> rows;
  Aggregate aggregate = Aggregate::median;

  double aggregate_pseudo(int n) const;
  double aggregate_pt(int n) const;
  double aggregate_uge(int n) const;
};

EnsembleAblation ablate_ensemble(const Dataset& dataset, const std::vector<int>& sizes,
                                 const ProtocolSpec& spec);

// Single-teacher arms: teacher prediction, vanilla self-training, pre-trained
// student, and fine-tuned student, all on the test split.
struct PretrainAblationRow {
  uint64_t seed = 0;
  double pseudo_mae = 0.0;
  double self_training_mae = 0.0;
  double pt_student_mae = 0.0;
  double uge_st_mae = 0.0;
};

struct PretrainAblation {
  std::vector<PretrainAblationRow> rows;
  Aggregate aggregate = Aggregate::median;

  double aggregate_pseudo() const;
  double aggregate_self_training() const;
  double aggregate_pt() const;
  double aggregate_uge() const;
};

PretrainAblation ablate_pretrain(const Dataset& dataset, const ProtocolSpec& spec);

// With/without uncertainty weighting at each ensemble size (>= 2). The two
// arms of a pair share their teachers and student init, differing only in
// use_uncertainty.
struct UncertaintyAblationRow {
  int ensemble_size = 0;
  uint64_t seed = 0;
  double pt_with = 0.0;
  double pt_without = 0.0;
  double uge_with = 0.0;
  double uge_without = 0.0;
};

struct UncertaintyAblation {
  std::vector<UncertaintyAblationRow> rows;
  Aggregate aggregate = Aggregate::median;

  double aggregate_pt_with(int n) const;
  double aggregate_pt_without(int n) const;
  double aggregate_uge_with(int n) const;
  double aggregate_uge_without(int n) const;
};

UncertaintyAblation ablate_uncertainty(const Dataset& dataset, const std::vector<int>& sizes,
                                       const ProtocolSpec& spec);

std::string ensemble_ablation_csv(const EnsembleAblation& ablation);
std::string pretrain_ablation_csv(const PretrainAblation& ablation);
std::string uncertainty_ablation_csv(const UncertaintyAblation& ablation);

}  // namespace fieldst
