#include "fieldst/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fieldst/bytes.hpp"
#include "fieldst/hash.hpp"
#include "fieldst/parallel.hpp"
#include "fieldst/rng.hpp"

namespace fieldst {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex64(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double aggregate_values(std::vector<double> values, Aggregate how) {
  if (values.empty()) return kNan;
  if (how == Aggregate::mean)
    return std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  return median(std::move(values));
}

// Batched predictions for a split, written per sample.
std::vector<std::vector<double>> predict_all(const DenseNet& net,
                                             const std::vector<Sample>& samples) {
  const int in = net.input_size(), out = net.output_size();
  std::vector<std::vector<double>> preds(samples.size());
  constexpr int kChunk = 32;
  std::vector<double> x;
  BatchWorkspace ws;
  for (size_t start = 0; start < samples.size(); start += kChunk) {
    const int batch = static_cast<int>(std::min<size_t>(kChunk, samples.size() - start));
    x.resize(static_cast<size_t>(batch) * in);
    for (int s = 0; s < batch; ++s) {
      const auto& obs = samples[start + static_cast<size_t>(s)].observation;
      if (static_cast<int>(obs.size()) != in)
        throw std::invalid_argument("observation length does not match net input");
      std::copy(obs.begin(), obs.end(), x.begin() + static_cast<size_t>(s) * in);
    }
    forward_batch(net, x, batch, ws);
    for (int s = 0; s < batch; ++s)
      preds[start + static_cast<size_t>(s)]
          .assign(ws.acts.back().begin() + static_cast<size_t>(s) * out,
                  ws.acts.back().begin() + static_cast<size_t>(s + 1) * out);
  }
  return preds;
}

double denormalized_mae(const std::vector<std::vector<double>>& preds,
                        const std::vector<Sample>& samples, const Normalization& norm) {
  if (preds.size() != samples.size() || samples.empty())
    throw std::invalid_argument("prediction/sample count mismatch");
  double total = 0.0;
  for (size_t s = 0; s < samples.size(); ++s) {
    const auto& p = preds[s];
    const auto& t = samples[s].field;
    if (p.size() != t.size()) throw std::invalid_argument("prediction shape mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < p.size(); ++i)
      sum += std::abs(norm.denormalize(p[i]) - norm.denormalize(t[i]));
    total += sum / static_cast<double>(p.size());
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace

double mae(const std::vector<std::vector<double>>& predictions,
           const std::vector<std::vector<double>>& truths) {
  if (predictions.size() != truths.size())
    throw std::invalid_argument("mae: sample count mismatch");
  if (predictions.empty()) throw std::invalid_argument("mae of an empty set");
  double total = 0.0;
  for (size_t s = 0; s < predictions.size(); ++s) {
    const auto& p = predictions[s];
    const auto& t = truths[s];
    if (p.size() != t.size() || p.empty()) throw std::invalid_argument("mae: shape mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - t[i]);
    total += sum / static_cast<double>(p.size());
  }
  return total / static_cast<double>(predictions.size());
}

double median(std::vector<double> values) {
  if (values.empty()) return kNan;
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double evaluate_mae(const DenseNet& net, const std::vector<Sample>& samples,
                    const Normalization& norm) {
  return denormalized_mae(predict_all(net, samples), samples, norm);
}

double evaluate_ensemble_mae(const std::vector<DenseNet>& nets,
                             const std::vector<Sample>& samples, const Normalization& norm) {
  if (nets.empty()) throw std::invalid_argument("empty ensemble");
  auto mean_preds = predict_all(nets.front(), samples);
  for (size_t k = 1; k < nets.size(); ++k) {
    const auto preds = predict_all(nets[k], samples);
    for (size_t s = 0; s < preds.size(); ++s)
      for (size_t i = 0; i < preds[s].size(); ++i) mean_preds[s][i] += preds[s][i];
  }
  const double inv = 1.0 / static_cast<double>(nets.size());
  for (auto& p : mean_preds)
    for (auto& v : p) v *= inv;
  return denormalized_mae(mean_preds, samples, norm);
}

double pseudo_label_mae(const PseudoLabelSet& pseudo, const std::vector<Sample>& unlabeled,
                        const Normalization& norm) {
  if (pseudo.samples.size() != unlabeled.size() || unlabeled.empty())
    throw std::invalid_argument("pseudo-label/unlabeled count mismatch");
  std::vector<std::vector<double>> preds(pseudo.samples.size());
  for (size_t i = 0; i < pseudo.samples.size(); ++i) preds[i] = pseudo.samples[i].pseudo;
  return denormalized_mae(preds, unlabeled, norm);
}

Aggregate aggregate_from_string(std::string_view name) {
  if (name == "median") return Aggregate::median;
  if (name == "mean") return Aggregate::mean;
  throw std::invalid_argument("unknown aggregate: " + std::string(name));
}

std::string to_string(Aggregate aggregate) {
  return aggregate == Aggregate::median ? "median" : "mean";
}

double ResultTable::aggregate_mae(Method method, int budget) const {
  std::vector<double> values;
  for (const auto& c : cells)
    if (c.ok && c.method == method && c.budget == budget) values.push_back(c.mae);
  return aggregate_values(std::move(values), aggregate);
}

bool ResultTable::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.ok; });
}

std::vector<int> nested_budget_indices(size_t pool_size, int budget, uint64_t seed) {
  if (budget < 1 || static_cast<size_t>(budget) > pool_size)
    throw std::invalid_argument("budget " + std::to_string(budget) +
                                " outside the labeled pool of " + std::to_string(pool_size));
  std::vector<int> perm(pool_size);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(mix_seed(seed, "label-budget"));
  rng.shuffle(perm);
  perm.resize(static_cast<size_t>(budget));
  return perm;
}

namespace {

std::vector<Sample> labeled_subset(const Dataset& dataset, int budget, uint64_t seed) {
  const auto idx = nested_budget_indices(dataset.labeled.size(), budget, seed);
  std::vector<Sample> subset;
  subset.reserve(idx.size());
  for (int i : idx) subset.push_back(dataset.labeled[static_cast<size_t>(i)]);
  return subset;
}

DenseNet train_cell(const Dataset& dataset, const std::vector<Sample>& subset,
                    const TrainConfig& cfg) {
  switch (cfg.method) {
    case Method::supervised: return train_supervised(subset, cfg);
    case Method::self_training: return train_self_training(subset, dataset.unlabeled, cfg);
    case Method::uge_st:
      return run_uge_st(subset, dataset.unlabeled, dataset.grid, cfg).student_final;
  }
  throw std::invalid_argument("unknown method");
}

uint64_t protocol_config_hash(const ProtocolSpec& spec) {
  nlohmann::json j;
  j["budgets"] = spec.label_budgets;
  std::vector<std::string> methods;
  for (auto m : spec.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  j["seeds"] = spec.seeds;
  j["aggregate"] = to_string(spec.aggregate);
  j["base"] = nlohmann::json::parse(train_config_json(spec.base));
  return fnv1a(j.dump());
}

int ablation_budget(const Dataset& dataset, const ProtocolSpec& spec) {
  if (spec.label_budgets.empty()) return static_cast<int>(dataset.labeled.size());
  return spec.label_budgets.front();
}

}  // namespace

ResultTable run_protocol(const Dataset& dataset, const ProtocolSpec& spec) {
  if (spec.methods.empty() || spec.seeds.empty() || spec.label_budgets.empty())
    throw std::invalid_argument("protocol needs methods, budgets, and seeds");
  if (!std::is_sorted(spec.label_budgets.begin(), spec.label_budgets.end()))
    throw std::invalid_argument("budgets must be sorted ascending");
  for (int b : spec.label_budgets)
    if (b < 1 || static_cast<size_t>(b) > dataset.labeled.size())
      throw std::invalid_argument("budget exceeds the labeled pool");
  if (dataset.test.empty()) throw std::invalid_argument("dataset has no test split");

  ResultTable table;
  table.aggregate = spec.aggregate;
  table.dataset_hash = dataset_fingerprint(dataset);
  table.config_hash = protocol_config_hash(spec);
  for (Method m : spec.methods)
    for (int b : spec.label_budgets)
      for (uint64_t s : spec.seeds) table.cells.push_back({m, b, s, kNan, false, ""});

  parallel_for(static_cast<int>(table.cells.size()), spec.jobs, [&](int i) {
    CellResult& cell = table.cells[static_cast<size_t>(i)];
    try {
      TrainConfig cfg = spec.base;
      cfg.method = cell.method;
      cfg.seed = cell.seed;
      cfg.jobs = 1;
      const auto subset = labeled_subset(dataset, cell.budget, cell.seed);
      const DenseNet net = train_cell(dataset, subset, cfg);
      cell.mae = evaluate_mae(net, dataset.test, dataset.norm);
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });
  return table;
}

std::string result_table_csv(const ResultTable& table) {
  std::string out = "method,budget,seed,mae\n";
  for (const auto& c : table.cells) {
    out += to_string(c.method);
    out += ',';
    out += std::to_string(c.budget);
    out += ',';
    out += std::to_string(c.seed);
    out += ',';
    out += c.ok ? fmt_g17(c.mae) : "nan";
    out += '\n';
  }
  return out;
}

std::string result_table_summary_json(const ResultTable& table) {
  nlohmann::json j;
  j["aggregate"] = to_string(table.aggregate);
  j["dataset_hash"] = hex64(table.dataset_hash);
  j["config_hash"] = hex64(table.config_hash);
  auto cells = nlohmann::json::array();
  for (const auto& c : table.cells) {
    nlohmann::json cj;
    cj["method"] = to_string(c.method);
    cj["budget"] = c.budget;
    cj["seed"] = c.seed;
    cj["mae"] = c.ok ? nlohmann::json(c.mae) : nlohmann::json();
    cj["ok"] = c.ok;
    if (!c.error.empty()) cj["error"] = c.error;
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);

  auto aggregates = nlohmann::json::array();
  std::vector<std::pair<Method, int>> keys;
  for (const auto& c : table.cells)
    if (std::find(keys.begin(), keys.end(), std::make_pair(c.method, c.budget)) == keys.end())
      keys.emplace_back(c.method, c.budget);
  for (const auto& [m, b] : keys) {
    const double v = table.aggregate_mae(m, b);
    nlohmann::json aj;
    aj["method"] = to_string(m);
    aj["budget"] = b;
    aj["mae"] = std::isnan(v) ? nlohmann::json() : nlohmann::json(v);
    aggregates.push_back(std::move(aj));
  }
  j["aggregates"] = std::move(aggregates);
  return j.dump(2) + "\n";
}

void save_result_table(const ResultTable& table, const std::filesystem::path& csv_path,
                       const std::filesystem::path& json_path) {
  write_file_atomic(csv_path, result_table_csv(table));
  write_file_atomic(json_path, result_table_summary_json(table));
}

// --- Ablations ----------------------------------------------------------

EnsembleAblation ablate_ensemble(const Dataset& dataset, const std::vector<int>& sizes,
                                 const ProtocolSpec& spec) {
  if (sizes.empty() || spec.seeds.empty())
    throw std::invalid_argument("ensemble ablation needs sizes and seeds");
  const int budget = ablation_budget(dataset, spec);
  EnsembleAblation ablation;
  ablation.aggregate = spec.aggregate;
  for (int n : sizes)
    for (uint64_t s : spec.seeds) ablation.rows.push_back({n, s, kNan, kNan, kNan});

  parallel_for(static_cast<int>(ablation.rows.size()), spec.jobs, [&](int i) {
    auto& row = ablation.rows[static_cast<size_t>(i)];
    TrainConfig cfg = spec.base;
    cfg.method = Method::uge_st;
    cfg.seed = row.seed;
    cfg.ensemble_size = row.ensemble_size;
    cfg.use_uncertainty = false;  // isolates the ensemble effect
    cfg.use_pretrain_finetune = true;
    cfg.jobs = 1;
    const auto subset = labeled_subset(dataset, budget, row.seed);
    const auto result = run_uge_st(subset, dataset.unlabeled, dataset.grid, cfg);
    row.pseudo_mae = pseudo_label_mae(result.pseudo, dataset.unlabeled, dataset.norm);
    row.pt_student_mae = evaluate_mae(result.student_pretrained, dataset.test, dataset.norm);
    row.uge_st_mae = evaluate_mae(result.student_final, dataset.test, dataset.norm);
  });
  return ablation;
}

namespace {

std::vector<double> collect_ensemble(const EnsembleAblation& a, int n,
                                     double EnsembleAblationRow::* field) {
  std::vector<double> v;
  for (const auto& r : a.rows)
    if (r.ensemble_size == n) v.push_back(r.*field);
  return v;
}

}  // namespace

double EnsembleAblation::aggregate_pseudo(int n) const {
  return aggregate_values(collect_ensemble(*this, n, &EnsembleAblationRow::pseudo_mae), aggregate);
}
double EnsembleAblation::aggregate_pt(int n) const {
  return aggregate_values(collect_ensemble(*this, n, &EnsembleAblationRow::pt_student_mae),
                          aggregate);
}
double EnsembleAblation::aggregate_uge(int n) const {
  return aggregate_values(collect_ensemble(*this, n, &EnsembleAblationRow::uge_st_mae), aggregate);
}

PretrainAblation ablate_pretrain(const Dataset& dataset, const ProtocolSpec& spec) {
  if (spec.seeds.empty()) throw std::invalid_argument("pretrain ablation needs seeds");
  const int budget = ablation_budget(dataset, spec);
  PretrainAblation ablation;
  ablation.aggregate = spec.aggregate;
  for (uint64_t s : spec.seeds) ablation.rows.push_back({s, kNan, kNan, kNan, kNan});

  parallel_for(static_cast<int>(ablation.rows.size()), spec.jobs, [&](int i) {
    auto& row = ablation.rows[static_cast<size_t>(i)];
    // Single teacher isolates the pre-training effect.
    TrainConfig cfg = spec.base;
    cfg.method = Method::uge_st;
    cfg.seed = row.seed;
    cfg.ensemble_size = 1;
    cfg.use_uncertainty = false;
    cfg.use_pretrain_finetune = true;
    cfg.jobs = 1;
    const auto subset = labeled_subset(dataset, budget, row.seed);
    const auto result = run_uge_st(subset, dataset.unlabeled, dataset.grid, cfg);
    row.pseudo_mae = evaluate_ensemble_mae(result.teachers, dataset.test, dataset.norm);
    row.pt_student_mae = evaluate_mae(result.student_pretrained, dataset.test, dataset.norm);
    row.uge_st_mae = evaluate_mae(result.student_final, dataset.test, dataset.norm);
    TrainConfig st_cfg = cfg;
    st_cfg.method = Method::self_training;
    row.self_training_mae = evaluate_mae(
        train_self_training(subset, dataset.unlabeled, st_cfg), dataset.test, dataset.norm);
  });
  return ablation;
}

namespace {

std::vector<double> collect_pretrain(const PretrainAblation& a,
                                     double PretrainAblationRow::* field) {
  std::vector<double> v;
  for (const auto& r : a.rows) v.push_back(r.*field);
  return v;
}

}  // namespace

double PretrainAblation::aggregate_pseudo() const {
  return aggregate_values(collect_pretrain(*this, &PretrainAblationRow::pseudo_mae), aggregate);
}
double PretrainAblation::aggregate_self_training() const {
  return aggregate_values(collect_pretrain(*this, &PretrainAblationRow::self_training_mae),
                          aggregate);
}
double PretrainAblation::aggregate_pt() const {
  return aggregate_values(collect_pretrain(*this, &PretrainAblationRow::pt_student_mae),
                          aggregate);
}
double PretrainAblation::aggregate_uge() const {
  return aggregate_values(collect_pretrain(*this, &PretrainAblationRow::uge_st_mae), aggregate);
}

UncertaintyAblation ablate_uncertainty(const Dataset& dataset, const std::vector<int>& sizes,
                                       const ProtocolSpec& spec) {
  if (sizes.empty() || spec.seeds.empty())
    throw std::invalid_argument("uncertainty ablation needs sizes and seeds");
  for (int n : sizes)
    if (n < 2)
      throw std::invalid_argument("uncertainty ablation needs >= 2 ensemble members");
  const int budget = ablation_budget(dataset, spec);
  UncertaintyAblation ablation;
  ablation.aggregate = spec.aggregate;
  for (int n : sizes)
    for (uint64_t s : spec.seeds) ablation.rows.push_back({n, s, kNan, kNan, kNan, kNan});

  parallel_for(static_cast<int>(ablation.rows.size()), spec.jobs, [&](int i) {
    auto& row = ablation.rows[static_cast<size_t>(i)];
    TrainConfig cfg = spec.base;
    cfg.method = Method::uge_st;
    cfg.seed = row.seed;
    cfg.ensemble_size = row.ensemble_size;
    cfg.use_pretrain_finetune = true;
    cfg.jobs = 1;
    const auto subset = labeled_subset(dataset, budget, row.seed);
    // The two arms share teachers, pseudo-labels, and student init; they
    // differ only in use_uncertainty.
    const auto teachers = train_ensemble_teachers(subset, cfg);
    auto pseudo = pseudo_label(teachers, dataset.unlabeled, dataset.grid);
    apply_uncertainty_weights(pseudo);

    TrainConfig with = cfg;
    with.use_uncertainty = true;
    const DenseNet pt_with = pretrain_student(pseudo, dataset.unlabeled, with);
    const DenseNet uge_with = finetune_student(pt_with, subset, with);

    TrainConfig without = cfg;
    without.use_uncertainty = false;
    const DenseNet pt_without = pretrain_student(pseudo, dataset.unlabeled, without);
    const DenseNet uge_without = finetune_student(pt_without, subset, without);

    row.pt_with = evaluate_mae(pt_with, dataset.test, dataset.norm);
    row.pt_without = evaluate_mae(pt_without, dataset.test, dataset.norm);
    row.uge_with = evaluate_mae(uge_with, dataset.test, dataset.norm);
    row.uge_without = evaluate_mae(uge_without, dataset.test, dataset.norm);
  });
  return ablation;
}

namespace {

std::vector<double> collect_uncertainty(const UncertaintyAblation& a, int n,
                                        double UncertaintyAblationRow::* field) {
  std::vector<double> v;
  for (const auto& r : a.rows)
    if (r.ensemble_size == n) v.push_back(r.*field);
  return v;
}

}  // namespace

double UncertaintyAblation::aggregate_pt_with(int n) const {
  return aggregate_values(collect_uncertainty(*this, n, &UncertaintyAblationRow::pt_with),
                          aggregate);
}
double UncertaintyAblation::aggregate_pt_without(int n) const {
  return aggregate_values(collect_uncertainty(*this, n, &UncertaintyAblationRow::pt_without),
                          aggregate);
}
double UncertaintyAblation::aggregate_uge_with(int n) const {
  return aggregate_values(collect_uncertainty(*this, n, &UncertaintyAblationRow::uge_with),
                          aggregate);
}
double UncertaintyAblation::aggregate_uge_without(int n) const {
  return aggregate_values(collect_uncertainty(*this, n, &UncertaintyAblationRow::uge_without),
                          aggregate);
}

std::string ensemble_ablation_csv(const EnsembleAblation& ablation) {
  std::string out = "ensemble_size,seed,pseudo_mae,pt_student_mae,uge_st_mae\n";
  for (const auto& r : ablation.rows) {
    out += std::to_string(r.ensemble_size) + ',' + std::to_string(r.seed) + ',' +
           fmt_g17(r.pseudo_mae) + ',' + fmt_g17(r.pt_student_mae) + ',' +
           fmt_g17(r.uge_st_mae) + '\n';
  }
  return out;
}

std::string pretrain_ablation_csv(const PretrainAblation& ablation) {
  std::string out = "seed,pseudo_mae,self_training_mae,pt_student_mae,uge_st_mae\n";
  for (const auto& r : ablation.rows) {
    out += std::to_string(r.seed) + ',' + fmt_g17(r.pseudo_mae) + ',' +
           fmt_g17(r.self_training_mae) + ',' + fmt_g17(r.pt_student_mae) + ',' +
           fmt_g17(r.uge_st_mae) + '\n';
  }
  return out;
}

std::string uncertainty_ablation_csv(const UncertaintyAblation& ablation) {
  std::string out = "ensemble_size,seed,pt_with,pt_without,uge_with,uge_without\n";
  for (const auto& r : ablation.rows) {
    out += std::to_string(r.ensemble_size) + ',' + std::to_string(r.seed) + ',' +
           fmt_g17(r.pt_with) + ',' + fmt_g17(r.pt_without) + ',' + fmt_g17(r.uge_with) + ',' +
           fmt_g17(r.uge_without) + '\n';
  }
  return out;
}

}  // namespace fieldst
