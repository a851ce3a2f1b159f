#include "fieldst/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "fieldst/bytes.hpp"
#include "fieldst/checkpoint.hpp"
#include "fieldst/parallel.hpp"
#include "fieldst/rng.hpp"

namespace fieldst {

Method method_from_string(std::string_view name) {
  if (name == "supervised") return Method::supervised;
  if (name == "self-training") return Method::self_training;
  if (name == "uge-st") return Method::uge_st;
  throw std::invalid_argument("unknown method: " + std::string(name));
}

std::string to_string(Method method) {
  switch (method) {
    case Method::supervised: return "supervised";
    case Method::self_training: return "self-training";
    case Method::uge_st: return "uge-st";
  }
  return "?";
}

std::string train_config_json(const TrainConfig& c) {
  nlohmann::json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["schedule"] = {{"lr_max", c.schedule.lr_max},
                   {"lr_min", c.schedule.lr_min},
                   {"t0", c.schedule.t0},
                   {"t_mult", c.schedule.t_mult}};
  j["adamw"] = {{"beta1", c.adamw.beta1},
                {"beta2", c.adamw.beta2},
                {"eps", c.adamw.eps},
                {"weight_decay", c.adamw.weight_decay}};
  j["seed"] = c.seed;
  j["method"] = to_string(c.method);
  j["ensemble_size"] = c.ensemble_size;
  j["use_uncertainty"] = c.use_uncertainty;
  j["use_pretrain_finetune"] = c.use_pretrain_finetune;
  j["hidden_sizes"] = c.hidden_sizes;
  j["jobs"] = c.jobs;
  return j.dump(2) + "\n";
}

TrainConfig train_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    c.schedule.lr_max = s.value("lr_max", c.schedule.lr_max);
    c.schedule.lr_min = s.value("lr_min", c.schedule.lr_min);
    c.schedule.t0 = s.value("t0", c.schedule.t0);
    c.schedule.t_mult = s.value("t_mult", c.schedule.t_mult);
  }
  if (j.contains("adamw")) {
    const auto& a = j["adamw"];
    c.adamw.beta1 = a.value("beta1", c.adamw.beta1);
    c.adamw.beta2 = a.value("beta2", c.adamw.beta2);
    c.adamw.eps = a.value("eps", c.adamw.eps);
    c.adamw.weight_decay = a.value("weight_decay", c.adamw.weight_decay);
  }
  c.seed = j.value("seed", c.seed);
  if (j.contains("method")) c.method = method_from_string(j["method"].get<std::string>());
  c.ensemble_size = j.value("ensemble_size", c.ensemble_size);
  c.use_uncertainty = j.value("use_uncertainty", c.use_uncertainty);
  c.use_pretrain_finetune = j.value("use_pretrain_finetune", c.use_pretrain_finetune);
  c.hidden_sizes = j.value("hidden_sizes", c.hidden_sizes);
  c.jobs = j.value("jobs", c.jobs);
  return c;
}

uint64_t ensemble_member_seed(uint64_t seed, int member) {
  return mix_seed(seed, "ensemble-member", static_cast<uint64_t>(member));
}

namespace {

struct ItemView {
  const std::vector<double>* obs = nullptr;
  const std::vector<double>* target = nullptr;
  const std::vector<double>* weight = nullptr;  // null: plain L1
};

struct ItemSet {
  std::vector<ItemView> items;
  int in = 0;
  int out = 0;
};

ItemSet make_label_items(const std::vector<Sample>& samples) {
  if (samples.empty()) throw std::invalid_argument("empty training set");
  ItemSet set;
  set.in = static_cast<int>(samples.front().observation.size());
  set.out = static_cast<int>(samples.front().field.size());
  set.items.reserve(samples.size());
  for (const auto& s : samples) {
    if (static_cast<int>(s.observation.size()) != set.in ||
        static_cast<int>(s.field.size()) != set.out)
      throw std::invalid_argument("inconsistent sample shapes in training set");
    set.items.push_back({&s.observation, &s.field, nullptr});
  }
  return set;
}

// Endless shuffled pass over [0, size); reshuffles when exhausted.
class CycledStream {
 public:
  CycledStream(size_t size, uint64_t seed) : rng_(seed), order_(size) {
    std::iota(order_.begin(), order_.end(), 0);
    rng_.shuffle(order_);
  }

  void fill(std::vector<int>& batch, size_t count) {
    batch.clear();
    while (batch.size() < count) {
      if (cursor_ == order_.size()) {
        rng_.shuffle(order_);
        cursor_ = 0;
      }
      batch.push_back(order_[cursor_++]);
    }
  }

 private:
  Rng rng_;
  std::vector<int> order_;
  size_t cursor_ = 0;
};

struct BatchBuffers {
  std::vector<double> x;
  std::vector<double> dy;
  BatchWorkspace ws;
};

// Forward + loss gradient + backward for one mini-batch; the step loss is
// the mean of per-sample L1 (weighted where the item carries a map), so
// per-sample gradients are scaled by 1/batch.
void accumulate_batch(const DenseNet& net, const ItemSet& set, std::span<const int> idx,
                      BatchBuffers& buf, Gradients& grads) {
  const int batch = static_cast<int>(idx.size());
  const size_t in = static_cast<size_t>(set.in);
  const size_t out = static_cast<size_t>(set.out);
  buf.x.resize(static_cast<size_t>(batch) * in);
  for (int s = 0; s < batch; ++s) {
    const auto& obs = *set.items[static_cast<size_t>(idx[s])].obs;
    std::copy(obs.begin(), obs.end(), buf.x.begin() + static_cast<size_t>(s) * in);
  }
  forward_batch(net, buf.x, batch, buf.ws);
  const auto& y = buf.ws.acts.back();
  buf.dy.resize(static_cast<size_t>(batch) * out);
  const double inv_batch = 1.0 / batch;
  for (int s = 0; s < batch; ++s) {
    const auto& item = set.items[static_cast<size_t>(idx[s])];
    std::span<const double> pred(y.data() + static_cast<size_t>(s) * out, out);
    std::span<double> grad(buf.dy.data() + static_cast<size_t>(s) * out, out);
    if (item.weight)
      weighted_l1_loss(pred, *item.target, *item.weight, grad);
    else
      l1_loss(pred, *item.target, grad);
    for (auto& g : grad) g *= inv_batch;
  }
  backward_batch(net, buf.ws, buf.dy, grads);
}

// One training run. Epoch boundaries follow the primary set (shuffled
// partition, short last batch); the secondary set, when present, cycles
// endlessly at full batch size and its mean loss is added to the primary
// one (the two-term semi-supervised objective). All randomness comes from
// streams derived from run_seed.
void train_epochs(DenseNet& net, const ItemSet& primary, const ItemSet* secondary,
                  const TrainConfig& cfg, uint64_t run_seed) {
  if (cfg.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (secondary && secondary->in != primary.in)
    throw std::invalid_argument("primary and secondary input sizes differ");
  if (secondary && secondary->out != primary.out)
    throw std::invalid_argument("primary and secondary output sizes differ");

  OptimState state = make_optim_state(net, cfg.adamw, cfg.schedule.lr_max);
  Rng shuffle_rng(mix_seed(run_seed, "shuffle-a"));
  CycledStream secondary_stream(secondary ? secondary->items.size() : 0,
                                mix_seed(run_seed, "shuffle-b"));
  Gradients grads = make_gradients(net);
  BatchBuffers buf;

  const size_t n_primary = primary.items.size();
  const int steps =
      static_cast<int>((n_primary + cfg.batch_size - 1) / static_cast<size_t>(cfg.batch_size));
  const size_t secondary_batch =
      secondary ? std::min<size_t>(secondary->items.size(), static_cast<size_t>(cfg.batch_size))
                : 0;

  std::vector<int> order(n_primary);
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> batch_b;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (int step = 0; step < steps; ++step) {
      const double lr =
          lr_at(cfg.schedule, epoch + static_cast<double>(step) / steps);
      const size_t begin = static_cast<size_t>(step) * cfg.batch_size;
      const size_t end = std::min(begin + static_cast<size_t>(cfg.batch_size), n_primary);
      grads.set_zero();
      accumulate_batch(net, primary, std::span(order).subspan(begin, end - begin), buf, grads);
      if (secondary) {
        secondary_stream.fill(batch_b, secondary_batch);
        accumulate_batch(net, *secondary, batch_b, buf, grads);
      }
      adamw_step(net, grads, state, lr);
    }
  }
}

std::vector<int> net_sizes(const TrainConfig& cfg, int in, int out) {
  std::vector<int> sizes;
  sizes.reserve(cfg.hidden_sizes.size() + 2);
  sizes.push_back(in);
  sizes.insert(sizes.end(), cfg.hidden_sizes.begin(), cfg.hidden_sizes.end());
  sizes.push_back(out);
  return sizes;
}

DenseNet fresh_net(const TrainConfig& cfg, int in, int out, uint64_t run_seed) {
  return make_dense_net(net_sizes(cfg, in, out), mix_seed(run_seed, "init"));
}

}  // namespace

DenseNet initial_net(const TrainConfig& config, int input_size, int output_size) {
  return fresh_net(config, input_size, output_size, config.seed);
}

DenseNet train_supervised(const std::vector<Sample>& labeled, const TrainConfig& config) {
  const ItemSet items = make_label_items(labeled);
  DenseNet net = fresh_net(config, items.in, items.out, config.seed);
  train_epochs(net, items, nullptr, config, config.seed);
  return net;
}

std::vector<DenseNet> train_ensemble_teachers(const std::vector<Sample>& labeled,
                                              const TrainConfig& config) {
  if (config.ensemble_size < 1) throw std::invalid_argument("ensemble size must be >= 1");
  std::vector<DenseNet> teachers(static_cast<size_t>(config.ensemble_size));
  parallel_for(config.ensemble_size, config.jobs, [&](int k) {
    TrainConfig member = config;
    member.seed = ensemble_member_seed(config.seed, k);
    member.jobs = 1;
    teachers[static_cast<size_t>(k)] = train_supervised(labeled, member);
  });
  return teachers;
}

PseudoLabelSet pseudo_label(const std::vector<DenseNet>& teachers,
                            const std::vector<Sample>& unlabeled, GridDims grid) {
  if (teachers.empty()) throw std::invalid_argument("pseudo_label needs at least one teacher");
  const int out = teachers.front().output_size();
  const int in = teachers.front().input_size();
  for (const auto& t : teachers)
    if (t.output_size() != out || t.input_size() != in)
      throw std::invalid_argument("teacher shapes disagree");
  if (out != grid.cells())
    throw std::invalid_argument("teacher output size does not match the grid");

  const size_t n_teachers = teachers.size();
  PseudoLabelSet set;
  set.grid = grid;
  set.samples.resize(unlabeled.size());

  constexpr int kChunk = 32;
  std::vector<std::vector<double>> preds(n_teachers);
  std::vector<double> x;
  BatchWorkspace ws;
  for (size_t start = 0; start < unlabeled.size(); start += kChunk) {
    const int batch = static_cast<int>(std::min<size_t>(kChunk, unlabeled.size() - start));
    x.resize(static_cast<size_t>(batch) * in);
    for (int s = 0; s < batch; ++s) {
      const auto& obs = unlabeled[start + static_cast<size_t>(s)].observation;
      if (static_cast<int>(obs.size()) != in)
        throw std::invalid_argument("observation length does not match teacher input");
      std::copy(obs.begin(), obs.end(), x.begin() + static_cast<size_t>(s) * in);
    }
    for (size_t t = 0; t < n_teachers; ++t) {
      forward_batch(teachers[t], x, batch, ws);
      preds[t] = ws.acts.back();
    }
    const double inv_n = 1.0 / static_cast<double>(n_teachers);
    for (int s = 0; s < batch; ++s) {
      auto& sample = set.samples[start + static_cast<size_t>(s)];
      sample.id = unlabeled[start + static_cast<size_t>(s)].id;
      sample.pseudo.resize(static_cast<size_t>(out));
      sample.uncertainty.resize(static_cast<size_t>(out));
      for (int i = 0; i < out; ++i) {
        const size_t at = static_cast<size_t>(s) * out + i;
        const double first = preds[0][at];
        bool all_equal = true;
        double mean = first;
        for (size_t t = 1; t < n_teachers; ++t) {
          all_equal = all_equal && preds[t][at] == first;
          mean += preds[t][at];
        }
        if (all_equal) {
          // Identical predictions have exactly zero variance; the summed
          // mean would round away from that.
          sample.pseudo[static_cast<size_t>(i)] = first;
          sample.uncertainty[static_cast<size_t>(i)] = 0.0;
          continue;
        }
        mean *= inv_n;
        double var = 0.0;
        for (size_t t = 0; t < n_teachers; ++t) {
          const double d = preds[t][at] - mean;
          var += d * d;
        }
        sample.pseudo[static_cast<size_t>(i)] = mean;
        sample.uncertainty[static_cast<size_t>(i)] = var * inv_n;
      }
    }
  }
  return set;
}

std::vector<double> uncertainty_weights(std::span<const double> uncertainty) {
  if (uncertainty.empty()) throw std::invalid_argument("empty uncertainty map");
  double lo = uncertainty[0], hi = uncertainty[0];
  for (double u : uncertainty) {
    if (!(u >= 0.0) || !std::isfinite(u))
      throw std::invalid_argument("uncertainty must be finite and >= 0");
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  std::vector<double> w(uncertainty.size(), 1.0);
  if (hi == lo) return w;  // uniformly confident: trust everything
  // Division keeps the result in [0, 1] exactly (d/d == 1 in IEEE); a
  // reciprocal multiply can overshoot by an ulp and violate the contract.
  const double range = hi - lo;
  for (size_t i = 0; i < w.size(); ++i) w[i] = 1.0 - (uncertainty[i] - lo) / range;
  return w;
}

void apply_uncertainty_weights(PseudoLabelSet& pseudo) {
  for (auto& s : pseudo.samples) s.weight = uncertainty_weights(s.uncertainty);
}

namespace {

// Pseudo-target items for the student; weights attached only when the
// config asks for uncertainty guidance.
ItemSet make_pseudo_items(const PseudoLabelSet& pseudo, const std::vector<Sample>& unlabeled,
                          bool use_uncertainty) {
  if (pseudo.samples.empty()) throw std::invalid_argument("empty pseudo-label set");
  if (pseudo.samples.size() != unlabeled.size())
    throw std::invalid_argument("pseudo-label set does not match unlabeled samples");
  ItemSet set;
  set.in = static_cast<int>(unlabeled.front().observation.size());
  set.out = pseudo.grid.cells();
  set.items.reserve(pseudo.samples.size());
  for (size_t i = 0; i < pseudo.samples.size(); ++i) {
    const auto& p = pseudo.samples[i];
    const auto& u = unlabeled[i];
    if (p.id != u.id) throw std::invalid_argument("pseudo-label ids out of order");
    if (static_cast<int>(p.pseudo.size()) != set.out ||
        static_cast<int>(u.observation.size()) != set.in)
      throw std::invalid_argument("pseudo-label shapes disagree with grid");
    const std::vector<double>* weight = nullptr;
    if (use_uncertainty) {
      if (p.weight.size() != p.pseudo.size())
        throw std::invalid_argument("uncertainty weights missing; run apply_uncertainty_weights");
      weight = &p.weight;
    }
    set.items.push_back({&u.observation, &p.pseudo, weight});
  }
  return set;
}

}  // namespace

DenseNet pretrain_student(const PseudoLabelSet& pseudo, const std::vector<Sample>& unlabeled,
                          const TrainConfig& config) {
  const ItemSet items = make_pseudo_items(pseudo, unlabeled, config.use_uncertainty);
  const uint64_t run_seed = mix_seed(config.seed, "student-pretrain");
  DenseNet net = fresh_net(config, items.in, items.out, run_seed);
  train_epochs(net, items, nullptr, config, run_seed);
  return net;
}

DenseNet finetune_student(const DenseNet& student, const std::vector<Sample>& labeled,
                          const TrainConfig& config) {
  const ItemSet items = make_label_items(labeled);
  if (items.in != student.input_size() || items.out != student.output_size())
    throw std::invalid_argument("student shapes do not match labeled data");
  DenseNet net = student;
  train_epochs(net, items, nullptr, config, mix_seed(config.seed, "student-finetune"));
  return net;
}

DenseNet train_union_student(const std::vector<Sample>& labeled,
                             const std::vector<Sample>& unlabeled,
                             const std::vector<std::vector<double>>& targets,
                             const TrainConfig& config) {
  if (unlabeled.empty()) throw std::invalid_argument("empty unlabeled set");
  if (targets.size() != unlabeled.size())
    throw std::invalid_argument("one pseudo target per unlabeled sample required");
  const ItemSet labeled_items = make_label_items(labeled);
  ItemSet pseudo_items;
  pseudo_items.in = labeled_items.in;
  pseudo_items.out = labeled_items.out;
  pseudo_items.items.reserve(unlabeled.size());
  for (size_t i = 0; i < unlabeled.size(); ++i) {
    if (static_cast<int>(unlabeled[i].observation.size()) != pseudo_items.in ||
        static_cast<int>(targets[i].size()) != pseudo_items.out)
      throw std::invalid_argument("pseudo target shapes disagree with labeled data");
    pseudo_items.items.push_back({&unlabeled[i].observation, &targets[i], nullptr});
  }
  const uint64_t run_seed = mix_seed(config.seed, "union-student");
  DenseNet student = fresh_net(config, pseudo_items.in, pseudo_items.out, run_seed);
  train_epochs(student, pseudo_items, &labeled_items, config, run_seed);
  return student;
}

DenseNet train_self_training(const std::vector<Sample>& labeled,
                             const std::vector<Sample>& unlabeled, const TrainConfig& config) {
  if (labeled.empty()) throw std::invalid_argument("empty labeled set");
  if (unlabeled.empty()) return train_supervised(labeled, config);

  TrainConfig teacher_cfg = config;
  teacher_cfg.seed = mix_seed(config.seed, "st-teacher");
  const DenseNet teacher = train_supervised(labeled, teacher_cfg);

  // Single-teacher pseudo-labels for the unlabeled pool.
  const int in = teacher.input_size(), out = teacher.output_size();
  std::vector<std::vector<double>> targets(unlabeled.size());
  {
    constexpr int kChunk = 32;
    std::vector<double> x;
    BatchWorkspace ws;
    for (size_t start = 0; start < unlabeled.size(); start += kChunk) {
      const int batch = static_cast<int>(std::min<size_t>(kChunk, unlabeled.size() - start));
      x.resize(static_cast<size_t>(batch) * in);
      for (int s = 0; s < batch; ++s)
        std::copy(unlabeled[start + static_cast<size_t>(s)].observation.begin(),
                  unlabeled[start + static_cast<size_t>(s)].observation.end(),
                  x.begin() + static_cast<size_t>(s) * in);
      forward_batch(teacher, x, batch, ws);
      for (int s = 0; s < batch; ++s)
        targets[start + static_cast<size_t>(s)]
            .assign(ws.acts.back().begin() + static_cast<size_t>(s) * out,
                    ws.acts.back().begin() + static_cast<size_t>(s + 1) * out);
    }
  }

  return train_union_student(labeled, unlabeled, targets, config);
}

UgeStResult run_uge_st(const std::vector<Sample>& labeled,
                       const std::vector<Sample>& unlabeled, GridDims grid,
                       const TrainConfig& config) {
  if (labeled.empty()) throw std::invalid_argument("empty labeled set");
  if (unlabeled.empty()) throw std::invalid_argument("empty unlabeled set");

  UgeStResult result;
  result.teachers = train_ensemble_teachers(labeled, config);
  result.pseudo = pseudo_label(result.teachers, unlabeled, grid);
  apply_uncertainty_weights(result.pseudo);

  if (config.use_pretrain_finetune) {
    result.student_pretrained = pretrain_student(result.pseudo, unlabeled, config);
    result.student_final = finetune_student(result.student_pretrained, labeled, config);
  } else {
    // Single-stage variant: one student on both sets, the pseudo term
    // uncertainty-weighted when enabled.
    const ItemSet pseudo_items =
        make_pseudo_items(result.pseudo, unlabeled, config.use_uncertainty);
    const ItemSet labeled_items = make_label_items(labeled);
    const uint64_t run_seed = mix_seed(config.seed, "student-single-stage");
    DenseNet student = fresh_net(config, pseudo_items.in, pseudo_items.out, run_seed);
    train_epochs(student, pseudo_items, &labeled_items, config, run_seed);
    result.student_pretrained = student;
    result.student_final = std::move(student);
  }
  return result;
}

void save_pseudo_labels(const PseudoLabelSet& pseudo, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kPseudoLabelMagic, 4);
  write_u32(out, kPseudoLabelVersion);
  write_u32(out, static_cast<uint32_t>(pseudo.grid.h));
  write_u32(out, static_cast<uint32_t>(pseudo.grid.w));
  write_u32(out, static_cast<uint32_t>(pseudo.samples.size()));
  for (const auto& s : pseudo.samples) {
    write_u64(out, s.id);
    write_f64_array(out, s.pseudo);
    write_f64_array(out, s.uncertainty);
    write_f64_array(out, s.weight);
  }
  if (!out) throw IoError("short write to " + path.string());
}

PseudoLabelSet load_pseudo_labels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  expect_magic(in, kPseudoLabelMagic, "FSPL pseudo-label");
  const uint32_t version = read_u32(in);
  if (version != kPseudoLabelVersion)
    throw IoError("unsupported FSPL version " + std::to_string(version));
  PseudoLabelSet set;
  set.grid.h = static_cast<int>(read_u32(in));
  set.grid.w = static_cast<int>(read_u32(in));
  const uint32_t count = read_u32(in);
  const size_t cells = static_cast<size_t>(set.grid.cells());
  set.samples.resize(count);
  for (auto& s : set.samples) {
    s.id = read_u64(in);
    s.pseudo.resize(cells);
    s.uncertainty.resize(cells);
    s.weight.resize(cells);
    read_f64_array(in, s.pseudo);
    read_f64_array(in, s.uncertainty);
    read_f64_array(in, s.weight);
  }
  return set;
}

void save_uge_st_artifacts(const UgeStResult& result, const TrainConfig& config,
                           const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "teachers");
  fs::create_directories(dir / "pseudo");
  for (size_t k = 0; k < result.teachers.size(); ++k)
    save_checkpoint(result.teachers[k], dir / "teachers" / ("member_" + std::to_string(k) + ".fsnn"));
  save_pseudo_labels(result.pseudo, dir / "pseudo" / "labels.fsrd-pl");
  save_checkpoint(result.student_pretrained, dir / "student_pretrained.fsnn");
  save_checkpoint(result.student_final, dir / "student_final.fsnn");
  write_file_atomic(dir / "config.json", train_config_json(config));
}

}  // namespace fieldst
