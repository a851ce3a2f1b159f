#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fieldst/dataset.hpp"
#include "fieldst/net.hpp"
#include "fieldst/optim.hpp"

namespace fieldst {

enum class Method { supervised, self_training, uge_st };

Method method_from_string(std::string_view name);
std::string to_string(Method method);

struct TrainConfig {
  int epochs = 100;
  int batch_size = 8;
  LrSchedule schedule;
  AdamWParams adamw;
  uint64_t seed = 0;
  Method method = Method::supervised;
  int ensemble_size = 3;
  bool use_uncertainty = true;
  bool use_pretrain_finetune = true;
  std::vector<int> hidden_sizes{64, 256};
  int jobs = 1;
};

std::string train_config_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& text);

// Per unlabeled sample: ensemble-mean pseudo field, per-pixel ensemble
// variance, and the derived confidence weights.
struct PseudoLabelSample {
  uint64_t id = 0;
  std::vector<double> pseudo;       // y_p
  std::vector<double> uncertainty;  // U_p >= 0
  std::vector<double> weight;       // in [0, 1]; filled by apply_uncertainty_weights
};

struct PseudoLabelSet {
  GridDims grid;
  std::vector<PseudoLabelSample> samples;
};

// Seed for ensemble member k; members differ only in init and shuffle order.
uint64_t ensemble_member_seed(uint64_t seed, int member);

// The net a supervised run with this config starts from (epochs 0 returns
// exactly this).
DenseNet initial_net(const TrainConfig& config, int input_size, int output_size);

// L1 regression of observation -> field with AdamW + warm-restart cosine
// schedule. Deterministic per (data, config); epochs 0 returns the freshly
// initialized net.
DenseNet train_supervised(const std::vector<Sample>& labeled, const TrainConfig& config);

// config.ensemble_size independently initialized and shuffled supervised
// trainings; member k is a pure function of (seed, k), so results do not
// depend on config.jobs.
std::vector<DenseNet> train_ensemble_teachers(const std::vector<Sample>& labeled,
                                              const TrainConfig& config);

// Per pixel: pseudo = mean over teachers, uncertainty = population variance
// (divide by n). Weights are left empty.
PseudoLabelSet pseudo_label(const std::vector<DenseNet>& teachers,
                            const std::vector<Sample>& unlabeled, GridDims grid);

// W = 1 - (U - min)/(max - min), min/max over this sample's pixels;
// constant U yields W identically 1.
std::vector<double> uncertainty_weights(std::span<const double> uncertainty);

void apply_uncertainty_weights(PseudoLabelSet& pseudo);

// Fresh student trained on (observation -> pseudo) pairs with the weighted
// L1 loss; with config.use_uncertainty false the weights are identically 1.
// Never touches labeled data.
DenseNet pretrain_student(const PseudoLabelSet& pseudo,
                          const std::vector<Sample>& unlabeled, const TrainConfig& config);

// Continues training on labeled data only with plain L1; the schedule
// restarts from lr_max. Never touches unlabeled data.
DenseNet finetune_student(const DenseNet& student, const std::vector<Sample>& labeled,
                          const TrainConfig& config);

// The two-term student step: per optimizer step, one pseudo-target batch
// plus one labeled batch of equal size, the two mean L1 losses summed.
// `targets` supplies the pseudo field for each unlabeled sample.
DenseNet train_union_student(const std::vector<Sample>& labeled,
                             const std::vector<Sample>& unlabeled,
                             const std::vector<std::vector<double>>& targets,
                             const TrainConfig& config);

// Vanilla self-training: supervised teacher, single-teacher pseudo-labels,
// student trained via train_union_student. An empty unlabeled set
// degenerates to train_supervised.
DenseNet train_self_training(const std::vector<Sample>& labeled,
                             const std::vector<Sample>& unlabeled, const TrainConfig& config);

struct UgeStResult {
  std::vector<DenseNet> teachers;
  PseudoLabelSet pseudo;
  DenseNet student_pretrained;  // == student_final when pretrain/finetune is disabled
  DenseNet student_final;
};

// Ensemble teachers -> pseudo-labels + uncertainty weights -> pre-training
// on pseudo-labels -> fine-tuning on labeled data. With
// use_pretrain_finetune false the student instead trains single-stage on
// both sets, uncertainty-weighted on the pseudo term.
UgeStResult run_uge_st(const std::vector<Sample>& labeled,
                       const std::vector<Sample>& unlabeled, GridDims grid,
                       const TrainConfig& config);

// Pseudo-label container: "FSPL" magic, version u32 LE, grid H,W u32,
// sample count u32, then per sample id u64 followed by the pseudo,
// uncertainty and weight arrays, each f64 x H*W.
inline constexpr char kPseudoLabelMagic[5] = "FSPL";
inline constexpr uint32_t kPseudoLabelVersion = 1;

void save_pseudo_labels(const PseudoLabelSet& pseudo, const std::filesystem::path& path);
PseudoLabelSet load_pseudo_labels(const std::filesystem::path& path);

// Artifact tree: teachers/member_<k>.fsnn, pseudo/labels.fsrd-pl,
// student_pretrained.fsnn, student_final.fsnn, config.json.
void save_uge_st_artifacts(const UgeStResult& result, const TrainConfig& config,
                           const std::filesystem::path& dir);

}  // namespace fieldst
