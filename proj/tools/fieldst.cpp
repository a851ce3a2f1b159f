// fieldst: synthetic field datasets, semi-supervised reconstruction
// training, evaluation protocols, ablations, and heatmap export.
//
// Every knob lives in one options struct with a JSON mirror: defaults are
// overridden by --config <file>, which is overridden by explicit flags.
// FIELDST_SEED serves as a default-seed fallback when neither the config
// file nor --seed provides one.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fieldst/bytes.hpp"
#include "fieldst/checkpoint.hpp"
#include "fieldst/dataset.hpp"
#include "fieldst/eval.hpp"
#include "fieldst/hash.hpp"
#include "fieldst/heatmap.hpp"
#include "fieldst/train.hpp"
#include "fieldst/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct DataOptions {
  int grid_h = 64, grid_w = 64;
  int sensors = 16;
  std::string strategy = "stratified-jitter";
  int labeled = 16, unlabeled = 256, test = 64;
  int sources_min = 2, sources_max = 6;
  double intensity_min = 0.5, intensity_max = 2.0;
  double boundary = 0.0;
  double solver_tol = 1e-8;
};

struct ProtocolOptions {
  std::vector<int> budgets{25, 50, 100, 200, 500, 1000};
  std::vector<std::string> methods{"supervised", "self-training", "uge-st"};
  std::vector<uint64_t> seeds{1, 2, 3};
  std::string aggregate = "median";
};

struct ToolOptions {
  DataOptions data;
  fieldst::TrainConfig train;
  ProtocolOptions protocol;
  int labels = 0;  // 0: the full labeled split
  uint64_t seed = 0;
  int jobs = 1;
};

json options_to_json(const ToolOptions& o) {
  json j;
  j["data"] = {{"grid", {o.data.grid_h, o.data.grid_w}},
               {"sensors", o.data.sensors},
               {"strategy", o.data.strategy},
               {"labeled", o.data.labeled},
               {"unlabeled", o.data.unlabeled},
               {"test", o.data.test},
               {"sources_min", o.data.sources_min},
               {"sources_max", o.data.sources_max},
               {"intensity_min", o.data.intensity_min},
               {"intensity_max", o.data.intensity_max},
               {"boundary", o.data.boundary},
               {"solver_tol", o.data.solver_tol}};
  j["train"] = json::parse(fieldst::train_config_json(o.train));
  j["train"].erase("seed");  // a single top-level seed drives every command
  j["train"].erase("jobs");
  j["protocol"] = {{"budgets", o.protocol.budgets},
                   {"methods", o.protocol.methods},
                   {"seeds", o.protocol.seeds},
                   {"aggregate", o.protocol.aggregate}};
  j["labels"] = o.labels;
  j["seed"] = o.seed;
  j["jobs"] = o.jobs;
  return j;
}

void options_from_json(const json& j, ToolOptions& o) {
  if (j.contains("data")) {
    const auto& d = j["data"];
    if (d.contains("grid")) {
      o.data.grid_h = d["grid"].at(0).get<int>();
      o.data.grid_w = d["grid"].at(1).get<int>();
    }
    o.data.sensors = d.value("sensors", o.data.sensors);
    o.data.strategy = d.value("strategy", o.data.strategy);
    o.data.labeled = d.value("labeled", o.data.labeled);
    o.data.unlabeled = d.value("unlabeled", o.data.unlabeled);
    o.data.test = d.value("test", o.data.test);
    o.data.sources_min = d.value("sources_min", o.data.sources_min);
    o.data.sources_max = d.value("sources_max", o.data.sources_max);
    o.data.intensity_min = d.value("intensity_min", o.data.intensity_min);
    o.data.intensity_max = d.value("intensity_max", o.data.intensity_max);
    o.data.boundary = d.value("boundary", o.data.boundary);
    o.data.solver_tol = d.value("solver_tol", o.data.solver_tol);
  }
  if (j.contains("train")) {
    json merged = json::parse(fieldst::train_config_json(o.train));
    merged.merge_patch(j["train"]);
    o.train = fieldst::train_config_from_json(merged.dump());
  }
  if (j.contains("protocol")) {
    const auto& p = j["protocol"];
    o.protocol.budgets = p.value("budgets", o.protocol.budgets);
    o.protocol.methods = p.value("methods", o.protocol.methods);
    o.protocol.seeds = p.value("seeds", o.protocol.seeds);
    o.protocol.aggregate = p.value("aggregate", o.protocol.aggregate);
  }
  o.labels = j.value("labels", o.labels);
  o.seed = j.value("seed", o.seed);
  o.jobs = j.value("jobs", o.jobs);
}

std::string utc_now() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

std::string hex64(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Run manifests carry timestamps and are informational; the primary outputs
// listed in `artifacts` are the byte-reproducible ones.
void write_run_manifest(const fs::path& path, const std::string& command,
                        const ToolOptions& options, const std::string& started,
                        const std::vector<fs::path>& artifacts,
                        std::optional<uint64_t> dataset_hash) {
  json j;
  j["tool_version"] = fieldst::kVersion;
  j["command"] = command;
  j["config"] = options_to_json(options);
  if (dataset_hash) j["dataset_hash"] = hex64(*dataset_hash);
  auto list = json::array();
  for (const auto& a : artifacts) list.push_back(a.string());
  j["artifacts"] = std::move(list);
  j["started_utc"] = started;
  j["finished_utc"] = utc_now();
  fieldst::write_file_atomic(path, j.dump(2) + "\n");
}

fieldst::GenConfig gen_config(const ToolOptions& o) {
  fieldst::GenConfig gen;
  gen.grid = {o.data.grid_h, o.data.grid_w};
  gen.min_sources = o.data.sources_min;
  gen.max_sources = o.data.sources_max;
  gen.min_intensity = o.data.intensity_min;
  gen.max_intensity = o.data.intensity_max;
  gen.boundary_value = o.data.boundary;
  return gen;
}

std::vector<fieldst::Sample> select_labeled(const fieldst::Dataset& ds, int labels,
                                            uint64_t seed) {
  if (labels <= 0 || static_cast<size_t>(labels) >= ds.labeled.size()) return ds.labeled;
  const auto idx = fieldst::nested_budget_indices(ds.labeled.size(), labels, seed);
  std::vector<fieldst::Sample> subset;
  subset.reserve(idx.size());
  for (int i : idx) subset.push_back(ds.labeled[static_cast<size_t>(i)]);
  return subset;
}

fieldst::ProtocolSpec protocol_spec(const ToolOptions& o) {
  fieldst::ProtocolSpec spec;
  spec.label_budgets = o.protocol.budgets;
  for (const auto& m : o.protocol.methods) spec.methods.push_back(fieldst::method_from_string(m));
  spec.seeds = o.protocol.seeds;
  spec.aggregate = fieldst::aggregate_from_string(o.protocol.aggregate);
  spec.base = o.train;
  spec.base.seed = o.seed;
  spec.jobs = o.jobs;
  return spec;
}

int cmd_gen_data(const ToolOptions& options, const fs::path& out) {
  const std::string started = utc_now();
  const auto gen = gen_config(options);
  const auto sensors = fieldst::place_sensors(
      gen.grid, options.data.sensors,
      fieldst::placement_strategy_from_string(options.data.strategy), options.seed);
  fieldst::BuildStats stats;
  const auto dataset =
      fieldst::build_dataset(options.data.labeled, options.data.unlabeled, options.data.test,
                             sensors, options.seed, gen, options.data.solver_tol, &stats);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  fieldst::save_dataset(dataset, out);

  fs::path manifest = out;
  manifest.replace_extension(".json");
  fs::path run_manifest = out;
  run_manifest.replace_extension(".run.json");
  write_run_manifest(run_manifest, "gen-data", options, started, {out, manifest},
                     fieldst::hash_file(out));
  std::cout << "wrote " << out.string() << " (" << options.data.labeled << " labeled, "
            << options.data.unlabeled << " unlabeled, " << options.data.test
            << " test; max solver residual " << stats.max_residual << ")\n";
  return 0;
}

int cmd_train(ToolOptions options, const fs::path& data_path, const fs::path& out_dir) {
  const std::string started = utc_now();
  const auto dataset = fieldst::load_dataset(data_path);
  fieldst::TrainConfig cfg = options.train;
  cfg.seed = options.seed;
  cfg.jobs = options.jobs;
  const auto labeled = select_labeled(dataset, options.labels, options.seed);

  fs::create_directories(out_dir);
  std::vector<fs::path> artifacts;
  fieldst::DenseNet final_model;
  switch (cfg.method) {
    case fieldst::Method::supervised: {
      final_model = fieldst::train_supervised(labeled, cfg);
      const auto model_path = out_dir / "model.fsnn";
      fieldst::save_checkpoint(final_model, model_path);
      fieldst::write_file_atomic(out_dir / "config.json", fieldst::train_config_json(cfg));
      artifacts = {model_path, out_dir / "config.json"};
      break;
    }
    case fieldst::Method::self_training: {
      final_model = fieldst::train_self_training(labeled, dataset.unlabeled, cfg);
      const auto model_path = out_dir / "model.fsnn";
      fieldst::save_checkpoint(final_model, model_path);
      fieldst::write_file_atomic(out_dir / "config.json", fieldst::train_config_json(cfg));
      artifacts = {model_path, out_dir / "config.json"};
      break;
    }
    case fieldst::Method::uge_st: {
      const auto result = fieldst::run_uge_st(labeled, dataset.unlabeled, dataset.grid, cfg);
      fieldst::save_uge_st_artifacts(result, cfg, out_dir);
      final_model = result.student_final;
      artifacts = {out_dir / "student_final.fsnn", out_dir / "student_pretrained.fsnn",
                   out_dir / "pseudo" / "labels.fsrd-pl", out_dir / "config.json"};
      for (size_t k = 0; k < result.teachers.size(); ++k)
        artifacts.push_back(out_dir / "teachers" / ("member_" + std::to_string(k) + ".fsnn"));
      break;
    }
  }
  write_run_manifest(out_dir / "run_manifest.json", "train", options, started, artifacts,
                     fieldst::hash_file(data_path));
  if (!dataset.test.empty()) {
    const double mae = fieldst::evaluate_mae(final_model, dataset.test, dataset.norm);
    std::cout << "test MAE " << std::scientific << mae << "\n";
  }
  std::cout << "artifacts in " << out_dir.string() << "\n";
  return 0;
}

int cmd_eval(const fs::path& model_path, const fs::path& data_path, const std::string& split) {
  const auto net = fieldst::load_checkpoint(model_path);
  const auto dataset = fieldst::load_dataset(data_path);
  const std::vector<fieldst::Sample>* samples = nullptr;
  if (split == "test")
    samples = &dataset.test;
  else if (split == "labeled")
    samples = &dataset.labeled;
  else if (split == "unlabeled")
    samples = &dataset.unlabeled;
  else
    throw std::invalid_argument("unknown split: " + split);
  if (samples->empty()) throw std::invalid_argument("split '" + split + "' is empty");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", fieldst::evaluate_mae(net, *samples, dataset.norm));
  std::cout << buf << "\n";
  return 0;
}

int cmd_protocol(const ToolOptions& options, const fs::path& data_path,
                 const fs::path& out_dir) {
  const std::string started = utc_now();
  const auto dataset = fieldst::load_dataset(data_path);
  const auto spec = protocol_spec(options);
  const auto table = fieldst::run_protocol(dataset, spec);

  fs::create_directories(out_dir);
  const auto csv_path = out_dir / "results.csv";
  const auto json_path = out_dir / "summary.json";
  fieldst::save_result_table(table, csv_path, json_path);
  write_run_manifest(out_dir / "run_manifest.json", "protocol", options, started,
                     {csv_path, json_path}, table.dataset_hash);

  for (auto method : spec.methods) {
    for (int budget : spec.label_budgets) {
      std::cout << fieldst::to_string(method) << " @" << budget << ": "
                << std::scientific << table.aggregate_mae(method, budget) << "\n";
    }
  }
  if (!table.all_ok()) {
    for (const auto& c : table.cells)
      if (!c.ok)
        std::cerr << "cell failed: " << fieldst::to_string(c.method) << " budget " << c.budget
                  << " seed " << c.seed << ": " << c.error << "\n";
    return 1;
  }
  return 0;
}

int cmd_ablate(const ToolOptions& options, const std::string& kind, const fs::path& data_path,
               const std::vector<int>& sizes, const fs::path& out_dir) {
  const std::string started = utc_now();
  const auto dataset = fieldst::load_dataset(data_path);
  fieldst::ProtocolSpec spec = protocol_spec(options);
  spec.label_budgets = options.labels > 0 ? std::vector<int>{options.labels}
                                          : std::vector<int>{};
  fs::create_directories(out_dir);
  fs::path csv_path;
  if (kind == "ensemble") {
    const auto ablation = fieldst::ablate_ensemble(dataset, sizes, spec);
    csv_path = out_dir / "ablate_ensemble.csv";
    fieldst::write_file_atomic(csv_path, fieldst::ensemble_ablation_csv(ablation));
    for (int n : sizes)
      std::cout << "n=" << n << ": pseudo " << std::scientific << ablation.aggregate_pseudo(n)
                << "  pt " << ablation.aggregate_pt(n) << "  uge-st " << ablation.aggregate_uge(n)
                << "\n";
  } else if (kind == "pretrain") {
    const auto ablation = fieldst::ablate_pretrain(dataset, spec);
    csv_path = out_dir / "ablate_pretrain.csv";
    fieldst::write_file_atomic(csv_path, fieldst::pretrain_ablation_csv(ablation));
    std::cout << "pseudo-label " << std::scientific << ablation.aggregate_pseudo()
              << "  self-training " << ablation.aggregate_self_training() << "  pt-student "
              << ablation.aggregate_pt() << "  uge-st " << ablation.aggregate_uge() << "\n";
  } else if (kind == "uncertainty") {
    const auto ablation = fieldst::ablate_uncertainty(dataset, sizes, spec);
    csv_path = out_dir / "ablate_uncertainty.csv";
    fieldst::write_file_atomic(csv_path, fieldst::uncertainty_ablation_csv(ablation));
    for (int n : sizes)
      std::cout << "n=" << n << ": pt w/ " << std::scientific
                << ablation.aggregate_pt_with(n) << "  pt w/o " << ablation.aggregate_pt_without(n)
                << "  uge w/ " << ablation.aggregate_uge_with(n) << "  uge w/o "
                << ablation.aggregate_uge_without(n) << "\n";
  } else {
    throw std::invalid_argument("unknown ablation: " + kind);
  }
  write_run_manifest(out_dir / "run_manifest.json", "ablate " + kind, options, started,
                     {csv_path}, fieldst::dataset_fingerprint(dataset));
  return 0;
}

int cmd_export(const ToolOptions& options, const fs::path& data_path, const std::string& what,
               int sample_index, const std::string& split, const fs::path& model_path,
               const std::string& format, const fs::path& out_base) {
  const auto dataset = fieldst::load_dataset(data_path);
  const std::vector<fieldst::Sample>* samples = nullptr;
  if (split == "test")
    samples = &dataset.test;
  else if (split == "labeled")
    samples = &dataset.labeled;
  else if (split == "unlabeled")
    samples = &dataset.unlabeled;
  else
    throw std::invalid_argument("unknown split: " + split);
  if (sample_index < 0 || static_cast<size_t>(sample_index) >= samples->size())
    throw std::invalid_argument("sample index out of range");
  const auto& sample = (*samples)[static_cast<size_t>(sample_index)];

  auto denorm_field = [&](const std::vector<double>& values) {
    fieldst::Field f(dataset.grid);
    for (size_t i = 0; i < values.size(); ++i)
      f.values[i] = dataset.norm.denormalize(values[i]);
    return f;
  };

  fieldst::Field map;
  if (what == "field") {
    map = denorm_field(sample.field);
  } else if (what == "voronoi") {
    const auto encoded = fieldst::voronoi_encode(sample.observation, dataset.sensors);
    map = denorm_field(encoded.values);
  } else if (what == "pred" || what == "error") {
    if (model_path.empty())
      throw std::invalid_argument("--model is required for --what " + what);
    const auto net = fieldst::load_checkpoint(model_path);
    const auto pred = fieldst::forward(net, sample.observation);
    if (what == "pred") {
      map = denorm_field(pred);
    } else {
      map = fieldst::absolute_error_map(denorm_field(pred), denorm_field(sample.field));
    }
  } else {
    throw std::invalid_argument("unknown export kind: " + what);
  }

  if (out_base.has_parent_path()) fs::create_directories(out_base.parent_path());
  std::vector<fs::path> written;
  if (format == "csv" || format == "both") {
    fs::path p = out_base;
    p += ".csv";
    fieldst::export_heatmap(map, p, fieldst::HeatmapFormat::csv);
    written.push_back(p);
  }
  if (format == "pgm" || format == "both") {
    fs::path p = out_base;
    p += ".pgm";
    fieldst::export_heatmap(map, p, fieldst::HeatmapFormat::pgm);
    written.push_back(p);
  }
  if (written.empty()) throw std::invalid_argument("unknown format: " + format);
  for (const auto& p : written) std::cout << "wrote " << p.string() << "\n";
  (void)options;
  return 0;
}

// Locate --config before CLI11 runs so explicit flags override file values.
std::optional<fs::path> find_config_arg(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string_view(argv[i]) == "--config") return fs::path(argv[i + 1]);
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  ToolOptions options;
  if (const char* env_seed = std::getenv("FIELDST_SEED"))
    options.seed = std::strtoull(env_seed, nullptr, 10);
  try {
    if (const auto config_path = find_config_arg(argc, argv)) {
      std::ifstream in(*config_path);
      if (!in) throw fieldst::IoError("cannot open config " + config_path->string());
      json j;
      in >> j;
      options_from_json(j, options);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  CLI::App app{"Sparse-sensor field reconstruction with ensemble self-training"};
  app.set_version_flag("--version", fieldst::kVersion);
  std::string config_dummy;
  app.add_option("--config", config_dummy, "JSON config file (flags override it)");
  bool dump_config = false;
  app.add_flag("--dump-config", dump_config, "print the effective config as JSON and exit");
  app.add_option("--seed", options.seed, "global experiment seed");
  app.add_option("--jobs", options.jobs, "max concurrent training jobs");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic heat-field dataset");
  std::vector<int> grid_flag;
  gen->add_option("--grid", grid_flag, "grid H W")->expected(2);
  gen->add_option("--sensors", options.data.sensors, "sensor count");
  gen->add_option("--strategy", options.data.strategy,
                  "placement: stratified-jitter | uniform-random");
  gen->add_option("--labeled", options.data.labeled, "labeled sample count");
  gen->add_option("--unlabeled", options.data.unlabeled, "unlabeled sample count");
  gen->add_option("--test", options.data.test, "test sample count");
  gen->add_option("--sources-min", options.data.sources_min, "min heat sources");
  gen->add_option("--sources-max", options.data.sources_max, "max heat sources");
  gen->add_option("--intensity-min", options.data.intensity_min, "min source intensity");
  gen->add_option("--intensity-max", options.data.intensity_max, "max source intensity");
  gen->add_option("--boundary", options.data.boundary, "Dirichlet boundary value");
  gen->add_option("--tol", options.data.solver_tol, "solver relative-residual tolerance");
  fs::path gen_out;
  gen->add_option("--out", gen_out, "output dataset path (.fsrd)")->required();

  // train
  auto* train = app.add_subcommand("train", "train a reconstruction model");
  fs::path train_data, train_out;
  std::string method_flag;
  train->add_option("--data", train_data, "dataset path")->required();
  train->add_option("--method", method_flag, "supervised | self-training | uge-st");
  train->add_option("--labels", options.labels, "labeled budget (0 = full split)");
  train->add_option("--ensemble", options.train.ensemble_size, "ensemble teacher count");
  bool no_uncertainty = false, no_pretrain = false;
  train->add_flag("--no-uncertainty", no_uncertainty, "disable uncertainty-guided weighting");
  train->add_flag("--no-pretrain", no_pretrain, "single-stage student (no pretrain/finetune)");
  train->add_option("--epochs", options.train.epochs, "training epochs");
  train->add_option("--batch", options.train.batch_size, "batch size");
  std::vector<int> hidden_flag;
  train->add_option("--hidden", hidden_flag, "hidden layer sizes")->delimiter(',');
  train->add_option("--lr", options.train.schedule.lr_max, "initial learning rate");
  train->add_option("--out", train_out, "artifact directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint (prints MAE)");
  fs::path eval_model, eval_data;
  std::string eval_split = "test";
  eval->add_option("--model", eval_model, "FSNN checkpoint")->required();
  eval->add_option("--data", eval_data, "dataset path")->required();
  eval->add_option("--split", eval_split, "test | labeled | unlabeled");

  // protocol
  auto* protocol = app.add_subcommand("protocol", "label-budget protocol over methods and seeds");
  fs::path proto_data, proto_out;
  protocol->add_option("--data", proto_data, "dataset path")->required();
  protocol->add_option("--budgets", options.protocol.budgets, "labeled budgets")->delimiter(',');
  protocol->add_option("--methods", options.protocol.methods, "methods")->delimiter(',');
  protocol->add_option("--seeds", options.protocol.seeds, "seeds")->delimiter(',');
  protocol->add_option("--aggregate", options.protocol.aggregate, "median | mean");
  protocol->add_option("--epochs", options.train.epochs, "training epochs");
  protocol->add_option("--batch", options.train.batch_size, "batch size");
  protocol->add_option("--ensemble", options.train.ensemble_size, "ensemble teacher count");
  std::vector<int> proto_hidden;
  protocol->add_option("--hidden", proto_hidden, "hidden layer sizes")->delimiter(',');
  protocol->add_option("--out", proto_out, "output directory")->required();

  // ablate {ensemble|pretrain|uncertainty}
  auto* ablate = app.add_subcommand("ablate", "run an ablation study");
  ablate->require_subcommand(1);
  struct AblateArgs {
    fs::path data, out;
    std::vector<int> sizes;
    std::vector<int> hidden;
  };
  AblateArgs ablate_args;
  auto add_ablation = [&](const char* name, const char* help, bool with_sizes) {
    auto* sub = ablate->add_subcommand(name, help);
    sub->add_option("--data", ablate_args.data, "dataset path")->required();
    if (with_sizes)
      sub->add_option("--sizes", ablate_args.sizes, "ensemble sizes")->delimiter(',');
    sub->add_option("--labels", options.labels, "labeled budget (0 = full split)");
    sub->add_option("--seeds", options.protocol.seeds, "seeds")->delimiter(',');
    sub->add_option("--epochs", options.train.epochs, "training epochs");
    sub->add_option("--batch", options.train.batch_size, "batch size");
    sub->add_option("--hidden", ablate_args.hidden, "hidden layer sizes")->delimiter(',');
    sub->add_option("--out", ablate_args.out, "output directory")->required();
    return sub;
  };
  auto* ablate_ensemble_cmd =
      add_ablation("ensemble", "pseudo-label / PT-student / UGE-ST MAE vs ensemble size", true);
  auto* ablate_pretrain_cmd =
      add_ablation("pretrain", "single-teacher arms: pseudo, self-training, PT, UGE-ST", false);
  auto* ablate_uncertainty_cmd =
      add_ablation("uncertainty", "with vs without uncertainty weighting", true);

  // export
  auto* export_cmd = app.add_subcommand("export", "export a heatmap (CSV / PGM)");
  fs::path export_data, export_model, export_out;
  std::string export_what = "field", export_split = "test", export_format = "both";
  int export_sample = 0;
  export_cmd->add_option("--data", export_data, "dataset path")->required();
  export_cmd->add_option("--what", export_what, "field | voronoi | pred | error");
  export_cmd->add_option("--sample", export_sample, "sample index within the split");
  export_cmd->add_option("--split", export_split, "test | labeled | unlabeled");
  export_cmd->add_option("--model", export_model, "FSNN checkpoint (pred/error)");
  export_cmd->add_option("--format", export_format, "csv | pgm | both");
  export_cmd->add_option("--out", export_out, "output base path")->required();

  // Global flags (--seed, --jobs, --config) may follow a subcommand name.
  for (auto* sub : app.get_subcommands({})) {
    sub->fallthrough();
    for (auto* nested : sub->get_subcommands({})) nested->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (!method_flag.empty()) options.train.method = fieldst::method_from_string(method_flag);
    if (no_uncertainty) options.train.use_uncertainty = false;
    if (no_pretrain) options.train.use_pretrain_finetune = false;
    if (!hidden_flag.empty()) options.train.hidden_sizes = hidden_flag;
    if (!proto_hidden.empty()) options.train.hidden_sizes = proto_hidden;
    if (!ablate_args.hidden.empty()) options.train.hidden_sizes = ablate_args.hidden;
    if (!grid_flag.empty()) {
      options.data.grid_h = grid_flag[0];
      options.data.grid_w = grid_flag[1];
    }

    if (dump_config) {
      std::cout << options_to_json(options).dump(2) << "\n";
      return 0;
    }
    if (gen->parsed()) return cmd_gen_data(options, gen_out);
    if (train->parsed()) return cmd_train(options, train_data, train_out);
    if (eval->parsed()) return cmd_eval(eval_model, eval_data, eval_split);
    if (protocol->parsed()) return cmd_protocol(options, proto_data, proto_out);
    if (ablate->parsed()) {
      std::string kind;
      if (ablate_ensemble_cmd->parsed()) kind = "ensemble";
      if (ablate_pretrain_cmd->parsed()) kind = "pretrain";
      if (ablate_uncertainty_cmd->parsed()) kind = "uncertainty";
      std::vector<int> sizes = ablate_args.sizes;
      if (sizes.empty()) sizes = kind == "uncertainty" ? std::vector<int>{2, 3, 5}
                                                       : std::vector<int>{1, 2, 3, 5};
      return cmd_ablate(options, kind, ablate_args.data, sizes, ablate_args.out);
    }
    if (export_cmd->parsed())
      return cmd_export(options, export_data, export_what, export_sample, export_split,
                        export_model, export_format, export_out);
    std::cerr << app.help();
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
