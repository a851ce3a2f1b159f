#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "fieldst/eval.hpp"
#include "fieldst/heatmap.hpp"
#include "fieldst/rng.hpp"

using namespace fieldst;
namespace fs = std::filesystem;

namespace {

Dataset eval_dataset(uint64_t seed = 31) {
  GenConfig gen;
  gen.grid = {8, 8};
  const auto sensors = place_sensors(gen.grid, 4, PlacementStrategy::stratified_jitter, seed);
  return build_dataset(6, 5, 3, sensors, seed, gen);
}

ProtocolSpec tiny_spec() {
  ProtocolSpec spec;
  spec.label_budgets = {4};
  spec.methods = {Method::supervised};
  spec.seeds = {1, 2};
  spec.base.hidden_sizes = {8};
  spec.base.epochs = 8;
  spec.base.batch_size = 2;
  return spec;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("mae basics") {
  const std::vector<std::vector<double>> t{{1.0, 1.0}, {1.0, 1.0}};
  CHECK(mae(t, t) == 0.0);

  const std::vector<std::vector<double>> shifted{{1.25, 1.25}, {1.25, 1.25}};
  CHECK(mae(shifted, t) == doctest::Approx(0.25));

  const std::vector<std::vector<double>> preds{{0.0, 2.0}, {4.0, 6.0}};
  CHECK(mae(preds, t) == doctest::Approx(2.5));  // (1.0 + 4.0) / 2

  CHECK_THROWS_AS(mae({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(mae({{1.0}}, {{1.0, 2.0}}), std::invalid_argument);
}

TEST_CASE("mae is permutation-invariant and scale-equivariant") {
  Rng rng(3);
  std::vector<std::vector<double>> p(4, std::vector<double>(10));
  std::vector<std::vector<double>> t(4, std::vector<double>(10));
  for (auto& row : p)
    for (auto& v : row) v = rng.uniform(-2.0, 2.0);
  for (auto& row : t)
    for (auto& v : row) v = rng.uniform(-2.0, 2.0);
  const double base = mae(p, t);

  auto p2 = p;
  auto t2 = t;
  std::swap(p2[0], p2[3]);
  std::swap(t2[0], t2[3]);
  std::reverse(p2[1].begin(), p2[1].end());
  std::reverse(t2[1].begin(), t2[1].end());
  CHECK(mae(p2, t2) == doctest::Approx(base).epsilon(1e-12));

  auto ps = p;
  auto ts = t;
  for (auto& row : ps)
    for (auto& v : row) v *= 3.5;
  for (auto& row : ts)
    for (auto& v : row) v *= 3.5;
  CHECK(mae(ps, ts) == doctest::Approx(3.5 * base).epsilon(1e-12));
}

TEST_CASE("median of odd and even counts") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(std::isnan(median({})));
}

TEST_CASE("evaluate_mae reports in de-normalized units") {
  const Dataset ds = eval_dataset();
  // A net predicting a constant c has |denorm(c) - denorm(truth)| =
  // scale * |c - truth| per pixel.
  DenseNet net;
  net.layer_sizes = {4, 64};
  net.weights = {std::vector<double>(4 * 64, 0.0)};
  net.biases = {std::vector<double>(64, 0.25)};
  double expect = 0.0;
  for (const auto& s : ds.test) {
    double sum = 0.0;
    for (double v : s.field) sum += std::abs(0.25 - v) * ds.norm.scale;
    expect += sum / static_cast<double>(s.field.size());
  }
  expect /= static_cast<double>(ds.test.size());
  CHECK(evaluate_mae(net, ds.test, ds.norm) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("nested budgets are prefixes of larger budgets") {
  for (uint64_t seed : {1ULL, 7ULL, 42ULL}) {
    const auto small = nested_budget_indices(100, 10, seed);
    const auto large = nested_budget_indices(100, 60, seed);
    REQUIRE(small.size() == 10);
    REQUIRE(large.size() == 60);
    for (size_t i = 0; i < small.size(); ++i) CHECK(small[i] == large[i]);
    // Distinct indices.
    auto sorted = large;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  }
  CHECK_THROWS_AS(nested_budget_indices(10, 11, 1), std::invalid_argument);
  CHECK_THROWS_AS(nested_budget_indices(10, 0, 1), std::invalid_argument);
}

TEST_CASE("run_protocol fills every cell deterministically") {
  const Dataset ds = eval_dataset();
  const ProtocolSpec spec = tiny_spec();
  const ResultTable a = run_protocol(ds, spec);
  const ResultTable b = run_protocol(ds, spec);
  REQUIRE(a.cells.size() == 2);
  CHECK(a.all_ok());
  CHECK(result_table_csv(a) == result_table_csv(b));
  CHECK(result_table_summary_json(a) == result_table_summary_json(b));
  CHECK(a.dataset_hash == dataset_fingerprint(ds));

  const double agg = a.aggregate_mae(Method::supervised, 4);
  CHECK(agg == median({a.cells[0].mae, a.cells[1].mae}));
  for (const auto& c : a.cells) CHECK(c.mae >= 0.0);
}

TEST_CASE("run_protocol covers all three methods") {
  const Dataset ds = eval_dataset();
  ProtocolSpec spec = tiny_spec();
  spec.methods = {Method::supervised, Method::self_training, Method::uge_st};
  spec.seeds = {1};
  spec.base.ensemble_size = 2;
  const ResultTable table = run_protocol(ds, spec);
  REQUIRE(table.cells.size() == 3);
  CHECK(table.all_ok());
}

TEST_CASE("cell failures are recorded and the run continues") {
  const Dataset ds = eval_dataset();
  ProtocolSpec spec = tiny_spec();
  spec.methods = {Method::uge_st, Method::supervised};
  spec.seeds = {1};
  spec.base.ensemble_size = 0;  // invalid: the uge-st cell fails
  const ResultTable table = run_protocol(ds, spec);
  REQUIRE(table.cells.size() == 2);
  CHECK(!table.cells[0].ok);
  CHECK(!table.cells[0].error.empty());
  CHECK(table.cells[1].ok);  // supervised ignores ensemble_size
  CHECK(!table.all_ok());
  CHECK(result_table_csv(table).find("nan") != std::string::npos);
}

TEST_CASE("protocol validates its spec") {
  const Dataset ds = eval_dataset();
  ProtocolSpec spec = tiny_spec();
  spec.label_budgets = {5, 4};
  CHECK_THROWS_AS(run_protocol(ds, spec), std::invalid_argument);
  spec.label_budgets = {400};
  CHECK_THROWS_AS(run_protocol(ds, spec), std::invalid_argument);
  spec.label_budgets.clear();
  CHECK_THROWS_AS(run_protocol(ds, spec), std::invalid_argument);
}

TEST_CASE("parallel protocol cells match the serial run") {
  const Dataset ds = eval_dataset();
  ProtocolSpec serial = tiny_spec();
  ProtocolSpec threaded = tiny_spec();
  threaded.jobs = 2;
  CHECK(result_table_csv(run_protocol(ds, serial)) ==
        result_table_csv(run_protocol(ds, threaded)));
}

TEST_CASE("ensemble ablation sweeps sizes with all three curves") {
  const Dataset ds = eval_dataset();
  ProtocolSpec spec = tiny_spec();
  spec.seeds = {1, 2};
  const auto ablation = ablate_ensemble(ds, {1, 2}, spec);
  REQUIRE(ablation.rows.size() == 4);
  for (const auto& r : ablation.rows) {
    CHECK(r.pseudo_mae > 0.0);
    CHECK(r.pt_student_mae > 0.0);
    CHECK(r.uge_st_mae > 0.0);
  }
  CHECK(ablation.aggregate_pseudo(1) ==
        median({ablation.rows[0].pseudo_mae, ablation.rows[1].pseudo_mae}));
  const auto csv = ensemble_ablation_csv(ablation);
  CHECK(csv.find("ensemble_size,seed,pseudo_mae,pt_student_mae,uge_st_mae") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("pretrain ablation produces the four arms at n=1") {
  const Dataset ds = eval_dataset();
  ProtocolSpec spec = tiny_spec();
  spec.seeds = {1};
  const auto ablation = ablate_pretrain(ds, spec);
  REQUIRE(ablation.rows.size() == 1);
  const auto& r = ablation.rows[0];
  CHECK(r.pseudo_mae > 0.0);
  CHECK(r.self_training_mae > 0.0);
  CHECK(r.pt_student_mae > 0.0);
  CHECK(r.uge_st_mae > 0.0);
  CHECK(pretrain_ablation_csv(ablation).find("seed,pseudo_mae") == 0);
}

TEST_CASE("uncertainty ablation pairs differ only in the flag") {
  const Dataset ds = eval_dataset();
  ProtocolSpec spec = tiny_spec();
  spec.seeds = {1};
  const auto ablation = ablate_uncertainty(ds, {2}, spec);
  REQUIRE(ablation.rows.size() == 1);
  CHECK(ablation.rows[0].pt_with > 0.0);
  CHECK(ablation.rows[0].pt_without > 0.0);
  CHECK_THROWS_AS(ablate_uncertainty(ds, {1}, spec), std::invalid_argument);
}

TEST_CASE("ablations are deterministic") {
  const Dataset ds = eval_dataset();
  ProtocolSpec spec = tiny_spec();
  spec.seeds = {1};
  CHECK(ensemble_ablation_csv(ablate_ensemble(ds, {1}, spec)) ==
        ensemble_ablation_csv(ablate_ensemble(ds, {1}, spec)));
}

TEST_CASE("heatmap CSV round-trips to equal values") {
  Rng rng(9);
  Field f({5, 7});
  for (auto& v : f.values) v = rng.uniform(-1e3, 1e3);
  const auto path = fs::temp_directory_path() / "fieldst_heatmap.csv";
  export_heatmap(f, path, HeatmapFormat::csv);
  const Field back = load_csv_field(path);
  CHECK(back.grid == f.grid);
  CHECK(back.values == f.values);
  fs::remove(path);
}

TEST_CASE("constant fields render as uniform PGM") {
  Field f({3, 4}, 5.5);
  const auto path = fs::temp_directory_path() / "fieldst_heatmap.pgm";
  export_heatmap(f, path, HeatmapFormat::pgm);
  std::ifstream in(path);
  std::string magic;
  int w, h, max_level;
  in >> magic >> w >> h >> max_level;
  CHECK(magic == "P2");
  CHECK(w == 4);
  CHECK(h == 3);
  CHECK(max_level == 255);
  int level, count = 0;
  while (in >> level) {
    CHECK(level == 0);
    ++count;
  }
  CHECK(count == 12);
  fs::remove(path);
}

TEST_CASE("PGM scales to the min-max range") {
  Field f({1, 3});
  f.values = {1.0, 2.0, 3.0};
  const auto path = fs::temp_directory_path() / "fieldst_heatmap_scale.pgm";
  export_heatmap(f, path, HeatmapFormat::pgm);
  std::ifstream in(path);
  std::string magic;
  int w, h, max_level;
  in >> magic >> w >> h >> max_level;
  int a, b, c;
  in >> a >> b >> c;
  CHECK(a == 0);
  CHECK(b == 128);  // round(0.5 * 255)
  CHECK(c == 255);
  fs::remove(path);
}

TEST_CASE("error maps match the elementwise definition") {
  Rng rng(12);
  Field pred({4, 4}), truth({4, 4});
  for (auto& v : pred.values) v = rng.uniform(-1.0, 1.0);
  for (auto& v : truth.values) v = rng.uniform(-1.0, 1.0);
  const Field err = absolute_error_map(pred, truth);
  for (size_t i = 0; i < err.values.size(); ++i)
    CHECK(err.values[i] == std::abs(pred.values[i] - truth.values[i]));
}

TEST_CASE("export rejects non-finite values") {
  Field f({2, 2}, 1.0);
  f.values[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(export_heatmap(f, fs::temp_directory_path() / "bad.pgm", HeatmapFormat::pgm),
                  std::invalid_argument);
}

}  // TEST_SUITE
