#include <doctest.h>

#include <filesystem>
#include <set>

#include "polyacp/evaluation.hpp"
#include "polyacp/synthetic.hpp"

using namespace polyacp;

TEST_CASE("planted core density") {
  SyntheticConfig config;
  config.modes = {{"seller", ModeKind::categorical}, {"reviewer", ModeKind::categorical}};
  config.cardinalities = {200, 300};
  config.background_tuples = 500;
  config.cores.push_back({{{75, std::nullopt}, {25, std::nullopt}}, 0.96, {0}});
  auto rng = make_rng(1, Stream::synthetic);
  const auto data = generate(config, rng);
  REQUIRE(data.core_cells.size() == 1);
  // Background tuples can land inside the box, so the ratio is at least the density.
  const double ratio = static_cast<double>(data.core_cells[0]) / (75.0 * 25.0);
  CHECK(ratio == doctest::Approx(0.96).epsilon(0.02));
  CHECK(data.core_members[0][0].size() == 75);
  CHECK(data.core_members[0][1].size() == 25);
}

TEST_CASE("planted core scenario") {
  PlantedCoreScenario scenario;
  auto rng = make_rng(3, Stream::synthetic);
  const auto data = generate(planted_core_config(scenario), rng);
  CHECK(data.tensor.mode_count() == 4);
  CHECK(data.tensor.scheme().cardinalities() == std::vector<std::size_t>{500, 300, 5, 20});
  CHECK(data.tensor.size() > 20000);
  REQUIRE(data.core_members.size() == 2);
  std::set<EntityIndex> seen;
  for (const auto& core : data.core_members) {
    CHECK(core[0].size() == 20);
    for (auto e : core[0]) CHECK(seen.insert(e).second);
  }
  std::size_t positives = 0;
  for (auto z : data.truth[0]) positives += z > 0;
  CHECK(positives == 40);
  data.labels.validate();
  for (const auto e : data.labels.labeled(0)) CHECK(data.labels.label(e, 0) == data.truth[0][e]);
  CHECK(heldout_entities(data).size() == 500 - data.labels.labeled_any().size());
}

TEST_CASE("overlapping tasks") {
  PlantedCoreScenario scenario;
  scenario.task_overlap = 0.7;
  auto rng = make_rng(4, Stream::synthetic);
  const auto data = generate(planted_core_config(scenario), rng);
  REQUIRE(data.truth.size() == 2);
  std::size_t both = 0, first = 0;
  for (std::size_t e = 0; e < data.truth[0].size(); ++e) {
    first += data.truth[0][e] > 0;
    both += data.truth[0][e] > 0 && data.truth[1][e] > 0;
  }
  CHECK(first == 20);
  CHECK(both == 14);
}

TEST_CASE("no cores is pure background") {
  SyntheticConfig config;
  config.modes = {{"a", ModeKind::categorical}, {"b", ModeKind::categorical}};
  config.cardinalities = {300, 200};
  config.background_tuples = 3000;
  auto rng = make_rng(2, Stream::synthetic);
  const auto data = generate(config, rng);
  CHECK(data.tensor.size() <= 3000);
  CHECK(data.tensor.size() > 2800);

  // Degree against an unrelated random truth is uninformative.
  std::vector<double> degree(300, 0);
  for (std::size_t i = 0; i < data.tensor.size(); ++i) degree[data.tensor.cell(i)[0]] += 1;
  std::vector<int> truth(300);
  auto coin = make_rng(9, Stream::synthetic);
  for (auto& t : truth) t = static_cast<int>(coin() % 2);
  CHECK(roc_auc(degree, truth) == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("full labels equal the truth") {
  PlantedCoreScenario scenario;
  scenario.label_fraction = 1.0;
  scenario.reviewers = 200;
  scenario.background_tuples = 5000;
  auto rng = make_rng(6, Stream::synthetic);
  const auto data = generate(planted_core_config(scenario), rng);
  std::size_t labeled_positive = 0;
  for (std::size_t e = 0; e < data.truth[0].size(); ++e) {
    const int z = data.labels.label(static_cast<EntityIndex>(e), 0);
    if (z != 0) CHECK(z == data.truth[0][e]);
    labeled_positive += z > 0;
    if (data.truth[0][e] > 0) CHECK(z == 1);
  }
  CHECK(labeled_positive == 40);
}

TEST_CASE("generation is seeded") {
  PlantedCoreScenario scenario;
  scenario.background_tuples = 2000;
  auto a = make_rng(5, Stream::synthetic);
  auto b = make_rng(5, Stream::synthetic);
  const auto x = generate(planted_core_config(scenario), a);
  const auto y = generate(planted_core_config(scenario), b);
  CHECK(x.tensor.flat_cells() == y.tensor.flat_cells());
  CHECK(x.truth == y.truth);
}

TEST_CASE("invalid configs") {
  SyntheticConfig config;
  config.modes = {{"a", ModeKind::categorical}, {"b", ModeKind::categorical}};
  config.cardinalities = {10, 10};
  config.cores.push_back({{{20, std::nullopt}, {2, std::nullopt}}, 0.5, {0}});
  auto rng = make_rng(0, Stream::synthetic);
  CHECK_THROWS(generate(config, rng));
  config.cores[0].groups[0].size = 2;
  config.cores[0].density = 1.5;
  CHECK_THROWS(generate(config, rng));
}

TEST_CASE("dataset files") {
  PlantedCoreScenario scenario;
  scenario.background_tuples = 1000;
  scenario.epoch_origin = 1700000000;
  auto rng = make_rng(7, Stream::synthetic);
  const auto data = generate(planted_core_config(scenario), rng);
  const auto dir = std::filesystem::temp_directory_path() / "polyacp_synthetic_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_dataset(data, dir);
  IngestOptions options;
  options.modes = data.tensor.scheme().modes;
  options.epoch_origin = scenario.epoch_origin;
  const auto back = ingest_tuples(dir / "tuples.csv", options);
  CHECK(back.tensor.size() == data.tensor.size());
  CHECK(back.rejected == 0);
  const auto labels = read_labels(dir / "labels.csv", back.tensor.scheme());
  REQUIRE(labels.sets.size() == 1);
  // Labeled reviewers without any tuple are unknown to the ingested scheme.
  CHECK(labels.sets[0].labeled_any().size() + labels.unknown_entities == data.labels.labeled_any().size());
  std::filesystem::remove_all(dir);
}
