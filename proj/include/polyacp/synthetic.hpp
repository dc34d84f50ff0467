#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "polyacp/labels.hpp"
#include "polyacp/rng.hpp"
#include "polyacp/tensor.hpp"

namespace polyacp {

// Entities of one mode taking part in a core. With `start` set the group is
// the contiguous range [start, start + size) (rating bands, time windows);
// otherwise `size` entities are drawn at random, disjoint from earlier cores.
struct ModeGroup {
  std::size_t size = 1;
  std::optional<std::size_t> start;
};

struct CoreSpec {
  std::vector<ModeGroup> groups;  // one per mode
  double density = 1.0;
  std::vector<std::size_t> tasks;  // tasks for which core entities are positive
};

struct SyntheticConfig {
  std::vector<ModeDecl> modes;
  std::vector<std::size_t> cardinalities;
  std::size_t background_tuples = 0;
  std::vector<CoreSpec> cores;
  double label_fraction = 0.3;
  std::vector<std::string> task_names{"abuse"};
  std::size_t supervised_mode = 0;
  std::int64_t epoch_origin = 0;
};

struct SyntheticDataset {
  ObservedTensor tensor;
  LabelSet labels;
  // truth[task][entity] in {-1, +1} over the supervised mode.
  std::vector<std::vector<std::int8_t>> truth;
  // Per core, per mode: member entity indices.
  std::vector<std::vector<std::vector<EntityIndex>>> core_members;
  // Distinct observed cells inside each core box.
  std::vector<std::size_t> core_cells;
  std::int64_t epoch_origin = 0;
};

SyntheticDataset generate(const SyntheticConfig& config, Rng& rng);

// The reviewer x product x rating x week scenario used by the acceptance
// suite and the `simulate` subcommand.
struct PlantedCoreScenario {
  std::size_t reviewers = 500;
  std::size_t products = 300;
  std::size_t ratings = 5;
  std::size_t weeks = 20;
  std::size_t background_tuples = 20000;
  std::size_t cores = 2;
  std::size_t core_reviewers = 20;
  std::size_t core_products = 15;
  std::size_t core_ratings = 1;
  std::size_t core_weeks = 2;
  double core_density = 0.9;
  double label_fraction = 0.3;
  // Two tasks whose positive sets share this fraction (0 = single task).
  // Builds a shared core plus one exclusive core per task.
  std::optional<double> task_overlap;
  std::int64_t epoch_origin = 0;
};

SyntheticConfig planted_core_config(const PlantedCoreScenario& scenario);

// Writes tuples.csv, labels.csv and truth.csv into `dir`.
void write_dataset(const SyntheticDataset& data, const std::filesystem::path& dir);

// Entities not labeled for any task.
std::vector<EntityIndex> heldout_entities(const SyntheticDataset& data);

}  // namespace polyacp
