#include "polyacp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "polyacp/error.hpp"
#include "polyacp/io.hpp"

namespace polyacp {

namespace {

std::string entity_id(const ModeDecl& mode, std::size_t index) {
  switch (mode.kind) {
    case ModeKind::rating: return std::to_string(index + 1);
    case ModeKind::time: return std::to_string(index);
    case ModeKind::categorical: break;
  }
  return mode.name + "_" + std::to_string(index);
}

void validate(const SyntheticConfig& config) {
  const std::size_t modes = config.modes.size();
  if (modes < 2 || config.cardinalities.size() != modes) throw Error("synthetic scheme needs >= 2 modes with cardinalities");
  for (const auto n : config.cardinalities) {
    if (n == 0) throw Error("synthetic cardinalities must be >= 1");
  }
  if (!(config.label_fraction > 0 && config.label_fraction <= 1)) throw Error("label_fraction must lie in (0, 1]");
  if (config.supervised_mode >= modes) throw Error("supervised mode out of range");
  if (config.task_names.empty()) throw Error("at least one task is required");
  for (const auto& core : config.cores) {
    if (core.groups.size() != modes) throw Error("core must give one group per mode");
    if (!(core.density > 0 && core.density <= 1)) throw Error("core density must lie in (0, 1]");
    for (std::size_t k = 0; k < modes; ++k) {
      const auto& g = core.groups[k];
      if (g.size == 0 || g.size > config.cardinalities[k]) throw Error("core is larger than the scheme");
      if (g.start && *g.start + g.size > config.cardinalities[k]) throw Error("core is larger than the scheme");
    }
    for (const auto task : core.tasks) {
      if (task >= config.task_names.size()) throw Error("core refers to an unknown task");
    }
  }
}

// Floyd's algorithm: `count` distinct values from [0, volume), in draw order.
std::vector<std::uint64_t> sample_distinct(std::uint64_t volume, std::uint64_t count, Rng& rng) {
  std::unordered_set<std::uint64_t> chosen;
  std::vector<std::uint64_t> order;
  order.reserve(count);
  for (std::uint64_t j = volume - count; j < volume; ++j) {
    std::uniform_int_distribution<std::uint64_t> pick(0, j);
    const auto v = pick(rng);
    if (chosen.insert(v).second) {
      order.push_back(v);
    } else {
      chosen.insert(j);
      order.push_back(j);
    }
  }
  return order;
}

}  // namespace

SyntheticDataset generate(const SyntheticConfig& config, Rng& rng) {
  validate(config);
  const std::size_t modes = config.modes.size();

  TensorScheme scheme;
  scheme.modes = config.modes;
  scheme.entities.resize(modes);
  for (std::size_t k = 0; k < modes; ++k) {
    for (std::size_t i = 0; i < config.cardinalities[k]; ++i) scheme.entities[k].intern(entity_id(config.modes[k], i));
  }
  ObservedTensor tensor(std::move(scheme));

  // Pick core members; categorical groups are disjoint across cores.
  std::vector<std::vector<bool>> used(modes);
  for (std::size_t k = 0; k < modes; ++k) used[k].assign(config.cardinalities[k], false);
  std::vector<std::vector<std::vector<EntityIndex>>> members;
  for (const auto& core : config.cores) {
    std::vector<std::vector<EntityIndex>> core_members(modes);
    for (std::size_t k = 0; k < modes; ++k) {
      const auto& g = core.groups[k];
      if (g.start) {
        for (std::size_t i = 0; i < g.size; ++i) core_members[k].push_back(static_cast<EntityIndex>(*g.start + i));
        continue;
      }
      std::vector<EntityIndex> pool;
      for (std::size_t i = 0; i < config.cardinalities[k]; ++i) {
        if (!used[k][i]) pool.push_back(static_cast<EntityIndex>(i));
      }
      if (pool.size() < g.size) throw Error("core is larger than the scheme (not enough unused entities)");
      for (std::size_t i = 0; i < g.size; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
      }
      pool.resize(g.size);
      std::sort(pool.begin(), pool.end());
      for (const auto e : pool) used[k][e] = true;
      core_members[k] = std::move(pool);
    }
    members.push_back(std::move(core_members));
  }

  SyntheticDataset data{std::move(tensor), LabelSet(config.supervised_mode, config.cardinalities[config.supervised_mode], config.task_names), {}, {}, {}, config.epoch_origin};

  std::vector<EntityIndex> cell(modes);
  for (std::size_t c = 0; c < config.cores.size(); ++c) {
    const auto& m = members[c];
    std::uint64_t volume = 1;
    for (std::size_t k = 0; k < modes; ++k) volume *= m[k].size();
    const auto count = static_cast<std::uint64_t>(std::llround(config.cores[c].density * static_cast<double>(volume)));
    std::unordered_set<std::uint64_t> box;
    for (auto code : sample_distinct(volume, std::max<std::uint64_t>(count, 1), rng)) box.insert(code);
    // Every member must appear in at least one core tuple.
    std::uint64_t stride = 1;
    for (std::size_t k = 0; k < modes; ++k) {
      std::vector<bool> seen(m[k].size(), false);
      for (const auto code : box) seen[(code / stride) % m[k].size()] = true;
      for (std::size_t i = 0; i < m[k].size(); ++i) {
        if (seen[i]) continue;
        std::uniform_int_distribution<std::uint64_t> pick(0, volume - 1);
        const auto base = pick(rng);
        const auto digit = (base / stride) % m[k].size();
        box.insert(base - digit * stride + i * stride);
      }
      stride *= m[k].size();
    }
    std::vector<std::uint64_t> codes(box.begin(), box.end());
    std::sort(codes.begin(), codes.end());
    for (const auto code : codes) {
      std::uint64_t rest = code;
      for (std::size_t k = 0; k < modes; ++k) {
        cell[k] = m[k][rest % m[k].size()];
        rest /= m[k].size();
      }
      data.tensor.insert(cell);
    }
    data.core_cells.push_back(codes.size());
  }

  for (std::size_t i = 0; i < config.background_tuples; ++i) {
    for (std::size_t k = 0; k < modes; ++k) {
      std::uniform_int_distribution<EntityIndex> pick(0, static_cast<EntityIndex>(config.cardinalities[k] - 1));
      cell[k] = pick(rng);
    }
    data.tensor.insert(cell);
  }

  // Ground truth over the supervised mode.
  const std::size_t sup = config.supervised_mode;
  const std::size_t n = config.cardinalities[sup];
  data.truth.assign(config.task_names.size(), std::vector<std::int8_t>(n, -1));
  std::vector<bool> in_core(n, false);
  for (std::size_t c = 0; c < config.cores.size(); ++c) {
    for (const auto e : members[c][sup]) {
      in_core[e] = true;
      for (const auto task : config.cores[c].tasks) data.truth[task][e] = 1;
    }
  }

  // Shared labeled set: a fraction of the positives plus as many non-core negatives.
  std::vector<EntityIndex> positives;
  std::vector<EntityIndex> negatives;
  for (std::size_t e = 0; e < n; ++e) {
    bool positive = false;
    for (const auto& task_truth : data.truth) positive |= task_truth[e] > 0;
    if (positive) positives.push_back(static_cast<EntityIndex>(e));
    if (!in_core[e]) negatives.push_back(static_cast<EntityIndex>(e));
  }
  std::shuffle(positives.begin(), positives.end(), rng);
  std::shuffle(negatives.begin(), negatives.end(), rng);
  std::size_t take = static_cast<std::size_t>(std::llround(config.label_fraction * static_cast<double>(positives.size())));
  if (!positives.empty()) take = std::clamp<std::size_t>(take, 1, positives.size());
  std::vector<EntityIndex> labeled(positives.begin(), positives.begin() + static_cast<std::ptrdiff_t>(take));
  for (std::size_t l = 0; l < data.truth.size(); ++l) {
    const bool covered = std::any_of(labeled.begin(), labeled.end(), [&](EntityIndex e) { return data.truth[l][e] > 0; });
    if (covered) continue;
    for (std::size_t i = take; i < positives.size(); ++i) {
      if (data.truth[l][positives[i]] > 0) {
        labeled.push_back(positives[i]);
        break;
      }
    }
  }
  const std::size_t negative_count = std::min(labeled.size(), negatives.size());
  labeled.insert(labeled.end(), negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(negative_count));
  std::sort(labeled.begin(), labeled.end());
  for (const auto e : labeled) {
    for (std::size_t l = 0; l < data.truth.size(); ++l) data.labels.set(e, l, data.truth[l][e]);
  }

  data.core_members = std::move(members);
  return data;
}

SyntheticConfig planted_core_config(const PlantedCoreScenario& s) {
  SyntheticConfig config;
  config.modes = {{"reviewer", ModeKind::categorical},
                  {"product", ModeKind::categorical},
                  {"rating", ModeKind::rating},
                  {"week", ModeKind::time}};
  config.cardinalities = {s.reviewers, s.products, s.ratings, s.weeks};
  config.background_tuples = s.background_tuples;
  config.label_fraction = s.label_fraction;
  config.epoch_origin = s.epoch_origin;
  if (s.core_ratings > s.ratings || s.core_weeks > s.weeks) throw Error("core is larger than the scheme");

  const auto make_core = [&](std::size_t index, std::size_t reviewers, std::vector<std::size_t> tasks) {
    CoreSpec core;
    const std::size_t week_slots = s.weeks - s.core_weeks + 1;
    core.groups = {{reviewers, std::nullopt},
                   {s.core_products, std::nullopt},
                   {s.core_ratings, s.ratings - s.core_ratings},
                   {s.core_weeks, (index * (s.core_weeks + 3)) % week_slots}};
    core.density = s.core_density;
    core.tasks = std::move(tasks);
    return core;
  };

  if (s.task_overlap) {
    const double overlap = *s.task_overlap;
    if (!(overlap > 0 && overlap < 1)) throw Error("task_overlap must lie in (0, 1)");
    const auto shared = static_cast<std::size_t>(std::llround(overlap * static_cast<double>(s.core_reviewers)));
    if (shared == 0 || shared >= s.core_reviewers) throw Error("task_overlap leaves an empty core");
    config.task_names = {"abuse_a", "abuse_b"};
    config.cores.push_back(make_core(0, shared, {0, 1}));
    config.cores.push_back(make_core(1, s.core_reviewers - shared, {0}));
    config.cores.push_back(make_core(2, s.core_reviewers - shared, {1}));
  } else {
    config.task_names = {"abuse"};
    for (std::size_t c = 0; c < s.cores; ++c) config.cores.push_back(make_core(c, s.core_reviewers, {0}));
  }
  return config;
}

void write_dataset(const SyntheticDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& scheme = data.tensor.scheme();
  {
    auto out = io::open_output(dir / "tuples.csv");
    for (std::size_t k = 0; k < scheme.mode_count(); ++k) out << (k ? "," : "") << scheme.modes[k].name;
    out << '\n';
    for (std::size_t i = 0; i < data.tensor.size(); ++i) {
      const auto cell = data.tensor.cell(i);
      for (std::size_t k = 0; k < cell.size(); ++k) {
        if (k) out << ',';
        if (scheme.modes[k].kind == ModeKind::time) {
          // Mid-week timestamp of the week index.
          out << data.epoch_origin + static_cast<std::int64_t>(cell[k]) * kSecondsPerWeek + kSecondsPerWeek / 2;
        } else {
          out << scheme.entities[k].id(cell[k]);
        }
      }
      out << '\n';
    }
  }
  {
    auto out = io::open_output(dir / "labels.csv");
    write_labels(data.labels, scheme, out);
  }
  {
    auto out = io::open_output(dir / "truth.csv");
    const auto mode = data.labels.mode();
    out << "mode,entity,task,label\n";
    for (std::size_t l = 0; l < data.truth.size(); ++l) {
      for (std::size_t e = 0; e < data.truth[l].size(); ++e) {
        out << scheme.modes[mode].name << ',' << scheme.entities[mode].id(static_cast<EntityIndex>(e)) << ','
            << data.labels.task_names()[l] << ',' << static_cast<int>(data.truth[l][e]) << '\n';
      }
    }
  }
}

std::vector<EntityIndex> heldout_entities(const SyntheticDataset& data) {
  std::vector<EntityIndex> out;
  for (std::size_t e = 0; e < data.labels.entity_count(); ++e) {
    if (!data.labels.is_labeled(static_cast<EntityIndex>(e))) out.push_back(static_cast<EntityIndex>(e));
  }
  return out;
}

}  // namespace polyacp
