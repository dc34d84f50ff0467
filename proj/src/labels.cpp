#include "polyacp/labels.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include "polyacp/error.hpp"
#include "polyacp/io.hpp"

namespace polyacp {

LabelSet::LabelSet(std::size_t mode, std::size_t entity_count, std::vector<std::string> task_names)
    : mode_(mode),
      entity_count_(entity_count),
      task_names_(std::move(task_names)),
      z_(entity_count * task_names_.size(), 0),
      labeled_(task_names_.size()) {
  if (task_names_.empty()) throw Error("a label set needs at least one task");
}

void LabelSet::set(EntityIndex entity, std::size_t task, int z) {
  if (entity >= entity_count_) throw Error("labeled entity out of range");
  if (task >= task_count()) throw Error("label task out of range");
  if (z != 1 && z != -1) throw Error("labels must be +1 or -1");
  auto& slot = z_[static_cast<std::size_t>(entity) * task_count() + task];
  if (slot == 0) {
    auto& list = labeled_[task];
    list.insert(std::lower_bound(list.begin(), list.end(), entity), entity);
  }
  slot = static_cast<std::int8_t>(z);
}

bool LabelSet::is_labeled(EntityIndex entity) const {
  for (std::size_t l = 0; l < task_count(); ++l) {
    if (label(entity, l) != 0) return true;
  }
  return false;
}

std::vector<EntityIndex> LabelSet::labeled_any() const {
  std::vector<EntityIndex> out;
  for (const auto& list : labeled_) out.insert(out.end(), list.begin(), list.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t LabelSet::task_index(std::string_view name) const {
  for (std::size_t l = 0; l < task_names_.size(); ++l) {
    if (task_names_[l] == name) return l;
  }
  throw Error("unknown task '" + std::string(name) + "'");
}

void LabelSet::validate() const {
  for (std::size_t l = 0; l < task_count(); ++l) {
    bool positive = false;
    bool negative = false;
    for (const auto entity : labeled_[l]) {
      positive |= label(entity, l) > 0;
      negative |= label(entity, l) < 0;
    }
    if (!positive || !negative) {
      throw Error("task '" + task_names_[l] + "' needs at least one positive and one negative label");
    }
  }
}

LabelReadResult read_labels(std::istream& in, const TensorScheme& scheme) {
  std::string line;
  if (!io::read_line(in, line)) throw IngestError("label input is empty (no header row)");
  const char delimiter = io::detect_delimiter(line);

  struct Row {
    EntityIndex entity;
    std::string task;
    int z;
  };
  std::map<std::size_t, std::vector<Row>> rows;
  std::map<std::size_t, std::vector<std::string>> tasks;
  LabelReadResult result;
  std::size_t line_number = 1;
  while (io::read_line(in, line)) {
    ++line_number;
    if (io::trim(line).empty()) continue;
    const auto fields = io::split(line, delimiter);
    if (fields.size() < 4) {
      throw IngestError("label line " + std::to_string(line_number) + ": expected 4 columns");
    }
    const auto mode = scheme.mode_index(fields[0]);
    if (!mode) throw IngestError("label line " + std::to_string(line_number) + ": unknown mode '" + fields[0] + "'");
    int z;
    if (fields[3] == "1" || fields[3] == "+1") {
      z = 1;
    } else if (fields[3] == "-1") {
      z = -1;
    } else if (fields[3] == "0") {
      z = -1;
      ++result.zero_labels;
    } else {
      throw IngestError("label line " + std::to_string(line_number) + ": invalid label '" + fields[3] + "'");
    }
    const auto entity = scheme.entities[*mode].find(fields[1]);
    if (!entity) {
      ++result.unknown_entities;
      continue;
    }
    auto& names = tasks[*mode];
    if (std::find(names.begin(), names.end(), fields[2]) == names.end()) names.push_back(fields[2]);
    rows[*mode].push_back({*entity, fields[2], z});
  }

  for (auto& [mode, mode_rows] : rows) {
    LabelSet set(mode, scheme.cardinality(mode), tasks[mode]);
    for (const auto& row : mode_rows) set.set(row.entity, set.task_index(row.task), row.z);
    result.sets.push_back(std::move(set));
  }
  return result;
}

LabelReadResult read_labels(const std::filesystem::path& path, const TensorScheme& scheme) {
  auto in = io::open_input(path);
  return read_labels(in, scheme);
}

void write_labels(const LabelSet& labels, const TensorScheme& scheme, std::ostream& out) {
  const auto& mode_name = scheme.modes.at(labels.mode()).name;
  const auto& ids = scheme.entities.at(labels.mode());
  out << "mode,entity,task,label\n";
  for (std::size_t l = 0; l < labels.task_count(); ++l) {
    for (const auto entity : labels.labeled(l)) {
      out << mode_name << ',' << ids.id(entity) << ',' << labels.task_names()[l] << ','
          << labels.label(entity, l) << '\n';
    }
  }
}

}  // namespace polyacp
