#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "polyacp/tensor.hpp"
#include "polyacp/types.hpp"

namespace polyacp {

// Partial binary targets (z in {-1, +1}) for the entities of one mode, one
// column per task. Unlabeled cells hold 0.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::size_t mode, std::size_t entity_count, std::vector<std::string> task_names);

  void set(EntityIndex entity, std::size_t task, int z);
  int label(EntityIndex entity, std::size_t task) const {
    return z_[static_cast<std::size_t>(entity) * task_count() + task];
  }
  bool is_labeled(EntityIndex entity) const;

  // Entities labeled for `task`, ascending.
  std::span<const EntityIndex> labeled(std::size_t task) const { return labeled_.at(task); }
  // Entities labeled for at least one task, ascending.
  std::vector<EntityIndex> labeled_any() const;

  std::size_t mode() const { return mode_; }
  std::size_t entity_count() const { return entity_count_; }
  std::size_t task_count() const { return task_names_.size(); }
  const std::vector<std::string>& task_names() const { return task_names_; }
  std::size_t task_index(std::string_view name) const;

  // Throws unless every task has at least one positive and one negative.
  void validate() const;

 private:
  std::size_t mode_ = 0;
  std::size_t entity_count_ = 0;
  std::vector<std::string> task_names_;
  std::vector<std::int8_t> z_;
  std::vector<std::vector<EntityIndex>> labeled_;
};

struct LabelReadResult {
  std::vector<LabelSet> sets;  // one per labeled mode, ordered by mode
  std::size_t unknown_entities = 0;
  std::size_t zero_labels = 0;  // 0 read as -1
};

// Columns: mode_name, raw_entity_id, task_name, label in {+1, -1, 1, 0}.
// Rows naming entities absent from the scheme are skipped and counted.
LabelReadResult read_labels(std::istream& in, const TensorScheme& scheme);
LabelReadResult read_labels(const std::filesystem::path& path, const TensorScheme& scheme);

void write_labels(const LabelSet& labels, const TensorScheme& scheme, std::ostream& out);

}  // namespace polyacp
