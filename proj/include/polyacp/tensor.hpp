#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "polyacp/rng.hpp"
#include "polyacp/types.hpp"

namespace polyacp {

enum class ModeKind { categorical, rating, time };

struct ModeDecl {
  std::string name;
  ModeKind kind = ModeKind::categorical;
};

std::string_view to_string(ModeKind kind);
ModeKind parse_mode_kind(std::string_view text);

inline constexpr std::int64_t kSecondsPerWeek = 604800;

// Week index of an epoch timestamp relative to `origin` (floor division).
std::int64_t week_index(std::int64_t timestamp, std::int64_t origin);

// Bijection between raw entity identifiers and dense indices [0, size).
class EntityMap {
 public:
  EntityIndex intern(std::string_view id);
  std::optional<EntityIndex> find(std::string_view id) const;
  const std::string& id(EntityIndex index) const { return ids_.at(index); }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, EntityIndex> index_;
};

struct TensorScheme {
  std::vector<ModeDecl> modes;
  std::vector<EntityMap> entities;

  std::size_t mode_count() const { return modes.size(); }
  std::size_t cardinality(std::size_t mode) const { return entities.at(mode).size(); }
  std::vector<std::size_t> cardinalities() const;
  std::optional<std::size_t> mode_index(std::string_view name) const;
  // Throws unless K >= 2 and every cardinality is >= 1.
  void validate() const;
};

// Sparse binary tensor holding the observed (y = 1) cells. Cells are stored
// flat, K indices per cell, in insertion order; membership uses a mixed-radix
// 64-bit key.
class ObservedTensor {
 public:
  explicit ObservedTensor(TensorScheme scheme);

  // Returns false (and stores nothing) when the tuple is already present.
  bool insert(std::span<const EntityIndex> indices);
  bool contains(std::span<const EntityIndex> indices) const;

  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  std::size_t mode_count() const { return scheme_.mode_count(); }
  std::span<const EntityIndex> cell(std::size_t i) const {
    return {cells_.data() + i * mode_count(), mode_count()};
  }
  const std::vector<EntityIndex>& flat_cells() const { return cells_; }
  const TensorScheme& scheme() const { return scheme_; }
  // Observed cells over the product of cardinalities.
  double density() const;

 private:
  std::uint64_t key(std::span<const EntityIndex> indices) const;

  TensorScheme scheme_;
  std::vector<std::uint64_t> radix_;
  std::vector<EntityIndex> cells_;
  std::unordered_set<std::uint64_t> members_;
};

struct IngestOptions {
  // Empty means every header column is a categorical mode.
  std::vector<ModeDecl> modes;
  std::int64_t epoch_origin = 0;
};

struct IngestResult {
  ObservedTensor tensor;
  std::size_t records = 0;
  std::size_t rejected = 0;
  std::size_t duplicates = 0;
};

IngestResult ingest_tuples(std::istream& in, const IngestOptions& options);
IngestResult ingest_tuples(const std::filesystem::path& path, const IngestOptions& options);

// Writes the tuple set with raw identifiers, header row first.
void export_tuples(const ObservedTensor& tensor, std::ostream& out, char delimiter = ',');
// Two columns: raw_id, dense_index.
void export_index_map(const EntityMap& map, std::ostream& out, char delimiter = ',');

// Training cells (positives and sampled negatives) for one iteration.
struct MiniBatch {
  std::size_t mode_count = 0;
  std::vector<EntityIndex> indices;  // size() * mode_count entries
  std::vector<std::uint8_t> labels;
  std::int64_t t = 0;
  std::size_t negatives_skipped = 0;
  // Multiplies every cell-likelihood term (N / batch_size for a population estimate).
  double weight = 1.0;

  std::size_t size() const { return labels.size(); }
  std::span<const EntityIndex> cell(std::size_t i) const {
    return {indices.data() + i * mode_count, mode_count};
  }
  void push(std::span<const EntityIndex> cell, std::uint8_t y);
};

inline constexpr int kMaxNegativeRejections = 100;

// batch_size positives drawn uniformly with replacement, plus
// round(batch_size * neg_ratio) uniform negatives rejected against the
// observed set. A negative whose draws are all rejected is skipped and
// counted in negatives_skipped.
MiniBatch sample_minibatch(const ObservedTensor& tensor, std::size_t batch_size, double neg_ratio,
                           Rng& rng, std::int64_t t);

// Uniform unobserved cells (y = 0), used for monitoring sets.
MiniBatch sample_negatives(const ObservedTensor& tensor, std::size_t count, Rng& rng);

}  // namespace polyacp
