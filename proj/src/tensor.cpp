#include "polyacp/tensor.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "polyacp/error.hpp"
#include "polyacp/io.hpp"

namespace polyacp {

std::string_view to_string(ModeKind kind) {
  switch (kind) {
    case ModeKind::categorical: return "categorical";
    case ModeKind::rating: return "rating";
    case ModeKind::time: return "time";
  }
  return "categorical";
}

ModeKind parse_mode_kind(std::string_view text) {
  if (text == "categorical") return ModeKind::categorical;
  if (text == "rating") return ModeKind::rating;
  if (text == "time") return ModeKind::time;
  throw ConfigError("unknown mode kind '" + std::string(text) + "'");
}

std::int64_t week_index(std::int64_t timestamp, std::int64_t origin) {
  const std::int64_t delta = timestamp - origin;
  std::int64_t week = delta / kSecondsPerWeek;
  if (delta % kSecondsPerWeek != 0 && delta < 0) --week;
  return week;
}

EntityIndex EntityMap::intern(std::string_view id) {
  std::string key(id);
  const auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  const auto index = static_cast<EntityIndex>(ids_.size());
  ids_.push_back(key);
  index_.emplace(std::move(key), index);
  return index;
}

std::optional<EntityIndex> EntityMap::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> TensorScheme::cardinalities() const {
  std::vector<std::size_t> out;
  out.reserve(entities.size());
  for (const auto& map : entities) out.push_back(map.size());
  return out;
}

std::optional<std::size_t> TensorScheme::mode_index(std::string_view name) const {
  for (std::size_t k = 0; k < modes.size(); ++k) {
    if (modes[k].name == name) return k;
  }
  return std::nullopt;
}

void TensorScheme::validate() const {
  if (modes.size() < 2) throw Error("a tensor needs at least two modes");
  if (entities.size() != modes.size()) throw Error("scheme has mismatched entity maps");
  for (std::size_t k = 0; k < modes.size(); ++k) {
    if (entities[k].size() == 0) throw Error("mode '" + modes[k].name + "' has no entities");
  }
}

ObservedTensor::ObservedTensor(TensorScheme scheme) : scheme_(std::move(scheme)) {
  scheme_.validate();
  radix_.resize(scheme_.mode_count());
  unsigned __int128 volume = 1;
  for (std::size_t k = 0; k < scheme_.mode_count(); ++k) {
    radix_[k] = static_cast<std::uint64_t>(volume);
    volume *= scheme_.cardinality(k);
    if (volume > static_cast<unsigned __int128>(UINT64_MAX)) {
      throw Error("product of mode cardinalities exceeds the 64-bit cell key space");
    }
  }
}

std::uint64_t ObservedTensor::key(std::span<const EntityIndex> indices) const {
  std::uint64_t k = 0;
  for (std::size_t m = 0; m < radix_.size(); ++m) k += radix_[m] * indices[m];
  return k;
}

bool ObservedTensor::insert(std::span<const EntityIndex> indices) {
  if (indices.size() != mode_count()) throw Error("cell arity does not match the tensor");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= scheme_.cardinality(k)) throw Error("cell index out of range");
  }
  if (!members_.insert(key(indices)).second) return false;
  cells_.insert(cells_.end(), indices.begin(), indices.end());
  return true;
}

bool ObservedTensor::contains(std::span<const EntityIndex> indices) const {
  return members_.contains(key(indices));
}

double ObservedTensor::density() const {
  double volume = 1.0;
  for (std::size_t k = 0; k < mode_count(); ++k) volume *= static_cast<double>(scheme_.cardinality(k));
  return static_cast<double>(size()) / volume;
}

namespace {

bool parse_int(std::string_view text, std::int64_t& value) {
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

}  // namespace

IngestResult ingest_tuples(std::istream& in, const IngestOptions& options) {
  std::string line;
  if (!io::read_line(in, line)) throw IngestError("tuple input is empty (no header row)");
  const char delimiter = io::detect_delimiter(line);
  const auto header = io::split(line, delimiter);

  std::vector<ModeDecl> modes = options.modes;
  if (modes.empty()) {
    for (const auto& name : header) modes.push_back({name, ModeKind::categorical});
  }
  std::vector<std::size_t> columns;
  for (const auto& mode : modes) {
    std::size_t column = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == mode.name) column = c;
    }
    if (column == header.size()) throw IngestError("missing column '" + mode.name + "'");
    columns.push_back(column);
  }

  TensorScheme scheme;
  scheme.modes = modes;
  scheme.entities.resize(modes.size());
  std::vector<EntityIndex> flat;
  std::size_t records = 0;
  std::size_t rejected = 0;
  std::size_t line_number = 1;
  std::vector<EntityIndex> cell(modes.size());
  while (io::read_line(in, line)) {
    ++line_number;
    if (io::trim(line).empty()) continue;
    ++records;
    const auto fields = io::split(line, delimiter);
    bool ok = true;
    std::vector<std::string> ids(modes.size());
    for (std::size_t k = 0; k < modes.size() && ok; ++k) {
      if (columns[k] >= fields.size()) {
        throw IngestError("line " + std::to_string(line_number) + ": missing value for column '" +
                          modes[k].name + "'");
      }
      const std::string& raw = fields[columns[k]];
      switch (modes[k].kind) {
        case ModeKind::categorical:
          ids[k] = raw;
          break;
        case ModeKind::rating: {
          std::int64_t rating = 0;
          if (!parse_int(raw, rating) || rating < 1 || rating > 5) {
            ok = false;
          } else {
            ids[k] = std::to_string(rating);
          }
          break;
        }
        case ModeKind::time: {
          std::int64_t ts = 0;
          if (!parse_int(raw, ts)) {
            ok = false;
          } else {
            ids[k] = std::to_string(week_index(ts, options.epoch_origin));
          }
          break;
        }
      }
    }
    if (!ok) {
      ++rejected;
      continue;
    }
    for (std::size_t k = 0; k < modes.size(); ++k) {
      flat.push_back(scheme.entities[k].intern(ids[k]));
    }
  }

  if (flat.empty()) throw IngestError("tuple input has no valid records");
  ObservedTensor tensor(std::move(scheme));
  const std::size_t k_modes = modes.size();
  std::size_t duplicates = 0;
  for (std::size_t i = 0; i < flat.size(); i += k_modes) {
    if (!tensor.insert({flat.data() + i, k_modes})) ++duplicates;
  }
  return IngestResult{std::move(tensor), records, rejected, duplicates};
}

IngestResult ingest_tuples(const std::filesystem::path& path, const IngestOptions& options) {
  auto in = io::open_input(path);
  return ingest_tuples(in, options);
}

void export_tuples(const ObservedTensor& tensor, std::ostream& out, char delimiter) {
  const auto& scheme = tensor.scheme();
  for (std::size_t k = 0; k < scheme.mode_count(); ++k) {
    if (k) out << delimiter;
    out << scheme.modes[k].name;
  }
  out << '\n';
  for (std::size_t i = 0; i < tensor.size(); ++i) {
    const auto cell = tensor.cell(i);
    for (std::size_t k = 0; k < cell.size(); ++k) {
      if (k) out << delimiter;
      out << scheme.entities[k].id(cell[k]);
    }
    out << '\n';
  }
}

void export_index_map(const EntityMap& map, std::ostream& out, char delimiter) {
  out << "raw_id" << delimiter << "dense_index\n";
  for (std::size_t i = 0; i < map.size(); ++i) {
    out << map.id(static_cast<EntityIndex>(i)) << delimiter << i << '\n';
  }
}

void MiniBatch::push(std::span<const EntityIndex> cell, std::uint8_t y) {
  indices.insert(indices.end(), cell.begin(), cell.end());
  labels.push_back(y);
}

namespace {

// One uniform unobserved cell, or false after kMaxNegativeRejections draws.
bool draw_negative(const ObservedTensor& tensor, Rng& rng, std::vector<EntityIndex>& cell) {
  const auto& scheme = tensor.scheme();
  for (int attempt = 0; attempt < kMaxNegativeRejections; ++attempt) {
    for (std::size_t k = 0; k < cell.size(); ++k) {
      std::uniform_int_distribution<EntityIndex> pick(0, static_cast<EntityIndex>(scheme.cardinality(k) - 1));
      cell[k] = pick(rng);
    }
    if (!tensor.contains(cell)) return true;
  }
  return false;
}

}  // namespace

MiniBatch sample_minibatch(const ObservedTensor& tensor, std::size_t batch_size, double neg_ratio,
                           Rng& rng, std::int64_t t) {
  if (tensor.empty()) throw Error("cannot sample a mini-batch from an empty tensor");
  if (batch_size == 0) throw Error("batch size must be at least 1");
  if (!(neg_ratio >= 0.0)) throw Error("negative ratio must be non-negative");
  const std::size_t negatives = static_cast<std::size_t>(std::llround(static_cast<double>(batch_size) * neg_ratio));

  MiniBatch batch;
  batch.mode_count = tensor.mode_count();
  batch.t = t;
  batch.indices.reserve((batch_size + negatives) * batch.mode_count);
  batch.labels.reserve(batch_size + negatives);

  std::uniform_int_distribution<std::size_t> pick(0, tensor.size() - 1);
  for (std::size_t i = 0; i < batch_size; ++i) batch.push(tensor.cell(pick(rng)), 1);

  std::vector<EntityIndex> cell(batch.mode_count);
  for (std::size_t i = 0; i < negatives; ++i) {
    if (draw_negative(tensor, rng, cell)) {
      batch.push(cell, 0);
    } else {
      ++batch.negatives_skipped;
    }
  }
  return batch;
}

MiniBatch sample_negatives(const ObservedTensor& tensor, std::size_t count, Rng& rng) {
  MiniBatch batch;
  batch.mode_count = tensor.mode_count();
  std::vector<EntityIndex> cell(batch.mode_count);
  for (std::size_t i = 0; i < count; ++i) {
    if (draw_negative(tensor, rng, cell)) {
      batch.push(cell, 0);
    } else {
      ++batch.negatives_skipped;
    }
  }
  return batch;
}

}  // namespace polyacp
