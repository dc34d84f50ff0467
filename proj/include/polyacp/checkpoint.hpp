#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "polyacp/model_state.hpp"
#include "polyacp/tensor.hpp"

namespace polyacp {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Hyperparams hyper;
  ModelState state;
  TensorScheme scheme;
  std::int64_t iterations_run = 0;
};

// Header line `polyacp-checkpoint <version> <crc32> <bytes>` followed by a
// JSON body. Numeric arrays are hex-encoded IEEE-754 bit patterns.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace polyacp
