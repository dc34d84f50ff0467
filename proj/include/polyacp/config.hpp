#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "polyacp/model_state.hpp"

namespace polyacp {

using KeyValues = std::map<std::string, std::string>;

// `key = value` lines; '#' starts a comment.
KeyValues parse_key_values(std::istream& in);
KeyValues read_key_values(const std::filesystem::path& path);

// Applies every key that names a Hyperparams field. Returns the keys that did
// not, so callers can claim their own.
KeyValues apply_hyperparams(Hyperparams& hyper, const KeyValues& values);

KeyValues describe(const Hyperparams& hyper);

}  // namespace polyacp
