#include "polyacp/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <zlib.h>

#include "polyacp/config.hpp"
#include "polyacp/error.hpp"
#include "polyacp/io.hpp"

namespace polyacp {

namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "polyacp-checkpoint";

template <class Derived>
json encode_matrix(const Eigen::DenseBase<Derived>& m) {
  // Row-major element order regardless of storage.
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", io::hex_encode(flat.data(), flat.size())}};
}

template <class M>
M decode_matrix(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto flat = io::hex_decode(j.at("data").get<std::string>());
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols) throw CheckpointError("matrix payload has the wrong size");
  M m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = flat[static_cast<std::size_t>(i * cols + c)];
  }
  return m;
}

json encode_vector(const Vector& v) {
  return io::hex_encode(v.data(), static_cast<std::size_t>(v.size()));
}

Vector decode_vector(const json& j) {
  const auto flat = io::hex_decode(j.get<std::string>());
  return Eigen::Map<const Vector>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

std::uint32_t checksum(const std::string& body) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  const auto& s = checkpoint.state;
  json state;
  state["lambda"] = encode_vector(s.lambda);
  state["delta"] = encode_vector(s.delta);
  state["tau"] = encode_vector(s.tau);
  state["shape"] = encode_vector(s.shape);
  state["t"] = s.t;
  state["factors"] = json::array();
  state["factor_vars"] = json::array();
  for (std::size_t k = 0; k < s.mode_count(); ++k) {
    state["factors"].push_back(encode_matrix(s.factors[k]));
    state["factor_vars"].push_back(encode_matrix(s.factor_vars[k]));
  }
  state["heads"] = json::array();
  for (const auto& head : s.heads) {
    json h{{"mode", head.mode}, {"q", encode_matrix(head.q)}, {"tasks", json::array()}};
    for (const auto& task : head.tasks) {
      h["tasks"].push_back({{"name", task.name}, {"beta", encode_vector(task.beta)}, {"rho2", encode_vector(task.rho2)}});
    }
    state["heads"].push_back(std::move(h));
  }

  json scheme{{"modes", json::array()}};
  for (std::size_t k = 0; k < checkpoint.scheme.mode_count(); ++k) {
    scheme["modes"].push_back({{"name", checkpoint.scheme.modes[k].name},
                               {"kind", std::string(to_string(checkpoint.scheme.modes[k].kind))},
                               {"entities", checkpoint.scheme.entities[k].ids()}});
  }

  json body{{"format", std::string(kMagic)},
            {"version", kCheckpointVersion},
            {"hyperparams", describe(checkpoint.hyper)},
            {"state", std::move(state)},
            {"scheme", std::move(scheme)},
            {"iterations_run", checkpoint.iterations_run}};
  const std::string text = body.dump();
  char header[96];
  std::snprintf(header, sizeof(header), "%s %d %08x %zu\n", kMagic.data(), kCheckpointVersion, checksum(text),
                text.size());
  return header + text;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string::npos) throw CheckpointError("checkpoint header is missing or truncated");
  std::istringstream header(bytes.substr(0, newline));
  std::string magic;
  int version = 0;
  std::string crc_hex;
  std::size_t size = 0;
  if (!(header >> magic >> version >> crc_hex >> size) || magic != kMagic) {
    throw CheckpointError("not a polyacp checkpoint");
  }
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const std::string body = bytes.substr(newline + 1);
  if (body.size() != size) throw CheckpointError("checkpoint checksum error: payload is truncated or padded");
  if (checksum(body) != std::stoul(crc_hex, nullptr, 16)) throw CheckpointError("checkpoint checksum error: payload is corrupt");

  Checkpoint out;
  try {
    const json j = json::parse(body);
    KeyValues hyper;
    for (const auto& [key, value] : j.at("hyperparams").items()) hyper[key] = value.get<std::string>();
    const auto unknown = apply_hyperparams(out.hyper, hyper);
    if (!unknown.empty()) throw CheckpointError("checkpoint has unknown hyperparameter '" + unknown.begin()->first + "'");

    const auto& st = j.at("state");
    auto& s = out.state;
    s.lambda = decode_vector(st.at("lambda"));
    s.delta = decode_vector(st.at("delta"));
    s.tau = decode_vector(st.at("tau"));
    s.shape = decode_vector(st.at("shape"));
    s.t = st.at("t").get<std::int64_t>();
    for (const auto& m : st.at("factors")) s.factors.push_back(decode_matrix<RowMatrix>(m));
    for (const auto& m : st.at("factor_vars")) s.factor_vars.push_back(decode_matrix<RowMatrix>(m));
    for (const auto& h : st.at("heads")) {
      SupervisedMode head;
      head.mode = h.at("mode").get<std::size_t>();
      head.q = decode_matrix<Matrix>(h.at("q"));
      for (const auto& task : h.at("tasks")) {
        head.tasks.push_back({task.at("name").get<std::string>(), decode_vector(task.at("beta")),
                              decode_vector(task.at("rho2"))});
      }
      s.heads.push_back(std::move(head));
    }

    for (const auto& mode : j.at("scheme").at("modes")) {
      out.scheme.modes.push_back({mode.at("name").get<std::string>(), parse_mode_kind(mode.at("kind").get<std::string>())});
      EntityMap map;
      for (const auto& id : mode.at("entities")) map.intern(id.get<std::string>());
      out.scheme.entities.push_back(std::move(map));
    }
    out.iterations_run = j.at("iterations_run").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
  if (out.state.factors.size() != out.scheme.mode_count()) throw CheckpointError("checkpoint scheme and state disagree");
  return out;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  auto out = io::open_output(path);
  out << serialize_checkpoint(checkpoint);
  if (!out) throw CheckpointError("failed to write checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_checkpoint(buffer.str());
}

}  // namespace polyacp
