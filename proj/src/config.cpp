#include "polyacp/config.hpp"

#include <charconv>
#include <functional>
#include <istream>

#include "polyacp/error.hpp"
#include "polyacp/io.hpp"

namespace polyacp {

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid value '" + text + "' for '" + key + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("invalid value '" + text + "' for '" + key + "' (expected true or false)");
}

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

using Setter = std::function<void(Hyperparams&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"rank", [](Hyperparams& h, const std::string& k, const std::string& v) { h.rank = parse_number<int>(k, v); }},
      {"a_c", [](Hyperparams& h, const std::string& k, const std::string& v) { h.a_c = parse_number<double>(k, v); }},
      {"b1", [](Hyperparams& h, const std::string& k, const std::string& v) { h.b1 = parse_number<double>(k, v); }},
      {"b2", [](Hyperparams& h, const std::string& k, const std::string& v) { h.b2 = parse_number<double>(k, v); }},
      {"tau_p", [](Hyperparams& h, const std::string& k, const std::string& v) { h.tau_p = parse_number<double>(k, v); }},
      {"theta", [](Hyperparams& h, const std::string& k, const std::string& v) { h.theta = parse_number<double>(k, v); }},
      {"batch_size", [](Hyperparams& h, const std::string& k, const std::string& v) { h.batch_size = parse_number<std::size_t>(k, v); }},
      {"neg_ratio", [](Hyperparams& h, const std::string& k, const std::string& v) { h.neg_ratio = parse_number<double>(k, v); }},
      {"scale_batch", [](Hyperparams& h, const std::string& k, const std::string& v) { h.scale_batch = parse_bool(k, v); }},
      {"max_iters", [](Hyperparams& h, const std::string& k, const std::string& v) { h.max_iters = parse_number<std::int64_t>(k, v); }},
      {"optimizer", [](Hyperparams& h, const std::string&, const std::string& v) { h.optimizer = parse_optimizer(v); }},
      {"seed", [](Hyperparams& h, const std::string& k, const std::string& v) { h.seed = parse_number<std::uint64_t>(k, v); }},
      {"init_scale", [](Hyperparams& h, const std::string& k, const std::string& v) { h.init_scale = parse_number<double>(k, v); }},
      {"init_positive", [](Hyperparams& h, const std::string& k, const std::string& v) { h.init_positive = parse_bool(k, v); }},
      {"label_mode", [](Hyperparams& h, const std::string&, const std::string& v) { h.label_mode = parse_label_mode(v); }},
      {"workers", [](Hyperparams& h, const std::string& k, const std::string& v) { h.workers = parse_number<int>(k, v); }},
      {"monitor_every", [](Hyperparams& h, const std::string& k, const std::string& v) { h.monitor_every = parse_number<std::int64_t>(k, v); }},
      {"eval_every", [](Hyperparams& h, const std::string& k, const std::string& v) { h.eval_every = parse_number<std::int64_t>(k, v); }},
      {"patience", [](Hyperparams& h, const std::string& k, const std::string& v) { h.patience = parse_number<int>(k, v); }},
      {"min_delta", [](Hyperparams& h, const std::string& k, const std::string& v) { h.min_delta = parse_number<double>(k, v); }},
  };
  return table;
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
  KeyValues values;
  std::string line;
  std::size_t line_number = 0;
  while (io::read_line(in, line)) {
    ++line_number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = io::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_number) + ": expected 'key = value'");
    }
    const auto key = std::string(io::trim(view.substr(0, eq)));
    const auto value = std::string(io::trim(view.substr(eq + 1)));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_number) + ": empty key");
    values[key] = value;
  }
  return values;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  return parse_key_values(in);
}

KeyValues apply_hyperparams(Hyperparams& hyper, const KeyValues& values) {
  KeyValues rest;
  for (const auto& [key, value] : values) {
    const auto it = setters().find(key);
    if (it == setters().end()) {
      rest.emplace(key, value);
    } else {
      it->second(hyper, key, value);
    }
  }
  return rest;
}

KeyValues describe(const Hyperparams& h) {
  return {
      {"rank", std::to_string(h.rank)},
      {"a_c", format_double(h.a_c)},
      {"b1", format_double(h.b1)},
      {"b2", format_double(h.b2)},
      {"tau_p", format_double(h.tau_p)},
      {"theta", format_double(h.theta)},
      {"batch_size", std::to_string(h.batch_size)},
      {"neg_ratio", format_double(h.neg_ratio)},
      {"scale_batch", h.scale_batch ? "true" : "false"},
      {"max_iters", std::to_string(h.max_iters)},
      {"optimizer", std::string(to_string(h.optimizer))},
      {"seed", std::to_string(h.seed)},
      {"init_scale", format_double(h.init_scale)},
      {"init_positive", h.init_positive ? "true" : "false"},
      {"label_mode", std::string(to_string(h.label_mode))},
      {"workers", std::to_string(h.workers)},
      {"monitor_every", std::to_string(h.monitor_every)},
      {"eval_every", std::to_string(h.eval_every)},
      {"patience", std::to_string(h.patience)},
      {"min_delta", format_double(h.min_delta)},
  };
}

}  // namespace polyacp
