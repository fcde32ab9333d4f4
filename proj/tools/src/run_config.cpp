#include "run_config.hpp"

#include <charconv>
#include <fstream>

#include "tsbn/error.hpp"

namespace tsbn::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int parse_positive(std::string_view key, std::string_view value) {
  int out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || out < 1)
    throw Error(ErrorCode::kInvalidArgument, "model spec: '" + std::string(key) + "' needs a positive integer, got '" +
                                                 std::string(value) + "'");
  return out;
}

}  // namespace

ModelSpec parse_model_spec(std::string_view text, int visible_dim) {
  std::vector<int> dims;
  LayerKind kind = LayerKind::kStochastic;
  int order = 1;
  Likelihood lik = Likelihood::kBinary;
  bool hmsbn = false;
  int M = visible_dim;
  bool kind_given = false;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    const std::string_view token = trim(text.substr(pos, comma - pos));
    pos = comma + 1;
    if (token.empty()) continue;
    const auto eq = token.find('=');
    const std::string_view key = trim(token.substr(0, eq));
    const std::string_view value = eq == std::string_view::npos ? std::string_view{} : trim(token.substr(eq + 1));
    if (eq == std::string_view::npos) {
      if (key == "hmsbn") {
        hmsbn = true;
      } else {
        lik = parse_likelihood(key);
      }
    } else if (key == "J") {
      dims = {parse_positive(key, value)};
    } else if (key == "layers") {
      dims.clear();
      std::size_t p = 0;
      while (p <= value.size()) {
        const auto dash = std::min(value.find('-', p), value.size());
        dims.push_back(parse_positive(key, value.substr(p, dash - p)));
        p = dash + 1;
      }
    } else if (key == "kind") {
      kind = parse_layer_kind(value);
      kind_given = true;
    } else if (key == "order") {
      order = parse_positive(key, value);
    } else if (key == "lik") {
      lik = parse_likelihood(value);
    } else if (key == "M") {
      M = parse_positive(key, value);
    } else {
      throw Error(ErrorCode::kInvalidArgument, "model spec: unknown key '" + std::string(key) + "'");
    }
  }
  if (dims.empty()) throw Error(ErrorCode::kInvalidArgument, "model spec needs J=<int> or layers=<a>-<b>...");
  if (M < 1) throw Error(ErrorCode::kInvalidArgument, "model spec: visible dimension M is unknown");
  if (kind_given && dims.size() == 1 && kind != LayerKind::kStochastic)
    throw Error(ErrorCode::kInvalidArgument, "model spec: a single layer is always stochastic");
  ModelSpec spec = dims.size() == 1 ? ModelSpec::shallow(M, dims[0], order, lik)
                                    : ModelSpec::deep(M, dims, kind, order, lik);
  spec.visible_history = !hmsbn;
  spec.validate();
  return spec;
}

std::string format_model_spec(const ModelSpec& spec) {
  std::string out = "M=" + std::to_string(spec.visible_dim) + ",";
  if (spec.is_deep()) {
    out += "layers=";
    for (std::size_t l = 0; l < spec.layer_dims.size(); ++l) out += (l ? "-" : "") + std::to_string(spec.layer_dims[l]);
    out += ",kind=" + std::string(to_string(spec.layer_kinds.front()));
  } else {
    out += "J=" + std::to_string(spec.layer_dims[0]);
  }
  out += ",order=" + std::to_string(spec.order) + "," + std::string(to_string(spec.likelihood));
  if (!spec.visible_history) out += ",hmsbn";
  return out;
}

std::vector<std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config file '" + path + "'");
  std::vector<std::string> args;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = trim(line);
    if (s.empty() || s.front() == '#' || s.front() == ';') continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::kInvalidArgument, path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string_view key = trim(s.substr(0, eq));
    std::string_view value = trim(s.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    if (key.empty())
      throw Error(ErrorCode::kInvalidArgument, path + ":" + std::to_string(lineno) + ": empty key");
    // An empty value leaves the option at its default.
    if (value.empty()) continue;
    args.push_back("--" + std::string(key) + "=" + std::string(value));
  }
  return args;
}

}  // namespace tsbn::cli
