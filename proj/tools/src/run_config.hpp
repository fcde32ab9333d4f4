#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tsbn/params.hpp"

namespace tsbn::cli {

/// Parses a comma-separated model description. Tokens:
///   J=<int>                one hidden layer of that size
///   layers=<int>-<int>...  hidden sizes bottom to top
///   kind=stochastic|deterministic   middle-layer kind (deep only)
///   order=<int>
///   binary | real | count  (or lik=<family>)
///   hmsbn                  drop the visible-history blocks
///   M=<int>                visible dimension (otherwise `visible_dim`)
ModelSpec parse_model_spec(std::string_view text, int visible_dim = 0);

/// Canonical text form accepted by parse_model_spec.
std::string format_model_spec(const ModelSpec& spec);

/// Reads `key = value` lines ('#' and ';' start comments, blank lines are
/// skipped) into `--key=value` arguments. Empty values are dropped.
std::vector<std::string> read_config_file(const std::string& path);

}  // namespace tsbn::cli
