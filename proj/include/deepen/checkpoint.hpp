#pragma once

#include <string>

#include "deepen/network.hpp"

namespace deepen {

/// JSON text checkpoint of a parameter set. Schema:
///   {"kind": "fnn"|"resnet", "widths": [...], "layers": [...]}
/// where layers[] holds, in network order, {"weight": [...], "bias": [...]}
/// for Fnn, and for ResNet an entry {"weight": [...]}, one
/// {"w1": [...], "w2": [...], "bias": [...]} per block, and an exit
/// {"weight": [...]}. All arrays are flat row-major doubles.
std::string to_checkpoint_json(const ParamSet& params);
ParamSet from_checkpoint_json(const std::string& text);

void save_checkpoint(const std::string& path, const ParamSet& params);
ParamSet load_checkpoint(const std::string& path);

}  // namespace deepen
