#pragma once

#include "heatpack/packet_frame.hpp"

#include "json.hpp"

#include <string>

namespace heatpack {

using json = nlohmann::ordered_json;

// Deterministic text: key order as inserted, floats with 17 significant
// digits, non-finite floats as strings.
std::string dump_json(const json& j, int indent = 2);

json to_json(const Point& p, int dim);
json to_json(const Lattice& n, int dim);
json frame_to_json(const Frame& frame);
Frame frame_from_json(const json& j);

} // namespace heatpack
