#pragma once

#include <json.hpp>

namespace gameharness {

// Insertion-ordered JSON keeps persisted records in their documented field
// order; dumps are deterministic either way.
using Json = nlohmann::ordered_json;

}  // namespace gameharness
