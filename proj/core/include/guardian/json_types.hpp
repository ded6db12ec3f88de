#pragma once

#include "json.hpp"

namespace guardian {

// Order-preserving JSON everywhere: stable key order makes artifact, trace,
// and cache bytes reproducible.
using ojson = nlohmann::ordered_json;

}  // namespace guardian
