#pragma once

#include <string>

#include "elp/nets.hpp"

namespace elp::checkpoint {

// Versioned binary parameter file: magic, format version, model-config
// digest, parameter count, then 64-bit little-endian values in declaration
// order.
void save(const std::string& path, const std::string& model_digest,
          const nets::ParamStore& params);

// loads into an existing parameter store; fails on magic/version/digest or
// count mismatch
void load(const std::string& path, const std::string& expected_digest, nets::ParamStore& params);

}  // namespace elp::checkpoint
