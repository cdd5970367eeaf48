#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "slim/model.hpp"

namespace slim {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary format: "SLIM" magic, version, encoder config, vocabulary, label
/// inventories, then every parameter array in declaration order as 32-bit
/// little-endian floats with a shape header.
void save_checkpoint(std::ostream& out, const SlimModel& model);
void save_checkpoint(const std::string& path, const SlimModel& model);

SlimModel load_checkpoint(std::istream& in);
SlimModel load_checkpoint(const std::string& path);

} // namespace slim
