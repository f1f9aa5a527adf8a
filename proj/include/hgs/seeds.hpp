#pragma once

#include <cstdint>
#include <string_view>

namespace hgs {

// Independent, reproducible seed for a named sub-stream of one master seed.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

}  // namespace hgs
