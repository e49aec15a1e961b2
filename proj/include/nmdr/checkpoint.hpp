#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nmdr/tensor.hpp"

namespace nmdr {

// Binary record file: magic "NMDR", version byte 0x01, u32 record count,
// then per record: u32 name length, UTF-8 name, u32 rank, u32 dims, raw f32
// little-endian data. ParamSet checkpoints and the trainer's unified
// checkpoint are both built from these records.
using Records = std::vector<std::pair<std::string, Tensor>>;

void save_records(const std::string& path, const Records& records);
Records load_records(const std::string& path);

}  // namespace nmdr
