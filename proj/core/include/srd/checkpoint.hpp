#pragma once

#include <filesystem>
#include <stdexcept>
#include <vector>

#include "srd/nn.hpp"

namespace srd {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File layout:
//   srdlab-checkpoint 1
//   tensors <count>
//   <name> <shape>        one line per tensor, shape as d0xd1 or "scalar"
//   data
//   <little-endian IEEE-754 doubles, tensors concatenated in header order>

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& state);

/// Reads every tensor in the file into fresh, non-grad tensors.
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

/// Copies file contents into `state` in place. Names and shapes must match exactly.
void load_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& state);

}  // namespace srd
