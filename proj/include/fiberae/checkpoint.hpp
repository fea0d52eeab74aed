#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string_view>

#include "fiberae/autoencoder.hpp"

// Checkpoint format, version 1. Plain text, one token per field:
//
//   fiberae-checkpoint 1
//   config_hash <16 hex digits>
//   iteration <n>
//   adam_step <n>
//   n_adj <n>
//   losses <count> <hexfloat>...
//   tensors <count>
//   <name> <rows> <cols> <hexfloat>...      (repeated)
//   end
//
// Tensor names: embedding, shaper, w<l>, b<l>, then adam_m<i>, adam_v<i> in
// parameter order. Doubles are C99 hexfloats, so a reload is bit-exact.
namespace fiberae {

class ConfigMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view text);

/// Written to a temporary sibling and renamed into place.
void save_checkpoint(const std::filesystem::path& file, const TrainState& state, std::uint64_t config_hash);

/// Throws ConfigMismatch when the stored hash differs from `expected_hash`.
TrainState load_checkpoint(const std::filesystem::path& file, std::uint64_t expected_hash);

}  // namespace fiberae
