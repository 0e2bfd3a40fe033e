#pragma once

#include <cstdint>
#include <vector>

#include "fewgen/util.hpp"

namespace fewgen {

// Input corruption for the denoising autoencoding directions.
struct NoiseConfig {
  double drop_to_pad_prob = 0.1;
  int shuffle_window = 3;
};

// Locally permutes positions (no token moves more than shuffle_window - 1
// from its origin) and independently replaces non-special tokens by pad with
// drop_to_pad_prob. Output length equals input length; pure in (ids, cfg, seed).
std::vector<int> apply_noise(const std::vector<int>& ids, const NoiseConfig& cfg,
                             std::uint64_t seed, int pad_id = 0, int max_special_id = 3);

}  // namespace fewgen
