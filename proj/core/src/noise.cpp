#include "fewgen/noise.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace fewgen {

std::vector<int> apply_noise(const std::vector<int>& ids, const NoiseConfig& cfg,
                             std::uint64_t seed, int pad_id, int max_special_id) {
  if (ids.empty()) throw std::invalid_argument("apply_noise: empty input");
  if (cfg.drop_to_pad_prob < 0.0 || cfg.drop_to_pad_prob > 1.0)
    throw std::invalid_argument("apply_noise: drop_to_pad_prob outside [0,1]");
  if (cfg.shuffle_window < 1) throw std::invalid_argument("apply_noise: shuffle_window < 1");

  Rng rng(seed);
  const std::size_t n = ids.size();

  // Local permutation: sort by i + U[0, w). Keys of positions w apart never
  // invert, which bounds every displacement by w - 1.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (cfg.shuffle_window > 1) {
    std::uniform_real_distribution<double> u(0.0, static_cast<double>(cfg.shuffle_window));
    std::vector<double> key(n);
    for (std::size_t i = 0; i < n; ++i) key[i] = static_cast<double>(i) + u(rng);
    std::stable_sort(order.begin(), order.end(),
                     [&key](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  }
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = ids[order[i]];

  if (cfg.drop_to_pad_prob > 0.0) {
    std::bernoulli_distribution drop(cfg.drop_to_pad_prob);
    for (auto& id : out) {
      bool special = id >= 0 && id <= max_special_id;
      if (!special && drop(rng)) id = pad_id;
    }
  }
  return out;
}

}  // namespace fewgen
