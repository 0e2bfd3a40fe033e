#pragma once

#include <iosfwd>
#include <vector>

#include "fewgen/graph.hpp"

namespace fewgen {

// Adam with per-parameter step counters: a parameter untouched by a step's
// backward pass receives no update and no moment decay, so parameter groups
// excluded by a training direction stay bitwise identical.
class AdamOptimizer {
 public:
  struct Options {
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-6;
  };

  AdamOptimizer() = default;
  explicit AdamOptimizer(Options opts) : opts_(opts) {}

  // Applies one update at learning rate `lr` to every touched parameter,
  // then clears grads and touched flags.
  void step(const std::vector<Parameter*>& params, double lr) const;

  const Options& options() const { return opts_; }

  // Moment/step-state serialization for checkpoint-resume.
  static void write_state(std::ostream& out, const std::vector<Parameter*>& params);
  static void read_state(std::istream& in, const std::vector<Parameter*>& params);

 private:
  Options opts_ = {};
};

// Linear decay from `base_lr` to zero over `total_updates`.
double linear_decay_lr(double base_lr, long update_idx, long total_updates);

}  // namespace fewgen
