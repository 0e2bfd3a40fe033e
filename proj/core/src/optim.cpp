#include "fewgen/optim.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "fewgen/util.hpp"

namespace fewgen {

void AdamOptimizer::step(const std::vector<Parameter*>& params, double lr) const {
  for (Parameter* p : params) {
    if (!p->touched) continue;
    p->adam_t += 1;
    double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(p->adam_t));
    double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(p->adam_t));
    p->adam_m = opts_.beta1 * p->adam_m + (1.0 - opts_.beta1) * p->grad;
    p->adam_v = opts_.beta2 * p->adam_v.array() + (1.0 - opts_.beta2) * p->grad.array().square();
    p->value.array() -=
        lr * (p->adam_m.array() / bc1) / ((p->adam_v.array() / bc2).sqrt() + opts_.eps);
    p->zero_grad();
  }
}

void AdamOptimizer::write_state(std::ostream& out, const std::vector<Parameter*>& params) {
  for (const Parameter* p : params) {
    out.write(reinterpret_cast<const char*>(&p->adam_t), sizeof(p->adam_t));
    out.write(reinterpret_cast<const char*>(p->adam_m.data()),
              static_cast<std::streamsize>(p->size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(p->adam_v.data()),
              static_cast<std::streamsize>(p->size() * sizeof(double)));
  }
}

void AdamOptimizer::read_state(std::istream& in, const std::vector<Parameter*>& params) {
  for (Parameter* p : params) {
    in.read(reinterpret_cast<char*>(&p->adam_t), sizeof(p->adam_t));
    in.read(reinterpret_cast<char*>(p->adam_m.data()),
            static_cast<std::streamsize>(p->size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(p->adam_v.data()),
            static_cast<std::streamsize>(p->size() * sizeof(double)));
  }
  if (!in) throw DataError("optimizer state: truncated");
}

double linear_decay_lr(double base_lr, long update_idx, long total_updates) {
  if (total_updates <= 0) return base_lr;
  double frac = 1.0 - static_cast<double>(update_idx) / static_cast<double>(total_updates);
  return base_lr * std::max(0.0, frac);
}

}  // namespace fewgen
