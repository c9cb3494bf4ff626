// SPDX-License-Identifier: Apache-2.0
#include "w2v/train/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace w2v {

LrHeuristic parse_lr_heuristic(const std::string& name) {
  if (name == "const") return LrHeuristic::kConst;
  if (name == "sub") return LrHeuristic::kSub;
  if (name == "lin") return LrHeuristic::kLin;
  throw std::invalid_argument("unknown learning rate heuristic '" + name + "' (expected const, sub or lin)");
}

double lr_heuristic(double batch_seconds, LrHeuristic kind, double reference_lr, double reference_seconds) {
  if (!(batch_seconds > 0.0) || !(reference_seconds > 0.0)) {
    throw std::invalid_argument("batch seconds must be positive");
  }
  const double r = batch_seconds / reference_seconds;
  switch (kind) {
    case LrHeuristic::kConst:
      return reference_lr;
    case LrHeuristic::kSub:
      return reference_lr * std::sqrt(r);
    case LrHeuristic::kLin:
      return reference_lr * r;
  }
  return reference_lr;
}

CyclicLr::CyclicLr(double max_lr, int64_t half_cycle, int64_t num_cycles)
    : max_lr_(max_lr), half_cycle_(half_cycle), num_cycles_(num_cycles) {
  if (!(max_lr > 0.0)) throw std::invalid_argument("max learning rate must be positive");
  if (half_cycle < 1 || num_cycles < 1) throw std::invalid_argument("cycle lengths must be positive");
}

double CyclicLr::operator()(int64_t step) const {
  const double base = base_lr();
  if (step < 0 || step >= total_steps()) return base;
  const int64_t pos = step % (2 * half_cycle_);
  const int64_t up = pos <= half_cycle_ ? pos : 2 * half_cycle_ - pos;
  if (up == half_cycle_) return max_lr_;
  return base + (max_lr_ - base) * static_cast<double>(up) / static_cast<double>(half_cycle_);
}

TriStageLr::TriStageLr(int64_t total_steps, double base_lr, double peak_lr, double final_lr)
    : total_(total_steps),
      warmup_(std::llround(0.1 * static_cast<double>(total_steps))),
      hold_(std::llround(0.4 * static_cast<double>(total_steps))),
      base_(base_lr),
      peak_(peak_lr),
      final_(final_lr) {
  if (total_steps < 1) throw std::invalid_argument("tri-stage schedule needs at least one step");
  if (!(base_lr > 0.0 && final_lr > 0.0 && peak_lr >= base_lr && peak_lr >= final_lr)) {
    throw std::invalid_argument("tri-stage rates must be positive with the peak the largest");
  }
}

double TriStageLr::operator()(int64_t step) const {
  step = std::clamp<int64_t>(step, 0, total_);
  if (step < warmup_) return base_ + (peak_ - base_) * static_cast<double>(step) / static_cast<double>(warmup_);
  if (step <= warmup_ + hold_) return peak_;
  const int64_t decay = total_ - warmup_ - hold_;
  if (step == total_) return final_;
  const double frac = static_cast<double>(step - warmup_ - hold_) / static_cast<double>(decay);
  return peak_ * std::exp(std::log(final_ / peak_) * frac);
}

}  // namespace w2v
