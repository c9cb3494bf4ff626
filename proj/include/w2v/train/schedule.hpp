// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

namespace w2v {

enum class LrHeuristic { kConst, kSub, kLin };

LrHeuristic parse_lr_heuristic(const std::string& name);

/// Peak learning rate for a batch of batch_seconds: reference_lr unchanged,
/// scaled by the square root of the batch ratio, or linearly.
double lr_heuristic(double batch_seconds, LrHeuristic kind, double reference_lr = 5e-4,
                    double reference_seconds = 6000.0);

/// Triangular cycles from max/100 up to max and back down.
class CyclicLr {
 public:
  CyclicLr(double max_lr, int64_t half_cycle, int64_t num_cycles = 8);

  /// Steps past the last cycle stay at the base rate.
  double operator()(int64_t step) const;

  double max_lr() const { return max_lr_; }
  double base_lr() const { return max_lr_ / 100.0; }
  int64_t half_cycle() const { return half_cycle_; }
  int64_t total_steps() const { return 2 * half_cycle_ * num_cycles_; }

 private:
  double max_lr_;
  int64_t half_cycle_;
  int64_t num_cycles_;
};

/// Linear warmup over 10% of the steps, constant for 40%, then exponential
/// decay to the final rate.
class TriStageLr {
 public:
  TriStageLr(int64_t total_steps, double base_lr = 5e-7, double peak_lr = 5e-5, double final_lr = 2.5e-6);

  double operator()(int64_t step) const;

  int64_t warmup_steps() const { return warmup_; }
  int64_t hold_steps() const { return hold_; }

 private:
  int64_t total_;
  int64_t warmup_;
  int64_t hold_;
  double base_, peak_, final_;
};

}  // namespace w2v
