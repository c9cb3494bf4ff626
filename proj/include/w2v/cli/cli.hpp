// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "w2v/data/manifest.hpp"
#include "w2v/train/config.hpp"

namespace w2v::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

/// Default parent of run directories when --out is not given.
inline constexpr const char* kOutputRootEnv = "W2V_OUTPUT_ROOT";

/// `args` excludes the program name. Errors go to `err` as a single line
/// "error: <category>: <message>".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct RunData {
  data::Manifest train;
  data::Manifest val;
};

/// Pre-training data: train_manifest plus val_manifest, or a val_fraction
/// split drawn from the validation seed.
RunData load_pretrain_data(const RunConfig& config);
/// Labeled data for fine-tuning, falling back to the pre-training data.
RunData load_finetune_data(const RunConfig& config);

/// Manifest paths made absolute so a run directory can be replayed from
/// anywhere.
RunConfig absolute_paths(RunConfig config);

struct EqualDataRow {
  double hours_seen = 0.0;
  double batch_seconds = 0.0;
  int64_t iterations = 0;
  uint64_t seed = 0;
  double val_lc = 0.0;
  double cer = 0.0;  // NaN when fine-tuning was skipped
};

std::string equal_data_csv_header();
std::string equal_data_csv_row(const EqualDataRow& r);

/// Parses "b:N,b:N,...".
std::vector<std::pair<double, int64_t>> parse_pairs(const std::string& text);

/// One pre-training condition: iterations split into num_cycles cycles with
/// validation at every cycle boundary; the end checkpoint's validation L_c
/// is reported and, when `finetune`, its fine-tuned CER.
EqualDataRow run_equal_data_condition(const RunConfig& base, double batch_seconds, int64_t iterations,
                                      const std::filesystem::path& run_dir, bool finetune, std::ostream* log);

/// Every pair must share batch_seconds * iterations.
std::vector<EqualDataRow> experiment_equal_data(const RunConfig& base,
                                                const std::vector<std::pair<double, int64_t>>& pairs,
                                                const std::vector<uint64_t>& seeds,
                                                const std::filesystem::path& out_dir, bool finetune,
                                                std::ostream* log);

}  // namespace w2v::cli
