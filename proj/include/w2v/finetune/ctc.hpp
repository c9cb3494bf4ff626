// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "w2v/autograd.hpp"

namespace w2v {

/// Output classes: blank at 0, then 'a'..'z', space and apostrophe.
inline constexpr int64_t kBlank = 0;
inline constexpr int64_t kNumCtcClasses = 29;

int64_t char_to_label(char c);
char label_to_char(int64_t label);
/// Labels of a transcript; throws std::invalid_argument on characters
/// outside the alphabet.
std::vector<int64_t> encode_transcript(std::string_view text);
std::string decode_labels(const std::vector<int64_t>& labels);

/// Frames needed to emit `labels`: one per label plus a blank between each
/// pair of equal neighbours.
int64_t ctc_min_frames(const std::vector<int64_t>& labels);

/// Negative log probability of `labels` summed over all alignments, from
/// per-frame log probabilities [T, C] (forward algorithm in log space).
/// Gradient flows into `log_probs`. Throws std::invalid_argument for an
/// empty target or one that cannot be aligned in T frames.
Variable ctc_loss_from_log_probs(const Variable& log_probs, const std::vector<int64_t>& labels);
/// As above from unnormalized logits (log-softmax applied per frame).
Variable ctc_loss(const Variable& logits, const std::vector<int64_t>& labels);

/// Per-frame argmax, repeats collapsed, blanks removed.
std::vector<int64_t> greedy_decode_labels(const Tensor& logits);
std::string greedy_decode(const Tensor& logits);

/// Levenshtein distance between token sequences.
int64_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b);
int64_t edit_distance(std::string_view a, std::string_view b);

std::vector<std::string> split_words(std::string_view text);
/// Word edit distance over the reference word count. Throws
/// std::invalid_argument when the reference has no words.
double wer(std::string_view reference, std::string_view hypothesis);
/// Character edit distance over the reference length.
double cer(std::string_view reference, std::string_view hypothesis);

}  // namespace w2v
