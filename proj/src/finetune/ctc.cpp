// SPDX-License-Identifier: Apache-2.0
#include "w2v/finetune/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "w2v/ops.hpp"

namespace w2v {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

template <typename Seq>
int64_t levenshtein(const Seq& a, const Seq& b) {
  std::vector<int64_t> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int64_t>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int64_t>(i);
    for (size_t j = 1; j <= b.size(); ++j) {
      const int64_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

int64_t char_to_label(char c) {
  if (c >= 'a' && c <= 'z') return 1 + (c - 'a');
  if (c == ' ') return 27;
  if (c == '\'') return 28;
  throw std::invalid_argument(std::string("character '") + c + "' is outside the output alphabet");
}

char label_to_char(int64_t label) {
  if (label >= 1 && label <= 26) return static_cast<char>('a' + label - 1);
  if (label == 27) return ' ';
  if (label == 28) return '\'';
  throw std::invalid_argument("label " + std::to_string(label) + " has no character");
}

std::vector<int64_t> encode_transcript(std::string_view text) {
  std::vector<int64_t> out;
  out.reserve(text.size());
  for (char c : text) out.push_back(char_to_label(c));
  return out;
}

std::string decode_labels(const std::vector<int64_t>& labels) {
  std::string out;
  for (int64_t l : labels) out += label_to_char(l);
  return out;
}

int64_t ctc_min_frames(const std::vector<int64_t>& labels) {
  int64_t n = static_cast<int64_t>(labels.size());
  for (size_t i = 1; i < labels.size(); ++i) n += labels[i] == labels[i - 1];
  return n;
}

Variable ctc_loss_from_log_probs(const Variable& log_probs, const std::vector<int64_t>& labels) {
  if (labels.empty()) throw std::invalid_argument("CTC target is empty");
  const Tensor& lp = log_probs.value();
  if (lp.ndim() != 2) throw std::invalid_argument("CTC expects [T, C] log probabilities");
  const int64_t frames = lp.rows();
  const int64_t classes = lp.cols();
  for (int64_t l : labels) {
    if (l <= kBlank || l >= classes) throw std::invalid_argument("CTC label " + std::to_string(l) + " out of range");
  }
  const int64_t need = ctc_min_frames(labels);
  if (frames < need) {
    throw std::invalid_argument("CTC target of " + std::to_string(labels.size()) + " labels needs at least " +
                                std::to_string(need) + " frames, got " + std::to_string(frames));
  }
  // Extended sequence with blanks: b l1 b l2 ... b
  const int64_t s_len = 2 * static_cast<int64_t>(labels.size()) + 1;
  std::vector<int64_t> ext(static_cast<size_t>(s_len), kBlank);
  for (size_t i = 0; i < labels.size(); ++i) ext[2 * i + 1] = labels[i];
  auto can_skip = [ext](int64_t s) { return s >= 2 && ext[s] != kBlank && ext[s] != ext[s - 2]; };

  auto alpha = std::make_shared<Tensor>(Shape{frames, s_len}, kNegInf);
  alpha->at(0, 0) = lp.at(0, ext[0]);
  alpha->at(0, 1) = lp.at(0, ext[1]);
  for (int64_t t = 1; t < frames; ++t) {
    for (int64_t s = 0; s < s_len; ++s) {
      double a = alpha->at(t - 1, s);
      if (s >= 1) a = log_add(a, alpha->at(t - 1, s - 1));
      if (can_skip(s)) a = log_add(a, alpha->at(t - 1, s - 2));
      alpha->at(t, s) = a == kNegInf ? kNegInf : a + lp.at(t, ext[s]);
    }
  }
  const double log_p = log_add(alpha->at(frames - 1, s_len - 1), alpha->at(frames - 1, s_len - 2));
  Tensor out = Tensor::scalar(-log_p);
  return Variable::make(out, {log_probs}, [alpha, ext, s_len, frames, classes, log_p, can_skip](Node& n) {
    Node& in = *n.inputs[0];
    if (!in.requires_grad) return;
    const Tensor& lp = in.value;
    Tensor beta(Shape{frames, s_len}, kNegInf);
    beta.at(frames - 1, s_len - 1) = lp.at(frames - 1, ext[s_len - 1]);
    beta.at(frames - 1, s_len - 2) = lp.at(frames - 1, ext[s_len - 2]);
    for (int64_t t = frames - 2; t >= 0; --t) {
      for (int64_t s = 0; s < s_len; ++s) {
        double b = beta.at(t + 1, s);
        if (s + 1 < s_len) b = log_add(b, beta.at(t + 1, s + 1));
        if (s + 2 < s_len && can_skip(s + 2)) b = log_add(b, beta.at(t + 1, s + 2));
        beta.at(t, s) = b == kNegInf ? kNegInf : b + lp.at(t, ext[s]);
      }
    }
    // d(-log p)/d lp[t, k] = -sum_{s: ext[s] = k} alpha beta / (y_t(k) p); alpha and beta both include y_t.
    Tensor& g = in.grad_buffer();
    const double seed = n.grad[0];
    for (int64_t t = 0; t < frames; ++t) {
      std::vector<double> occ(static_cast<size_t>(classes), kNegInf);
      for (int64_t s = 0; s < s_len; ++s) {
        const double ab = alpha->at(t, s) + beta.at(t, s);
        if (ab == kNegInf) continue;
        occ[static_cast<size_t>(ext[s])] = log_add(occ[static_cast<size_t>(ext[s])], ab);
      }
      for (int64_t k = 0; k < classes; ++k) {
        const double o = occ[static_cast<size_t>(k)];
        if (o == kNegInf) continue;
        g.at(t, k) -= seed * std::exp(o - lp.at(t, k) - log_p);
      }
    }
  });
}

Variable ctc_loss(const Variable& logits, const std::vector<int64_t>& labels) {
  return ctc_loss_from_log_probs(ops::log_softmax_rows(logits), labels);
}

std::vector<int64_t> greedy_decode_labels(const Tensor& logits) {
  std::vector<int64_t> out;
  int64_t prev = -1;
  for (int64_t t = 0; t < logits.rows(); ++t) {
    int64_t best = 0;
    for (int64_t k = 1; k < logits.cols(); ++k) {
      if (logits.at(t, k) > logits.at(t, best)) best = k;
    }
    if (best != prev && best != kBlank) out.push_back(best);
    prev = best;
  }
  return out;
}

std::string greedy_decode(const Tensor& logits) { return decode_labels(greedy_decode_labels(logits)); }

int64_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return levenshtein(a, b);
}

int64_t edit_distance(std::string_view a, std::string_view b) { return levenshtein(a, b); }

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

double wer(std::string_view reference, std::string_view hypothesis) {
  const auto ref = split_words(reference);
  if (ref.empty()) throw std::invalid_argument("WER reference has no words");
  return static_cast<double>(edit_distance(ref, split_words(hypothesis))) / static_cast<double>(ref.size());
}

double cer(std::string_view reference, std::string_view hypothesis) {
  if (reference.empty()) throw std::invalid_argument("CER reference is empty");
  return static_cast<double>(edit_distance(reference, hypothesis)) / static_cast<double>(reference.size());
}

}  // namespace w2v
