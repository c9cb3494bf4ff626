// SPDX-License-Identifier: Apache-2.0
#include "w2v/train/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "w2v/rng.hpp"
#include "w2v/train/schedule.hpp"

namespace w2v {

using nlohmann::json;

namespace {

using FieldPtr = std::variant<std::string*, uint64_t*, int64_t*, double*>;

struct Field {
  const char* key;
  FieldPtr ptr;
};

std::vector<Field> fields(RunConfig& c) {
  return {
      {"preset", &c.preset},
      {"seed", &c.seed},
      {"train_manifest", &c.train_manifest},
      {"val_manifest", &c.val_manifest},
      {"val_fraction", &c.val_fraction},
      {"enc_channels", &c.enc_channels},
      {"layers", &c.layers},
      {"dim", &c.dim},
      {"heads", &c.heads},
      {"ffn_dim", &c.ffn_dim},
      {"pos_kernel", &c.pos_kernel},
      {"pos_groups", &c.pos_groups},
      {"codebook_size", &c.codebook_size},
      {"codeword_dim", &c.codeword_dim},
      {"sim_dim", &c.sim_dim},
      {"dropout", &c.dropout},
      {"classifier_init_std", &c.classifier_init_std},
      {"batch_seconds", &c.batch_seconds},
      {"gpu_batches", &c.gpu_batches},
      {"iterations", &c.iterations},
      {"lr_kind", &c.lr_kind},
      {"max_lr", &c.max_lr},
      {"lr_ref", &c.lr_ref},
      {"lr_ref_seconds", &c.lr_ref_seconds},
      {"half_cycle", &c.half_cycle},
      {"num_cycles", &c.num_cycles},
      {"adam_beta1", &c.adam_beta1},
      {"adam_beta2", &c.adam_beta2},
      {"adam_eps", &c.adam_eps},
      {"weight_decay", &c.weight_decay},
      {"num_distractors", &c.num_distractors},
      {"mask_prob", &c.mask_prob},
      {"mask_span", &c.mask_span},
      {"logit_temperature", &c.logit_temperature},
      {"lambda_d", &c.lambda_d},
      {"lambda_p", &c.lambda_p},
      {"tau_start", &c.tau_start},
      {"tau_floor", &c.tau_floor},
      {"tau_floor_fraction", &c.tau_floor_fraction},
      {"validate_every", &c.validate_every},
      {"select_on", &c.select_on},
      {"bin_size", &c.bin_size},
      {"queue_length", &c.queue_length},
      {"max_spread_seconds", &c.max_spread_seconds},
      {"max_consecutive_discards", &c.max_consecutive_discards},
      {"ft_iterations", &c.ft_iterations},
      {"ft_batch_seconds", &c.ft_batch_seconds},
      {"ft_base_lr", &c.ft_base_lr},
      {"ft_peak_lr", &c.ft_peak_lr},
      {"ft_final_lr", &c.ft_final_lr},
      {"ft_freeze_context_steps", &c.ft_freeze_context_steps},
      {"ft_mask_prob", &c.ft_mask_prob},
      {"ft_mask_span", &c.ft_mask_span},
      {"ft_dropout", &c.ft_dropout},
      {"ft_init", &c.ft_init},
      {"ft_train_manifest", &c.ft_train_manifest},
      {"ft_eval_manifest", &c.ft_eval_manifest},
  };
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// Empty string on success, else the reason.
std::string assign(const FieldPtr& ptr, const std::string& value) {
  return std::visit(
      [&](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::string>) {
          *p = value;
          return "";
        } else if constexpr (std::is_same_v<T, double>) {
          double v;
          if (!parse_number(value, v) || !std::isfinite(v)) return "expected a finite number, got '" + value + "'";
          *p = v;
          return "";
        } else {
          T v;
          if (!parse_number(value, v)) return "expected an integer, got '" + value + "'";
          *p = v;
          return "";
        }
      },
      ptr);
}

std::string render(const FieldPtr& ptr) {
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return *p;
        } else if constexpr (std::is_same_v<T, double>) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.17g", *p);
          return buf;
        } else {
          return std::to_string(*p);
        }
      },
      ptr);
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error([&] {
        std::string msg;
        for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

RunConfig RunConfig::preset_config(const std::string& name) {
  RunConfig c;
  if (name == "toy") return c;
  if (name == "tiny") {
    c.preset = "tiny";
    c.enc_channels = 4;
    c.layers = 2;
    c.dim = 8;
    c.heads = 2;
    c.ffn_dim = 16;
    c.pos_kernel = 4;
    c.pos_groups = 2;
    c.codebook_size = 4;
    c.codeword_dim = 2;
    c.sim_dim = 4;
    c.iterations = 40;
    c.half_cycle = 5;
    c.num_cycles = 4;
    c.validate_every = 10;
    c.ft_iterations = 20;
    c.ft_freeze_context_steps = 5;
    return c;
  }
  if (name == "base") {
    c.preset = "base";
    const ModelConfig m = ModelConfig::base();
    c.enc_channels = m.encoder.channels;
    c.layers = m.transformer.layers;
    c.dim = m.transformer.dim;
    c.heads = m.transformer.heads;
    c.ffn_dim = m.transformer.ffn_dim;
    c.pos_kernel = m.transformer.pos_kernel;
    c.pos_groups = m.transformer.pos_groups;
    c.codebook_size = m.quantizer.codebook_size;
    c.codeword_dim = m.quantizer.codeword_dim;
    c.sim_dim = m.sim_dim;
    c.batch_seconds = 1200.0;
    c.gpu_batches = 8;
    c.iterations = 400000;
    c.lr_kind = "sub";
    c.half_cycle = 25000;
    c.num_distractors = 100;
    c.validate_every = 5000;
    c.ft_iterations = 20000;
    c.ft_batch_seconds = 200.0;
    c.ft_base_lr = 5e-7;
    c.ft_peak_lr = 5e-5;
    c.ft_final_lr = 2.5e-6;
    c.ft_freeze_context_steps = 5000;
    return c;
  }
  throw ConfigError({"preset: unknown preset '" + name + "' (expected toy, tiny or base)"});
}

ModelConfig RunConfig::model() const {
  ModelConfig m;
  m.encoder.channels = enc_channels;
  m.transformer.layers = layers;
  m.transformer.dim = dim;
  m.transformer.heads = heads;
  m.transformer.ffn_dim = ffn_dim;
  m.transformer.pos_kernel = pos_kernel;
  m.transformer.pos_groups = pos_groups;
  m.transformer.dropout = dropout;
  m.quantizer.codebook_size = codebook_size;
  m.quantizer.codeword_dim = codeword_dim;
  m.quantizer.tau_start = tau_start;
  m.quantizer.tau_floor = tau_floor;
  m.quantizer.tau_floor_fraction = tau_floor_fraction;
  m.quantizer.classifier_init_std = classifier_init_std;
  m.sim_dim = sim_dim;
  m.sync_dims();
  return m;
}

SslOptions RunConfig::ssl_options() const {
  SslOptions o;
  o.mask_prob = mask_prob;
  o.mask_span = mask_span;
  o.num_distractors = num_distractors;
  o.logit_temperature = logit_temperature;
  o.weights.diversity = lambda_d;
  o.weights.penalty = lambda_p;
  o.gumbel_tau = tau_start;
  return o;
}

double RunConfig::peak_lr() const {
  if (lr_kind == "fixed") return max_lr;
  return lr_heuristic(batch_seconds, parse_lr_heuristic(lr_kind), lr_ref, lr_ref_seconds);
}

void RunConfig::validate() const {
  std::vector<std::string> bad;
  auto need = [&](bool ok, const char* key, const std::string& what) {
    if (!ok) bad.push_back(std::string(key) + ": " + what);
  };
  need(preset == "toy" || preset == "tiny" || preset == "base", "preset", "expected toy, tiny or base");
  need(val_fraction > 0.0 && val_fraction < 1.0, "val_fraction", "must be in (0, 1)");
  need(enc_channels > 0, "enc_channels", "must be positive");
  need(layers > 0, "layers", "must be positive");
  need(dim > 0 && heads > 0 && dim % heads == 0, "heads", "must be positive and divide dim");
  need(ffn_dim > 0, "ffn_dim", "must be positive");
  need(pos_kernel > 0, "pos_kernel", "must be positive");
  need(pos_groups > 0 && dim % pos_groups == 0, "pos_groups", "must be positive and divide dim");
  need(codebook_size >= 2, "codebook_size", "must be at least 2");
  need(codeword_dim > 0, "codeword_dim", "must be positive");
  need(sim_dim > 0, "sim_dim", "must be positive");
  need(dropout >= 0.0 && dropout < 1.0, "dropout", "must be in [0, 1)");
  need(classifier_init_std > 0.0, "classifier_init_std", "must be positive");
  need(batch_seconds > 0.0, "batch_seconds", "must be positive");
  need(gpu_batches > 0, "gpu_batches", "must be positive");
  need(iterations > 0, "iterations", "must be positive");
  need(lr_kind == "const" || lr_kind == "sub" || lr_kind == "lin" || lr_kind == "fixed", "lr_kind",
       "expected const, sub, lin or fixed");
  need(max_lr > 0.0, "max_lr", "must be positive");
  need(lr_ref > 0.0, "lr_ref", "must be positive");
  need(lr_ref_seconds > 0.0, "lr_ref_seconds", "must be positive");
  need(half_cycle > 0, "half_cycle", "must be positive");
  need(num_cycles > 0, "num_cycles", "must be positive");
  need(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1", "must be in [0, 1)");
  need(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2", "must be in [0, 1)");
  need(adam_eps > 0.0, "adam_eps", "must be positive");
  need(weight_decay >= 0.0, "weight_decay", "must be non-negative");
  need(num_distractors >= 0, "num_distractors", "must be non-negative");
  need(mask_prob >= 0.0 && mask_prob <= 1.0, "mask_prob", "must be in [0, 1]");
  need(mask_span > 0, "mask_span", "must be positive");
  need(logit_temperature > 0.0, "logit_temperature", "must be positive");
  need(lambda_d >= 0.0, "lambda_d", "must be non-negative");
  need(lambda_p >= 0.0, "lambda_p", "must be non-negative");
  need(tau_start > 0.0, "tau_start", "must be positive");
  need(tau_floor > 0.0 && tau_floor <= tau_start, "tau_floor", "must be positive and at most tau_start");
  need(tau_floor_fraction > 0.0 && tau_floor_fraction <= 1.0, "tau_floor_fraction", "must be in (0, 1]");
  need(validate_every > 0, "validate_every", "must be positive");
  need(select_on == "ssl" || select_on == "lc", "select_on", "expected ssl or lc");
  need(bin_size > 0, "bin_size", "must be positive");
  need(queue_length > 0, "queue_length", "must be positive");
  need(max_spread_seconds >= 0.0, "max_spread_seconds", "must be non-negative");
  need(max_consecutive_discards > 0, "max_consecutive_discards", "must be positive");
  need(ft_iterations > 0, "ft_iterations", "must be positive");
  need(ft_batch_seconds > 0.0, "ft_batch_seconds", "must be positive");
  need(ft_base_lr > 0.0, "ft_base_lr", "must be positive");
  need(ft_peak_lr >= ft_base_lr && ft_peak_lr >= ft_final_lr, "ft_peak_lr", "must be at least base and final");
  need(ft_final_lr > 0.0, "ft_final_lr", "must be positive");
  need(ft_freeze_context_steps >= 0, "ft_freeze_context_steps", "must be non-negative");
  need(ft_mask_prob >= 0.0 && ft_mask_prob <= 1.0, "ft_mask_prob", "must be in [0, 1]");
  need(ft_mask_span > 0, "ft_mask_span", "must be positive");
  need(ft_dropout >= 0.0 && ft_dropout < 1.0, "ft_dropout", "must be in [0, 1)");
  need(ft_init == "ssl" || ft_init == "scratch", "ft_init", "expected ssl or scratch");
  if (!bad.empty()) throw ConfigError(std::move(bad));
}

json RunConfig::to_json() const {
  RunConfig copy = *this;
  json j = json::object();
  for (const auto& f : fields(copy)) {
    std::visit([&](auto* p) { j[f.key] = *p; }, f.ptr);
  }
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  std::vector<std::string> bad;
  std::set<std::string> known;
  for (const auto& f : fields(c)) {
    known.insert(f.key);
    if (!j.contains(f.key)) {
      bad.push_back(std::string(f.key) + ": missing");
      continue;
    }
    try {
      std::visit([&](auto* p) { *p = j.at(f.key).get<std::remove_pointer_t<decltype(p)>>(); }, f.ptr);
    } catch (const json::exception&) {
      bad.push_back(std::string(f.key) + ": wrong type");
    }
  }
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) bad.push_back(k + ": unknown key");
  }
  if (!bad.empty()) throw ConfigError(std::move(bad));
  return c;
}

std::string RunConfig::to_text() const {
  RunConfig copy = *this;
  std::string out;
  for (const auto& f : fields(copy)) out += std::string(f.key) + " = " + render(f.ptr) + "\n";
  return out;
}

uint64_t RunConfig::hash() const { return fnv1a64(to_json().dump()); }

KeyValues parse_key_values(const std::string& text, const std::string& source) {
  KeyValues out;
  std::vector<std::string> bad;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || trim(line.substr(0, eq)).empty()) {
      bad.push_back(source + ":" + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  if (!bad.empty()) throw ConfigError(std::move(bad));
  return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path.string() + ": cannot open config file"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path.string());
}

std::pair<std::string, std::string> parse_override(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError({"override '" + arg + "': expected key=value"});
  return {trim(arg.substr(0, eq)), trim(arg.substr(eq + 1))};
}

RunConfig resolve_config(const KeyValues& pairs) {
  std::string preset = "toy";
  for (const auto& [k, v] : pairs) {
    if (k == "preset") preset = v;
  }
  RunConfig c = RunConfig::preset_config(preset);
  auto table = fields(c);
  std::vector<std::string> bad;
  for (const auto& [k, v] : pairs) {
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return k == f.key; });
    if (it == table.end()) {
      bad.push_back(k + ": unknown key");
      continue;
    }
    const std::string err = assign(it->ptr, v);
    if (!err.empty()) bad.push_back(k + ": " + err);
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    bad.insert(bad.end(), e.problems().begin(), e.problems().end());
  }
  if (!bad.empty()) throw ConfigError(std::move(bad));
  return c;
}

std::vector<std::string> config_keys() {
  RunConfig c;
  std::vector<std::string> out;
  for (const auto& f : fields(c)) out.emplace_back(f.key);
  return out;
}

}  // namespace w2v
