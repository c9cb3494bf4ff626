// SPDX-License-Identifier: Apache-2.0
#include "w2v/train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "w2v/rng.hpp"

namespace w2v {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool all_finite(const ParameterStore& store) {
  for (const auto& p : store.all()) {
    if (!p.var.has_grad()) continue;
    for (double g : p.var.grad().values()) {
      if (!std::isfinite(g)) return false;
    }
  }
  return true;
}

void scale_grads(ParameterStore& store, double s) {
  for (auto& p : store.all()) {
    if (p.var.has_grad()) {
      Variable v = p.var;
      v.grad() *= s;
    }
  }
}

}  // namespace

std::string metrics_csv_header() {
  return "step,L_c,L_d,L_p,L_ssl,L_c_per_step,accuracy,perplexity_g1,perplexity_g2,"
         "sim1_avg,sim1_min,sim1_max,sim2_avg,sim2_min,sim2_max,lr,hours_upper,hours_measured";
}

std::string metrics_csv_row(const MetricRecord& r) {
  char buf[640];
  std::snprintf(buf, sizeof(buf),
                "%lld,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,"
                "%.10g,%.10g",
                static_cast<long long>(r.step), r.lc, r.ld, r.lp, r.lssl, r.lc_per_step, r.accuracy, r.perplexity1,
                r.perplexity2, r.similarity1.avg, r.similarity1.min, r.similarity1.max, r.similarity2.avg,
                r.similarity2.min, r.similarity2.max, r.lr, r.hours_upper, r.hours_measured);
  return buf;
}

std::vector<MetricRecord> read_metrics_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open metrics file");
  std::string line;
  if (!std::getline(in, line) || line != metrics_csv_header()) {
    throw std::runtime_error(path.string() + ": unexpected metrics header");
  }
  std::vector<MetricRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 18) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 18 columns");
    MetricRecord r;
    r.step = static_cast<int64_t>(v[0]);
    r.lc = v[1];
    r.ld = v[2];
    r.lp = v[3];
    r.lssl = v[4];
    r.lc_per_step = v[5];
    r.accuracy = v[6];
    r.perplexity1 = v[7];
    r.perplexity2 = v[8];
    r.similarity1 = {v[9], v[10], v[11]};
    r.similarity2 = {v[12], v[13], v[14]};
    r.lr = v[15];
    r.hours_upper = v[16];
    r.hours_measured = v[17];
    out.push_back(r);
  }
  return out;
}

SelectOn parse_select_on(const std::string& name) {
  if (name == "ssl") return SelectOn::kSsl;
  if (name == "lc") return SelectOn::kContrastive;
  throw std::invalid_argument("unknown selection criterion '" + name + "' (expected ssl or lc)");
}

size_t select_best(std::span<const MetricRecord> records, SelectOn on) {
  if (records.empty()) throw std::invalid_argument("no validation records to select from");
  size_t best = 0;
  auto key = [&](const MetricRecord& r) { return on == SelectOn::kSsl ? r.lssl : r.lc; };
  for (size_t i = 1; i < records.size(); ++i) {
    if (key(records[i]) < key(records[best]) ||
        (key(records[i]) == key(records[best]) && records[i].step < records[best].step)) {
      best = i;
    }
  }
  return best;
}

std::vector<UtteranceInput> gather_inputs(const data::WaveformStore& audio, std::span<const int64_t> indices) {
  std::vector<UtteranceInput> out;
  out.reserve(indices.size());
  for (int64_t i : indices) out.push_back({audio[i], static_cast<uint64_t>(i)});
  return out;
}

MetricRecord evaluate_ssl(const Wav2Vec2Model& model, const data::WaveformStore& audio, const SslOptions& options,
                          uint64_t seed) {
  if (audio.size() == 0) throw std::invalid_argument("validation set is empty");
  NoGradGuard no_grad;
  SslOptions eval = options;
  eval.train = false;
  std::vector<int64_t> all(static_cast<size_t>(audio.size()));
  for (int64_t i = 0; i < audio.size(); ++i) all[static_cast<size_t>(i)] = i;
  const auto inputs = gather_inputs(audio, all);
  const SslBatchResult r = ssl_forward(model, inputs, eval, seed);
  MetricRecord m;
  const double n = static_cast<double>(r.utterances);
  m.lc = r.contrastive / n;
  m.ld = r.diversity;
  m.lp = r.penalty / n;
  m.lssl = combine(m.lc, m.ld, m.lp, options.weights);
  m.lc_per_step = r.masked_steps > 0 ? r.contrastive / static_cast<double>(r.masked_steps) : 0.0;
  m.accuracy = r.masked_steps > 0 ? static_cast<double>(r.correct) / static_cast<double>(r.masked_steps) : 0.0;
  m.perplexity1 = r.perplexities.at(0);
  m.perplexity2 = r.perplexities.at(1);
  m.similarity1 = codebook_similarity_stats(model.quantizer().codebook(0).value());
  m.similarity2 = codebook_similarity_stats(model.quantizer().codebook(1).value());
  return m;
}

std::vector<NamedTensor> export_parameters(const ParameterStore& store) {
  std::vector<NamedTensor> out;
  for (const auto& p : store.all()) out.push_back({p.name, p.var.value()});
  return out;
}

void import_parameters(ParameterStore& store, const Checkpoint& ckpt) {
  std::vector<std::string> bad;
  for (const auto& p : store.all()) {
    if (!ckpt.has_tensor(p.name)) {
      bad.push_back(p.name + " (missing)");
      continue;
    }
    const Tensor& t = ckpt.tensor(p.name);
    if (t.shape() != p.var.shape()) {
      bad.push_back(p.name + " (checkpoint " + shape_str(t.shape()) + ", model " + shape_str(p.var.shape()) + ")");
    }
  }
  if (!bad.empty()) {
    std::string msg = "checkpoint does not match the model:";
    for (const auto& b : bad) msg += " " + b;
    throw CheckpointError(msg);
  }
  for (const auto& p : store.all()) {
    Variable v = p.var;
    v.value() = ckpt.tensor(p.name);
  }
}

uint64_t model_seed(uint64_t seed) { return splitmix64(seed ^ 0x6d6f64656cULL); }
uint64_t assembler_seed(uint64_t seed) { return splitmix64(seed ^ 0x6261746368ULL); }
uint64_t validation_seed(uint64_t seed) { return splitmix64(seed ^ 0x76616c6964ULL); }
uint64_t step_seed(uint64_t seed, int64_t step) {
  return splitmix64(seed ^ splitmix64(static_cast<uint64_t>(step) + 0x73746570ULL));
}

std::string checkpoint_name(int64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step-%08lld.ckpt", static_cast<long long>(step));
  return buf;
}

Trainer::Trainer(const RunConfig& config, data::Manifest train, data::Manifest val)
    : config_(config),
      train_(std::move(train)),
      val_(std::move(val)),
      lr_(config.peak_lr(), config.half_cycle, config.num_cycles) {
  config_.validate();
  if (train_.empty()) throw std::invalid_argument("training manifest is empty");
  if (val_.empty()) throw std::invalid_argument("validation manifest is empty");
  const double threshold = config_.gpu_threshold_seconds();
  for (const auto& u : train_.entries) {
    if (u.seconds() > threshold) {
      throw std::invalid_argument("utterance " + u.id + " (" + std::to_string(u.seconds()) +
                                  " s) is longer than the per-gpu-batch threshold of " + std::to_string(threshold) +
                                  " s");
    }
  }
  train_audio_ = data::WaveformStore(train_);
  val_audio_ = data::WaveformStore(val_);
  model_ = std::make_unique<Wav2Vec2Model>(config_.model(), model_seed(config_.seed));
  optimizer_ = std::make_unique<AdamW>(
      model_->params(),
      AdamWConfig{config_.adam_beta1, config_.adam_beta2, config_.adam_eps, config_.weight_decay});
  data::AssemblerConfig ac;
  ac.threshold_seconds = threshold;
  ac.bin_size = config_.bin_size;
  ac.queue_length = config_.queue_length;
  ac.max_spread_seconds = config_.max_spread_seconds;
  ac.max_consecutive_discards = config_.max_consecutive_discards;
  assembler_ = std::make_unique<data::BatchAssembler>(train_, ac, assembler_seed(config_.seed));
  ledger_ = data::DataSeenLedger(static_cast<int64_t>(train_.size()));
}

double Trainer::tau_at(int64_t step) const {
  return temperature_at(step, config_.iterations, model_->config().quantizer);
}

StepStats Trainer::train_step() {
  ParameterStore& params = model_->params();
  params.zero_grad();
  SslOptions options = config_.ssl_options();
  options.gumbel_tau = tau_at(step_);
  const uint64_t seed = step_seed(config_.seed, step_);
  StepStats stats;
  stats.lr = lr_(step_);
  stats.tau = options.gumbel_tau;
  std::vector<data::GpuBatch> batches;
  const double a = static_cast<double>(config_.gpu_batches);
  for (int64_t g = 0; g < config_.gpu_batches; ++g) {
    batches.push_back(assembler_->next());
    const auto inputs = gather_inputs(train_audio_, batches.back().indices);
    const SslBatchResult r = ssl_forward(*model_, inputs, options, seed);
    const double value = r.objective.value().item();
    if (!std::isfinite(value)) {
      throw DivergenceError(step_, "non-finite loss at step " + std::to_string(step_));
    }
    r.objective.backward();
    stats.objective += value / a;
    stats.ssl += r.ssl;
    stats.utterances += r.utterances;
    stats.masked_steps += r.masked_steps;
    stats.correct += r.correct;
  }
  scale_grads(params, 1.0 / a);
  if (!all_finite(params)) throw DivergenceError(step_, "non-finite gradient at step " + std::to_string(step_));
  optimizer_->step(stats.lr);
  ledger_.record(config_.batch_seconds, batches);
  ++step_;
  stats.step = step_;
  return stats;
}

MetricRecord Trainer::validate() const {
  MetricRecord m = evaluate_ssl(*model_, val_audio_, config_.ssl_options(), validation_seed(config_.seed));
  m.step = step_;
  m.lr = lr_(step_);
  m.hours_upper = ledger_.upper_bound_seconds() / 3600.0;
  m.hours_measured = ledger_.measured_seconds() / 3600.0;
  return m;
}

Checkpoint Trainer::snapshot() const {
  Checkpoint c;
  c.config = config_.to_json();
  c.state = {{"step", step_},
             {"config_hash", config_.hash()},
             {"adam_steps", optimizer_->step_counts()},
             {"assembler", assembler_->state()},
             {"ledger", ledger_.state()}};
  c.tensors = export_parameters(model_->params());
  const auto& params = model_->params().all();
  for (size_t i = 0; i < params.size(); ++i) {
    c.tensors.push_back({"adam.m/" + params[i].name, optimizer_->first_moments()[i]});
  }
  for (size_t i = 0; i < params.size(); ++i) {
    c.tensors.push_back({"adam.v/" + params[i].name, optimizer_->second_moments()[i]});
  }
  return c;
}

void Trainer::restore(const Checkpoint& ckpt) {
  const RunConfig saved = RunConfig::from_json(ckpt.config);
  if (saved.hash() != config_.hash()) throw CheckpointError("checkpoint was written by a different configuration");
  if (ckpt.state.at("config_hash").get<uint64_t>() != saved.hash()) {
    throw CheckpointError("checkpoint config hash does not match its config");
  }
  import_parameters(model_->params(), ckpt);
  std::vector<Tensor> m, v;
  for (const auto& p : model_->params().all()) {
    m.push_back(ckpt.tensor("adam.m/" + p.name));
    v.push_back(ckpt.tensor("adam.v/" + p.name));
  }
  optimizer_->set_state(std::move(m), std::move(v), ckpt.state.at("adam_steps").get<std::vector<int64_t>>());
  assembler_->set_state(ckpt.state.at("assembler"));
  ledger_.set_state(ckpt.state.at("ledger"));
  step_ = ckpt.step();
}

void Trainer::run(const fs::path& run_dir, int64_t until, std::ostream* log) {
  if (until < 0) until = config_.iterations;
  fs::create_directories(run_dir);
  const fs::path metrics = run_dir / "metrics.csv";
  const fs::path seen = run_dir / "data_seen.csv";
  const bool fresh = step_ == 0 || !fs::exists(metrics);
  std::ofstream metrics_out(metrics, fresh ? std::ios::trunc : std::ios::app);
  std::ofstream seen_out(seen, fresh ? std::ios::trunc : std::ios::app);
  if (!metrics_out || !seen_out) throw std::runtime_error(run_dir.string() + ": cannot write run outputs");
  if (fresh) {
    metrics_out << metrics_csv_header() << "\n";
    data::DataSeenLedger::write_csv_header(seen_out);
  }
  while (step_ < until) {
    StepStats s;
    try {
      s = train_step();
    } catch (const DivergenceError&) {
      save_checkpoint(run_dir / ("diverged-" + checkpoint_name(step_)), snapshot());
      throw;
    }
    if (step_ % config_.validate_every == 0) {
      const MetricRecord m = validate();
      metrics_out << metrics_csv_row(m) << "\n";
      metrics_out.flush();
      ledger_.write_csv_row(seen_out);
      seen_out.flush();
      save_checkpoint(run_dir / checkpoint_name(step_), snapshot());
      if (log) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "step %lld  L_ssl %.4f  L_c %.4f  acc %.3f  ppl %.2f/%.2f  lr %.3g\n",
                      static_cast<long long>(step_), m.lssl, m.lc, m.accuracy, m.perplexity1, m.perplexity2, m.lr);
        *log << buf << std::flush;
      }
    }
  }
}

}  // namespace w2v
