// SPDX-License-Identifier: Apache-2.0
#include "w2v/cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <regex>
#include <sstream>

#include "CLI11.hpp"
#include "w2v/data/batching.hpp"
#include "w2v/data/synth.hpp"
#include "w2v/finetune/finetune.hpp"
#include "w2v/train/checkpoint.hpp"
#include "w2v/train/grad_probe.hpp"
#include "w2v/train/trainer.hpp"

namespace fs = std::filesystem;

namespace w2v::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string hex8(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%08llx", static_cast<unsigned long long>(h & 0xffffffffULL));
  return buf;
}

KeyValues config_pairs(const RunConfig& c) { return parse_key_values(c.to_text(), "checkpoint config"); }

struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;
  int64_t seed = -1;
};

void add_config_options(CLI::App* sub, ConfigArgs& a) {
  sub->add_option("--config", a.file, "Flat key = value config file");
  sub->add_option("--seed", a.seed, "Seed for all randomness (overrides the config)");
  sub->add_option("overrides", a.overrides, "key=value overrides");
}

/// Layers: `base` (if any), then the config file, then overrides, then --seed.
/// Every problem across all layers is reported together.
RunConfig resolve(const ConfigArgs& a, const KeyValues& base = {}) {
  KeyValues pairs = base;
  std::vector<std::string> bad;
  if (!a.file.empty()) {
    try {
      const auto file = read_key_values(a.file);
      pairs.insert(pairs.end(), file.begin(), file.end());
    } catch (const ConfigError& e) {
      bad.insert(bad.end(), e.problems().begin(), e.problems().end());
    }
  }
  for (const auto& o : a.overrides) {
    try {
      pairs.push_back(parse_override(o));
    } catch (const ConfigError& e) {
      bad.insert(bad.end(), e.problems().begin(), e.problems().end());
    }
  }
  if (a.seed >= 0) pairs.emplace_back("seed", std::to_string(a.seed));
  try {
    RunConfig c = resolve_config(pairs);
    if (bad.empty()) return c;
  } catch (const ConfigError& e) {
    bad.insert(bad.end(), e.problems().begin(), e.problems().end());
  }
  throw ConfigError(std::move(bad));
}

fs::path output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  return env && *env ? fs::path(env) : fs::path("runs");
}

fs::path run_dir_for(const std::string& out, const std::string& command, const RunConfig& c) {
  if (!out.empty()) return out;
  return output_root() / (command + "-" + hex8(c.hash()));
}

void write_resolved_config(const fs::path& dir, const RunConfig& c) {
  fs::create_directories(dir);
  std::ofstream cfg(dir / "config.cfg");
  cfg << c.to_text();
  std::ofstream js(dir / "config.json");
  js << c.to_json().dump(2) << "\n";
  if (!cfg || !js) throw std::runtime_error(dir.string() + ": cannot write resolved config");
}

RunConfig config_of(const Checkpoint& ck) { return RunConfig::from_json(ck.config); }

std::optional<fs::path> latest_checkpoint(const fs::path& dir) {
  static const std::regex name(R"(step-(\d{8})\.ckpt)");
  std::optional<fs::path> best;
  if (!fs::is_directory(dir)) return best;
  std::string best_name;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string n = e.path().filename().string();
    if (std::regex_match(n, name) && n > best_name) {
      best_name = n;
      best = e.path();
    }
  }
  return best;
}

void ensure_writable(std::ostream& s, const fs::path& p) {
  if (!s) throw std::runtime_error(p.string() + ": cannot write");
}

// ---- commands -------------------------------------------------------------

int cmd_pretrain(const ConfigArgs& a, const std::string& out, bool resume, std::ostream& log) {
  RunConfig c = absolute_paths(resolve(a));
  const fs::path dir = run_dir_for(out, "pretrain", c);
  const RunData d = load_pretrain_data(c);
  Trainer trainer(c, d.train, d.val);
  if (resume) {
    if (const auto ck = latest_checkpoint(dir)) {
      trainer.restore(load_checkpoint(*ck));
      log << "resumed from " << ck->string() << "\n";
    }
  } else if (latest_checkpoint(dir)) {
    throw UsageError(dir.string() + " already holds checkpoints; pass --resume or a fresh --out");
  }
  write_resolved_config(dir, c);
  trainer.run(dir, -1, &log);
  const auto records = read_metrics_csv(dir / "metrics.csv");
  if (!records.empty()) {
    const size_t best = select_best(records, parse_select_on(c.select_on));
    std::ofstream sel(dir / "best.txt");
    sel << checkpoint_name(records[best].step) << "\n";
    log << "best " << checkpoint_name(records[best].step) << "\n";
  }
  log << "run directory " << dir.string() << "\n";
  return kExitOk;
}

int cmd_finetune(const ConfigArgs& a, const std::string& init, const std::string& out, std::ostream& log) {
  std::optional<Checkpoint> ck;
  KeyValues base;
  if (!init.empty() && init != "scratch") {
    ck = load_checkpoint(init);
    base = config_pairs(config_of(*ck));
    base.emplace_back("ft_init", "ssl");
  } else if (init == "scratch") {
    base.emplace_back("ft_init", "scratch");
  }
  RunConfig c = absolute_paths(resolve(a, base));
  if (c.ft_init == "ssl" && !ck) throw UsageError("ft_init = ssl needs --init <checkpoint>");
  const fs::path dir = run_dir_for(out, "finetune", c);
  const RunData d = load_finetune_data(c);
  write_resolved_config(dir, c);
  CtcFinetuner ft(c, d.train, ck ? &*ck : nullptr);
  ft.train(-1, &log, std::max<int64_t>(1, c.ft_iterations / 10));
  save_checkpoint(dir / "final.ckpt", ft.snapshot());
  const EvalReport r = ft.evaluate(d.val);
  std::ofstream csv(dir / "eval.csv");
  ensure_writable(csv, dir / "eval.csv");
  write_eval_csv(csv, r);
  log << "CER " << fmt("%.4f", r.cer) << "  WER " << fmt("%.4f", r.wer) << "\n";
  log << "run directory " << dir.string() << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& manifest, const std::string& out, std::ostream& o) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  if (!ck.has_tensor("ctc_head.weight")) throw UsageError(checkpoint + " is not a fine-tuned checkpoint");
  const RunConfig c = config_of(ck);
  const CtcFinetuner ft(c, data::Manifest{}, &ck);
  const EvalReport r = ft.evaluate(data::load_manifest(manifest));
  if (out.empty()) {
    write_eval_csv(o, r);
  } else {
    std::ofstream f(out);
    ensure_writable(f, out);
    write_eval_csv(f, r);
    o << "CER " << fmt("%.4f", r.cer) << "  WER " << fmt("%.4f", r.wer) << "\n";
  }
  return kExitOk;
}

int cmd_probe(const std::vector<std::string>& checkpoints, const ProbeOptions& base, int64_t seed,
              const std::string& out, std::ostream& o) {
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    ensure_writable(file, out);
  }
  std::ostream& csv = out.empty() ? o : file;
  csv << probe_csv_header() << "\n";
  for (const auto& path : checkpoints) {
    const Checkpoint ck = load_checkpoint(path);
    const RunConfig c = config_of(ck);
    const RunData d = load_pretrain_data(c);
    Trainer trainer(c, d.train, d.val);
    trainer.restore(ck);
    ProbeOptions opts = base;
    opts.seed = seed >= 0 ? static_cast<uint64_t>(seed) : c.seed;
    csv << probe_csv_row(probe_gradient_variance(trainer, opts)) << "\n";
  }
  return kExitOk;
}

int cmd_data_seen(double batch_seconds, int64_t iterations, double dataset_hours, std::ostream& o) {
  if (!(batch_seconds > 0.0) || iterations <= 0 || !(dataset_hours > 0.0)) {
    throw UsageError("batch seconds, iterations and dataset hours must be positive");
  }
  const auto s = data::data_seen(batch_seconds, iterations, dataset_hours);
  o << fmt("%.0f", s.hours_upper) << " h  " << fmt("%.0f", s.epochs_upper) << " epochs\n";
  return kExitOk;
}

int cmd_synth(data::SynthConfig sc, const std::string& out, double val_fraction, std::ostream& o) {
  if (out.empty()) throw UsageError("synth-data needs --out");
  sc.vocab = data::default_vocab();
  const auto m = data::synth_corpus(sc, out);
  o << m.size() << " utterances, " << fmt("%.1f", m.total_seconds()) << " s in " << out << "\n";
  if (val_fraction > 0.0) {
    Rng rng(validation_seed(sc.seed));
    const auto split = data::split_validation(m, val_fraction, rng);
    data::save_manifest(split.train, fs::path(out) / "train.tsv");
    data::save_manifest(split.val, fs::path(out) / "val.tsv");
    o << split.train.size() << " train / " << split.val.size() << " val\n";
  }
  return kExitOk;
}

std::string report_header() {
  return "step,hours_seen,L_c,L_d,L_p,L_ssl,accuracy,perplexity_g1,perplexity_g2,"
         "sim1_avg,sim1_min,sim1_max,sim2_avg,sim2_min,sim2_max,lr";
}

int cmd_report(const std::string& run_dir, const std::string& out, std::ostream& o) {
  const fs::path metrics = fs::path(run_dir) / "metrics.csv";
  if (!fs::exists(metrics)) throw std::runtime_error(metrics.string() + ": no metrics in run directory");
  const auto records = read_metrics_csv(metrics);
  std::ostringstream csv;
  csv << report_header() << "\n";
  for (const auto& r : records) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%lld,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g",
                  static_cast<long long>(r.step), r.hours_upper, r.lc, r.ld, r.lp, r.lssl, r.accuracy, r.perplexity1,
                  r.perplexity2, r.similarity1.avg, r.similarity1.min, r.similarity1.max, r.similarity2.avg,
                  r.similarity2.min, r.similarity2.max, r.lr);
    csv << buf << "\n";
  }
  if (out.empty()) {
    o << csv.str();
  } else {
    std::ofstream f(out);
    ensure_writable(f, out);
    f << csv.str();
  }
  return kExitOk;
}

std::vector<uint64_t> parse_seeds(const std::string& text) {
  std::vector<uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t used = 0;
    try {
      out.push_back(std::stoull(item, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw UsageError("bad seed '" + item + "'");
  }
  if (out.empty()) throw UsageError("no seeds given");
  return out;
}

int cmd_equal_data(const ConfigArgs& a, const std::string& pairs_text, const std::string& seeds_text,
                   const std::string& out, bool finetune, std::ostream& log) {
  const RunConfig base = absolute_paths(resolve(a));
  const auto pairs = parse_pairs(pairs_text);
  const auto seeds = a.seed >= 0 ? std::vector<uint64_t>{static_cast<uint64_t>(a.seed)} : parse_seeds(seeds_text);
  const fs::path dir = run_dir_for(out, "equal-data", base);
  write_resolved_config(dir, base);
  const auto rows = experiment_equal_data(base, pairs, seeds, dir, finetune, &log);
  std::ofstream csv(dir / "comparison.csv");
  ensure_writable(csv, dir / "comparison.csv");
  csv << equal_data_csv_header() << "\n";
  log << equal_data_csv_header() << "\n";
  for (const auto& r : rows) {
    csv << equal_data_csv_row(r) << "\n";
    log << equal_data_csv_row(r) << "\n";
  }
  return kExitOk;
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

}  // namespace

RunConfig absolute_paths(RunConfig c) {
  for (std::string* p : {&c.train_manifest, &c.val_manifest, &c.ft_train_manifest, &c.ft_eval_manifest}) {
    if (!p->empty()) *p = fs::absolute(*p).lexically_normal().string();
  }
  return c;
}

RunData load_pretrain_data(const RunConfig& c) {
  if (c.train_manifest.empty()) throw ConfigError({"train_manifest: required"});
  RunData d;
  const data::Manifest all = data::load_manifest(c.train_manifest);
  if (!c.val_manifest.empty()) {
    d.train = all;
    d.val = data::load_manifest(c.val_manifest);
  } else {
    Rng rng(validation_seed(c.seed));
    auto split = data::split_validation(all, c.val_fraction, rng);
    d.train = std::move(split.train);
    d.val = std::move(split.val);
  }
  return d;
}

RunData load_finetune_data(const RunConfig& c) {
  RunData d = c.ft_train_manifest.empty() || c.ft_eval_manifest.empty() ? load_pretrain_data(c) : RunData{};
  if (!c.ft_train_manifest.empty()) d.train = data::load_manifest(c.ft_train_manifest);
  if (!c.ft_eval_manifest.empty()) d.val = data::load_manifest(c.ft_eval_manifest);
  return d;
}

std::string equal_data_csv_header() { return "hours_seen,batch_seconds,iterations,seed,val_L_c,cer"; }

std::string equal_data_csv_row(const EqualDataRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.6g,%.6g,%lld,%llu,%.10g,%.6g", r.hours_seen, r.batch_seconds,
                static_cast<long long>(r.iterations), static_cast<unsigned long long>(r.seed), r.val_lc, r.cer);
  return buf;
}

std::vector<std::pair<double, int64_t>> parse_pairs(const std::string& text) {
  static const std::regex pair(R"(\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*:\s*([0-9]+)\s*)");
  std::vector<std::pair<double, int64_t>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::smatch m;
    if (!std::regex_match(item, m, pair)) throw UsageError("bad pair '" + item + "', expected seconds:iterations");
    out.emplace_back(std::stod(m[1]), std::stoll(m[2]));
    if (!(out.back().first > 0.0) || out.back().second <= 0) throw UsageError("pair '" + item + "' must be positive");
  }
  if (out.empty()) throw UsageError("no batch_seconds:iterations pairs given");
  return out;
}

EqualDataRow run_equal_data_condition(const RunConfig& base, double batch_seconds, int64_t iterations,
                                      const fs::path& run_dir, bool finetune, std::ostream* log) {
  if (iterations % (2 * base.num_cycles) != 0) {
    throw UsageError("iterations " + std::to_string(iterations) + " is not a multiple of 2 * num_cycles");
  }
  RunConfig c = base;
  c.batch_seconds = batch_seconds;
  c.iterations = iterations;
  c.half_cycle = iterations / (2 * c.num_cycles);
  c.validate_every = 2 * c.half_cycle;
  c.validate();
  const RunData d = load_pretrain_data(c);
  write_resolved_config(run_dir, c);
  Trainer trainer(c, d.train, d.val);
  if (const auto ck = latest_checkpoint(run_dir)) trainer.restore(load_checkpoint(*ck));
  trainer.run(run_dir, -1, log);
  const auto records = read_metrics_csv(run_dir / "metrics.csv");
  if (records.empty() || records.back().step != iterations) {
    throw std::runtime_error(run_dir.string() + ": run did not reach its final validation");
  }
  EqualDataRow row;
  row.hours_seen = data::data_seen(batch_seconds, iterations).hours_upper;
  row.batch_seconds = batch_seconds;
  row.iterations = iterations;
  row.seed = c.seed;
  row.val_lc = records.back().lc;
  row.cer = std::numeric_limits<double>::quiet_NaN();
  if (finetune) {
    const Checkpoint end = trainer.snapshot();
    const RunData fd = load_finetune_data(c);
    CtcFinetuner ft(c, fd.train, &end);
    ft.train(-1, log, std::max<int64_t>(1, c.ft_iterations / 4));
    const EvalReport r = ft.evaluate(fd.val);
    std::ofstream csv(run_dir / "eval.csv");
    write_eval_csv(csv, r);
    row.cer = r.cer;
  }
  return row;
}

std::vector<EqualDataRow> experiment_equal_data(const RunConfig& base,
                                                const std::vector<std::pair<double, int64_t>>& pairs,
                                                const std::vector<uint64_t>& seeds, const fs::path& out_dir,
                                                bool finetune, std::ostream* log) {
  if (pairs.empty()) throw UsageError("no batch_seconds:iterations pairs given");
  const double product = pairs.front().first * static_cast<double>(pairs.front().second);
  for (const auto& [b, n] : pairs) {
    const double p = b * static_cast<double>(n);
    if (std::abs(p - product) > 1e-9 * product) {
      throw UsageError("pairs must share batch_seconds * iterations: " + fmt("%g", product) + " vs " + fmt("%g", p));
    }
  }
  std::vector<EqualDataRow> rows;
  for (uint64_t seed : seeds) {
    for (const auto& [b, n] : pairs) {
      RunConfig c = base;
      c.seed = seed;
      const fs::path dir = out_dir / ("b" + fmt("%g", b) + "-n" + std::to_string(n) + "-s" + std::to_string(seed));
      if (log) *log << "condition " << dir.filename().string() << "\n";
      rows.push_back(run_equal_data_condition(c, b, n, dir, finetune, log));
    }
  }
  return rows;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"wav2vec 2.0 pre-training, fine-tuning and batch-size experiments"};
  app.require_subcommand(1);

  ConfigArgs pre_cfg;
  std::string pre_out;
  bool resume = false;
  auto* pre = app.add_subcommand("pretrain", "Self-supervised pre-training");
  add_config_options(pre, pre_cfg);
  pre->add_option("--out", pre_out, "Run directory");
  pre->add_flag("--resume", resume, "Continue from the latest checkpoint in the run directory");

  ConfigArgs ft_cfg;
  std::string ft_init, ft_out;
  auto* ft = app.add_subcommand("finetune", "CTC fine-tuning");
  add_config_options(ft, ft_cfg);
  ft->add_option("--init", ft_init, "Pre-trained checkpoint, or 'scratch'");
  ft->add_option("--out", ft_out, "Run directory");

  std::string ev_ckpt, ev_manifest, ev_out;
  auto* ev = app.add_subcommand("eval", "Greedy-decode a manifest with a fine-tuned checkpoint");
  ev->add_option("--checkpoint", ev_ckpt)->required();
  ev->add_option("--manifest", ev_manifest)->required();
  ev->add_option("--out", ev_out, "Report CSV (stdout when omitted)");

  std::vector<std::string> pr_ckpts;
  ProbeOptions pr_opts;
  int64_t pr_seed = -1;
  bool pr_deterministic = false;
  std::string pr_out;
  auto* pr = app.add_subcommand("probe-gradvar", "Gradient variance over fresh batches");
  pr->add_option("--checkpoint", pr_ckpts)->required();
  pr->add_option("--n-batches", pr_opts.n_batches)->check(CLI::Range(int64_t{2}, int64_t{1} << 40));
  pr->add_option("--batch-seconds", pr_opts.batch_seconds, "Defaults to the run's batch seconds");
  pr->add_option("--batch-utterances", pr_opts.batch_utterances, "Fixed utterance count per batch");
  pr->add_option("--seed", pr_seed);
  pr->add_flag("--deterministic", pr_deterministic, "Disable dropout and gumbel noise");
  pr->add_option("--out", pr_out, "CSV (stdout when omitted)");

  double ds_seconds = 0.0, ds_hours = data::kReferenceDatasetHours;
  int64_t ds_iterations = 0;
  auto* ds = app.add_subcommand("data-seen", "Upper bound of speech seen in training");
  ds->add_option("--batch-seconds", ds_seconds)->required();
  ds->add_option("--iterations", ds_iterations)->required();
  ds->add_option("--dataset-hours", ds_hours);

  data::SynthConfig sy;
  std::string sy_out;
  double sy_val = 0.0;
  auto* syn = app.add_subcommand("synth-data", "Write a synthetic tone-speech corpus");
  syn->add_option("--out", sy_out)->required();
  syn->add_option("--seed", sy.seed);
  syn->add_option("--count", sy.count);
  syn->add_option("--min-seconds", sy.min_seconds);
  syn->add_option("--max-seconds", sy.max_seconds);
  syn->add_option("--val-fraction", sy_val, "Also write train.tsv / val.tsv");

  std::string rp_dir, rp_out;
  auto* rp = app.add_subcommand("report", "Validation curves of a run as CSV");
  rp->add_option("--run-dir", rp_dir)->required();
  rp->add_option("--out", rp_out, "CSV (stdout when omitted)");

  ConfigArgs eq_cfg;
  std::string eq_pairs, eq_seeds = "1", eq_out;
  bool eq_no_ft = false;
  auto* eq = app.add_subcommand("experiment-equal-data", "Pre-train conditions of equal batch x iterations");
  add_config_options(eq, eq_cfg);
  eq->add_option("--pairs", eq_pairs, "batch_seconds:iterations,...")->required();
  eq->add_option("--seeds", eq_seeds, "Comma-separated seeds");
  eq->add_option("--out", eq_out, "Experiment directory");
  eq->add_flag("--no-finetune", eq_no_ft, "Skip fine-tuning the end checkpoints");

  std::vector<std::string> argv_store{"w2v"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (pre->parsed()) return cmd_pretrain(pre_cfg, pre_out, resume, out);
    if (ft->parsed()) return cmd_finetune(ft_cfg, ft_init, ft_out, out);
    if (ev->parsed()) return cmd_eval(ev_ckpt, ev_manifest, ev_out, out);
    if (pr->parsed()) {
      pr_opts.stochastic = !pr_deterministic;
      return cmd_probe(pr_ckpts, pr_opts, pr_seed, pr_out, out);
    }
    if (ds->parsed()) return cmd_data_seen(ds_seconds, ds_iterations, ds_hours, out);
    if (syn->parsed()) return cmd_synth(sy, sy_out, sy_val, out);
    if (rp->parsed()) return cmd_report(rp_dir, rp_out, out);
    if (eq->parsed()) return cmd_equal_data(eq_cfg, eq_pairs, eq_seeds, eq_out, !eq_no_ft, out);
  } catch (const UsageError& e) {
    err << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: config: " << join(e.problems(), "; ") << "\n";
    return kExitUsage;
  } catch (const DivergenceError& e) {
    err << "error: divergence: " << e.what() << "\n";
    return kExitFailure;
  } catch (const CheckpointError& e) {
    err << "error: checkpoint: " << e.what() << "\n";
    return kExitFailure;
  } catch (const fs::filesystem_error& e) {
    err << "error: io: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::invalid_argument& e) {
    err << "error: data: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: runtime: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace w2v::cli
