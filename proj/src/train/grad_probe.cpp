// SPDX-License-Identifier: Apache-2.0
#include "w2v/train/grad_probe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <memory>
#include <stdexcept>

#include "w2v/rng.hpp"

namespace w2v {

GradVarianceReport gradient_variance(ParameterStore& store, int64_t n,
                                     const std::function<void(int64_t)>& compute_gradient) {
  if (n < 2) throw std::invalid_argument("gradient variance needs at least 2 batches, got " + std::to_string(n));
  const auto& params = store.all();
  // Welford accumulators per scalar.
  std::vector<Tensor> mean, m2;
  for (const auto& p : params) {
    mean.emplace_back(p.var.shape(), 0.0);
    m2.emplace_back(p.var.shape(), 0.0);
  }
  for (int64_t i = 0; i < n; ++i) {
    store.zero_grad();
    compute_gradient(i);
    const double count = static_cast<double>(i + 1);
    for (size_t k = 0; k < params.size(); ++k) {
      const bool has = params[k].var.has_grad();
      auto mu = mean[k].values();
      auto acc = m2[k].values();
      for (size_t j = 0; j < mu.size(); ++j) {
        const double g = has ? params[k].var.grad()[static_cast<int64_t>(j)] : 0.0;
        const double delta = g - mu[j];
        mu[j] += delta / count;
        acc[j] += delta * (g - mu[j]);
      }
    }
  }
  store.zero_grad();
  GradVarianceReport report;
  report.n_batches = n;
  double std_sum = 0.0;
  int64_t scalars = 0;
  for (size_t k = 0; k < params.size(); ++k) {
    ParameterVariance pv;
    pv.name = params[k].name;
    for (double a : m2[k].values()) {
      const double var = a / static_cast<double>(n - 1);
      pv.mean_variance += var;
      pv.mean_std += std::sqrt(var);
    }
    const auto size = static_cast<double>(m2[k].size());
    std_sum += pv.mean_std;
    scalars += m2[k].size();
    pv.mean_variance /= size;
    pv.mean_std /= size;
    report.per_parameter.push_back(pv);
  }
  report.avg_std = std_sum / static_cast<double>(scalars);
  return report;
}

GradVarianceReport probe_gradient_variance(Trainer& trainer, const ProbeOptions& options) {
  const RunConfig& config = trainer.config();
  Wav2Vec2Model& model = trainer.model();
  const data::Manifest& manifest = trainer.train_manifest();
  const double batch_seconds = options.batch_seconds > 0.0 ? options.batch_seconds : config.batch_seconds;
  SslOptions ssl = config.ssl_options();
  ssl.train = options.stochastic;
  ssl.gumbel_tau = trainer.tau_at(trainer.step());

  std::unique_ptr<data::BatchAssembler> assembler;
  if (options.batch_utterances <= 0) {
    data::AssemblerConfig ac;
    ac.threshold_seconds = batch_seconds / static_cast<double>(config.gpu_batches);
    ac.bin_size = config.bin_size;
    ac.queue_length = config.queue_length;
    ac.max_spread_seconds = config.max_spread_seconds;
    ac.max_consecutive_discards = config.max_consecutive_discards;
    assembler = std::make_unique<data::BatchAssembler>(manifest, ac, splitmix64(options.seed ^ 0x70726f6265ULL));
  } else if (options.batch_utterances > static_cast<int64_t>(manifest.size())) {
    throw std::invalid_argument("probe batch of " + std::to_string(options.batch_utterances) +
                                " utterances exceeds the " + std::to_string(manifest.size()) + " available");
  }
  Rng picker(splitmix64(options.seed ^ 0x7069636bULL));
  double seconds_total = 0.0;
  const uint64_t before = model.params().checksum();

  auto compute = [&](int64_t i) {
    const uint64_t seed = splitmix64(options.seed ^ splitmix64(static_cast<uint64_t>(i) + 1));
    std::vector<std::vector<int64_t>> groups;
    if (assembler) {
      for (int64_t g = 0; g < config.gpu_batches; ++g) {
        const auto b = assembler->next();
        seconds_total += b.total_seconds;
        groups.push_back(b.indices);
      }
    } else {
      std::vector<int64_t> all(manifest.size());
      std::iota(all.begin(), all.end(), 0);
      for (int64_t k = 0; k < options.batch_utterances; ++k) {
        std::swap(all[static_cast<size_t>(k)],
                  all[static_cast<size_t>(picker.uniform_int(k, static_cast<int64_t>(all.size()) - 1))]);
      }
      all.resize(static_cast<size_t>(options.batch_utterances));
      for (int64_t idx : all) seconds_total += manifest.entries[static_cast<size_t>(idx)].seconds();
      groups.push_back(all);
    }
    for (const auto& idx : groups) {
      ssl_forward(model, gather_inputs(trainer.train_audio(), idx), ssl, seed).objective.backward();
    }
    if (groups.size() > 1) {
      for (const auto& p : model.params().all()) {
        if (p.var.has_grad()) {
          Variable v = p.var;
          v.grad() *= 1.0 / static_cast<double>(groups.size());
        }
      }
    }
  };
  GradVarianceReport report = gradient_variance(model.params(), options.n_batches, compute);
  if (model.params().checksum() != before) throw std::logic_error("gradient probe modified the parameters");
  report.step = trainer.step();
  report.batch_seconds = assembler ? batch_seconds : seconds_total / static_cast<double>(options.n_batches);
  report.batch_utterances = std::max<int64_t>(options.batch_utterances, 0);
  return report;
}

std::string probe_csv_header() { return "step,batch_seconds,avg_std,n_batches"; }

std::string probe_csv_row(const GradVarianceReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%lld,%.10g,%.10g,%lld", static_cast<long long>(r.step), r.batch_seconds,
                r.avg_std, static_cast<long long>(r.n_batches));
  return buf;
}

}  // namespace w2v
