// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "temp_dir.hpp"
#include "w2v/data/synth.hpp"
#include "w2v/finetune/ctc.hpp"
#include "w2v/finetune/finetune.hpp"
#include "w2v/ops.hpp"
#include "w2v/train/trainer.hpp"

using namespace w2v;

namespace {

struct Corpus {
  data::Manifest train, val;
};

Corpus corpus(const std::filesystem::path& dir) {
  data::SynthConfig sc;
  sc.seed = 9;
  sc.count = 24;
  sc.min_seconds = 1.0;
  sc.max_seconds = 2.0;
  sc.vocab = data::default_vocab();
  const auto m = data::synth_corpus(sc, dir / "corpus");
  Rng rng(2);
  const auto split = data::split_validation(m, 0.25, rng);
  return {split.train, split.val};
}

RunConfig tiny() {
  RunConfig c = RunConfig::preset_config("tiny");
  c.batch_seconds = 4.0;
  c.ft_batch_seconds = 4.0;
  c.ft_iterations = 12;
  c.ft_freeze_context_steps = 5;
  c.ft_peak_lr = 1e-2;
  return c;
}

std::vector<NamedTensor> with_prefix(const Wav2Vec2Model& m, const std::string& prefix) {
  std::vector<NamedTensor> out;
  for (auto& t : export_parameters(m.params())) {
    if (t.name.rfind(prefix, 0) == 0) out.push_back(t);
  }
  return out;
}

bool identical(const std::vector<NamedTensor>& a, const std::vector<NamedTensor>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || !std::ranges::equal(a[i].value.values(), b[i].value.values())) return false;
  }
  return true;
}

}  // namespace

TEST(FreezePlan, OnlyHeadThenContextTrain) {
  FreezePlan plan;
  plan.freeze_context_steps = 5;
  EXPECT_TRUE(plan.trainable("ctc_head.weight", 0));
  EXPECT_FALSE(plan.trainable("context.layers.0.attn.wq", 4));
  EXPECT_TRUE(plan.trainable("context.layers.0.attn.wq", 5));
  EXPECT_FALSE(plan.trainable("encoder.conv0.weight", 0));
  EXPECT_FALSE(plan.trainable("encoder.conv0.weight", 1000000));
  EXPECT_FALSE(plan.trainable("quantizer.codebook", 1000000));
}

TEST(CtcFinetune, EncoderNeverChangesAndContextWaitsForItsStep) {
  w2v::test::TempDir dir;
  const auto c = corpus(dir.path());
  const RunConfig cfg = tiny();
  Trainer pre(cfg, c.train, c.val);
  for (int i = 0; i < 3; ++i) pre.train_step();
  const Checkpoint ckpt = pre.snapshot();

  CtcFinetuner ft(cfg, c.train, &ckpt);
  const auto encoder0 = with_prefix(ft.model(), "encoder.");
  const auto context0 = with_prefix(ft.model(), "context.");
  const auto head0 = with_prefix(ft.model(), "ctc_head.");
  EXPECT_TRUE(identical(context0, with_prefix(pre.model(), "context.")));
  while (ft.step() < cfg.ft_freeze_context_steps) {
    ft.train_step();
    EXPECT_TRUE(identical(context0, with_prefix(ft.model(), "context."))) << "step " << ft.step();
  }
  EXPECT_FALSE(identical(head0, with_prefix(ft.model(), "ctc_head.")));
  ft.train_step();
  EXPECT_FALSE(identical(context0, with_prefix(ft.model(), "context.")));
  ft.train();
  EXPECT_EQ(ft.step(), cfg.ft_iterations);
  EXPECT_TRUE(identical(encoder0, with_prefix(ft.model(), "encoder.")));
}

TEST(CtcFinetune, IncompatibleCheckpointNamesMismatchedTensors) {
  w2v::test::TempDir dir;
  const auto c = corpus(dir.path());
  RunConfig other = tiny();
  other.dim = 4;
  other.heads = 2;
  Trainer pre(other, c.train, c.val);
  const Checkpoint ckpt = pre.snapshot();
  try {
    CtcFinetuner ft(tiny(), c.train, &ckpt);
    FAIL() << "expected a mismatch error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("context."), std::string::npos) << e.what();
  }
}

TEST(CtcFinetune, HeadEmitsDistributionsOverCharactersAndBlank) {
  w2v::test::TempDir dir;
  const auto c = corpus(dir.path());
  CtcFinetuner ft(tiny(), c.train, nullptr);
  const Tensor& w = ft.model().params().get("ctc_head.weight").value();
  EXPECT_EQ(w.cols(), kNumCtcClasses);
  EXPECT_EQ(w.rows(), tiny().dim);
}

TEST(CtcFinetune, DeterministicAndEvaluationReportsEveryUtterance) {
  w2v::test::TempDir dir;
  const auto c = corpus(dir.path());
  std::string csv[2];
  for (int run = 0; run < 2; ++run) {
    CtcFinetuner ft(tiny(), c.train, nullptr);
    ft.train(6);
    const EvalReport r = ft.evaluate(c.val);
    ASSERT_EQ(r.rows.size(), c.val.size());
    EXPECT_GE(r.cer, 0.0);
    EXPECT_GE(r.wer, 0.0);
    std::ostringstream out;
    write_eval_csv(out, r);
    csv[run] = out.str();
  }
  EXPECT_EQ(csv[0], csv[1]);
  EXPECT_EQ(csv[0].rfind("id,reference,hypothesis,cer,wer\n", 0), 0u);
  EXPECT_NE(csv[0].find("\nALL,,,"), std::string::npos);
}

TEST(CtcFinetune, EvalCsvSummaryIsCorpusLevel) {
  EvalReport r;
  r.rows = {{"u1", "ab", "a", 0.5, 1.0}, {"u2", "abcd", "abcd", 0.0, 0.0}};
  r.cer = 1.0 / 6.0;
  r.wer = 0.5;
  std::ostringstream out;
  write_eval_csv(out, r);
  EXPECT_EQ(out.str(),
            "id,reference,hypothesis,cer,wer\n"
            "u1,ab,a,0.500000,1.000000\n"
            "u2,abcd,abcd,0.000000,0.000000\n"
            "ALL,,,0.166667,0.500000\n");
}

TEST(CtcFinetune, RejectsUtterancesLongerThanTheBatch) {
  w2v::test::TempDir dir;
  const auto c = corpus(dir.path());
  RunConfig cfg = tiny();
  cfg.ft_batch_seconds = 1.0;
  EXPECT_THROW(CtcFinetuner(cfg, c.train, nullptr), std::invalid_argument);
}
