// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepasr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "sepasr/metrics.hpp"
#include "sepasr/random.hpp"

namespace sepasr {

void ChunkPlan::validate(std::int64_t min_chunk) const {
  if (length < min_chunk) {
    fail(Error::Kind::Usage, "tbptt chunk of ", length, " samples is shorter than the minimum ",
         min_chunk);
  }
  if (start < 0 || start + length > signal_length) {
    fail(Error::Kind::Usage, "tbptt chunk [", start, ", ", start + length,
         ") exceeds signal length ", signal_length);
  }
}

ChunkPlan place_chunk(std::int64_t signal_len, std::int64_t chunk_samples, bool edge_avoid,
                      std::int64_t rf_samples, std::mt19937_64& rng,
                      std::int64_t stride_align) {
  if (chunk_samples < 1) {
    fail(Error::Kind::Usage, "tbptt chunk length must be >= 1, got ", chunk_samples);
  }
  if (stride_align < 1) stride_align = 1;
  ChunkPlan plan;
  plan.signal_length = signal_len;
  if (signal_len <= chunk_samples) {  // shorter utterance: use it whole
    plan.start = 0;
    plan.length = signal_len;
    return plan;
  }
  std::int64_t lo = 0;
  std::int64_t hi = signal_len - chunk_samples;
  if (edge_avoid && hi - lo >= 2 * rf_samples) {
    lo += rf_samples;
    hi -= rf_samples;
    plan.rf_margin = rf_samples;
  }
  std::uniform_int_distribution<std::int64_t> dist(lo, hi);
  // Align to the encoder stride so the chunk's analysis frames coincide with
  // the full signal's frame grid.
  plan.start = (dist(rng) / stride_align) * stride_align;
  plan.length = chunk_samples;
  return plan;
}

namespace {

// Restores the gln stats hook on scope exit.
class GlnStatsScope {
 public:
  explicit GlnStatsScope(GlnStatsSnapshot fresh) : saved_(gln_stats_swap(std::move(fresh))) {}
  ~GlnStatsScope() { gln_stats_swap(std::move(saved_)); }
  GlnStatsScope(const GlnStatsScope&) = delete;
  GlnStatsScope& operator=(const GlnStatsScope&) = delete;

 private:
  GlnStatsSnapshot saved_;
};

}  // namespace

std::vector<Tensor> tbptt_forward(const SeparatorModel& model, const Tensor& x,
                                  const ChunkPlan& plan) {
  if (x.rank() != 1 || x.dim(0) != plan.signal_length) {
    fail(Error::Kind::Shape, "tbptt_forward: signal shape ", shape_str(x.shape()),
         " does not match the chunk plan length ", plan.signal_length);
  }
  plan.validate(model.config().L);

  // The chunk pass reuses the full pass's normalization statistics, so the
  // only approximation left is the missing conv context at the chunk edges.
  GlnStatsSnapshot record;
  record.mode = GlnStatsMode::Record;
  GlnStatsScope scope(std::move(record));

  // Pass 1: whole signal, no backward graph; only the output values survive.
  std::vector<std::vector<double>> full;
  {
    NoGradGuard no_grad;
    for (const auto& est : model.forward(x)) full.push_back(est.values());
  }

  // Pass 2: the chunk alone, recorded, with the full-signal statistics.
  gln_stats_set_mode(GlnStatsMode::Replay);
  Tensor chunk_x = slice(x, 0, plan.start, plan.length);
  std::vector<Tensor> chunk_outs = model.forward(chunk_x);

  // Pass 3: splice the chunk output over the full-forward output.
  std::vector<Tensor> spliced;
  const std::int64_t tail_start = plan.start + plan.length;
  for (std::size_t s = 0; s < chunk_outs.size(); ++s) {
    std::vector<Tensor> pieces;
    if (plan.start > 0) {
      pieces.push_back(Tensor::constant(
          std::vector<double>(full[s].begin(), full[s].begin() + plan.start), {plan.start}));
    }
    pieces.push_back(chunk_outs[s]);
    if (tail_start < plan.signal_length) {
      pieces.push_back(Tensor::constant(
          std::vector<double>(full[s].begin() + tail_start, full[s].end()),
          {plan.signal_length - tail_start}));
    }
    spliced.push_back(pieces.size() == 1 ? pieces[0] : concat(pieces, 0));
  }
  return spliced;
}

FinetunePlan FinetunePlan::for_mode(FinetuneMode mode) {
  FinetunePlan plan;
  plan.mode = mode;
  const ModePreset preset = mode_preset(mode);
  plan.alpha = preset.alpha;
  plan.beta = preset.beta;
  plan.freeze_frontend = preset.freeze_frontend;
  plan.freeze_backend = preset.freeze_backend;
  return plan;
}

void FinetunePlan::override_alpha(double value) {
  if (value < 0.0) fail(Error::Kind::Usage, "alpha override must be >= 0, got ", value);
  alpha = value;
}

namespace {

struct ExampleLoss {
  double l_fe = 0.0;
  double l_ctc = 0.0;
  double l_att = 0.0;
  double l_asr = 0.0;
  double l_total = 0.0;
  std::vector<int> perm;
  std::int64_t fe_bytes = 0;
  std::int64_t be_bytes = 0;
};

// Forward + backward for a single mixture example under the plan. Gradients
// are scaled by inv_batch so the optimizer sees batch means.
ExampleLoss finetune_example(const MixtureExample& ex,
                             const std::vector<std::vector<int>>& labels,
                             const SeparatorModel& sep, const AsrModel& asr,
                             const FinetunePlan& plan, double inv_batch,
                             std::mt19937_64& chunk_rng) {
  Recorder& rec = Recorder::instance();
  const std::int64_t s_count = sep.config().S;
  const bool need_signal = plan.alpha > 0.0 || plan.perm == PermCriterion::Signal;
  if (need_signal && static_cast<std::int64_t>(ex.sources.size()) != s_count) {
    fail(Error::Kind::Data, "finetune: example ", ex.id, " has ", ex.sources.size(),
         " reference sources but the signal criterion needs ", s_count,
         " (parallel data required)");
  }
  if (static_cast<std::int64_t>(labels.size()) < s_count) {
    fail(Error::Kind::Data, "finetune: example ", ex.id, " has ", labels.size(),
         " transcripts, need ", s_count);
  }

  ExampleLoss out;
  Tensor mix = Tensor::constant(ex.mixture.samples, {ex.mixture.size()});

  // Separation. Mode (a) never optimizes the front-end and carries no signal
  // loss, so its forward needs no graph at all.
  const bool detach_frontend = plan.freeze_frontend && plan.alpha == 0.0;
  const std::int64_t fe_before = rec.retained_bytes;
  std::vector<Tensor> ests;
  if (detach_frontend) {
    NoGradGuard no_grad;
    ests = sep.forward(mix);
  } else if (plan.tbptt.enabled) {
    const ChunkPlan chunk =
        place_chunk(mix.dim(0), plan.tbptt.chunk_samples, plan.tbptt.edge_avoid,
                    receptive_field_samples(sep.config()), chunk_rng, sep.config().stride());
    ests = tbptt_forward(sep, mix, chunk);
  } else {
    ests = sep.forward(mix);
  }
  out.fe_bytes = rec.retained_bytes - fe_before;

  // Signal loss and pi_sig. When the loss is not optimized the assignment is
  // still computed from the estimate values ("even when the front-end is not
  // optimized"), just without a graph.
  Tensor l_fe_t;
  std::vector<int> sig_perm;
  if (static_cast<std::int64_t>(ex.sources.size()) == s_count) {
    std::vector<Tensor> refs;
    for (const auto& src : ex.sources) {
      refs.push_back(Tensor::constant(src.samples, {src.size()}));
    }
    if (plan.alpha > 0.0) {
      PitResult pit = pit_signal_loss(ests, refs);
      l_fe_t = pit.loss;
      sig_perm = pit.perm.mapping;
      out.l_fe = pit.loss.item();
    } else {
      NoGradGuard no_grad;
      std::vector<Tensor> est_vals;
      for (const auto& e : ests) est_vals.push_back(Tensor::constant(e.values(), e.shape()));
      PitResult pit = pit_signal_loss(est_vals, refs);
      sig_perm = pit.perm.mapping;
      out.l_fe = pit.loss.item();
    }
  }

  // Transcript assignment.
  std::vector<int> perm;
  if (plan.perm == PermCriterion::Signal) {
    perm = sig_perm;
  } else {
    NoGradGuard no_grad;
    std::vector<Tensor> stream_lp;
    std::vector<std::vector<int>> ctc_labels;
    for (std::int64_t s = 0; s < s_count; ++s) {
      stream_lp.push_back(asr.ctc_log_probs(asr.encode(ests[static_cast<std::size_t>(s)])));
    }
    for (std::int64_t s = 0; s < s_count; ++s) {
      std::vector<int> cl;
      for (int w : labels[static_cast<std::size_t>(s)]) cl.push_back(Vocabulary::word_to_ctc(w));
      ctc_labels.push_back(std::move(cl));
    }
    perm = pi_ctc_assign(stream_lp, ctc_labels, Vocabulary::kCtcBlank).mapping;
  }
  out.perm = perm;

  // Recognition loss per stream under the chosen assignment (Eq. 2).
  const bool backend_grad = plan.beta > 0.0;
  const std::int64_t be_before = rec.retained_bytes;
  Tensor ctc_acc, att_acc;
  {
    std::optional<NoGradGuard> guard;
    if (!backend_grad) guard.emplace();  // mode (b): log-only backend pass
    for (std::int64_t s = 0; s < s_count; ++s) {
      const auto& stream_labels = labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(s)])];
      AsrModel::LossParts parts =
          asr.loss_parts(ests[static_cast<std::size_t>(s)], stream_labels, plan.lambda);
      if (parts.ctc.defined()) ctc_acc = ctc_acc.defined() ? add(ctc_acc, parts.ctc) : parts.ctc;
      if (parts.att.defined()) att_acc = att_acc.defined() ? add(att_acc, parts.att) : parts.att;
    }
  }
  out.be_bytes = rec.retained_bytes - be_before;

  const double inv_s = 1.0 / static_cast<double>(s_count);
  Tensor l_asr_t;
  if (ctc_acc.defined() && att_acc.defined()) {
    l_asr_t = add(mul_scalar(ctc_acc, plan.lambda * inv_s),
                  mul_scalar(att_acc, (1.0 - plan.lambda) * inv_s));
  } else if (ctc_acc.defined()) {
    l_asr_t = mul_scalar(ctc_acc, plan.lambda * inv_s);
  } else {
    l_asr_t = mul_scalar(att_acc, (1.0 - plan.lambda) * inv_s);
  }
  out.l_ctc = ctc_acc.defined() ? ctc_acc.item() * inv_s : 0.0;
  out.l_att = att_acc.defined() ? att_acc.item() * inv_s : 0.0;
  out.l_asr = l_asr_t.item();

  Tensor total = joint_loss(plan.alpha, plan.beta, l_fe_t, l_asr_t);
  out.l_total = total.item();
  mul_scalar(total, inv_batch).backward();
  return out;
}

}  // namespace

StepResult finetune_step(const MixtureDataset& data, const std::vector<int>& batch,
                         SeparatorModel& sep, AsrModel& asr, const FinetunePlan& plan,
                         Optimizer& opt, std::uint64_t step_index) {
  if (batch.empty()) fail(Error::Kind::Usage, "finetune_step: empty batch");
  const auto t0 = std::chrono::steady_clock::now();
  opt.zero_grad();

  StepResult result;
  result.report.alpha = plan.alpha;
  result.report.beta = plan.beta;
  result.report.lambda = plan.lambda;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  for (std::size_t slot = 0; slot < batch.size(); ++slot) {
    const int idx = batch[slot];
    if (idx < 0 || static_cast<std::size_t>(idx) >= data.size()) {
      fail(Error::Kind::Usage, "finetune_step: batch index ", idx, " outside dataset");
    }
    auto chunk_rng = make_rng(plan.seed, "tbptt-chunk", step_index * 64 + slot);
    const ExampleLoss ex =
        finetune_example(data.examples[static_cast<std::size_t>(idx)],
                         data.word_ids[static_cast<std::size_t>(idx)], sep, asr, plan,
                         inv_batch, chunk_rng);
    result.report.l_fe += ex.l_fe * inv_batch;
    result.report.l_ctc += ex.l_ctc * inv_batch;
    result.report.l_att += ex.l_att * inv_batch;
    result.report.l_asr += ex.l_asr * inv_batch;
    result.report.l_total += ex.l_total * inv_batch;
    result.report.permutations.push_back(ex.perm);
    result.probe.frontend_bytes = std::max(result.probe.frontend_bytes, ex.fe_bytes);
    result.probe.backend_bytes = std::max(result.probe.backend_bytes, ex.be_bytes);
  }
  opt.clip_global_norm(plan.clip_norm);
  opt.step();

  const auto t1 = std::chrono::steady_clock::now();
  result.probe.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return result;
}

namespace {

NamedParams unfrozen_params(SeparatorModel& sep, AsrModel& asr, const FinetunePlan& plan) {
  NamedParams params;
  if (!plan.freeze_frontend) {
    for (auto& p : sep.parameters()) params.push_back(p);
  }
  if (!plan.freeze_backend) {
    for (auto& p : asr.parameters()) params.push_back(p);
  }
  if (params.empty()) {
    fail(Error::Kind::Config, "finetune: both parameter groups are frozen");
  }
  return params;
}

std::vector<int> shuffled_indices(std::size_t n, std::uint64_t seed, std::string_view label,
                                  std::uint64_t epoch) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed, label, epoch);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace

FinetuneResult finetune(const MixtureDataset& train, SeparatorModel& sep, AsrModel& asr,
                        const FinetunePlan& plan, const StepLogFn& log) {
  if (train.size() == 0) fail(Error::Kind::Data, "finetune: empty dataset");
  auto opt = make_optimizer(plan.optimizer, unfrozen_params(sep, asr, plan));

  FinetuneResult result;
  std::vector<int> order;
  std::size_t cursor = 0;
  std::uint64_t epoch = 0;
  const std::size_t bsz = std::min<std::size_t>(
      static_cast<std::size_t>(std::max(plan.batch_size, 1)), train.size());
  for (int step = 0; step < plan.steps; ++step) {
    if (cursor + bsz > order.size()) {
      order = shuffled_indices(train.size(), plan.seed, "finetune-epoch", epoch++);
      cursor = 0;
    }
    std::vector<int> batch(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                           order.begin() + static_cast<std::ptrdiff_t>(cursor + bsz));
    cursor += bsz;
    StepResult sr = finetune_step(train, batch, sep, asr, plan, *opt,
                                  static_cast<std::uint64_t>(step));
    if (log) {
      nlohmann::json j = nlohmann::json::parse(sr.report.to_json());
      j["step"] = step;
      j["fe_bytes"] = sr.probe.frontend_bytes;
      j["be_bytes"] = sr.probe.backend_bytes;
      j["wall_ms"] = sr.probe.wall_ms;
      log(j.dump());
    }
    result.reports.push_back(sr.report);
    result.probes.push_back(sr.probe);
  }
  return result;
}

SeparatorTrainResult pretrain_separator(const MixtureDataset& train, const MixtureDataset* dev,
                                        SeparatorModel& model,
                                        const SeparatorPretrainOptions& opts,
                                        const StepLogFn& log) {
  if (train.size() == 0) fail(Error::Kind::Data, "pretrain_separator: empty dataset");
  std::vector<int> usable;
  SeparatorTrainResult result;
  for (std::size_t i = 0; i < train.size(); ++i) {
    std::int64_t min_len = train.examples[i].mixture.size();
    for (const auto& src : train.examples[i].sources) min_len = std::min(min_len, src.size());
    if (min_len >= opts.crop_samples) {
      usable.push_back(static_cast<int>(i));
    } else {
      ++result.skipped_short;
      if (log) {
        log(cat("{\"warning\":\"skipping ", train.examples[i].id, ": length ", min_len,
                " below crop ", opts.crop_samples, "\"}"));
      }
    }
  }
  if (usable.empty()) {
    fail(Error::Kind::Data, "pretrain_separator: no example is at least ", opts.crop_samples,
         " samples long");
  }

  auto opt = make_optimizer(opts.optimizer, model.parameters());
  std::uint64_t step_index = 0;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    auto order = shuffled_indices(usable.size(), opts.seed, "sep-epoch",
                                  static_cast<std::uint64_t>(epoch));
    const std::size_t bsz =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(opts.batch_size, 1)),
                              order.size());
    for (std::size_t base = 0; base + bsz <= order.size(); base += bsz) {
      opt->zero_grad();
      double batch_snr = 0.0;
      for (std::size_t slot = 0; slot < bsz; ++slot) {
        const int idx = usable[static_cast<std::size_t>(order[base + slot])];
        const MixtureExample& ex = train.examples[static_cast<std::size_t>(idx)];
        auto rng = make_rng(opts.seed, "sep-crop", step_index * 64 + slot);
        std::uniform_int_distribution<std::int64_t> start_dist(
            0, ex.mixture.size() - opts.crop_samples);
        const std::int64_t start = start_dist(rng);

        auto crop = [&](const Waveform& w) {
          return Tensor::constant(
              std::vector<double>(w.samples.begin() + start,
                                  w.samples.begin() + start + opts.crop_samples),
              {opts.crop_samples});
        };
        std::vector<Tensor> refs;
        for (const auto& src : ex.sources) refs.push_back(crop(src));
        std::vector<Tensor> ests = model.forward(crop(ex.mixture));
        PitResult pit = pit_signal_loss(ests, refs);
        mul_scalar(pit.loss, 1.0 / static_cast<double>(bsz)).backward();
        batch_snr -= pit.loss.item() / static_cast<double>(bsz);
      }
      opt->clip_global_norm(opts.clip_norm);
      opt->step();
      result.step_si_snr.push_back(batch_snr);
      if (log) {
        log(cat("{\"step\":", step_index, ",\"si_snr\":", batch_snr, "}"));
      }
      ++step_index;
    }
    if (dev != nullptr) {
      result.dev_si_snr.push_back(dev_si_snr(*dev, model));
      if (log) {
        log(cat("{\"epoch\":", epoch, ",\"dev_si_snr\":", result.dev_si_snr.back(), "}"));
      }
    }
  }
  return result;
}

AsrTrainResult pretrain_asr(const CleanDataset& train, const CleanDataset* dev, AsrModel& model,
                            const AsrPretrainOptions& opts, const StepLogFn& log) {
  if (train.size() == 0) fail(Error::Kind::Data, "pretrain_asr: empty dataset");
  auto opt = make_optimizer(opts.optimizer, model.parameters());
  AsrTrainResult result;
  std::uint64_t step_index = 0;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    auto order = shuffled_indices(train.size(), opts.seed, "asr-epoch",
                                  static_cast<std::uint64_t>(epoch));
    const std::size_t bsz =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(opts.batch_size, 1)),
                              order.size());
    for (std::size_t base = 0; base + bsz <= order.size(); base += bsz) {
      opt->zero_grad();
      double batch_loss = 0.0;
      for (std::size_t slot = 0; slot < bsz; ++slot) {
        const int idx = order[base + slot];
        const Waveform& audio = train.audio[static_cast<std::size_t>(idx)];
        Tensor x = Tensor::constant(audio.samples, {audio.size()});
        Tensor loss = model.loss(x, train.word_ids[static_cast<std::size_t>(idx)], opts.lambda);
        mul_scalar(loss, 1.0 / static_cast<double>(bsz)).backward();
        batch_loss += loss.item() / static_cast<double>(bsz);
      }
      opt->clip_global_norm(opts.clip_norm);
      opt->step();
      result.step_loss.push_back(batch_loss);
      if (log) log(cat("{\"step\":", step_index, ",\"loss\":", batch_loss, "}"));
      ++step_index;
    }
    if (dev != nullptr) {
      result.dev_wer.push_back(dev_clean_wer(*dev, model));
      if (log) {
        log(cat("{\"epoch\":", epoch, ",\"dev_wer\":", result.dev_wer.back(), "}"));
      }
    }
  }
  return result;
}

double dev_si_snr(const MixtureDataset& data, const SeparatorModel& model) {
  if (data.size() == 0) fail(Error::Kind::Data, "dev_si_snr: empty dataset");
  NoGradGuard no_grad;
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const MixtureExample& ex = data.examples[i];
    Tensor mix = Tensor::constant(ex.mixture.samples, {ex.mixture.size()});
    std::vector<Tensor> ests = model.forward(mix);
    std::vector<Tensor> refs;
    for (const auto& src : ex.sources) refs.push_back(Tensor::constant(src.samples, {src.size()}));
    PitResult pit = pit_signal_loss(ests, refs);
    double mean_db = 0.0;
    for (double db : pit.pair_db) mean_db += db;
    acc += mean_db / static_cast<double>(pit.pair_db.size());
  }
  return acc / static_cast<double>(data.size());
}

double dev_clean_wer(const CleanDataset& data, const AsrModel& model) {
  if (data.size() == 0) fail(Error::Kind::Data, "dev_clean_wer: empty dataset");
  std::int64_t errors = 0, ref_words = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::vector<int> hyp_ids = model.greedy_decode(data.audio[i]);
    const auto hyp = model.vocab().to_tokens(hyp_ids);
    const auto& ref = data.records[i].transcript;
    errors += edit_distance(hyp, ref).total();
    ref_words += static_cast<std::int64_t>(ref.size());
  }
  return ref_words > 0 ? static_cast<double>(errors) / static_cast<double>(ref_words) : 0.0;
}

}  // namespace sepasr
