// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepasr/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace sepasr {

EditCounts edit_distance(const std::vector<std::string>& hyp,
                         const std::vector<std::string>& ref) {
  const std::size_t h = hyp.size();
  const std::size_t r = ref.size();
  // cost[i][j]: distance between hyp[0..i) and ref[0..j); traceback prefers
  // substitution, then insertion, then deletion on ties.
  struct Cell {
    std::int64_t cost;
    EditCounts counts;
  };
  std::vector<std::vector<Cell>> dp(h + 1, std::vector<Cell>(r + 1));
  for (std::size_t i = 0; i <= h; ++i) {
    dp[i][0].cost = static_cast<std::int64_t>(i);
    dp[i][0].counts.ins = static_cast<std::int64_t>(i);
  }
  for (std::size_t j = 0; j <= r; ++j) {
    dp[0][j].cost = static_cast<std::int64_t>(j);
    dp[0][j].counts.dels = static_cast<std::int64_t>(j);
  }
  for (std::size_t i = 1; i <= h; ++i) {
    for (std::size_t j = 1; j <= r; ++j) {
      const bool match = hyp[i - 1] == ref[j - 1];
      const std::int64_t sub_cost = dp[i - 1][j - 1].cost + (match ? 0 : 1);
      const std::int64_t ins_cost = dp[i - 1][j].cost + 1;
      const std::int64_t del_cost = dp[i][j - 1].cost + 1;
      if (sub_cost <= ins_cost && sub_cost <= del_cost) {
        dp[i][j].cost = sub_cost;
        dp[i][j].counts = dp[i - 1][j - 1].counts;
        if (!match) ++dp[i][j].counts.subs;
      } else if (ins_cost <= del_cost) {
        dp[i][j].cost = ins_cost;
        dp[i][j].counts = dp[i - 1][j].counts;
        ++dp[i][j].counts.ins;
      } else {
        dp[i][j].cost = del_cost;
        dp[i][j].counts = dp[i][j - 1].counts;
        ++dp[i][j].counts.dels;
      }
    }
  }
  return dp[h][r].counts;
}

MinPermWer min_perm_wer(const std::vector<std::vector<std::string>>& hyps,
                        const std::vector<std::vector<std::string>>& refs) {
  const int s = static_cast<int>(hyps.size());
  if (s == 0 || refs.size() != hyps.size()) {
    fail(Error::Kind::Usage, "min_perm_wer: need equal nonzero stream counts, got ",
         hyps.size(), " and ", refs.size());
  }
  if (s > 6) fail(Error::Kind::Usage, "min_perm_wer: exhaustive search capped at S=6");

  std::vector<std::vector<EditCounts>> pair(static_cast<std::size_t>(s),
                                            std::vector<EditCounts>(static_cast<std::size_t>(s)));
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      pair[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          edit_distance(hyps[static_cast<std::size_t>(i)], refs[static_cast<std::size_t>(j)]);
    }
  }
  std::int64_t ref_words = 0;
  for (const auto& rtoks : refs) ref_words += static_cast<std::int64_t>(rtoks.size());

  std::vector<int> perm(static_cast<std::size_t>(s));
  std::iota(perm.begin(), perm.end(), 0);
  MinPermWer best;
  std::int64_t best_cost = -1;
  do {
    std::int64_t cost = 0;
    EditCounts counts;
    for (int i = 0; i < s; ++i) {
      const EditCounts& c =
          pair[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      cost += c.total();
      counts.subs += c.subs;
      counts.ins += c.ins;
      counts.dels += c.dels;
    }
    if (best_cost < 0 || cost < best_cost) {
      best_cost = cost;
      best.perm = perm;
      best.counts = counts;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  best.ref_words = ref_words;
  best.wer = ref_words > 0 ? static_cast<double>(best_cost) / static_cast<double>(ref_words)
                           : (best_cost > 0 ? 1.0 : 0.0);
  return best;
}

double sdr_scale_projection(const Waveform& est, const Waveform& ref) {
  return si_snr(est, ref, kSiSnrEps, /*zero_mean=*/false);
}

std::vector<std::string> expand_chars(const std::vector<std::string>& words) {
  std::vector<std::string> chars;
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (w > 0) chars.push_back(" ");
    for (char c : words[w]) chars.push_back(std::string(1, c));
  }
  return chars;
}

namespace {

std::vector<std::string> decode_stream(const AsrModel& asr, const Tensor& audio,
                                       const Vocabulary& vocab) {
  return vocab.to_tokens(asr.greedy_decode_tensor(audio));
}

}  // namespace

MetricsReport evaluate(const SeparatorModel& sep, const AsrModel& asr,
                       const MixtureDataset& data, const EvaluateOptions& opts) {
  if (data.size() == 0) fail(Error::Kind::Data, "evaluate: empty dataset");
  MetricsReport report;
  double sdr_sum = 0.0, sisnr_sum = 0.0;
  std::int64_t word_err = 0, word_ref = 0, char_err = 0, char_ref = 0;

  const std::size_t count = opts.limit > 0
                                ? std::min<std::size_t>(data.size(), static_cast<std::size_t>(opts.limit))
                                : data.size();
  for (std::size_t n = 0; n < count; ++n) {
    const MixtureExample& ex = data.examples[n];
    ExampleMetrics em;
    em.id = ex.id;
    try {
      NoGradGuard no_grad;
      const int s = static_cast<int>(ex.sources.size());
      Tensor mix = Tensor::constant(ex.mixture.samples, {ex.mixture.size()});
      std::vector<Tensor> ests;
      if (opts.oracle_separation) {
        for (const auto& src : ex.sources) {
          ests.push_back(Tensor::constant(src.samples, {src.size()}));
        }
      } else {
        ests = sep.forward(mix);
      }
      std::vector<Tensor> refs;
      for (const auto& src : ex.sources) {
        refs.push_back(Tensor::constant(src.samples, {src.size()}));
      }

      // Signal metrics under the assignment chosen by the signal loss.
      PitResult pit = pit_signal_loss(ests, refs);
      em.sig_perm = pit.perm.mapping;
      double sdr_acc = 0.0, sisnr_acc = 0.0;
      for (int i = 0; i < s; ++i) {
        const int j = pit.perm.mapping[static_cast<std::size_t>(i)];
        sisnr_acc += pit.pair_db[static_cast<std::size_t>(i)];
        sdr_acc += si_snr_t(ests[static_cast<std::size_t>(i)],
                            refs[static_cast<std::size_t>(j)], kSiSnrEps, /*zero_mean=*/false)
                       .item();
      }
      em.sdr_db = sdr_acc / s;
      em.si_snr_db = sisnr_acc / s;

      // Recognition metrics: decode every stream, then min-permutation WER.
      std::vector<std::vector<std::string>> hyps;
      for (int i = 0; i < s; ++i) {
        hyps.push_back(decode_stream(asr, ests[static_cast<std::size_t>(i)], asr.vocab()));
      }
      const MinPermWer wer = min_perm_wer(hyps, ex.transcripts);
      em.wer = wer.wer;
      em.wer_perm = wer.perm;
      em.word_counts = wer.counts;
      em.ref_words = wer.ref_words;

      std::vector<std::vector<std::string>> hyp_chars, ref_chars;
      for (int i = 0; i < s; ++i) {
        hyp_chars.push_back(expand_chars(hyps[static_cast<std::size_t>(i)]));
        ref_chars.push_back(expand_chars(ex.transcripts[static_cast<std::size_t>(i)]));
      }
      const MinPermWer cer = min_perm_wer(hyp_chars, ref_chars);
      em.cer = cer.wer;
      em.char_counts = cer.counts;
      em.ref_chars = cer.ref_words;

      sdr_sum += em.sdr_db;
      sisnr_sum += em.si_snr_db;
      word_err += em.word_counts.total();
      word_ref += em.ref_words;
      char_err += em.char_counts.total();
      char_ref += em.ref_chars;
      ++report.evaluated;
    } catch (const Error& e) {
      em.error = cat(e.kind_name(), ": ", e.what());
      ++report.failed;
    }
    report.examples.push_back(std::move(em));
  }

  if (report.evaluated == 0) {
    fail(Error::Kind::Data, "evaluate: every example failed (", report.failed, " errors)");
  }
  report.wer = word_ref > 0 ? static_cast<double>(word_err) / static_cast<double>(word_ref) : 0.0;
  report.cer = char_ref > 0 ? static_cast<double>(char_err) / static_cast<double>(char_ref) : 0.0;
  report.sdr_db = sdr_sum / static_cast<double>(report.evaluated);
  report.si_snr_db = sisnr_sum / static_cast<double>(report.evaluated);
  return report;
}

std::string MetricsReport::to_table() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << std::left << std::setw(16) << "example" << std::right << std::setw(8) << "WER"
     << std::setw(8) << "CER" << std::setw(10) << "SDR" << std::setw(10) << "SI-SNR" << "\n";
  for (const auto& em : examples) {
    if (!em.error.empty()) {
      os << std::left << std::setw(16) << em.id << "  error: " << em.error << "\n";
      continue;
    }
    os << std::left << std::setw(16) << em.id << std::right << std::setw(8) << em.wer
       << std::setw(8) << em.cer << std::setw(10) << em.sdr_db << std::setw(10) << em.si_snr_db
       << "\n";
  }
  os << std::left << std::setw(16) << "aggregate" << std::right << std::setw(8) << wer
     << std::setw(8) << cer << std::setw(10) << sdr_db << std::setw(10) << si_snr_db << "\n";
  return os.str();
}

std::string MetricsReport::to_json() const {
  nlohmann::json j{{"wer", wer},
                   {"cer", cer},
                   {"sdr_db", sdr_db},
                   {"si_snr_db", si_snr_db},
                   {"evaluated", evaluated},
                   {"failed", failed}};
  return j.dump();
}

}  // namespace sepasr
