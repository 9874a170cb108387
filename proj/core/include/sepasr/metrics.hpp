// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef SEPASR_METRICS_HPP
#define SEPASR_METRICS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sepasr/asr.hpp"
#include "sepasr/corpus.hpp"
#include "sepasr/losses.hpp"
#include "sepasr/separator.hpp"

namespace sepasr {

struct EditCounts {
  std::int64_t subs = 0;
  std::int64_t ins = 0;   // hypothesis tokens with no reference counterpart
  std::int64_t dels = 0;  // reference tokens missing from the hypothesis
  std::int64_t total() const { return subs + ins + dels; }
};

// Levenshtein alignment with unit costs; on cost ties the traceback prefers
// substitution over insertion over deletion.
EditCounts edit_distance(const std::vector<std::string>& hyp,
                         const std::vector<std::string>& ref);

struct MinPermWer {
  double wer = 0.0;
  std::vector<int> perm;  // hypothesis stream -> reference stream
  EditCounts counts;
  std::int64_t ref_words = 0;
};

// Exhaustive over the S! bijections of hypothesis streams to reference
// transcripts; WER = summed edit distance / summed reference length under the
// best assignment. Ties prefer the lexicographically smallest permutation.
MinPermWer min_perm_wer(const std::vector<std::vector<std::string>>& hyps,
                        const std::vector<std::vector<std::string>>& refs);

// Scale-projection SDR proxy: the SI-SNR computation without mean removal.
// Not BSS-EVAL (no 512-tap distortion filter); labeled accordingly in reports.
double sdr_scale_projection(const Waveform& est, const Waveform& ref);

// Character expansion of word tokens for CER (characters plus single spaces
// between words).
std::vector<std::string> expand_chars(const std::vector<std::string>& words);

struct ExampleMetrics {
  std::string id;
  double wer = 0.0;
  double cer = 0.0;
  double sdr_db = 0.0;     // mean over sources
  double si_snr_db = 0.0;  // mean over sources
  std::vector<int> wer_perm;
  std::vector<int> sig_perm;
  EditCounts word_counts;
  std::int64_t ref_words = 0;
  EditCounts char_counts;
  std::int64_t ref_chars = 0;
  std::string error;  // non-fatal per-example failure
};

struct MetricsReport {
  std::vector<ExampleMetrics> examples;
  double wer = 0.0;      // micro average: total edit distance / total ref words
  double cer = 0.0;
  double sdr_db = 0.0;   // mean over sources and examples
  double si_snr_db = 0.0;
  std::int64_t evaluated = 0;
  std::int64_t failed = 0;

  std::string to_table() const;
  std::string to_json() const;
};

struct EvaluateOptions {
  bool oracle_separation = false;  // feed references as estimates (test hook)
  int limit = 0;                   // 0 = all examples
};

// Full-signal separation (never TBPTT), greedy CTC decode per stream,
// min-permutation WER/CER, signal metrics under the signal-loss assignment.
MetricsReport evaluate(const SeparatorModel& sep, const AsrModel& asr,
                       const MixtureDataset& data, const EvaluateOptions& opts = {});

}  // namespace sepasr

#endif  // SEPASR_METRICS_HPP
