// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef SEPASR_CORPUS_HPP
#define SEPASR_CORPUS_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sepasr/audio.hpp"
#include "sepasr/vocab.hpp"

namespace sepasr {

/// Synthetic speaker: pitch band plus harmonic timbre controls.
struct SpeakerProfile {
  double f0_min_hz = 0.0;
  double f0_max_hz = 0.0;
  double timbre_rolloff = 0.8;  // per-harmonic amplitude decay factor
};

struct CorpusConfig {
  int vocab_size = 8;
  int words_min = 2;
  int words_max = 4;
  double word_dur_min_s = 0.12;
  double word_dur_max_s = 0.22;
  double silence_min_s = 0.04;
  double silence_max_s = 0.08;
  int sample_rate = 8000;
  std::vector<SpeakerProfile> speakers;  // empty -> two default disjoint bands
  int train_utterances = 160;
  int dev_utterances = 24;
  int test_utterances = 24;
  int train_mixtures = 96;
  int dev_mixtures = 16;
  int test_mixtures = 24;
  double snr_min_db = 0.0;
  double snr_max_db = 5.0;
  double centroid_margin_hz = 120.0;  // required speaker separation of a word's centroid
  std::uint64_t seed = 1234;

  void validate() const;
  std::vector<SpeakerProfile> resolved_speakers() const;
};

/// One supervised training unit: a mixture, its sources and their transcripts.
struct MixtureExample {
  Waveform mixture;
  std::vector<Waveform> sources;
  std::vector<std::vector<std::string>> transcripts;
  std::string id;
  double mix_snr_db = 0.0;
};

enum class MixVariant { Min, Max };

// Rescales s2 so the SNR over the overlapped region is snr_db, then sums.
// Min truncates both to the shorter signal; max zero-pads the shorter at the
// tail. If the result would clip, all waveforms are rescaled by one common
// factor, which preserves both the SNR and mixture == sum(sources) exactly.
MixtureExample mix_pair(const Waveform& s1, const Waveform& s2, double snr_db,
                        MixVariant variant);

// Deterministic tone-word rendering: each vocabulary word has a fixed
// frequency-trajectory / harmonic-emphasis signature; the speaker profile
// sets the pitch band and spectral rolloff.
Waveform render_word(int word, const SpeakerProfile& speaker, double f0_hz, double dur_s,
                     int sample_rate);
Waveform render_utterance(const std::vector<int>& words, const SpeakerProfile& speaker,
                          const CorpusConfig& config, std::mt19937_64& rng);

// Manifest records (JSON lines). Paths are relative to the manifest directory.
struct UtteranceRecord {
  std::string id;
  std::string audio_path;
  int speaker = 0;
  std::vector<std::string> transcript;
  std::int64_t length = 0;
  int sample_rate = 0;
};

struct MixtureRecord {
  std::string id;
  std::string mixture_path;
  std::vector<std::string> source_paths;
  std::vector<std::vector<std::string>> transcripts;
  double snr_db = 0.0;
  std::vector<std::int64_t> lengths;
  int sample_rate = 0;
};

struct CorpusLayout {
  std::string root;
  std::string vocab_file;
  std::string clean_manifest(const std::string& split) const;
  std::string mix_manifest(MixVariant variant, const std::string& split) const;
  explicit CorpusLayout(std::string root_dir);
};

// Generates the full corpus under out_dir: vocabulary, clean single-speaker
// utterances (train/dev/test), and min/max mixture datasets. Byte-identical
// output for identical configs; every utterance derives its own RNG stream
// from (seed, split, index).
void generate_toneword_corpus(const CorpusConfig& config, const std::string& out_dir);

std::vector<UtteranceRecord> load_clean_manifest(const std::string& manifest_path);
std::vector<MixtureRecord> load_mixture_manifest(const std::string& manifest_path);
Waveform load_utterance_audio(const UtteranceRecord& rec, const std::string& manifest_path);
MixtureExample load_mixture(const MixtureRecord& rec, const std::string& manifest_path);

// Checks that every referenced file exists and matches the recorded length.
void verify_mixture_manifest(const std::string& manifest_path);

// In-memory datasets with transcripts resolved to word ids.
struct CleanDataset {
  std::vector<UtteranceRecord> records;
  std::vector<Waveform> audio;
  std::vector<std::vector<int>> word_ids;
  std::size_t size() const { return records.size(); }
};

struct MixtureDataset {
  std::vector<MixtureRecord> records;
  std::vector<MixtureExample> examples;
  std::vector<std::vector<std::vector<int>>> word_ids;  // [example][stream][token]
  std::size_t size() const { return records.size(); }
};

CleanDataset load_clean_dataset(const std::string& manifest_path, const Vocabulary& vocab);
MixtureDataset load_mixture_dataset(const std::string& manifest_path, const Vocabulary& vocab);

}  // namespace sepasr

#endif  // SEPASR_CORPUS_HPP
