// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "sepasr/corpus.hpp"
#include "testutil.hpp"

using namespace sepasr;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("audio");

namespace {

fs::path temp_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Waveform sine(double freq, double dur_s, int sr, double amp = 0.5) {
  Waveform w;
  w.sample_rate = sr;
  const std::int64_t n = static_cast<std::int64_t>(dur_s * sr);
  for (std::int64_t i = 0; i < n; ++i) {
    w.samples.push_back(amp * std::sin(2.0 * std::numbers::pi * freq * i / sr));
  }
  return w;
}

}  // namespace

TEST_CASE("wav round-trip stays within one quantization step") {
  const auto dir = temp_dir("sepasr_wav_test");
  const Waveform original = sine(1000.0, 0.25, 8000);
  const std::string path = (dir / "tone.wav").string();
  write_wav(path, original);
  const Waveform loaded = read_wav(path);
  REQUIRE(loaded.sample_rate == 8000);
  REQUIRE(loaded.size() == original.size());
  for (std::int64_t i = 0; i < original.size(); ++i) {
    CHECK(std::abs(loaded.samples[i] - original.samples[i]) <= std::pow(2.0, -15.0));
  }
  fs::remove_all(dir);
}

TEST_CASE("stereo wav is rejected with a channel-count error") {
  const auto dir = temp_dir("sepasr_wav_stereo");
  // Hand-built 2-channel header.
  std::vector<unsigned char> bytes = {
      'R', 'I', 'F', 'F', 40, 0, 0, 0, 'W', 'A', 'V', 'E', 'f', 'm', 't', ' ',
      16, 0, 0, 0, 1, 0, 2, 0, 0x40, 0x1f, 0, 0, 0, 0x7d, 0, 0,
      4, 0, 16, 0, 'd', 'a', 't', 'a', 4, 0, 0, 0, 0, 0, 0, 0};
  const std::string path = (dir / "stereo.wav").string();
  std::ofstream(path, std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  try {
    read_wav(path);
    FAIL("expected channel error");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::Io);
    CHECK(std::string(e.what()).find("channel") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("truncated header is rejected as corrupt") {
  const auto dir = temp_dir("sepasr_wav_trunc");
  const std::string path = (dir / "trunc.wav").string();
  std::ofstream(path, std::ios::binary) << "RIFF\x10\x00\x00";
  CHECK_THROWS_AS(read_wav(path), Error);
  fs::remove_all(dir);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("mixing");

TEST_CASE("equal-power signals at 0 dB keep scale 1") {
  const Waveform a = sine(400.0, 0.1, 8000, 0.3);
  const Waveform b = sine(700.0, 0.1, 8000, 0.3);
  MixtureExample ex = mix_pair(a, b, 0.0, MixVariant::Min);
  // equal sinusoid power -> gain 1: second source unchanged
  for (std::int64_t i = 0; i < b.size(); ++i) {
    CHECK(ex.sources[1].samples[i] == doctest::Approx(b.samples[i]).epsilon(1e-9));
  }
}

TEST_CASE("snr 20*log10(2) halves the second source amplitude") {
  const Waveform a = sine(400.0, 0.1, 8000, 0.3);
  const Waveform b = sine(700.0, 0.1, 8000, 0.3);
  MixtureExample ex = mix_pair(a, b, 6.020599913279624, MixVariant::Min);
  for (std::int64_t i = 0; i < b.size(); ++i) {
    CHECK(ex.sources[1].samples[i] == doctest::Approx(0.5 * b.samples[i]).epsilon(1e-9));
  }
}

TEST_CASE("min truncates and max zero-pads") {
  Waveform a = sine(300.0, 0.1, 8000, 0.3);
  Waveform b = sine(500.0, 0.125, 8000, 0.3);
  a.samples.resize(800);
  b.samples.resize(1000);
  MixtureExample mn = mix_pair(a, b, 0.0, MixVariant::Min);
  CHECK(mn.mixture.size() == 800);
  CHECK(mn.sources[0].size() == 800);
  CHECK(mn.sources[1].size() == 800);
  MixtureExample mx = mix_pair(a, b, 0.0, MixVariant::Max);
  CHECK(mx.mixture.size() == 1000);
  for (std::int64_t i = 800; i < 1000; ++i) CHECK(mx.sources[0].samples[i] == 0.0);
}

TEST_CASE("mixture equals the sample-wise sum of sources exactly") {
  const Waveform a = sine(350.0, 0.08, 8000, 0.8);
  const Waveform b = sine(650.0, 0.08, 8000, 0.8);
  MixtureExample ex = mix_pair(a, b, 2.0, MixVariant::Max);  // forces renormalization
  for (std::int64_t i = 0; i < ex.mixture.size(); ++i) {
    CHECK(ex.mixture.samples[i] == ex.sources[0].samples[i] + ex.sources[1].samples[i]);
  }
}

TEST_CASE("measured SNR over the overlap matches the request within 0.01 dB") {
  std::mt19937_64 rng(3);
  for (double snr : {0.0, 1.7, 3.3, 5.0}) {
    Waveform a = sine(320.0, 0.1, 8000, 0.4);
    Waveform b = sine(610.0, 0.12, 8000, 0.2);
    MixtureExample ex = mix_pair(a, b, snr, MixVariant::Max);
    const std::int64_t overlap = std::min(a.size(), b.size());
    const double p1 = power(ex.sources[0].samples, 0, overlap);
    const double p2 = power(ex.sources[1].samples, 0, overlap);
    const double measured = 10.0 * std::log10(p1 / p2);
    CHECK(std::abs(measured - snr) <= 0.01);
  }
}

TEST_CASE("zero-power source is rejected") {
  Waveform a = sine(300.0, 0.05, 8000, 0.3);
  Waveform silent;
  silent.sample_rate = 8000;
  silent.samples.assign(400, 0.0);
  CHECK_THROWS_AS(mix_pair(a, silent, 0.0, MixVariant::Min), Error);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("corpus");

namespace {

CorpusConfig tiny_corpus() {
  CorpusConfig cfg;
  cfg.vocab_size = 4;
  cfg.words_min = 1;
  cfg.words_max = 2;
  cfg.word_dur_min_s = 0.08;
  cfg.word_dur_max_s = 0.12;
  cfg.train_utterances = 8;
  cfg.dev_utterances = 4;
  cfg.test_utterances = 4;
  cfg.train_mixtures = 4;
  cfg.dev_mixtures = 2;
  cfg.test_mixtures = 2;
  cfg.seed = 77;
  return cfg;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("same seed twice produces byte-identical corpora") {
  const auto dir_a = temp_dir("sepasr_corpus_a");
  const auto dir_b = temp_dir("sepasr_corpus_b");
  const CorpusConfig cfg = tiny_corpus();
  generate_toneword_corpus(cfg, dir_a.string());
  generate_toneword_corpus(cfg, dir_b.string());

  std::vector<fs::path> rel;
  for (const auto& e : fs::recursive_directory_iterator(dir_a)) {
    if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), dir_a));
  }
  REQUIRE(!rel.empty());
  for (const auto& r : rel) {
    CHECK(fs::exists(dir_b / r));
    CHECK(file_bytes(dir_a / r) == file_bytes(dir_b / r));
  }
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("transcripts are single tokens for a one-word corpus") {
  const auto dir = temp_dir("sepasr_corpus_single");
  CorpusConfig cfg = tiny_corpus();
  cfg.vocab_size = 2;
  cfg.words_min = 1;
  cfg.words_max = 1;
  generate_toneword_corpus(cfg, dir.string());
  const auto records = load_clean_manifest(CorpusLayout(dir.string()).clean_manifest("train"));
  REQUIRE(!records.empty());
  for (const auto& r : records) {
    REQUIRE(r.transcript.size() == 1);
    CHECK((r.transcript[0] == "w0" || r.transcript[0] == "w1"));
  }
  fs::remove_all(dir);
}

TEST_CASE("speaker profiles separate the spectral centroid by the configured margin") {
  const CorpusConfig cfg = tiny_corpus();
  const auto speakers = cfg.resolved_speakers();
  REQUIRE(speakers.size() >= 2);
  for (int word = 0; word < cfg.vocab_size; ++word) {
    const Waveform wa = render_word(word, speakers[0], 0.5 * (speakers[0].f0_min_hz + speakers[0].f0_max_hz),
                                    0.1, cfg.sample_rate);
    const Waveform wb = render_word(word, speakers[1], 0.5 * (speakers[1].f0_min_hz + speakers[1].f0_max_hz),
                                    0.1, cfg.sample_rate);
    const double ca = testutil::spectral_centroid_hz(wa.samples, cfg.sample_rate);
    const double cb = testutil::spectral_centroid_hz(wb.samples, cfg.sample_rate);
    CHECK(std::abs(ca - cb) >= cfg.centroid_margin_hz);
  }
}

TEST_CASE("generated mixtures verify against their manifest") {
  const auto dir = temp_dir("sepasr_corpus_verify");
  generate_toneword_corpus(tiny_corpus(), dir.string());
  CorpusLayout layout(dir.string());
  verify_mixture_manifest(layout.mix_manifest(MixVariant::Min, "train"));
  verify_mixture_manifest(layout.mix_manifest(MixVariant::Max, "train"));
  verify_mixture_manifest(layout.mix_manifest(MixVariant::Max, "test"));

  // min mixtures: all streams equal length; max: mixture is the longest
  const auto recs = load_mixture_manifest(layout.mix_manifest(MixVariant::Min, "train"));
  for (const auto& r : recs) {
    CHECK(r.lengths[0] == r.lengths[1]);
    CHECK(r.lengths[0] == r.lengths[2]);
  }
  fs::remove_all(dir);
}

TEST_CASE("loaded mixtures carry matching transcripts and streams") {
  const auto dir = temp_dir("sepasr_corpus_load");
  generate_toneword_corpus(tiny_corpus(), dir.string());
  CorpusLayout layout(dir.string());
  const Vocabulary vocab = Vocabulary::load(layout.vocab_file);
  CHECK(vocab.size() == 4);
  const MixtureDataset ds = load_mixture_dataset(layout.mix_manifest(MixVariant::Max, "dev"), vocab);
  REQUIRE(ds.size() == 2);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(ds.examples[i].sources.size() == 2);
    CHECK(ds.examples[i].transcripts.size() == 2);
    CHECK(ds.word_ids[i].size() == 2);
  }
  fs::remove_all(dir);
}

TEST_SUITE_END();
