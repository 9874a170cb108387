// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepasr/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "sepasr/random.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace sepasr {

void CorpusConfig::validate() const {
  if (vocab_size < 2) fail(Error::Kind::Config, "corpus: vocab_size must be >= 2");
  if (words_min < 1 || words_max < words_min) {
    fail(Error::Kind::Config, "corpus: bad words-per-utterance range [", words_min, ", ",
         words_max, "]");
  }
  if (!(word_dur_min_s > 0.0) || word_dur_max_s < word_dur_min_s) {
    fail(Error::Kind::Config, "corpus: bad word duration range");
  }
  if (silence_min_s < 0.0 || silence_max_s < silence_min_s) {
    fail(Error::Kind::Config, "corpus: bad silence range");
  }
  if (sample_rate <= 0) fail(Error::Kind::Config, "corpus: sample_rate must be positive");
  if (snr_max_db < snr_min_db) fail(Error::Kind::Config, "corpus: bad snr range");
  if (resolved_speakers().size() < 2) {
    fail(Error::Kind::Config, "corpus: at least two speaker profiles required");
  }
}

std::vector<SpeakerProfile> CorpusConfig::resolved_speakers() const {
  if (!speakers.empty()) return speakers;
  // Disjoint pitch bands with the brighter rolloff on the higher voice, so
  // both pitch and spectral centroid separate the two speakers.
  return {SpeakerProfile{105.0, 135.0, 0.75}, SpeakerProfile{215.0, 265.0, 0.85}};
}

MixtureExample mix_pair(const Waveform& s1, const Waveform& s2, double snr_db,
                        MixVariant variant) {
  if (s1.sample_rate != s2.sample_rate) {
    fail(Error::Kind::Data, "mix_pair: sample rates differ: ", s1.sample_rate, " vs ",
         s2.sample_rate);
  }
  const std::int64_t overlap = std::min(s1.size(), s2.size());
  const double p1 = power(s1.samples, 0, overlap);
  const double p2 = power(s2.samples, 0, overlap);
  if (p1 <= 0.0 || p2 <= 0.0) {
    fail(Error::Kind::Data, "mix_pair: zero-power source over the overlap; SNR undefined");
  }
  const double gain = std::sqrt(p1 / (p2 * std::pow(10.0, snr_db / 10.0)));

  const std::int64_t out_len = variant == MixVariant::Min ? overlap
                                                          : std::max(s1.size(), s2.size());
  std::vector<double> a(static_cast<std::size_t>(out_len), 0.0);
  std::vector<double> b(static_cast<std::size_t>(out_len), 0.0);
  for (std::int64_t i = 0; i < std::min(out_len, s1.size()); ++i) a[i] = s1.samples[i];
  for (std::int64_t i = 0; i < std::min(out_len, s2.size()); ++i) b[i] = gain * s2.samples[i];

  // Common rescale on clipping keeps both the SNR and mixture == s1 + s2.
  double peak = 0.0;
  for (std::int64_t i = 0; i < out_len; ++i) {
    peak = std::max(peak, std::abs(a[i] + b[i]));
    peak = std::max(peak, std::abs(a[i]));
    peak = std::max(peak, std::abs(b[i]));
  }
  if (peak > 0.99) {
    const double c = 0.99 / peak;
    for (auto& v : a) v *= c;
    for (auto& v : b) v *= c;
  }

  MixtureExample ex;
  ex.mix_snr_db = snr_db;
  ex.sources.resize(2);
  ex.sources[0] = Waveform{std::move(a), s1.sample_rate};
  ex.sources[1] = Waveform{std::move(b), s1.sample_rate};
  std::vector<double> mix(static_cast<std::size_t>(out_len));
  for (std::int64_t i = 0; i < out_len; ++i) {
    mix[i] = ex.sources[0].samples[i] + ex.sources[1].samples[i];
  }
  ex.mixture = Waveform{std::move(mix), s1.sample_rate};
  return ex;
}

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

// Word signature: a vowel-like pair of fixed resonance regions. The resonance
// centers are absolute frequencies, so a word keeps its spectral shape across
// speakers with different pitch; the speaker contributes the fundamental band
// and the harmonic rolloff. Every analysis frame of a word is therefore
// discriminative on its own (no trajectory integration needed).
struct WordSignature {
  double res1_hz;
  double res2_hz;
  double dur_scale;  // small deterministic length bias beyond a 3x3 grid
};

WordSignature word_signature(int word) {
  static constexpr double kRes1[3] = {420.0, 650.0, 950.0};
  static constexpr double kRes2[3] = {1500.0, 2250.0, 3100.0};
  WordSignature sig{};
  sig.res1_hz = kRes1[word % 3];
  sig.res2_hz = kRes2[(word / 3) % 3];
  sig.dur_scale = 1.0 + 0.10 * static_cast<double>((word / 9) % 3);
  return sig;
}

double resonance_gain(double hz, const WordSignature& sig) {
  const double d1 = (hz - sig.res1_hz) / 140.0;
  const double d2 = (hz - sig.res2_hz) / 180.0;
  return 1.0 + 6.0 * std::exp(-0.5 * d1 * d1) + 6.0 * std::exp(-0.5 * d2 * d2);
}

}  // namespace

Waveform render_word(int word, const SpeakerProfile& speaker, double f0_hz, double dur_s,
                     int sample_rate) {
  const WordSignature sig = word_signature(word);
  const double dur = dur_s * sig.dur_scale;
  const std::int64_t n = static_cast<std::int64_t>(std::lround(dur * sample_rate));
  const double nyq_limit = 0.45 * sample_rate;
  const double vibrato_depth = 0.025;  // gentle 5.5 Hz vibrato on every word
  const double vibrato_rate = 5.5;
  const double f0_peak = f0_hz * (1.0 + vibrato_depth);

  int max_h = static_cast<int>(nyq_limit / f0_peak);
  max_h = std::min(max_h, 30);
  if (max_h < 1) max_h = 1;

  std::vector<double> amps(static_cast<std::size_t>(max_h));
  double norm = 0.0;
  for (int h = 1; h <= max_h; ++h) {
    const double a = std::pow(speaker.timbre_rolloff, h - 1) *
                     resonance_gain(static_cast<double>(h) * f0_hz, sig);
    amps[static_cast<std::size_t>(h - 1)] = a;
    norm += a;
  }
  for (auto& a : amps) a /= norm;

  const double ramp = std::min(0.012, dur / 4.0);  // attack/release, seconds
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    // phase integral of f0 * (1 + depth*sin(tau*rate*t))
    const double ph =
        f0_hz * (t + vibrato_depth * (1.0 - std::cos(kTau * vibrato_rate * t)) /
                         (kTau * vibrato_rate));
    double v = 0.0;
    for (int h = 1; h <= max_h; ++h) {
      v += amps[static_cast<std::size_t>(h - 1)] * std::sin(kTau * h * ph);
    }
    double env = 1.0;
    if (t < ramp) env = 0.5 - 0.5 * std::cos(kTau / 2.0 * t / ramp);
    const double tail = dur - t;
    if (tail < ramp) env = std::min(env, 0.5 - 0.5 * std::cos(kTau / 2.0 * tail / ramp));
    out[static_cast<std::size_t>(i)] = 0.45 * env * v;
  }
  return Waveform{std::move(out), sample_rate};
}

Waveform render_utterance(const std::vector<int>& words, const SpeakerProfile& speaker,
                          const CorpusConfig& config, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dur_dist(config.word_dur_min_s, config.word_dur_max_s);
  std::uniform_real_distribution<double> sil_dist(config.silence_min_s, config.silence_max_s);
  std::uniform_real_distribution<double> f0_dist(speaker.f0_min_hz, speaker.f0_max_hz);
  std::uniform_real_distribution<double> jitter(-0.03, 0.03);
  const double base_f0 = f0_dist(rng);

  std::vector<double> samples;
  auto add_silence = [&](double s) {
    samples.insert(samples.end(),
                   static_cast<std::size_t>(std::lround(s * config.sample_rate)), 0.0);
  };
  add_silence(sil_dist(rng));
  for (std::size_t w = 0; w < words.size(); ++w) {
    const double f0 = base_f0 * (1.0 + jitter(rng));
    const Waveform word = render_word(words[w], speaker, f0, dur_dist(rng), config.sample_rate);
    samples.insert(samples.end(), word.samples.begin(), word.samples.end());
    add_silence(sil_dist(rng));
  }
  return Waveform{std::move(samples), config.sample_rate};
}

CorpusLayout::CorpusLayout(std::string root_dir) : root(std::move(root_dir)) {
  vocab_file = (fs::path(root) / "vocab.txt").string();
}

std::string CorpusLayout::clean_manifest(const std::string& split) const {
  return (fs::path(root) / ("clean_" + split + ".jsonl")).string();
}

std::string CorpusLayout::mix_manifest(MixVariant variant, const std::string& split) const {
  const char* tag = variant == MixVariant::Min ? "mix_min" : "mix_max";
  return (fs::path(root) / (std::string(tag) + "_" + split + ".jsonl")).string();
}

namespace {

std::string utt_id(const std::string& split, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "utt_%s_%05d", split.c_str(), index);
  return buf;
}

std::string mix_id(const std::string& split, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "mix_%s_%05d", split.c_str(), index);
  return buf;
}

json utterance_to_json(const UtteranceRecord& r) {
  return json{{"id", r.id},           {"audio", r.audio_path},
              {"speaker", r.speaker}, {"transcript", r.transcript},
              {"length", r.length},   {"sample_rate", r.sample_rate}};
}

json mixture_to_json(const MixtureRecord& r) {
  return json{{"id", r.id},
              {"mixture", r.mixture_path},
              {"sources", r.source_paths},
              {"transcripts", r.transcripts},
              {"snr_db", r.snr_db},
              {"lengths", r.lengths},
              {"sample_rate", r.sample_rate}};
}

struct CleanUtt {
  UtteranceRecord record;
  Waveform audio;
};

std::vector<CleanUtt> make_clean_split(const CorpusConfig& config, const std::string& split,
                                       int count, const fs::path& root) {
  const auto speakers = config.resolved_speakers();
  const fs::path dir = root / "clean" / split;
  fs::create_directories(dir);
  std::vector<CleanUtt> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    auto rng = make_rng(config.seed, "utt/" + split, static_cast<std::uint64_t>(i));
    const int speaker = i % static_cast<int>(speakers.size());
    std::uniform_int_distribution<int> n_words(config.words_min, config.words_max);
    std::uniform_int_distribution<int> word_dist(0, config.vocab_size - 1);
    std::vector<int> words(static_cast<std::size_t>(n_words(rng)));
    for (auto& w : words) w = word_dist(rng);
    const Waveform audio =
        render_utterance(words, speakers[static_cast<std::size_t>(speaker)], config, rng);

    CleanUtt utt;
    utt.record.id = utt_id(split, i);
    utt.record.audio_path = (fs::path("clean") / split / (utt.record.id + ".wav")).string();
    utt.record.speaker = speaker;
    for (int w : words) utt.record.transcript.push_back("w" + std::to_string(w));
    utt.record.length = audio.size();
    utt.record.sample_rate = config.sample_rate;
    utt.audio = audio;
    write_wav((root / utt.record.audio_path).string(), audio);
    out.push_back(std::move(utt));
  }
  return out;
}

void write_manifest(const std::string& path, const std::vector<json>& records) {
  std::ofstream os(path);
  if (!os) fail(Error::Kind::Io, "cannot write manifest: ", path);
  for (const auto& r : records) os << r.dump() << "\n";
}

void make_mixture_split(const CorpusConfig& config, const std::string& split,
                        const std::vector<CleanUtt>& pool, int count, MixVariant variant,
                        const fs::path& root, const std::string& manifest_path) {
  const auto speakers = config.resolved_speakers();
  const int n_speakers = static_cast<int>(speakers.size());
  // Per-speaker sub-pools of the clean split.
  std::vector<std::vector<const CleanUtt*>> by_speaker(static_cast<std::size_t>(n_speakers));
  for (const auto& u : pool) {
    by_speaker[static_cast<std::size_t>(u.record.speaker)].push_back(&u);
  }
  for (int s = 0; s < n_speakers && count > 0; ++s) {
    if (by_speaker[static_cast<std::size_t>(s)].empty()) {
      fail(Error::Kind::Data, "corpus: split ", split, " has no utterances for speaker ", s);
    }
  }
  const char* tag = variant == MixVariant::Min ? "mix_min" : "mix_max";
  const fs::path dir = root / tag / split;
  fs::create_directories(dir);

  std::vector<json> records;
  for (int i = 0; i < count; ++i) {
    auto rng = make_rng(config.seed, std::string(tag) + "/" + split,
                        static_cast<std::uint64_t>(i));
    // Two distinct speaker profiles per mixture.
    std::uniform_int_distribution<int> spk_a_dist(0, n_speakers - 1);
    const int spk_a = spk_a_dist(rng);
    std::uniform_int_distribution<int> spk_b_dist(0, n_speakers - 2);
    int spk_b = spk_b_dist(rng);
    if (spk_b >= spk_a) ++spk_b;
    const auto& pool_a = by_speaker[static_cast<std::size_t>(spk_a)];
    const auto& pool_b = by_speaker[static_cast<std::size_t>(spk_b)];
    std::uniform_int_distribution<std::size_t> pick_a(0, pool_a.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_b(0, pool_b.size() - 1);
    const CleanUtt& ua = *pool_a[pick_a(rng)];
    const CleanUtt& ub = *pool_b[pick_b(rng)];
    std::uniform_real_distribution<double> snr_dist(config.snr_min_db, config.snr_max_db);
    const double snr = snr_dist(rng);

    MixtureExample ex = mix_pair(ua.audio, ub.audio, snr, variant);
    ex.id = mix_id(split, i);
    ex.transcripts = {ua.record.transcript, ub.record.transcript};

    MixtureRecord rec;
    rec.id = ex.id;
    rec.mixture_path = (fs::path(tag) / split / (ex.id + "_mix.wav")).string();
    rec.source_paths = {(fs::path(tag) / split / (ex.id + "_s0.wav")).string(),
                        (fs::path(tag) / split / (ex.id + "_s1.wav")).string()};
    rec.transcripts = ex.transcripts;
    rec.snr_db = snr;
    rec.lengths = {ex.mixture.size(), ex.sources[0].size(), ex.sources[1].size()};
    rec.sample_rate = config.sample_rate;

    write_wav((root / rec.mixture_path).string(), ex.mixture);
    write_wav((root / rec.source_paths[0]).string(), ex.sources[0]);
    write_wav((root / rec.source_paths[1]).string(), ex.sources[1]);
    records.push_back(mixture_to_json(rec));
  }
  write_manifest(manifest_path, records);
}

}  // namespace

void generate_toneword_corpus(const CorpusConfig& config, const std::string& out_dir) {
  config.validate();
  const fs::path root(out_dir);
  fs::create_directories(root);
  CorpusLayout layout(out_dir);

  std::vector<std::string> words;
  for (int w = 0; w < config.vocab_size; ++w) words.push_back("w" + std::to_string(w));
  Vocabulary(words).save(layout.vocab_file);

  const struct {
    const char* split;
    int utts;
    int mixes;
  } splits[] = {{"train", config.train_utterances, config.train_mixtures},
                {"dev", config.dev_utterances, config.dev_mixtures},
                {"test", config.test_utterances, config.test_mixtures}};

  for (const auto& sp : splits) {
    const auto pool = make_clean_split(config, sp.split, sp.utts, root);
    std::vector<json> records;
    for (const auto& u : pool) records.push_back(utterance_to_json(u.record));
    write_manifest(layout.clean_manifest(sp.split), records);
    make_mixture_split(config, sp.split, pool, sp.mixes, MixVariant::Min, root,
                       layout.mix_manifest(MixVariant::Min, sp.split));
    make_mixture_split(config, sp.split, pool, sp.mixes, MixVariant::Max, root,
                       layout.mix_manifest(MixVariant::Max, sp.split));
  }
}

namespace {

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(Error::Kind::Io, "cannot open manifest: ", path);
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      fail(Error::Kind::Data, "malformed manifest record at ", path, ":", lineno);
    }
    out.push_back(std::move(j));
  }
  return out;
}

std::string resolve(const std::string& manifest_path, const std::string& rel) {
  return (fs::path(manifest_path).parent_path() / rel).string();
}

}  // namespace

std::vector<UtteranceRecord> load_clean_manifest(const std::string& manifest_path) {
  std::vector<UtteranceRecord> out;
  for (const auto& j : read_jsonl(manifest_path)) {
    UtteranceRecord r;
    r.id = j.at("id").get<std::string>();
    r.audio_path = j.at("audio").get<std::string>();
    r.speaker = j.at("speaker").get<int>();
    r.transcript = j.at("transcript").get<std::vector<std::string>>();
    r.length = j.at("length").get<std::int64_t>();
    r.sample_rate = j.at("sample_rate").get<int>();
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<MixtureRecord> load_mixture_manifest(const std::string& manifest_path) {
  std::vector<MixtureRecord> out;
  for (const auto& j : read_jsonl(manifest_path)) {
    MixtureRecord r;
    r.id = j.at("id").get<std::string>();
    r.mixture_path = j.at("mixture").get<std::string>();
    r.source_paths = j.at("sources").get<std::vector<std::string>>();
    r.transcripts = j.at("transcripts").get<std::vector<std::vector<std::string>>>();
    r.snr_db = j.at("snr_db").get<double>();
    r.lengths = j.at("lengths").get<std::vector<std::int64_t>>();
    r.sample_rate = j.at("sample_rate").get<int>();
    out.push_back(std::move(r));
  }
  return out;
}

Waveform load_utterance_audio(const UtteranceRecord& rec, const std::string& manifest_path) {
  return read_wav(resolve(manifest_path, rec.audio_path));
}

MixtureExample load_mixture(const MixtureRecord& rec, const std::string& manifest_path) {
  MixtureExample ex;
  ex.id = rec.id;
  ex.mix_snr_db = rec.snr_db;
  ex.transcripts = rec.transcripts;
  ex.mixture = read_wav(resolve(manifest_path, rec.mixture_path));
  for (const auto& p : rec.source_paths) ex.sources.push_back(read_wav(resolve(manifest_path, p)));
  return ex;
}

CleanDataset load_clean_dataset(const std::string& manifest_path, const Vocabulary& vocab) {
  CleanDataset ds;
  ds.records = load_clean_manifest(manifest_path);
  for (const auto& rec : ds.records) {
    ds.audio.push_back(load_utterance_audio(rec, manifest_path));
    ds.word_ids.push_back(vocab.to_word_ids(rec.transcript));
  }
  return ds;
}

MixtureDataset load_mixture_dataset(const std::string& manifest_path, const Vocabulary& vocab) {
  MixtureDataset ds;
  ds.records = load_mixture_manifest(manifest_path);
  for (const auto& rec : ds.records) {
    ds.examples.push_back(load_mixture(rec, manifest_path));
    std::vector<std::vector<int>> ids;
    for (const auto& t : rec.transcripts) ids.push_back(vocab.to_word_ids(t));
    ds.word_ids.push_back(std::move(ids));
  }
  return ds;
}

void verify_mixture_manifest(const std::string& manifest_path) {
  for (const auto& rec : load_mixture_manifest(manifest_path)) {
    std::vector<std::string> paths = {rec.mixture_path};
    paths.insert(paths.end(), rec.source_paths.begin(), rec.source_paths.end());
    if (paths.size() != rec.lengths.size()) {
      fail(Error::Kind::Data, "manifest record ", rec.id, " has ", rec.lengths.size(),
           " lengths for ", paths.size(), " files");
    }
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const std::string full = resolve(manifest_path, paths[i]);
      if (!fs::exists(full)) fail(Error::Kind::Data, "missing audio file: ", full);
      const Waveform w = read_wav(full);
      if (w.size() != rec.lengths[i]) {
        fail(Error::Kind::Data, "length mismatch for ", full, ": manifest says ", rec.lengths[i],
             ", file has ", w.size());
      }
    }
  }
}

}  // namespace sepasr
