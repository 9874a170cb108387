// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepasr/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace sepasr {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

IniFile IniFile::parse_string(const std::string& text, const std::string& source) {
  IniFile ini;
  std::istringstream is(text);
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        fail(Error::Kind::Config, source, ":", lineno, ": malformed section header: ", line);
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        fail(Error::Kind::Config, source, ":", lineno, ": empty section name");
      }
      ini.sections[section];  // sections may be empty
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(Error::Kind::Config, source, ":", lineno, ": expected key = value, got: ", line);
    }
    if (section.empty()) {
      fail(Error::Kind::Config, source, ":", lineno, ": key outside any section");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(Error::Kind::Config, source, ":", lineno, ": empty key");
    if (!ini.sections[section].emplace(key, value).second) {
      fail(Error::Kind::Config, source, ":", lineno, ": duplicate key '", key, "' in [",
           section, "]");
    }
  }
  return ini;
}

IniFile IniFile::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(Error::Kind::Io, "cannot open config file: ", path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_string(buf.str(), path);
}

namespace {

// Tracks which keys a section consumer touched so leftovers can be named.
class SectionReader {
 public:
  SectionReader(const IniFile& ini, const std::string& section) : section_(section) {
    auto it = ini.sections.find(section);
    if (it != ini.sections.end()) entries_ = &it->second;
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return entries_ != nullptr && entries_->count(key) > 0;
  }

  std::string str(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    if (entries_ == nullptr) return fallback;
    auto it = entries_->find(key);
    return it == entries_->end() ? fallback : it->second;
  }

  double num(const std::string& key, double fallback) {
    const std::string raw = str(key, "");
    if (raw.empty()) return fallback;
    try {
      std::size_t pos = 0;
      const double v = std::stod(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      fail(Error::Kind::Config, "[", section_, "] ", key, ": not a number: ", raw);
    }
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const std::string raw = str(key, "");
    if (raw.empty()) return fallback;
    try {
      std::size_t pos = 0;
      const std::int64_t v = std::stoll(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      fail(Error::Kind::Config, "[", section_, "] ", key, ": not an integer: ", raw);
    }
  }

  std::uint64_t uinteger(const std::string& key, std::uint64_t fallback) {
    const std::string raw = str(key, "");
    if (raw.empty()) return fallback;
    try {
      std::size_t pos = 0;
      const std::uint64_t v = std::stoull(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      fail(Error::Kind::Config, "[", section_, "] ", key, ": not an unsigned integer: ", raw);
    }
  }

  bool boolean(const std::string& key, bool fallback) {
    const std::string raw = str(key, "");
    if (raw.empty()) return fallback;
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    fail(Error::Kind::Config, "[", section_, "] ", key, ": not a boolean: ", raw);
  }

  void finish(const IniFile& ini) const {
    auto it = ini.sections.find(section_);
    if (it == ini.sections.end()) return;
    for (const auto& [key, value] : it->second) {
      if (!used_.count(key)) {
        fail(Error::Kind::Config, "unknown key '", key, "' in section [", section_, "]");
      }
    }
  }

 private:
  std::string section_;
  const std::map<std::string, std::string>* entries_ = nullptr;
  std::set<std::string> used_;
};

OptimizerConfig optimizer_from(const std::string& name, double lr, const PlanConfig& p) {
  if (name == "adam") {
    OptimizerConfig c = OptimizerConfig::adam(lr);
    c.beta1 = p.adam_beta1;
    c.beta2 = p.adam_beta2;
    c.adam_eps = p.adam_eps;
    return c;
  }
  if (name == "adadelta") {
    return OptimizerConfig::adadelta(p.adadelta_rho, p.adadelta_eps);
  }
  fail(Error::Kind::Config, "unknown optimizer: ", name, " (expected adam or adadelta)");
}

}  // namespace

FinetunePlan PlanConfig::to_finetune_plan() const {
  FinetuneMode m;
  if (mode == "a") {
    m = FinetuneMode::A;
  } else if (mode == "b") {
    m = FinetuneMode::B;
  } else if (mode == "c") {
    m = FinetuneMode::C;
  } else {
    fail(Error::Kind::Config, "[plan] mode must be a, b or c, got: ", mode);
  }
  FinetunePlan plan = FinetunePlan::for_mode(m);
  if (alpha_override.has_value()) plan.override_alpha(*alpha_override);
  plan.lambda = lambda;
  if (perm == "sig") {
    plan.perm = PermCriterion::Signal;
  } else if (perm == "ctc") {
    plan.perm = PermCriterion::Ctc;
  } else {
    fail(Error::Kind::Config, "[plan] perm must be sig or ctc, got: ", perm);
  }
  plan.tbptt.enabled = tbptt_chunk > 0;
  plan.tbptt.chunk_samples = tbptt_chunk;
  plan.tbptt.edge_avoid = tbptt_edge_avoid;
  plan.optimizer = optimizer_from(optimizer, lr, *this);
  plan.batch_size = batch_size;
  plan.steps = steps;
  plan.clip_norm = clip_norm;
  plan.seed = seed;
  return plan;
}

SeparatorPretrainOptions PlanConfig::to_separator_options() const {
  SeparatorPretrainOptions o;
  o.crop_samples = sep_crop_samples;
  o.batch_size = sep_batch_size;
  o.epochs = sep_epochs;
  o.optimizer = optimizer_from(sep_optimizer, sep_lr, *this);
  o.clip_norm = clip_norm;
  o.seed = seed;
  return o;
}

AsrPretrainOptions PlanConfig::to_asr_options() const {
  AsrPretrainOptions o;
  o.batch_size = asr_batch_size;
  o.epochs = asr_epochs;
  o.lambda = lambda;
  o.optimizer = optimizer_from(asr_optimizer, asr_lr, *this);
  o.clip_norm = clip_norm;
  o.seed = seed;
  return o;
}

ExperimentConfig ExperimentConfig::from_ini(const IniFile& ini) {
  static const std::set<std::string> known = {"corpus", "separator", "asr", "plan", "paths"};
  for (const auto& [name, entries] : ini.sections) {
    if (!known.count(name)) {
      fail(Error::Kind::Config, "unknown section [", name, "]");
    }
  }

  ExperimentConfig cfg;
  {
    SectionReader r(ini, "corpus");
    cfg.corpus.vocab_size = static_cast<int>(r.integer("vocab_size", cfg.corpus.vocab_size));
    cfg.corpus.words_min = static_cast<int>(r.integer("words_min", cfg.corpus.words_min));
    cfg.corpus.words_max = static_cast<int>(r.integer("words_max", cfg.corpus.words_max));
    cfg.corpus.word_dur_min_s = r.num("word_dur_min_s", cfg.corpus.word_dur_min_s);
    cfg.corpus.word_dur_max_s = r.num("word_dur_max_s", cfg.corpus.word_dur_max_s);
    cfg.corpus.silence_min_s = r.num("silence_min_s", cfg.corpus.silence_min_s);
    cfg.corpus.silence_max_s = r.num("silence_max_s", cfg.corpus.silence_max_s);
    cfg.corpus.sample_rate = static_cast<int>(r.integer("sample_rate", cfg.corpus.sample_rate));
    cfg.corpus.train_utterances =
        static_cast<int>(r.integer("train_utterances", cfg.corpus.train_utterances));
    cfg.corpus.dev_utterances =
        static_cast<int>(r.integer("dev_utterances", cfg.corpus.dev_utterances));
    cfg.corpus.test_utterances =
        static_cast<int>(r.integer("test_utterances", cfg.corpus.test_utterances));
    cfg.corpus.train_mixtures =
        static_cast<int>(r.integer("train_mixtures", cfg.corpus.train_mixtures));
    cfg.corpus.dev_mixtures = static_cast<int>(r.integer("dev_mixtures", cfg.corpus.dev_mixtures));
    cfg.corpus.test_mixtures =
        static_cast<int>(r.integer("test_mixtures", cfg.corpus.test_mixtures));
    cfg.corpus.snr_min_db = r.num("snr_min_db", cfg.corpus.snr_min_db);
    cfg.corpus.snr_max_db = r.num("snr_max_db", cfg.corpus.snr_max_db);
    cfg.corpus.centroid_margin_hz = r.num("centroid_margin_hz", cfg.corpus.centroid_margin_hz);
    cfg.corpus.seed = r.uinteger("seed", cfg.corpus.seed);
    r.finish(ini);
  }
  {
    SectionReader r(ini, "separator");
    cfg.separator.N = r.integer("N", cfg.separator.N);
    cfg.separator.L = r.integer("L", cfg.separator.L);
    cfg.separator.B = r.integer("B", cfg.separator.B);
    cfg.separator.H = r.integer("H", cfg.separator.H);
    cfg.separator.P = r.integer("P", cfg.separator.P);
    cfg.separator.X = r.integer("X", cfg.separator.X);
    cfg.separator.R = r.integer("R", cfg.separator.R);
    cfg.separator.S = r.integer("S", cfg.separator.S);
    cfg.separator.norm_eps = r.num("norm_eps", cfg.separator.norm_eps);
    r.finish(ini);
  }
  {
    SectionReader r(ini, "asr");
    cfg.asr.n_mels = r.integer("n_mels", cfg.asr.n_mels);
    cfg.asr.stft_window = r.integer("stft_window", cfg.asr.stft_window);
    cfg.asr.stft_hop = r.integer("stft_hop", cfg.asr.stft_hop);
    cfg.asr.conv_channels = r.integer("conv_channels", cfg.asr.conv_channels);
    cfg.asr.subsample = r.integer("subsample", cfg.asr.subsample);
    cfg.asr.hidden = r.integer("hidden", cfg.asr.hidden);
    cfg.asr.embed_dim = r.integer("embed_dim", cfg.asr.embed_dim);
    cfg.asr.lambda = r.num("lambda", cfg.asr.lambda);
    cfg.asr.log_eps = r.num("log_eps", cfg.asr.log_eps);
    cfg.asr.sample_rate = static_cast<int>(r.integer("sample_rate", cfg.asr.sample_rate));
    r.finish(ini);
  }
  {
    SectionReader r(ini, "plan");
    cfg.plan.mode = r.str("mode", cfg.plan.mode);
    if (r.has("alpha")) cfg.plan.alpha_override = r.num("alpha", 0.0);
    cfg.plan.lambda = r.num("lambda", cfg.plan.lambda);
    cfg.plan.perm = r.str("perm", cfg.plan.perm);
    const std::string chunk = r.str("tbptt_chunk", "off");
    if (chunk == "off") {
      cfg.plan.tbptt_chunk = 0;
    } else {
      cfg.plan.tbptt_chunk = r.integer("tbptt_chunk", 0);
    }
    cfg.plan.tbptt_edge_avoid = r.boolean("tbptt_edge_avoid", cfg.plan.tbptt_edge_avoid);
    cfg.plan.optimizer = r.str("optimizer", cfg.plan.optimizer);
    cfg.plan.lr = r.num("lr", cfg.plan.lr);
    cfg.plan.adam_beta1 = r.num("adam_beta1", cfg.plan.adam_beta1);
    cfg.plan.adam_beta2 = r.num("adam_beta2", cfg.plan.adam_beta2);
    cfg.plan.adam_eps = r.num("adam_eps", cfg.plan.adam_eps);
    cfg.plan.adadelta_rho = r.num("adadelta_rho", cfg.plan.adadelta_rho);
    cfg.plan.adadelta_eps = r.num("adadelta_eps", cfg.plan.adadelta_eps);
    cfg.plan.batch_size = static_cast<int>(r.integer("batch_size", cfg.plan.batch_size));
    cfg.plan.steps = static_cast<int>(r.integer("steps", cfg.plan.steps));
    cfg.plan.clip_norm = r.num("clip_norm", cfg.plan.clip_norm);
    cfg.plan.seed = r.uinteger("seed", cfg.plan.seed);
    cfg.plan.sep_epochs = static_cast<int>(r.integer("sep_epochs", cfg.plan.sep_epochs));
    cfg.plan.sep_crop_samples = r.integer("sep_crop_samples", cfg.plan.sep_crop_samples);
    cfg.plan.sep_batch_size =
        static_cast<int>(r.integer("sep_batch_size", cfg.plan.sep_batch_size));
    cfg.plan.sep_lr = r.num("sep_lr", cfg.plan.sep_lr);
    cfg.plan.sep_optimizer = r.str("sep_optimizer", cfg.plan.sep_optimizer);
    cfg.plan.asr_epochs = static_cast<int>(r.integer("asr_epochs", cfg.plan.asr_epochs));
    cfg.plan.asr_batch_size =
        static_cast<int>(r.integer("asr_batch_size", cfg.plan.asr_batch_size));
    cfg.plan.asr_lr = r.num("asr_lr", cfg.plan.asr_lr);
    cfg.plan.asr_optimizer = r.str("asr_optimizer", cfg.plan.asr_optimizer);
    r.finish(ini);
  }
  {
    SectionReader r(ini, "paths");
    const char* env = std::getenv("SEPASR_WORKDIR");
    cfg.paths.work_dir = r.str("work_dir", env != nullptr ? env : cfg.paths.work_dir);
    cfg.paths.corpus_dir = r.str("corpus_dir", cfg.paths.corpus_dir);
    cfg.paths.vocab = r.str("vocab", cfg.paths.vocab);
    cfg.paths.train_manifest = r.str("train_manifest", cfg.paths.train_manifest);
    cfg.paths.dev_manifest = r.str("dev_manifest", cfg.paths.dev_manifest);
    cfg.paths.test_manifest = r.str("test_manifest", cfg.paths.test_manifest);
    cfg.paths.clean_train_manifest =
        r.str("clean_train_manifest", cfg.paths.clean_train_manifest);
    cfg.paths.clean_dev_manifest = r.str("clean_dev_manifest", cfg.paths.clean_dev_manifest);
    cfg.paths.checkpoint_fe = r.str("checkpoint_fe", cfg.paths.checkpoint_fe);
    cfg.paths.checkpoint_asr = r.str("checkpoint_asr", cfg.paths.checkpoint_asr);
    r.finish(ini);
  }

  cfg.corpus.validate();
  cfg.separator.validate();
  cfg.asr.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  return from_ini(IniFile::parse_file(path));
}

std::string ExperimentConfig::resolved_ini() const {
  std::ostringstream os;
  os.precision(17);
  os << "[corpus]\n";
  os << "vocab_size = " << corpus.vocab_size << "\n";
  os << "words_min = " << corpus.words_min << "\n";
  os << "words_max = " << corpus.words_max << "\n";
  os << "word_dur_min_s = " << corpus.word_dur_min_s << "\n";
  os << "word_dur_max_s = " << corpus.word_dur_max_s << "\n";
  os << "silence_min_s = " << corpus.silence_min_s << "\n";
  os << "silence_max_s = " << corpus.silence_max_s << "\n";
  os << "sample_rate = " << corpus.sample_rate << "\n";
  os << "train_utterances = " << corpus.train_utterances << "\n";
  os << "dev_utterances = " << corpus.dev_utterances << "\n";
  os << "test_utterances = " << corpus.test_utterances << "\n";
  os << "train_mixtures = " << corpus.train_mixtures << "\n";
  os << "dev_mixtures = " << corpus.dev_mixtures << "\n";
  os << "test_mixtures = " << corpus.test_mixtures << "\n";
  os << "snr_min_db = " << corpus.snr_min_db << "\n";
  os << "snr_max_db = " << corpus.snr_max_db << "\n";
  os << "centroid_margin_hz = " << corpus.centroid_margin_hz << "\n";
  os << "seed = " << corpus.seed << "\n";
  os << "\n[separator]\n";
  os << "N = " << separator.N << "\n";
  os << "L = " << separator.L << "\n";
  os << "B = " << separator.B << "\n";
  os << "H = " << separator.H << "\n";
  os << "P = " << separator.P << "\n";
  os << "X = " << separator.X << "\n";
  os << "R = " << separator.R << "\n";
  os << "S = " << separator.S << "\n";
  os << "norm_eps = " << separator.norm_eps << "\n";
  os << "\n[asr]\n";
  os << "n_mels = " << asr.n_mels << "\n";
  os << "stft_window = " << asr.stft_window << "\n";
  os << "stft_hop = " << asr.stft_hop << "\n";
  os << "conv_channels = " << asr.conv_channels << "\n";
  os << "subsample = " << asr.subsample << "\n";
  os << "hidden = " << asr.hidden << "\n";
  os << "embed_dim = " << asr.embed_dim << "\n";
  os << "lambda = " << asr.lambda << "\n";
  os << "log_eps = " << asr.log_eps << "\n";
  os << "sample_rate = " << asr.sample_rate << "\n";
  os << "\n[plan]\n";
  os << "mode = " << plan.mode << "\n";
  {
    // Resolved alpha/beta after mode presets and overrides.
    const FinetunePlan fp = plan.to_finetune_plan();
    os << "alpha = " << fp.alpha << "\n";
  }
  os << "lambda = " << plan.lambda << "\n";
  os << "perm = " << plan.perm << "\n";
  os << "tbptt_chunk = " << (plan.tbptt_chunk > 0 ? std::to_string(plan.tbptt_chunk) : "off")
     << "\n";
  os << "tbptt_edge_avoid = " << (plan.tbptt_edge_avoid ? "true" : "false") << "\n";
  os << "optimizer = " << plan.optimizer << "\n";
  os << "lr = " << plan.lr << "\n";
  os << "adam_beta1 = " << plan.adam_beta1 << "\n";
  os << "adam_beta2 = " << plan.adam_beta2 << "\n";
  os << "adam_eps = " << plan.adam_eps << "\n";
  os << "adadelta_rho = " << plan.adadelta_rho << "\n";
  os << "adadelta_eps = " << plan.adadelta_eps << "\n";
  os << "batch_size = " << plan.batch_size << "\n";
  os << "steps = " << plan.steps << "\n";
  os << "clip_norm = " << plan.clip_norm << "\n";
  os << "seed = " << plan.seed << "\n";
  os << "sep_epochs = " << plan.sep_epochs << "\n";
  os << "sep_crop_samples = " << plan.sep_crop_samples << "\n";
  os << "sep_batch_size = " << plan.sep_batch_size << "\n";
  os << "sep_lr = " << plan.sep_lr << "\n";
  os << "sep_optimizer = " << plan.sep_optimizer << "\n";
  os << "asr_epochs = " << plan.asr_epochs << "\n";
  os << "asr_batch_size = " << plan.asr_batch_size << "\n";
  os << "asr_lr = " << plan.asr_lr << "\n";
  os << "asr_optimizer = " << plan.asr_optimizer << "\n";
  os << "\n[paths]\n";
  os << "work_dir = " << paths.work_dir << "\n";
  if (!paths.corpus_dir.empty()) os << "corpus_dir = " << paths.corpus_dir << "\n";
  if (!paths.vocab.empty()) os << "vocab = " << paths.vocab << "\n";
  if (!paths.train_manifest.empty()) os << "train_manifest = " << paths.train_manifest << "\n";
  if (!paths.dev_manifest.empty()) os << "dev_manifest = " << paths.dev_manifest << "\n";
  if (!paths.test_manifest.empty()) os << "test_manifest = " << paths.test_manifest << "\n";
  if (!paths.clean_train_manifest.empty()) {
    os << "clean_train_manifest = " << paths.clean_train_manifest << "\n";
  }
  if (!paths.clean_dev_manifest.empty()) {
    os << "clean_dev_manifest = " << paths.clean_dev_manifest << "\n";
  }
  if (!paths.checkpoint_fe.empty()) os << "checkpoint_fe = " << paths.checkpoint_fe << "\n";
  if (!paths.checkpoint_asr.empty()) os << "checkpoint_asr = " << paths.checkpoint_asr << "\n";
  return os.str();
}

}  // namespace sepasr
