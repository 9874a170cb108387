// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef SEPASR_CONFIG_HPP
#define SEPASR_CONFIG_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sepasr/asr.hpp"
#include "sepasr/corpus.hpp"
#include "sepasr/separator.hpp"
#include "sepasr/trainer.hpp"

namespace sepasr {

// INI-style sections of key = value lines; '#' and ';' start comments.
// Parsing preserves nothing it does not understand: consumers reject unknown
// sections and keys by name.
struct IniFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  static IniFile parse_file(const std::string& path);
  static IniFile parse_string(const std::string& text, const std::string& source);
};

struct PathsConfig {
  std::string work_dir = "runs";
  std::string corpus_dir;
  std::string vocab;
  std::string train_manifest;
  std::string dev_manifest;
  std::string test_manifest;
  std::string clean_train_manifest;
  std::string clean_dev_manifest;
  std::string checkpoint_fe;
  std::string checkpoint_asr;
};

struct PlanConfig {
  std::string mode = "c";  // a | b | c
  std::optional<double> alpha_override;
  double lambda = 0.2;
  std::string perm = "sig";  // sig | ctc
  std::int64_t tbptt_chunk = 0;  // 0 = off
  bool tbptt_edge_avoid = false;
  std::string optimizer = "adam";
  double lr = 5e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double adadelta_rho = 0.95;
  double adadelta_eps = 1e-6;
  int batch_size = 4;
  int steps = 100;
  double clip_norm = 5.0;
  std::uint64_t seed = 1234;
  // pretraining
  int sep_epochs = 2;
  std::int64_t sep_crop_samples = 8000;
  int sep_batch_size = 4;
  double sep_lr = 1e-3;
  std::string sep_optimizer = "adam";
  int asr_epochs = 6;
  int asr_batch_size = 4;
  double asr_lr = 2e-3;
  std::string asr_optimizer = "adam";

  FinetunePlan to_finetune_plan() const;
  SeparatorPretrainOptions to_separator_options() const;
  AsrPretrainOptions to_asr_options() const;
};

// Full experiment configuration: [corpus], [separator], [asr], [plan],
// [paths]. Unknown sections or keys are rejected by name; every run writes
// the fully resolved form next to its outputs.
struct ExperimentConfig {
  CorpusConfig corpus;
  SeparatorConfig separator;
  AsrConfig asr;
  PlanConfig plan;
  PathsConfig paths;

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_ini(const IniFile& ini);
  std::string resolved_ini() const;
};

}  // namespace sepasr

#endif  // SEPASR_CONFIG_HPP
