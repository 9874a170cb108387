// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Command-line entry point: corpus generation, pre-training, joint
// fine-tuning, evaluation, gradient checks and run comparison reports.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sepasr/checkpoint.hpp"
#include "sepasr/config.hpp"
#include "sepasr/gradcheck.hpp"
#include "sepasr/metrics.hpp"
#include "sepasr/random.hpp"
#include "sepasr/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sepasr;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string run_dir_override;
  std::string work_dir_override;
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;
};

ExperimentConfig load_config(const CommonArgs& args) {
  ExperimentConfig cfg = args.config_path.empty()
                             ? ExperimentConfig::from_ini(IniFile{})
                             : ExperimentConfig::from_file(args.config_path);
  if (!args.work_dir_override.empty()) cfg.paths.work_dir = args.work_dir_override;
  if (args.has_seed_override) cfg.plan.seed = args.seed_override;
  return cfg;
}

// Timestamped run directory <work>/<name>-<stamp>[-k]; --run-dir overrides.
std::string make_run_dir(const ExperimentConfig& cfg, const CommonArgs& args,
                         const std::string& name) {
  if (!args.run_dir_override.empty()) {
    fs::create_directories(args.run_dir_override);
    return args.run_dir_override;
  }
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream stamp;
  stamp << std::put_time(&tm, "%Y%m%d-%H%M%S");
  fs::path base = fs::path(cfg.paths.work_dir) / (name + "-" + stamp.str());
  fs::path dir = base;
  for (int k = 1; fs::exists(dir); ++k) {
    dir = base.string() + "-" + std::to_string(k);
  }
  fs::create_directories(dir);
  return dir.string();
}

void write_resolved_config(const ExperimentConfig& cfg, const std::string& run_dir) {
  std::ofstream os(fs::path(run_dir) / "resolved.ini");
  os << cfg.resolved_ini();
}

void write_summary(const std::string& run_dir, const json& summary) {
  std::ofstream os(fs::path(run_dir) / "summary.json");
  os << summary.dump(2) << "\n";
}

StepLogFn jsonl_logger(std::ofstream& os) {
  return [&os](const std::string& line) { os << line << "\n"; };
}

std::string required(const std::string& value, const std::string& flag) {
  if (value.empty()) fail(Error::Kind::Usage, "missing required value: ", flag);
  return value;
}

Vocabulary load_vocab(const std::string& flag_value, const ExperimentConfig& cfg) {
  const std::string path = !flag_value.empty() ? flag_value : cfg.paths.vocab;
  return Vocabulary::load(required(path, "--vocab (or [paths] vocab)"));
}

int cmd_datagen(const CommonArgs& common, const std::string& out_dir) {
  ExperimentConfig cfg = load_config(common);
  const std::string out = required(out_dir, "--out");
  generate_toneword_corpus(cfg.corpus, out);
  ExperimentConfig resolved = cfg;
  resolved.paths.corpus_dir = out;
  write_resolved_config(resolved, out);
  CorpusLayout layout(out);
  verify_mixture_manifest(layout.mix_manifest(MixVariant::Min, "train"));
  verify_mixture_manifest(layout.mix_manifest(MixVariant::Max, "train"));
  json summary{{"subcommand", "datagen"},
               {"out", out},
               {"vocab", layout.vocab_file},
               {"train_mixtures", cfg.corpus.train_mixtures},
               {"dev_mixtures", cfg.corpus.dev_mixtures},
               {"test_mixtures", cfg.corpus.test_mixtures}};
  write_summary(out, summary);
  std::cout << "datagen: corpus written to " << out << "\n";
  return 0;
}

int cmd_train_separator(const CommonArgs& common, const std::string& data,
                        const std::string& dev, const std::string& vocab_flag) {
  ExperimentConfig cfg = load_config(common);
  const std::string run_dir = make_run_dir(cfg, common, "train-separator");
  const std::string train_manifest =
      required(!data.empty() ? data : cfg.paths.train_manifest, "--data");
  cfg.paths.train_manifest = train_manifest;
  write_resolved_config(cfg, run_dir);

  const Vocabulary vocab = load_vocab(vocab_flag, cfg);
  MixtureDataset train = load_mixture_dataset(train_manifest, vocab);
  MixtureDataset dev_set;
  const std::string dev_manifest = !dev.empty() ? dev : cfg.paths.dev_manifest;
  if (!dev_manifest.empty()) dev_set = load_mixture_dataset(dev_manifest, vocab);

  SeparatorModel model(cfg.separator, derive_seed(cfg.plan.seed, "separator-model"));
  std::ofstream log_os(fs::path(run_dir) / "log.jsonl");
  SeparatorTrainResult result =
      pretrain_separator(train, dev_set.size() > 0 ? &dev_set : nullptr, model,
                         cfg.plan.to_separator_options(), jsonl_logger(log_os));

  const std::string ckpt = (fs::path(run_dir) / "sep.ckpt").string();
  auto params = model.parameters();
  save_checkpoint(ckpt, params);
  json summary{{"subcommand", "train-separator"},
               {"checkpoint", ckpt},
               {"steps", result.step_si_snr.size()},
               {"skipped_short", result.skipped_short},
               {"final_train_si_snr",
                result.step_si_snr.empty() ? 0.0 : result.step_si_snr.back()},
               {"dev_si_snr", result.dev_si_snr}};
  write_summary(run_dir, summary);
  std::cout << "train-separator: " << result.step_si_snr.size() << " steps, checkpoint "
            << ckpt << "\n";
  if (!result.dev_si_snr.empty()) {
    std::cout << "dev SI-SNR (last epoch): " << result.dev_si_snr.back() << " dB\n";
  }
  return 0;
}

int cmd_train_asr(const CommonArgs& common, const std::string& data, const std::string& dev,
                  const std::string& vocab_flag) {
  ExperimentConfig cfg = load_config(common);
  const std::string run_dir = make_run_dir(cfg, common, "train-asr");
  const std::string train_manifest =
      required(!data.empty() ? data : cfg.paths.clean_train_manifest, "--data");
  cfg.paths.clean_train_manifest = train_manifest;
  write_resolved_config(cfg, run_dir);

  const Vocabulary vocab = load_vocab(vocab_flag, cfg);
  CleanDataset train = load_clean_dataset(train_manifest, vocab);
  CleanDataset dev_set;
  const std::string dev_manifest = !dev.empty() ? dev : cfg.paths.clean_dev_manifest;
  if (!dev_manifest.empty()) dev_set = load_clean_dataset(dev_manifest, vocab);

  AsrModel model(cfg.asr, vocab, derive_seed(cfg.plan.seed, "asr-model"));
  std::ofstream log_os(fs::path(run_dir) / "log.jsonl");
  AsrTrainResult result = pretrain_asr(train, dev_set.size() > 0 ? &dev_set : nullptr, model,
                                       cfg.plan.to_asr_options(), jsonl_logger(log_os));

  const std::string ckpt = (fs::path(run_dir) / "asr.ckpt").string();
  auto params = model.parameters();
  save_checkpoint(ckpt, params);
  json summary{{"subcommand", "train-asr"},
               {"checkpoint", ckpt},
               {"steps", result.step_loss.size()},
               {"final_train_loss", result.step_loss.empty() ? 0.0 : result.step_loss.back()},
               {"dev_wer", result.dev_wer}};
  write_summary(run_dir, summary);
  std::cout << "train-asr: " << result.step_loss.size() << " steps, checkpoint " << ckpt
            << "\n";
  if (!result.dev_wer.empty()) {
    std::cout << "dev WER (last epoch): " << result.dev_wer.back() << "\n";
  }
  return 0;
}

int cmd_finetune(const CommonArgs& common, const std::string& data,
                 const std::string& vocab_flag, const std::string& ckpt_fe,
                 const std::string& ckpt_asr, const std::string& mode_flag,
                 const std::string& tbptt_flag, const std::string& perm_flag) {
  ExperimentConfig cfg = load_config(common);
  if (!mode_flag.empty()) cfg.plan.mode = mode_flag;
  if (!perm_flag.empty()) cfg.plan.perm = perm_flag;
  if (!tbptt_flag.empty()) {
    cfg.plan.tbptt_chunk = tbptt_flag == "off" ? 0 : std::stoll(tbptt_flag);
  }
  const std::string run_dir = make_run_dir(cfg, common, "finetune-" + cfg.plan.mode);
  const std::string train_manifest =
      required(!data.empty() ? data : cfg.paths.train_manifest, "--data");
  const std::string fe = required(!ckpt_fe.empty() ? ckpt_fe : cfg.paths.checkpoint_fe,
                                  "--checkpoint-fe");
  const std::string be = required(!ckpt_asr.empty() ? ckpt_asr : cfg.paths.checkpoint_asr,
                                  "--checkpoint-asr");
  cfg.paths.train_manifest = train_manifest;
  cfg.paths.checkpoint_fe = fe;
  cfg.paths.checkpoint_asr = be;
  write_resolved_config(cfg, run_dir);

  const Vocabulary vocab = load_vocab(vocab_flag, cfg);
  MixtureDataset train = load_mixture_dataset(train_manifest, vocab);

  SeparatorModel sep(cfg.separator, derive_seed(cfg.plan.seed, "separator-model"));
  AsrModel asr(cfg.asr, vocab, derive_seed(cfg.plan.seed, "asr-model"));
  {
    auto params = sep.parameters();
    load_checkpoint(fe, params);
  }
  {
    auto params = asr.parameters();
    load_checkpoint(be, params);
  }

  const FinetunePlan plan = cfg.plan.to_finetune_plan();
  std::ofstream log_os(fs::path(run_dir) / "log.jsonl");
  FinetuneResult result = finetune(train, sep, asr, plan, jsonl_logger(log_os));

  const std::string out_fe = (fs::path(run_dir) / "sep.ckpt").string();
  const std::string out_be = (fs::path(run_dir) / "asr.ckpt").string();
  {
    auto params = sep.parameters();
    save_checkpoint(out_fe, params);
  }
  {
    auto params = asr.parameters();
    save_checkpoint(out_be, params);
  }
  const LossReport& last = result.reports.back();
  json summary{{"subcommand", "finetune"},
               {"plan",
                {{"mode", cfg.plan.mode},
                 {"alpha", plan.alpha},
                 {"beta", plan.beta},
                 {"lambda", plan.lambda},
                 {"perm", cfg.plan.perm},
                 {"tbptt_chunk", plan.tbptt.enabled ? plan.tbptt.chunk_samples : 0},
                 {"steps", plan.steps}}},
               {"checkpoint_fe", out_fe},
               {"checkpoint_asr", out_be},
               {"final", json::parse(last.to_json())}};
  write_summary(run_dir, summary);
  std::cout << "finetune mode " << cfg.plan.mode << ": " << result.reports.size()
            << " steps, L=" << last.l_total << ", checkpoints in " << run_dir << "\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& common, const std::string& data,
                 const std::string& vocab_flag, const std::string& ckpt_fe,
                 const std::string& ckpt_asr, const std::string& label, int limit) {
  ExperimentConfig cfg = load_config(common);
  const std::string run_dir = make_run_dir(cfg, common, "evaluate");
  const std::string manifest =
      required(!data.empty() ? data : cfg.paths.test_manifest, "--data");
  const std::string fe = required(!ckpt_fe.empty() ? ckpt_fe : cfg.paths.checkpoint_fe,
                                  "--checkpoint-fe");
  const std::string be = required(!ckpt_asr.empty() ? ckpt_asr : cfg.paths.checkpoint_asr,
                                  "--checkpoint-asr");
  cfg.paths.test_manifest = manifest;
  cfg.paths.checkpoint_fe = fe;
  cfg.paths.checkpoint_asr = be;
  write_resolved_config(cfg, run_dir);

  const Vocabulary vocab = load_vocab(vocab_flag, cfg);
  MixtureDataset test = load_mixture_dataset(manifest, vocab);
  SeparatorModel sep(cfg.separator, derive_seed(cfg.plan.seed, "separator-model"));
  AsrModel asr(cfg.asr, vocab, derive_seed(cfg.plan.seed, "asr-model"));
  {
    auto params = sep.parameters();
    load_checkpoint(fe, params);
  }
  {
    auto params = asr.parameters();
    load_checkpoint(be, params);
  }

  EvaluateOptions opts;
  opts.limit = limit;
  MetricsReport report = evaluate(sep, asr, test, opts);

  std::ofstream metrics_os(fs::path(run_dir) / "metrics.jsonl");
  for (const auto& em : report.examples) {
    json j{{"id", em.id},       {"wer", em.wer},          {"cer", em.cer},
           {"sdr_db", em.sdr_db}, {"si_snr_db", em.si_snr_db}, {"error", em.error}};
    metrics_os << j.dump() << "\n";
  }
  const std::string table = report.to_table();
  std::ofstream(fs::path(run_dir) / "report.txt") << table;
  json summary{{"subcommand", "evaluate"},
               {"label", label},
               {"data", manifest},
               {"metrics",
                {{"wer", report.wer},
                 {"cer", report.cer},
                 {"sdr_db", report.sdr_db},
                 {"si_snr_db", report.si_snr_db},
                 {"evaluated", report.evaluated},
                 {"failed", report.failed}}}};
  write_summary(run_dir, summary);
  std::cout << table;
  std::cout << "evaluate: report written to " << run_dir << "\n";
  return 0;
}

int cmd_gradcheck() {
  const GradcheckResult result = run_gradcheck(std::cout);
  return result.ok() ? 0 : 1;
}

int cmd_report(const std::vector<std::string>& runs) {
  if (runs.empty()) fail(Error::Kind::Usage, "report: no run directories given");
  struct Row {
    std::string name;
    std::string ft_fe = "-";
    std::string ft_be = "-";
    std::string aux = "-";
    std::string cer = "-";
    std::string wer = "-";
    std::string sdr = "-";
    std::string sisnr = "-";
  };
  std::vector<Row> rows;
  for (const auto& dir : runs) {
    const fs::path file = fs::path(dir) / "summary.json";
    if (!fs::exists(file)) fail(Error::Kind::Io, "no summary.json in run directory: ", dir);
    std::ifstream is(file);
    json j;
    is >> j;
    Row row;
    row.name = fs::path(dir).filename().string();
    if (j.contains("label") && j["label"].is_string() && !j["label"].get<std::string>().empty()) {
      row.name = j["label"].get<std::string>();
    }
    if (j.contains("plan")) {
      const auto& plan = j["plan"];
      const std::string mode = plan.value("mode", "");
      if (mode == "a") {
        row.ft_be = "yes";
        row.ft_fe = "no";
      } else if (mode == "b") {
        row.ft_fe = "yes";
        row.ft_be = "no";
      } else if (mode == "c") {
        row.ft_fe = row.ft_be = "yes";
      }
      row.aux = plan.value("alpha", 0.0) > 0.0 ? "yes" : "no";
    }
    auto fmt = [](double v) {
      std::ostringstream os;
      os << std::fixed << std::setprecision(3) << v;
      return os.str();
    };
    if (j.contains("metrics")) {
      const auto& m = j["metrics"];
      row.cer = fmt(m.value("cer", 0.0));
      row.wer = fmt(m.value("wer", 0.0));
      row.sdr = fmt(m.value("sdr_db", 0.0));
      row.sisnr = fmt(m.value("si_snr_db", 0.0));
    }
    rows.push_back(std::move(row));
  }
  std::cout << std::left << std::setw(28) << "run" << std::setw(14) << "fine-tune FE"
            << std::setw(14) << "fine-tune BE" << std::setw(12) << "aux SI-SNR" << std::right
            << std::setw(8) << "CER" << std::setw(8) << "WER" << std::setw(10) << "SDR"
            << std::setw(10) << "SI-SNR" << "\n";
  for (const auto& r : rows) {
    std::cout << std::left << std::setw(28) << r.name << std::setw(14) << r.ft_fe
              << std::setw(14) << r.ft_be << std::setw(12) << r.aux << std::right << std::setw(8)
              << r.cer << std::setw(8) << r.wer << std::setw(10) << r.sdr << std::setw(10)
              << r.sisnr << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sepasr: joint time-domain separation and speech recognition toolkit"};
  app.require_subcommand(1);

  CommonArgs common;
  app.add_option("-c,--config", common.config_path, "experiment config (INI)");
  app.add_option("--run-dir", common.run_dir_override, "exact run directory (default: timestamped)");
  app.add_option("--work-dir", common.work_dir_override,
                 "work directory root (default: $SEPASR_WORKDIR or 'runs')");
  app.add_option("--seed", common.seed_override, "override [plan] seed")
      ->each([&common](const std::string&) { common.has_seed_override = true; });

  std::string out_dir, data, dev, vocab, ckpt_fe, ckpt_asr, mode, tbptt, perm, label;
  int limit = 0;
  std::vector<std::string> runs;

  auto* datagen = app.add_subcommand("datagen", "generate the synthetic tone-word corpus");
  datagen->add_option("--out", out_dir, "output corpus directory")->required();

  auto* tsep = app.add_subcommand("train-separator", "pre-train the separator (min mixtures)");
  tsep->add_option("--data", data, "training mixture manifest (min variant)");
  tsep->add_option("--dev", dev, "dev mixture manifest");
  tsep->add_option("--vocab", vocab, "vocabulary file");

  auto* tasr = app.add_subcommand("train-asr", "pre-train the recognizer (clean utterances)");
  tasr->add_option("--data", data, "clean training manifest");
  tasr->add_option("--dev", dev, "clean dev manifest");
  tasr->add_option("--vocab", vocab, "vocabulary file");

  auto* ft = app.add_subcommand("finetune", "joint fine-tuning from pre-trained checkpoints");
  ft->add_option("--data", data, "training mixture manifest (max variant)");
  ft->add_option("--vocab", vocab, "vocabulary file");
  ft->add_option("--checkpoint-fe", ckpt_fe, "separator checkpoint");
  ft->add_option("--checkpoint-asr", ckpt_asr, "recognizer checkpoint");
  ft->add_option("--mode", mode, "fine-tuning mode: a | b | c")
      ->check(CLI::IsMember({"a", "b", "c"}));
  ft->add_option("--tbptt-chunk", tbptt, "chunk samples or 'off'");
  ft->add_option("--perm", perm, "assignment criterion: sig | ctc")
      ->check(CLI::IsMember({"sig", "ctc"}));

  auto* ev = app.add_subcommand("evaluate", "evaluate checkpoints on a mixture manifest");
  ev->add_option("--data", data, "mixture manifest (max test)");
  ev->add_option("--vocab", vocab, "vocabulary file");
  ev->add_option("--checkpoint-fe", ckpt_fe, "separator checkpoint");
  ev->add_option("--checkpoint-asr", ckpt_asr, "recognizer checkpoint");
  ev->add_option("--label", label, "row label for report");
  ev->add_option("--limit", limit, "evaluate at most N examples");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient suite");

  auto* rep = app.add_subcommand("report", "comparison table across run directories");
  rep->add_option("--runs", runs, "run directories")->expected(-1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (datagen->parsed()) return cmd_datagen(common, out_dir);
    if (tsep->parsed()) return cmd_train_separator(common, data, dev, vocab);
    if (tasr->parsed()) return cmd_train_asr(common, data, dev, vocab);
    if (ft->parsed()) {
      return cmd_finetune(common, data, vocab, ckpt_fe, ckpt_asr, mode, tbptt, perm);
    }
    if (ev->parsed()) return cmd_evaluate(common, data, vocab, ckpt_fe, ckpt_asr, label, limit);
    if (gc->parsed()) return cmd_gradcheck();
    if (rep->parsed()) return cmd_report(runs);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind_name() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
