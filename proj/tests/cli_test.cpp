// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// End-to-end exercise of the command-line surface via the built binary.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sepasr/corpus.hpp"

using namespace sepasr;
namespace fs = std::filesystem;

#ifndef SEPASR_CLI_PATH
#define SEPASR_CLI_PATH "sepasr"
#endif

TEST_SUITE_BEGIN("cli");

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SEPASR_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

struct CliFixture {
  fs::path root;
  std::string config;
  std::string corpus;
};

const CliFixture& cli_fixture() {
  static CliFixture fx = [] {
    CliFixture f;
    f.root = fs::temp_directory_path() / "sepasr_cli_test";
    fs::remove_all(f.root);
    fs::create_directories(f.root);
    f.config = (f.root / "exp.ini").string();
    f.corpus = (f.root / "corpus").string();
    std::ofstream(f.config) << R"(
[corpus]
vocab_size = 4
words_min = 1
words_max = 2
train_utterances = 10
dev_utterances = 4
test_utterances = 4
train_mixtures = 4
dev_mixtures = 2
test_mixtures = 2
seed = 21

[separator]
N = 8
L = 16
B = 8
H = 8
P = 3
X = 2
R = 1

[asr]
n_mels = 12
stft_window = 64
stft_hop = 32
conv_channels = 8
subsample = 2
hidden = 8
embed_dim = 6

[plan]
seed = 5
sep_epochs = 1
sep_crop_samples = 512
sep_batch_size = 2
asr_epochs = 1
asr_batch_size = 4
steps = 2
batch_size = 2
)";
    return f;
  }();
  return fx;
}

}  // namespace

TEST_CASE("datagen creates a self-consistent corpus") {
  const CliFixture& fx = cli_fixture();
  REQUIRE(run_cli("-c " + fx.config + " datagen --out " + fx.corpus) == 0);
  CHECK(fs::exists(fs::path(fx.corpus) / "vocab.txt"));
  CHECK(fs::exists(fs::path(fx.corpus) / "resolved.ini"));
  CHECK(fs::exists(fs::path(fx.corpus) / "summary.json"));
  verify_mixture_manifest(CorpusLayout(fx.corpus).mix_manifest(MixVariant::Max, "test"));
}

TEST_CASE("training, finetune, evaluate and report round-trip through run dirs") {
  const CliFixture& fx = cli_fixture();
  const std::string vocab = (fs::path(fx.corpus) / "vocab.txt").string();
  const std::string sep_dir = (fx.root / "run-sep").string();
  const std::string asr_dir = (fx.root / "run-asr").string();
  const std::string ft_dir = (fx.root / "run-ft").string();
  const std::string eval_dir = (fx.root / "run-eval").string();

  REQUIRE(run_cli("-c " + fx.config + " --run-dir " + sep_dir + " train-separator --data " +
                  fx.corpus + "/mix_min_train.jsonl --vocab " + vocab) == 0);
  CHECK(fs::exists(fs::path(sep_dir) / "sep.ckpt"));
  CHECK(fs::exists(fs::path(sep_dir) / "resolved.ini"));
  CHECK(fs::exists(fs::path(sep_dir) / "log.jsonl"));
  CHECK(fs::exists(fs::path(sep_dir) / "summary.json"));

  REQUIRE(run_cli("-c " + fx.config + " --run-dir " + asr_dir + " train-asr --data " +
                  fx.corpus + "/clean_train.jsonl --vocab " + vocab) == 0);

  REQUIRE(run_cli("-c " + fx.config + " --run-dir " + ft_dir + " finetune --data " + fx.corpus +
                  "/mix_max_train.jsonl --vocab " + vocab + " --checkpoint-fe " + sep_dir +
                  "/sep.ckpt --checkpoint-asr " + asr_dir +
                  "/asr.ckpt --mode a --tbptt-chunk off --perm sig") == 0);

  REQUIRE(run_cli("-c " + fx.config + " --run-dir " + eval_dir + " evaluate --data " +
                  fx.corpus + "/mix_max_test.jsonl --vocab " + vocab + " --checkpoint-fe " +
                  ft_dir + "/sep.ckpt --checkpoint-asr " + ft_dir + "/asr.ckpt") == 0);
  CHECK(fs::exists(fs::path(eval_dir) / "metrics.jsonl"));
  CHECK(fs::exists(fs::path(eval_dir) / "report.txt"));

  CHECK(run_cli("report --runs " + ft_dir + " " + eval_dir) == 0);
}

TEST_CASE("re-running evaluation from a run directory alone reproduces metrics") {
  const CliFixture& fx = cli_fixture();
  const std::string vocab = (fs::path(fx.corpus) / "vocab.txt").string();
  const std::string sep_dir = (fx.root / "run-sep").string();
  const std::string asr_dir = (fx.root / "run-asr").string();
  const std::string eval_a = (fx.root / "eval-a").string();
  const std::string eval_b = (fx.root / "eval-b").string();
  for (const auto& dir : {eval_a, eval_b}) {
    REQUIRE(run_cli("-c " + fx.config + " --run-dir " + dir + " evaluate --data " + fx.corpus +
                    "/mix_max_test.jsonl --vocab " + vocab + " --checkpoint-fe " + sep_dir +
                    "/sep.ckpt --checkpoint-asr " + asr_dir + "/asr.ckpt") == 0);
  }
  auto slurp = [](const std::string& p) {
    std::ifstream is(p);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
  };
  CHECK(slurp(eval_a + "/summary.json") == slurp(eval_b + "/summary.json"));
  CHECK(slurp(eval_a + "/metrics.jsonl") == slurp(eval_b + "/metrics.jsonl"));
}

TEST_CASE("unknown config keys and missing files exit nonzero") {
  const CliFixture& fx = cli_fixture();
  const std::string bad = (fx.root / "bad.ini").string();
  std::ofstream(bad) << "[separator]\nnope = 1\n";
  CHECK(run_cli("-c " + bad + " datagen --out " + (fx.root / "x").string()) == 1);
  CHECK(run_cli("-c " + fx.config + " evaluate --data nope.jsonl --vocab " +
                (fs::path(fx.corpus) / "vocab.txt").string() +
                " --checkpoint-fe a --checkpoint-asr b") == 1);
}

TEST_CASE("gradcheck subcommand passes and exits zero") {
  CHECK(run_cli("gradcheck") == 0);
}

TEST_SUITE_END();
