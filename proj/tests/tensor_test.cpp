// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "sepasr/checkpoint.hpp"
#include "sepasr/ops.hpp"
#include "testutil.hpp"

using namespace sepasr;

TEST_SUITE_BEGIN("tensor");

TEST_CASE("backward of sum gives all-ones gradient") {
  Tensor x = Tensor::param({1.0, -2.0, 3.0, 0.5}, {2, 2});
  sum(x).backward();
  for (double g : x.grad()) CHECK(g == doctest::Approx(1.0));
}

TEST_CASE("backward of sum(x*x) gives 2x") {
  Tensor x = Tensor::param({1.0, -2.0, 3.0}, {3});
  sum(mul(x, x)).backward();
  const auto& v = x.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(x.grad()[i] == doctest::Approx(2.0 * v[i]));
  }
}

TEST_CASE("diamond graph accumulates fan-out") {
  Tensor x = Tensor::param({1.5}, {});
  Tensor y = add(x, x);
  y.backward();
  CHECK(x.grad()[0] == doctest::Approx(2.0));
}

TEST_CASE("non-scalar backward root is rejected") {
  Tensor x = Tensor::param({1.0, 2.0}, {2});
  Tensor y = mul(x, x);
  CHECK_THROWS_AS(y.backward(), Error);
}

TEST_CASE("backward twice on the same graph is rejected") {
  Tensor x = Tensor::param({1.0, 2.0}, {2});
  Tensor y = sum(mul(x, x));
  y.backward();
  CHECK_THROWS_AS(y.backward(), Error);
}

TEST_CASE("gradient accumulation is additive until zero_grad") {
  Tensor x = Tensor::param({2.0}, {});
  sum(mul(x, x)).backward();
  CHECK(x.grad()[0] == doctest::Approx(4.0));
  sum(mul(x, x)).backward();
  CHECK(x.grad()[0] == doctest::Approx(8.0));
  x.zero_grad();
  sum(mul(x, x)).backward();
  CHECK(x.grad()[0] == doctest::Approx(4.0));
}

TEST_CASE("retained counter is monotone during forward and zero after release") {
  Recorder& rec = Recorder::instance();
  const std::int64_t baseline = rec.retained_bytes;
  Tensor x = Tensor::param({1.0, 2.0, 3.0, 4.0}, {4});
  std::int64_t prev = rec.retained_bytes;
  Tensor a = mul(x, x);
  CHECK(rec.retained_bytes >= prev);
  prev = rec.retained_bytes;
  Tensor b = sigmoid(a);
  CHECK(rec.retained_bytes >= prev);
  prev = rec.retained_bytes;
  Tensor loss = sum(b);
  CHECK(rec.retained_bytes >= prev);
  CHECK(rec.retained_bytes > baseline);
  loss.backward();
  CHECK(rec.retained_bytes == baseline);
}

TEST_CASE("abandoned graphs release retained bytes on destruction") {
  Recorder& rec = Recorder::instance();
  const std::int64_t baseline = rec.retained_bytes;
  {
    Tensor x = Tensor::param({1.0, 2.0}, {2});
    Tensor y = tanh(mul(x, x));
    CHECK(rec.retained_bytes > baseline);
  }
  CHECK(rec.retained_bytes == baseline);
}

TEST_CASE("no-grad forward retains nothing and records no ops") {
  Recorder& rec = Recorder::instance();
  const std::int64_t baseline = rec.retained_bytes;
  const std::int64_t ops_before = rec.ops_recorded;
  Tensor x = Tensor::param({1.0, 2.0, 3.0}, {3});
  {
    NoGradGuard no_grad;
    Tensor y = sum(sigmoid(mul(x, x)));
    CHECK(rec.retained_bytes == baseline);
    CHECK_FALSE(y.on_grad_path());
  }
  CHECK(rec.ops_recorded == ops_before);
}

TEST_CASE("constants never accumulate gradient") {
  Tensor c = Tensor::constant({1.0, 2.0}, {2});
  Tensor x = Tensor::param({3.0, 4.0}, {2});
  sum(mul(c, x)).backward();
  CHECK_FALSE(c.has_grad());
  CHECK(x.has_grad());
}

TEST_CASE("mutable access on interior nodes is rejected") {
  Tensor x = Tensor::param({1.0}, {});
  Tensor y = mul(x, x);
  CHECK_THROWS_AS(y.mutable_values(), Error);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("checkpoint");

TEST_CASE("checkpoint round-trip is bit-exact") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "sepasr_ckpt_test";
  fs::create_directories(dir);
  const std::string path = (dir / "model.ckpt").string();

  std::mt19937_64 rng(42);
  NamedParams params;
  params.emplace_back("a.weight", Tensor::param(testutil::random_vec(rng, 12), {3, 4}));
  params.emplace_back("b.bias", Tensor::param({1e-300, -0.0, 3.25, 1.0 / 3.0}, {4}));
  save_checkpoint(path, params);

  NamedParams loaded;
  loaded.emplace_back("a.weight", Tensor::param(std::vector<double>(12, 0.0), {3, 4}));
  loaded.emplace_back("b.bias", Tensor::param(std::vector<double>(4, 0.0), {4}));
  load_checkpoint(path, loaded);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& a = params[i].second.values();
    const auto& b = loaded[i].second.values();
    REQUIRE(a.size() == b.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
      CHECK(std::memcmp(&a[j], &b[j], sizeof(double)) == 0);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("checkpoint shape mismatch names the parameter") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "sepasr_ckpt_test2";
  fs::create_directories(dir);
  const std::string path = (dir / "model.ckpt").string();
  NamedParams params;
  params.emplace_back("w", Tensor::param({1.0, 2.0}, {2}));
  save_checkpoint(path, params);

  NamedParams wrong;
  wrong.emplace_back("w", Tensor::param({1.0, 2.0, 3.0}, {3}));
  try {
    load_checkpoint(path, wrong);
    FAIL("expected checkpoint error");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::Checkpoint);
    CHECK(std::string(e.what()).find("w") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("corrupt checkpoint magic is rejected") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "sepasr_ckpt_test3";
  fs::create_directories(dir);
  const std::string path = (dir / "bad.ckpt").string();
  std::ofstream(path) << "not a checkpoint\n";
  NamedParams params;
  params.emplace_back("w", Tensor::param({1.0}, {}));
  CHECK_THROWS_AS(load_checkpoint(path, params), Error);
  fs::remove_all(dir);
}

TEST_SUITE_END();
