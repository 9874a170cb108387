// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepasr/gradcheck.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <random>
#include <vector>

#include "sepasr/asr.hpp"
#include "sepasr/losses.hpp"
#include "sepasr/ops.hpp"
#include "sepasr/random.hpp"
#include "sepasr/separator.hpp"

namespace sepasr {

namespace {

constexpr double kFdStep = 1e-5;

// Builds a scalar from parameter leaves; checked against central differences.
using BuildFn = std::function<Tensor(const std::vector<Tensor>&)>;

struct LeafInit {
  Shape shape;
  std::vector<double> values;
};

double check_once(const BuildFn& f, const std::vector<LeafInit>& init) {
  std::vector<Tensor> leaves;
  leaves.reserve(init.size());
  for (const auto& li : init) leaves.push_back(Tensor::param(li.values, li.shape));
  Tensor y = f(leaves);
  if (y.numel() != 1) fail(Error::Kind::Usage, "gradcheck: build function must return a scalar");
  y.backward();

  auto eval = [&](const std::vector<std::vector<double>>& vals) {
    NoGradGuard no_grad;
    std::vector<Tensor> consts;
    for (std::size_t i = 0; i < init.size(); ++i) {
      consts.push_back(Tensor::constant(vals[i], init[i].shape));
    }
    return f(consts).item();
  };

  std::vector<std::vector<double>> vals;
  for (const auto& li : init) vals.push_back(li.values);

  double worst = 0.0;
  for (std::size_t p = 0; p < init.size(); ++p) {
    const std::vector<double>* grad = leaves[p].has_grad() ? &leaves[p].grad() : nullptr;
    for (std::size_t j = 0; j < vals[p].size(); ++j) {
      const double keep = vals[p][j];
      vals[p][j] = keep + kFdStep;
      const double up = eval(vals);
      vals[p][j] = keep - kFdStep;
      const double down = eval(vals);
      vals[p][j] = keep;
      const double numeric = (up - down) / (2.0 * kFdStep);
      const double analytic = grad != nullptr ? (*grad)[j] : 0.0;
      const double err =
          std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

std::vector<double> draw(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

// Values bounded away from zero, for kinked ops (relu/prelu).
std::vector<double> draw_off_zero(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> mag(0.2, 1.2);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> v(n);
  for (auto& x : v) x = (sign(rng) ? 1.0 : -1.0) * mag(rng);
  return v;
}

struct OpCheck {
  const char* name;
  double tol;
  std::function<double(std::mt19937_64&)> run;  // max rel err for one seed
};

// Weighted sum against fixed random weights turns any output into a scalar
// that exercises every output element.
Tensor weighted(const Tensor& out, std::mt19937_64& rng) {
  std::vector<double> w = draw(rng, static_cast<std::size_t>(out.numel()), -1.0, 1.0);
  return sum(mul(out, Tensor::constant(std::move(w), out.shape())));
}

std::vector<OpCheck> build_suite() {
  std::vector<OpCheck> suite;
  auto add_check = [&suite](const char* name, double tol,
                            std::function<double(std::mt19937_64&)> run) {
    suite.push_back({name, tol, std::move(run)});
  };

  add_check("add", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{3, 4}, draw(rng, 12, -1, 1)}, {{3, 4}, draw(rng, 12, -1, 1)}};
    return check_once(
        [&rng](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(7);
          return weighted(add(p[0], p[1]), wrng);
        },
        init);
  });
  add_check("add_broadcast", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{3, 4}, draw(rng, 12, -1, 1)}, {{4}, draw(rng, 4, -1, 1)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(11);
          return weighted(add(p[0], p[1]), wrng);
        },
        init);
  });
  add_check("add_channel_bias", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{3, 5}, draw(rng, 15, -1, 1)}, {{3}, draw(rng, 3, -1, 1)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(12);
          return weighted(add_channel_bias(p[0], p[1]), wrng);
        },
        init);
  });
  add_check("sub", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{2, 3}, draw(rng, 6, -1, 1)}, {{2, 3}, draw(rng, 6, -1, 1)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(13);
          return weighted(sub(p[0], p[1]), wrng);
        },
        init);
  });
  add_check("mul", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{2, 3}, draw(rng, 6, -1, 1)}, {{2, 3}, draw(rng, 6, -1, 1)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(17);
          return weighted(mul(p[0], p[1]), wrng);
        },
        init);
  });
  add_check("div", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{6}, draw(rng, 6, -1, 1)}, {{6}, draw(rng, 6, 0.5, 2.0)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(19);
          return weighted(div(p[0], p[1]), wrng);
        },
        init);
  });
  add_check("neg_addmul_scalar", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{5}, draw(rng, 5, -1, 1)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(23);
          return weighted(mul_scalar(add_scalar(neg(p[0]), 0.7), 1.3), wrng);
        },
        init);
  });
  add_check("scale", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{5}, draw(rng, 5, -1, 1)}, {{}, draw(rng, 1, 0.5, 1.5)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(29);
          return weighted(scale(p[0], p[1]), wrng);
        },
        init);
  });
  add_check("relu", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{8}, draw_off_zero(rng, 8)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(31);
          return weighted(relu(p[0]), wrng);
        },
        init);
  });
  add_check("prelu", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{8}, draw_off_zero(rng, 8)}, {{}, draw(rng, 1, 0.1, 0.5)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(37);
          return weighted(prelu(p[0], p[1]), wrng);
        },
        init);
  });
  add_check("sigmoid", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{6}, draw(rng, 6, -2, 2)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(41);
          return weighted(sigmoid(p[0]), wrng);
        },
        init);
  });
  add_check("tanh", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{6}, draw(rng, 6, -2, 2)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(43);
          return weighted(tanh(p[0]), wrng);
        },
        init);
  });
  add_check("exp", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{6}, draw(rng, 6, -1, 1)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(47);
          return weighted(exp(p[0]), wrng);
        },
        init);
  });
  add_check("log", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{6}, draw(rng, 6, 0.5, 2.0)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(53);
          return weighted(log(p[0]), wrng);
        },
        init);
  });
  add_check("clamp", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{8}, draw(rng, 8, -1.4, 1.4)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(59);
          return weighted(clamp(p[0], -1.5, 1.5), wrng);
        },
        init);
  });
  add_check("slice_concat", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{3, 6}, draw(rng, 18, -1, 1)}, {{3, 2}, draw(rng, 6, -1, 1)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(61);
          Tensor mid = slice(p[0], 1, 1, 3);
          Tensor cat = concat({mid, p[1]}, 1);
          return weighted(cat, wrng);
        },
        init);
  });
  add_check("reshape_transpose", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{3, 4}, draw(rng, 12, -1, 1)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(67);
          return weighted(reshape(transpose2d(p[0]), {2, 6}), wrng);
        },
        init);
  });
  for (int ta = 0; ta < 2; ++ta) {
    for (int tb = 0; tb < 2; ++tb) {
      static const char* names[4] = {"matmul", "matmul_tb", "matmul_ta", "matmul_ta_tb"};
      const char* name = names[ta * 2 + tb];
      add_check(name, 1e-4, [ta, tb](std::mt19937_64& rng) {
        const Shape sa = ta ? Shape{4, 3} : Shape{3, 4};
        const Shape sb = tb ? Shape{2, 4} : Shape{4, 2};
        std::vector<LeafInit> init = {{sa, draw(rng, 12, -1, 1)}, {sb, draw(rng, 8, -1, 1)}};
        return check_once(
            [ta, tb](const std::vector<Tensor>& p) {
              std::mt19937_64 wrng(71);
              return weighted(matmul(p[0], p[1], ta != 0, tb != 0), wrng);
            },
            init);
      });
    }
  }
  add_check("affine", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{5, 3}, draw(rng, 15, -1, 1)},
                                  {{3, 4}, draw(rng, 12, -1, 1)},
                                  {{4}, draw(rng, 4, -1, 1)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(73);
          return weighted(affine(p[0], p[1], p[2]), wrng);
        },
        init);
  });
  add_check("log_softmax", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{3, 5}, draw(rng, 15, -2, 2)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(79);
          return weighted(log_softmax(p[0]), wrng);
        },
        init);
  });
  add_check("softmax", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{6}, draw(rng, 6, -2, 2)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(83);
          return weighted(softmax(p[0]), wrng);
        },
        init);
  });
  add_check("sum_mean", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{2, 5}, draw(rng, 10, -1, 1)}};
    return check_once(
        [](const std::vector<Tensor>& p) { return add(sum(p[0]), mean(p[0])); }, init);
  });

  struct ConvCase {
    const char* name;
    std::int64_t cin, cout, k, t, stride, dil, pad, groups;
  };
  static const ConvCase conv_cases[] = {
      {"conv1d_plain", 2, 3, 3, 9, 1, 1, 0, 1},
      {"conv1d_stride_pad", 2, 3, 3, 9, 2, 1, 1, 1},
      {"conv1d_dilated", 2, 2, 3, 12, 1, 2, 2, 1},
      {"conv1d_depthwise", 4, 4, 3, 8, 1, 2, 2, 4},
  };
  for (const auto& cc : conv_cases) {
    add_check(cc.name, 1e-4, [cc](std::mt19937_64& rng) {
      std::vector<LeafInit> init = {
          {{cc.cin, cc.t}, draw(rng, static_cast<std::size_t>(cc.cin * cc.t), -1, 1)},
          {{cc.cout, cc.cin / cc.groups, cc.k},
           draw(rng, static_cast<std::size_t>(cc.cout * (cc.cin / cc.groups) * cc.k), -1, 1)}};
      return check_once(
          [cc](const std::vector<Tensor>& p) {
            std::mt19937_64 wrng(89);
            return weighted(conv1d(p[0], p[1], cc.stride, cc.dil, cc.pad, cc.groups), wrng);
          },
          init);
    });
  }
  add_check("conv_transpose1d", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{3, 5}, draw(rng, 15, -1, 1)},
                                  {{3, 2, 4}, draw(rng, 24, -1, 1)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(97);
          return weighted(conv_transpose1d(p[0], p[1], 2), wrng);
        },
        init);
  });
  add_check("global_layer_norm", 1e-4, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{3, 6}, draw(rng, 18, -1, 1)},
                                  {{3}, draw(rng, 3, 0.5, 1.5)},
                                  {{3}, draw(rng, 3, -0.5, 0.5)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          std::mt19937_64 wrng(101);
          return weighted(global_layer_norm(p[0], p[1], p[2], 1e-6), wrng);
        },
        init);
  });
  add_check("si_snr", 1e-3, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{24}, draw(rng, 24, -1, 1)}};
    std::vector<double> ref = draw(rng, 24, -1, 1);
    return check_once(
        [ref](const std::vector<Tensor>& p) {
          return si_snr_t(p[0], Tensor::constant(ref, {24}));
        },
        init);
  });
  add_check("ctc_loss", 1e-3, [](std::mt19937_64& rng) {
    std::vector<LeafInit> init = {{{5, 4}, draw(rng, 20, -1.5, 1.5)}};
    return check_once(
        [](const std::vector<Tensor>& p) {
          return ctc_loss(log_softmax(p[0]), {1, 2}, 0);
        },
        init);
  });
  return suite;
}

struct CompositeCheck {
  const char* name;
  double tol;
  std::function<double(std::uint64_t seed)> run;
};

std::vector<CompositeCheck> build_composites() {
  std::vector<CompositeCheck> suite;

  // logmel gradient w.r.t. the waveform.
  suite.push_back({"logmel_path", 1e-3, [](std::uint64_t seed) {
                     AsrConfig cfg;
                     cfg.n_mels = 6;
                     cfg.stft_window = 16;
                     cfg.stft_hop = 8;
                     cfg.conv_channels = 4;
                     cfg.hidden = 4;
                     cfg.embed_dim = 3;
                     cfg.subsample = 1;
                     AsrModel model(cfg, Vocabulary({"w0", "w1"}), seed);
                     auto rng = make_rng(seed, "logmel-in");
                     std::vector<LeafInit> init = {{{40}, draw(rng, 40, -0.8, 0.8)}};
                     return check_once(
                         [&model](const std::vector<Tensor>& p) {
                           std::mt19937_64 wrng(103);
                           return weighted(model.logmel(p[0]), wrng);
                         },
                         init);
                   }});

  // Attention loss gradient w.r.t. encoder activations.
  suite.push_back({"attention_path", 1e-3, [](std::uint64_t seed) {
                     AsrConfig cfg;
                     cfg.n_mels = 6;
                     cfg.stft_window = 16;
                     cfg.stft_hop = 8;
                     cfg.conv_channels = 4;
                     cfg.hidden = 5;
                     cfg.embed_dim = 3;
                     cfg.subsample = 1;
                     AsrModel model(cfg, Vocabulary({"w0", "w1", "w2"}), seed + 1);
                     auto rng = make_rng(seed, "att-enc");
                     // the zero-initialized output layer would make the loss
                     // constant in enc; randomize it so the path is exercised
                     for (auto& [name, t] : model.parameters()) {
                       if (name == "backend.out.w" || name == "backend.out.b") {
                         for (auto& v : t.mutable_values()) {
                           v = draw(rng, 1, -0.4, 0.4)[0];
                         }
                       }
                     }
                     std::vector<LeafInit> init = {{{4, 5}, draw(rng, 20, -1, 1)}};
                     return check_once(
                         [&model](const std::vector<Tensor>& p) {
                           return model.attention_loss(p[0], {0, 2});
                         },
                         init);
                   }});

  // Full separator with an SI-SNR loss, gradient w.r.t. the encoder kernel
  // and the input (checked through every parameter of a tiny config).
  suite.push_back({"separator_si_snr_path", 1e-3, [](std::uint64_t seed) {
                     SeparatorConfig cfg;
                     cfg.N = 4;
                     cfg.L = 4;
                     cfg.B = 4;
                     cfg.H = 4;
                     cfg.P = 3;
                     cfg.X = 2;
                     cfg.R = 1;
                     cfg.S = 2;
                     SeparatorModel model(cfg, seed + 2);
                     auto rng = make_rng(seed, "sep-in");
                     const std::int64_t t = 24;
                     std::vector<double> mix = draw(rng, static_cast<std::size_t>(t), -0.8, 0.8);
                     std::vector<double> r0 = draw(rng, static_cast<std::size_t>(t), -0.8, 0.8);
                     std::vector<double> r1 = draw(rng, static_cast<std::size_t>(t), -0.8, 0.8);

                     // Treat the model parameters themselves as the checked
                     // leaves by rebuilding the loss as a function of them is
                     // impractical here; instead check w.r.t. the input chain,
                     // which exercises every layer's input gradient.
                     std::vector<LeafInit> init = {{{t}, mix}};
                     return check_once(
                         [&model, r0, r1, t](const std::vector<Tensor>& p) {
                           auto ests = model.forward(p[0]);
                           std::vector<Tensor> refs = {Tensor::constant(r0, {t}),
                                                       Tensor::constant(r1, {t})};
                           return pit_signal_loss(ests, refs).loss;
                         },
                         init);
                   }});
  return suite;
}

}  // namespace

GradcheckResult run_gradcheck(std::ostream& os) {
  const auto t0 = std::chrono::steady_clock::now();
  GradcheckResult result;
  os << std::scientific << std::setprecision(2);

  for (const auto& check : build_suite()) {
    double worst = 0.0;
    for (int s = 0; s < 20; ++s) {
      auto rng = make_rng(0x5eedULL, check.name, static_cast<std::uint64_t>(s));
      worst = std::max(worst, check.run(rng));
    }
    const bool ok = worst < check.tol;
    os << (ok ? "PASS" : "FAIL") << "  " << std::left << std::setw(24) << check.name
       << " max rel err " << worst << " (tol " << check.tol << ", 20 seeds)\n";
    (ok ? result.passed : result.failed)++;
  }
  for (const auto& check : build_composites()) {
    double worst = 0.0;
    for (int s = 0; s < 6; ++s) {
      worst = std::max(worst, check.run(0xc0ffeeULL + static_cast<std::uint64_t>(s)));
    }
    const bool ok = worst < check.tol;
    os << (ok ? "PASS" : "FAIL") << "  " << std::left << std::setw(24) << check.name
       << " max rel err " << worst << " (tol " << check.tol << ", 6 seeds)\n";
    (ok ? result.passed : result.failed)++;
  }

  const auto t1 = std::chrono::steady_clock::now();
  result.seconds = std::chrono::duration<double>(t1 - t0).count();
  os << (result.failed == 0 ? "PASS" : "FAIL") << "  gradcheck suite: " << result.passed
     << " passed, " << result.failed << " failed, " << std::fixed << std::setprecision(2)
     << result.seconds << "s\n";
  return result;
}

}  // namespace sepasr
