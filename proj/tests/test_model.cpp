#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "fedhumor/errors.hpp"
#include "fedhumor/features.hpp"
#include "fedhumor/kernels.hpp"
#include "fedhumor/model.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace fedhumor;
using namespace fedhumor::testing;

namespace {

std::vector<LabeledExample> batch_of(const FeatureMatrix& xs, const std::vector<int>& ys) {
  std::vector<LabeledExample> b;
  for (std::size_t i = 0; i < xs.rows(); ++i) b.push_back({xs.row(i), ys[i]});
  return b;
}

double& param_at(ModelParams& p, std::size_t k) {
  return k < p.weights.size() ? p.weights[k] : p.bias[k - p.weights.size()];
}

}  // namespace

TEST_CASE("softmax is stable for large arguments") {
  auto q = softmax({1000.0, 1000.0});
  CHECK(q[0] == 0.5);
  q = softmax({-1e300, 0.0});
  CHECK(q[1] == 1.0);
  q = softmax({710.0, 0.0});
  CHECK(std::isfinite(q[0]));
  CHECK(q[0] + q[1] == doctest::Approx(1.0));
}

TEST_CASE("forward with bias only") {
  ModelParams p = ModelParams::zeros(3);
  p.bias = {0.0, std::log(3.0)};
  const std::vector<double> x{0.3, -0.2, 0.9};
  const auto prob = forward(p, x);
  CHECK(prob[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(prob[1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(forward(p, std::vector<double>{1.0}), DomainError);
  p.weights[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(forward(p, x), NumericError);
}

TEST_CASE("training transform worked example") {
  const auto q = scale_train({0.1, 0.9}, {0.3, 0.7}, 1.0);
  CHECK(q[1] == doctest::Approx(0.7215937546003562).epsilon(1e-12));
  CHECK(q[0] == doctest::Approx(0.27840624539964376).epsilon(1e-12));
  CHECK(std::abs(q[1] - 0.72) < 0.005);
}

TEST_CASE("inference transform closed forms") {
  auto q = scale_infer({0.5, 0.5}, {0.2, 0.8}, 1.0);
  CHECK(q[0] == doctest::Approx(0.425557483188341).epsilon(1e-12));
  CHECK(q[1] == doctest::Approx(0.574442516811659).epsilon(1e-12));
  q = scale_infer({0.9, 0.1}, {0.5, 0.5}, 1.0);
  CHECK(q[0] == doctest::Approx(0.598687660112452).epsilon(1e-12));
  CHECK(argmax(q) == 0);
}

TEST_CASE("transforms: beta zero and symmetric inputs") {
  const Probabilities p{0.37, 0.63};
  CHECK(scale_train(p, {0.2, 0.8}, 0.0) == softmax({0.37, 0.63}));
  CHECK(scale_infer(p, {0.2, 0.8}, 0.0) == softmax({0.37, 0.63}));
  for (double beta : {0.0, 0.5, 1.0, 2.0}) {
    CHECK(scale_train({0.5, 0.5}, {0.5, 0.5}, beta) == Probabilities{0.5, 0.5});
    CHECK(scale_infer({0.5, 0.5}, {0.5, 0.5}, beta) == Probabilities{0.5, 0.5});
  }
  CHECK_THROWS_AS(scale_train(p, {0.0, 1.0}, 1.0), DomainError);
  CHECK_THROWS_AS(scale_infer(p, {0.5, 0.5}, -1.0), DomainError);
}

TEST_CASE("argmax ties go to class zero") {
  CHECK(argmax({0.5, 0.5}) == 0);
  CHECK(argmax({0.4, 0.6}) == 1);
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> prior(0.1, 0.9), beta_dist(0.0, 2.0);
  std::uniform_int_distribution<int> rows_dist(1, 6), label(0, 1);
  const double h = 1e-5;
  for (LossKind kind : {LossKind::scaled_nll, LossKind::scaled_literal, LossKind::plain_nll}) {
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
      const std::size_t dim = 12;
      const auto xs = random_features(rows_dist(rng), dim, rng);
      std::vector<int> ys(xs.rows());
      for (auto& y : ys) y = label(rng);
      auto params = random_params(dim, rng, 0.7);
      const double pp = prior(rng);
      const LossConfig cfg{kind, {1.0 - pp, pp}, beta_dist(rng)};

      const auto batch = batch_of(xs, ys);
      const auto lg = loss_and_grad(params, batch, cfg);
      CHECK(std::abs(lg.loss - (double)oracle_loss(params, xs, ys, kind, cfg.priors, cfg.beta)) < 1e-12);

      const std::size_t n = params.weights.size() + 2;
      ModelParams g = lg.grad;
      for (std::size_t k = 0; k < n; ++k) {
        const double saved = param_at(params, k);
        param_at(params, k) = saved + h;
        const long double up = oracle_loss(params, xs, ys, kind, cfg.priors, cfg.beta);
        param_at(params, k) = saved - h;
        const long double down = oracle_loss(params, xs, ys, kind, cfg.priors, cfg.beta);
        param_at(params, k) = saved;
        const double fd = (double)((up - down) / (2.0L * h));
        const double an = param_at(g, k);
        const double rel = std::abs(an - fd) / std::max(std::abs(an) + std::abs(fd), 1e-6);
        worst = std::max(worst, rel);
      }
    }
    CAPTURE(static_cast<int>(kind));
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("plain loss gradient is p minus one-hot") {
  std::mt19937_64 rng(8);
  const auto xs = random_features(1, 5, rng);
  const auto params = random_params(5, rng);
  const std::vector<LabeledExample> batch{{xs.row(0), 1}};
  const auto lg = loss_and_grad(params, batch, {LossKind::plain_nll, {}, 0.0});
  const auto p = forward(params, xs.row(0));
  CHECK(lg.grad.bias[0] == doctest::Approx(p[0]));
  CHECK(lg.grad.bias[1] == doctest::Approx(p[1] - 1.0));
  CHECK(lg.loss == doctest::Approx(-std::log(p[1])));
}

TEST_CASE("equal priors: beta rescales probabilities, it does not shift them") {
  // Dividing by 0.5^beta multiplies both probabilities by 2^beta before the
  // softmax, so the loss does depend on beta; only the argmax is preserved.
  std::mt19937_64 rng(9);
  const auto xs = random_features(8, 16, rng);
  std::vector<int> ys{0, 1, 1, 0, 1, 0, 0, 1};
  const auto params = random_params(16, rng);
  const auto batch = batch_of(xs, ys);
  for (double beta : {0.0, 1.0, 2.0}) {
    const LossConfig cfg{LossKind::scaled_nll, {0.5, 0.5}, beta};
    CHECK(loss_value(params, batch, cfg) ==
          doctest::Approx((double)oracle_loss(params, xs, ys, cfg.kind, cfg.priors, beta)).epsilon(1e-13));
  }
  CHECK(loss_value(params, batch, {LossKind::scaled_nll, {0.5, 0.5}, 0.0}) !=
        doctest::Approx(loss_value(params, batch, {LossKind::scaled_nll, {0.5, 0.5}, 1.0})));
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    const auto p = forward(params, xs.row(i));
    CHECK(argmax(scale_train(p, {0.5, 0.5}, 1.7)) == argmax(p));
  }
}

TEST_CASE("loss rejects malformed batches") {
  const auto params = ModelParams::zeros(3);
  const std::vector<double> x{1, 2, 3}, short_x{1};
  CHECK_THROWS_AS(loss_and_grad(params, {}, {}), DomainError);
  const std::vector<LabeledExample> bad_label{{x, 2}};
  CHECK_THROWS_AS(loss_and_grad(params, bad_label, {}), DomainError);
  const std::vector<LabeledExample> bad_dim{{short_x, 0}};
  CHECK_THROWS_AS(loss_and_grad(params, bad_dim, {}), DomainError);
}

TEST_CASE("sgd step arithmetic") {
  std::mt19937_64 rng(10);
  const auto zero = ModelParams::zeros(6);
  const auto g1 = random_params(6, rng);
  const auto g2 = random_params(6, rng);
  const auto minus_g = sgd_step(zero, g1, 1.0);
  for (std::size_t i = 0; i < g1.weights.size(); ++i) CHECK(minus_g.weights[i] == -g1.weights[i]);
  CHECK(minus_g.bias[1] == -g1.bias[1]);

  const auto theta0 = random_params(6, rng);
  const auto two = sgd_step(sgd_step(theta0, g1, 0.1), g2, 0.1);
  for (std::size_t i = 0; i < theta0.weights.size(); ++i) {
    CHECK(two.weights[i] == doctest::Approx(theta0.weights[i] - 0.1 * (g1.weights[i] + g2.weights[i])));
  }
  CHECK(sgd_step(theta0, g1, 0.0) == theta0);
  CHECK_THROWS_AS(sgd_step(theta0, g1, -0.1), DomainError);
  CHECK_THROWS_AS(sgd_step(theta0, ModelParams::zeros(5), 0.1), DomainError);
}

TEST_CASE("a small step decreases the loss") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> prior(0.1, 0.9);
  int decreased = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto xs = random_features(10, 20, rng);
    std::vector<int> ys(10);
    for (std::size_t i = 0; i < ys.size(); ++i) ys[i] = static_cast<int>(rng() & 1);
    const auto params = random_params(20, rng, 0.5);
    const double pp = prior(rng);
    const LossConfig cfg{LossKind::scaled_nll, {1.0 - pp, pp}, 1.0};
    const auto batch = batch_of(xs, ys);
    const auto lg = loss_and_grad(params, batch, cfg);
    if (loss_value(sgd_step(params, lg.grad, 1e-3), batch, cfg) < lg.loss) ++decreased;
  }
  CHECK(decreased == 50);
}

TEST_CASE("loss and gradient agree across kernel backends") {
  if (!simd::backend_available(simd::Backend::avx2)) return;
  std::mt19937_64 rng(13);
  const auto xs = random_features(40, 4096, rng);
  std::vector<int> ys(40);
  for (auto& y : ys) y = static_cast<int>(rng() & 1);
  const auto params = random_params(4096, rng, 0.01);
  const auto batch = batch_of(xs, ys);
  const LossConfig cfg{LossKind::scaled_nll, {0.3, 0.7}, 1.0};
  LossAndGrad a, b;
  {
    simd::ScopedBackend s(simd::Backend::scalar);
    a = loss_and_grad(params, batch, cfg);
  }
  {
    simd::ScopedBackend s(simd::Backend::avx2);
    b = loss_and_grad(params, batch, cfg);
  }
  CHECK(std::abs(a.loss - b.loss) < 1e-12);
  CHECK(max_abs_diff(a.grad, b.grad) < 1e-12);
}

TEST_CASE("checkpoint round trip is bit exact") {
  std::mt19937_64 rng(14);
  const auto params = random_params(33, rng);
  std::stringstream buf;
  write_params(buf, params);
  CHECK(buf.str().size() == 4 + 4 + 8 + 8 + 8 * (2 * 33 + 2));
  CHECK(buf.str().substr(0, 4) == "FHMP");
  CHECK(read_params(buf) == params);

  std::string truncated;
  {
    std::stringstream out;
    write_params(out, params);
    truncated = out.str().substr(0, 40);
  }
  std::stringstream in(truncated);
  CHECK_THROWS_AS(read_params(in), IoError);
  std::stringstream junk("JUNKxxxxxxxxxxxxxxxxxxxxxxxx");
  CHECK_THROWS_AS(read_params(junk), IoError);
  CHECK_THROWS_AS(load_params("/nonexistent/fedhumor.bin"), IoError);
}

TEST_CASE("tokenizer") {
  CHECK(tokenize("Royal wedding: Meghan's elbow in detail") ==
        std::vector<std::string>{"royal", "wedding", "meghan's", "elbow", "in", "detail"});
  CHECK(tokenize("2,000 % increase").size() == 3);
  CHECK(tokenize("  ").empty());
  CHECK(tokenize("caf\xc3\xa9!") == std::vector<std::string>{"caf\xc3\xa9"});
}

TEST_CASE("feature vectors") {
  const auto a = featurize("Royal wedding: Meghan's elbow in detail", kDefaultHashSeed);
  CHECK(a.dim() == kDefaultFeatureDim);
  double norm = 0.0;
  for (double v : a.values()) norm += v * v;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(featurize("Royal wedding: Meghan's elbow in detail", kDefaultHashSeed) == a);
  CHECK(featurize("ROYAL wedding meghan's elbow in detail", kDefaultHashSeed) == a);
  CHECK_FALSE(featurize("Royal wedding: Meghan's elbow in detail", 1) == a);

  const auto empty = featurize("", kDefaultHashSeed, 16);
  for (double v : empty.values()) CHECK(v == 0.0);

  // One unigram: a single unit entry.
  const auto one = featurize("word", 5, 64);
  int nonzero = 0;
  for (double v : one.values()) nonzero += v != 0.0;
  CHECK(nonzero == 1);
  CHECK(one[hash_token("word", 5) % 64] == 1.0);
  CHECK_THROWS_AS(featurize("x", 1, 0), DomainError);
}

TEST_CASE("feature matrix is independent of thread count") {
  const auto split = split_with_means(std::vector<double>(57, 1.0));
  const auto one = FeatureMatrix::from_split(split, 256, 3, 1);
  const auto four = FeatureMatrix::from_split(split, 256, 3, 4);
  REQUIRE(one.rows() == 57);
  for (std::size_t r = 0; r < one.rows(); ++r) {
    const auto x = featurize(split.records[r].edited_text, 3, 256);
    for (std::size_t d = 0; d < 256; ++d) {
      CHECK(one.row(r)[d] == x[d]);
      CHECK(four.row(r)[d] == x[d]);
    }
  }
}
