#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "shapint/errors.hpp"
#include "shapint/surrogate.hpp"
#include "test_games.hpp"

using namespace shapint;

namespace {

TokenSpace tiny_space(std::uint64_t seed, std::size_t dim = 3) {
  TokenSpace space;
  space.height = 2;
  space.width = 2;
  space.dim = dim;
  SplitMix64 rng(seed);
  space.patches.resize(4);
  for (auto& p : space.patches) {
    p.resize(dim);
    for (double& x : p) x = 2.0 * rng.uniform01() - 1.0;
  }
  space.words.resize(3);
  for (auto& w : space.words) {
    w.resize(dim);
    for (double& x : w) x = 2.0 * rng.uniform01() - 1.0;
  }
  return space;
}

SurrogateInput tiny_input(std::uint64_t seed, std::size_t dim = 3) {
  TokenSpace space = tiny_space(seed, dim);
  Region region;
  region.members = {0, 1};
  return make_token_input(space, region);
}

double batch_loss(const SurrogateParams& params, std::span<const TrainExample> batch,
                  const TrainConfig& cfg) {
  double total = 0.0;
  for (const auto& ex : batch) total += unsil_loss(predict(params, ex.input), ex.target, cfg);
  return total / static_cast<double>(batch.size());
}

}  // namespace

TEST_CASE("zero parameters predict value 0 and sigma 0.5") {
  auto params = surrogate_init(3, FeatureKind::token_level, 4, 1);
  unflatten(params, Vec(flatten(params).size(), 0.0));
  auto pred = predict(params, tiny_input(5));
  CHECK(pred.value == doctest::Approx(0.0));
  CHECK(pred.uncertainty == doctest::Approx(0.5));
}

TEST_CASE("forward pass is deterministic") {
  auto params = surrogate_init(3, FeatureKind::token_level, 8, 2);
  auto input = tiny_input(6);
  auto p1 = predict(params, input);
  auto p2 = predict(params, input);
  CHECK(p1.value == p2.value);
  CHECK(p1.uncertainty == p2.uncertainty);
}

TEST_CASE("sigma stays strictly inside (0,1) over random parameter draws") {
  auto input = tiny_input(7);
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    auto params = surrogate_init(3, FeatureKind::token_level, 4, seed);
    const double sigma = predict(params, input).uncertainty;
    CHECK(sigma > 0.0);
    CHECK(sigma < 1.0);
  }
}

TEST_CASE("attention pooling degenerate cases") {
  TokenSpace space = tiny_space(9);
  // identical patches: pooled context equals the common embedding
  for (auto& p : space.patches) p = {0.3, -0.2, 0.5};
  Region region;
  region.members = {0};
  auto params = surrogate_init(3, FeatureKind::token_level, 4, 3);
  auto input = make_token_input(space, region);
  Vec f = featurize(params, input);
  REQUIRE(f.size() == 9);
  for (std::size_t k = 0; k < 3; ++k) CHECK(f[3 + k] == doctest::Approx(space.patches[0][k]));

  // single word: its context is that word's embedding
  space.words.resize(1);
  input = make_token_input(space, region);
  f = featurize(params, input);
  for (std::size_t k = 0; k < 3; ++k) CHECK(f[6 + k] == doctest::Approx(space.words[0][k]));
}

TEST_CASE("semantics-level features") {
  std::vector<Vec> regions{{1.0, 0.0, 0.0}};
  std::vector<Vec> phrases{{0.0, 1.0, 0.0}};
  auto params = surrogate_init(3, FeatureKind::semantics_level, 4, 4);
  auto input = make_semantics_input(regions, phrases, 0, 0);
  Vec f = featurize(params, input);
  REQUIRE(f.size() == 12);
  // M = N = 1: pooled contexts equal the single representations
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(f[k] == doctest::Approx(regions[0][k]));
    CHECK(f[3 + k] == doctest::Approx(phrases[0][k]));
    CHECK(f[6 + k] == doctest::Approx(regions[0][k]));
    CHECK(f[9 + k] == doctest::Approx(phrases[0][k]));
  }

  // zero embeddings everywhere -> zero features
  std::vector<Vec> z{{0.0, 0.0, 0.0}};
  auto zf = featurize(params, make_semantics_input(z, z, 0, 0));
  for (double x : zf) CHECK(x == doctest::Approx(0.0));

  CHECK_THROWS_AS(make_semantics_input(regions, phrases, 1, 0), std::invalid_argument);
}

TEST_CASE("unsil loss closed forms") {
  TrainConfig cfg;
  CHECK(unsil_loss({1.0, 0.3}, 1.0, cfg) == doctest::Approx(0.3));
  CHECK(unsil_loss({2.0, 0.5}, 1.0, cfg) == doctest::Approx(2.5));
  // with beta1 = beta2 = 1 and error e fixed, L(sigma) is minimized at |e|
  const double e = 0.37;
  const double at_opt = unsil_loss({e, e}, 0.0, cfg);
  for (double sigma : {0.1, 0.2, 0.3, 0.5, 0.7, 0.9})
    if (std::fabs(sigma - e) > 1e-3) CHECK(unsil_loss({e, sigma}, 0.0, cfg) > at_opt);
  CHECK_THROWS_AS(unsil_loss({0.0, 1.5}, 0.0, cfg), std::invalid_argument);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  auto params = surrogate_init(3, FeatureKind::token_level, 4, 11);
  const Vec before = flatten(params);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  std::vector<TrainExample> batch{{tiny_input(1), 0.5}};
  train_step(params, batch, cfg);
  CHECK(flatten(params) == before);
}

TEST_CASE("analytic gradients match central finite differences") {
  for (std::uint64_t trial = 0; trial < 4; ++trial) {
    auto params = surrogate_init(3, FeatureKind::token_level, 4, 100 + trial);
    std::vector<TrainExample> batch{{tiny_input(trial), 0.4},
                                    {tiny_input(trial + 50), -0.2}};
    TrainConfig cfg;
    cfg.learning_rate = 1.0;  // so the update equals the gradient

    auto updated = params;
    train_step(updated, batch, cfg);
    const Vec before = flatten(params);
    const Vec after = flatten(updated);

    const double step = 1e-5;
    for (std::size_t k = 0; k < before.size(); k += 7) {
      Vec bumped = before;
      bumped[k] += step;
      auto plus = params;
      unflatten(plus, bumped);
      bumped[k] -= 2.0 * step;
      auto minus = params;
      unflatten(minus, bumped);
      const double fd = (batch_loss(plus, batch, cfg) - batch_loss(minus, batch, cfg)) /
                        (2.0 * step);
      const double analytic = before[k] - after[k];
      const double scale = std::max({std::fabs(fd), std::fabs(analytic), 1e-6});
      CHECK(std::fabs(fd - analytic) / scale < 1e-4);
    }
  }
}

TEST_CASE("training reduces prediction error on a fixed table") {
  auto params = surrogate_init(3, FeatureKind::token_level, 8, 13);
  std::vector<TrainExample> table;
  for (std::uint64_t k = 0; k < 8; ++k)
    table.push_back({tiny_input(200 + k), 0.5 * testgames::hashed_unit(3, k)});

  auto mse = [&](const SurrogateParams& p) {
    double total = 0.0;
    for (const auto& ex : table) {
      const double err = predict(p, ex.input).value - ex.target;
      total += err * err;
    }
    return total / static_cast<double>(table.size());
  };

  const double initial = mse(params);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  for (int step = 0; step < 500; ++step) train_step(params, table, cfg);
  CHECK(mse(params) < initial);
}

TEST_CASE("hybrid estimator: warm-up always samples and trains") {
  auto game = testgames::random_game(7, 31);
  Coalition s({0, 1}, 7);
  TokenSpace space = tiny_space(77);
  Region region;
  region.members = {0, 1};
  auto input = make_token_input(space, region);

  auto params = surrogate_init(3, FeatureKind::token_level, 4, 5);
  TrainConfig cfg;
  cfg.warmup_iterations = 5;
  SamplingConfig scfg{8, 3, 1};
  SplitMix64 gate(1);
  for (std::uint64_t it = 0; it < cfg.warmup_iterations; ++it) {
    const Vec before = flatten(params);
    auto est = hybrid_estimate(game, s, input, params, cfg, scfg, gate, it);
    CHECK(est.method == EstimateMethod::sampled);
    CHECK(est.evals_used == 8 * 4);
    CHECK(flatten(params) != before);
  }
}

TEST_CASE("gating probability equals sigma") {
  auto game = testgames::random_game(7, 32);
  Coalition s({0, 1}, 7);
  TokenSpace space = tiny_space(78);
  Region region;
  region.members = {0, 1};
  auto input = make_token_input(space, region);

  // pin sigma = 0.25: zero uncertainty head with bias logit(0.25)
  auto params = surrogate_init(3, FeatureKind::token_level, 4, 6);
  params.uncertainty_head.w1.a.assign(params.uncertainty_head.w1.a.size(), 0.0);
  params.uncertainty_head.b1.assign(params.uncertainty_head.b1.size(), 0.0);
  params.uncertainty_head.w2.a.assign(params.uncertainty_head.w2.a.size(), 0.0);
  params.uncertainty_head.b2.assign(params.uncertainty_head.b2.size(), 0.0);
  params.uncertainty_head.w3.assign(params.uncertainty_head.w3.size(), 0.0);
  params.uncertainty_head.b3 = std::log(0.25 / 0.75);
  CHECK(predict(params, input).uncertainty == doctest::Approx(0.25));

  TrainConfig cfg;
  cfg.warmup_iterations = 1;
  SamplingConfig scfg{1, 3, 1};
  SplitMix64 gate(42);
  HybridOptions options;
  options.freeze_training = true;

  const int calls = 10000;
  int sampled = 0;
  for (int it = 0; it < calls; ++it)
    if (hybrid_estimate(game, s, input, params, cfg, scfg, gate, cfg.warmup_iterations + it,
                        options)
            .method == EstimateMethod::sampled)
      ++sampled;
  const double rate = static_cast<double>(sampled) / calls;
  CHECK(rate > 0.23);
  CHECK(rate < 0.27);
}

TEST_CASE("hybrid estimator respects force-sampling") {
  auto game = testgames::random_game(7, 33);
  Coalition s({0, 1}, 7);
  TokenSpace space = tiny_space(79);
  Region region;
  region.members = {0, 1};
  auto input = make_token_input(space, region);
  auto params = surrogate_init(3, FeatureKind::token_level, 4, 7);
  TrainConfig cfg;
  cfg.warmup_iterations = 1;
  SamplingConfig scfg{4, 3, 1};
  SplitMix64 gate(9);
  HybridOptions options;
  options.force_sampling = true;
  for (int it = 0; it < 20; ++it) {
    auto est = hybrid_estimate(game, s, input, params, cfg, scfg, gate, 100 + it, options);
    CHECK(est.method == EstimateMethod::sampled);
  }
}

TEST_CASE("checkpoint save/load round-trip") {
  auto params = surrogate_init(4, FeatureKind::semantics_level, 6, 17);
  const auto path = std::filesystem::temp_directory_path() / "shapint_surrogate_test.txt";
  save_surrogate(params, path.string());
  auto loaded = load_surrogate(path.string());
  CHECK(loaded.dim == params.dim);
  CHECK(loaded.hidden == params.hidden);
  CHECK(loaded.kind == params.kind);
  CHECK(flatten(loaded) == flatten(params));
  std::filesystem::remove(path);
}
