#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "shapint.h"

namespace {

double glove_value(const uint32_t* members, size_t count, void*) {
  bool has2 = false, has01 = false;
  for (size_t k = 0; k < count; ++k) {
    if (members[k] == 2) has2 = true;
    if (members[k] == 0 || members[k] == 1) has01 = true;
  }
  return has2 && has01 ? 1.0 : 0.0;
}

double additive_value(const uint32_t* members, size_t count, void* ctx) {
  const double* weights = static_cast<const double*>(ctx);
  double total = 0.0;
  for (size_t k = 0; k < count; ++k) total += weights[members[k]];
  return total;
}

}  // namespace

TEST_CASE("game handle: exact shapley and eval accounting") {
  si_game* game = si_game_create(3, glove_value, nullptr);
  REQUIRE(game != nullptr);
  CHECK(si_game_universe(game) == 3);

  double value = 0.0;
  uint64_t evals = 0;
  REQUIRE(si_shapley_exact(game, 2, 20, &value, &evals) == SI_OK);
  CHECK(value == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(evals == 8);
  CHECK(si_game_eval_count(game) == 8);

  CHECK(si_shapley_exact(game, 7, 20, &value, &evals) == SI_ERR_INVALID_ARGUMENT);
  CHECK(si_shapley_exact(game, 0, 2, &value, &evals) == SI_ERR_RESOURCE_LIMIT);
  si_game_destroy(game);
}

TEST_CASE("interaction paths agree through the C API") {
  double weights[4] = {1.0, 2.0, 3.0, 4.0};
  si_game* game = si_game_create(4, additive_value, weights);
  const uint32_t members[2] = {1, 3};
  double direct = 1.0, expectation = 2.0;
  REQUIRE(si_interaction_exact(game, members, 2, 20, &direct, nullptr) == SI_OK);
  REQUIRE(si_interaction_expectation_exact(game, members, 2, 20, &expectation, nullptr) ==
          SI_OK);
  CHECK(direct == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(expectation == doctest::Approx(0.0).epsilon(1e-12));

  double pair = 1.0;
  REQUIRE(si_pairwise_interaction_exact(game, 1, 3, 20, &pair, nullptr) == SI_OK);
  CHECK(pair == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(si_pairwise_interaction_exact(game, 1, 1, 20, &pair, nullptr) ==
        SI_ERR_INVALID_ARGUMENT);
  si_game_destroy(game);
}

TEST_CASE("sampling through the C API is deterministic") {
  double weights[3] = {1.0, 2.0, 3.0};
  si_game* game = si_game_create(3, additive_value, weights);
  const uint32_t members[2] = {0, 1};
  double m1 = 0, m2 = 0, v1 = 0, v2 = 0;
  uint64_t e1 = 0;
  REQUIRE(si_sample_interaction(game, members, 2, 100, 5, 1, &m1, &v1, &e1) == SI_OK);
  REQUIRE(si_sample_interaction(game, members, 2, 100, 5, 2, &m2, &v2, nullptr) == SI_OK);
  CHECK(m1 == m2);
  CHECK(v1 == v2);
  CHECK(e1 == 400);
  CHECK(m1 == doctest::Approx(0.0).epsilon(1e-12));

  double shap = 0.0;
  REQUIRE(si_sample_shapley(game, 1, 50, 7, 1, &shap, nullptr, nullptr) == SI_OK);
  CHECK(shap == doctest::Approx(2.0).epsilon(1e-12));
  si_game_destroy(game);
}

TEST_CASE("instability and losses") {
  const double vals[2] = {1.0, -1.0};
  double out = 0.0;
  REQUIRE(si_instability(vals, 2, &out) == SI_OK);
  CHECK(out == doctest::Approx(2.0));
  const double zeros[2] = {0.0, 0.0};
  CHECK(si_instability(zeros, 2, &out) == SI_ERR_DEGENERATE);

  const double conf[2] = {0.5, 0.5};
  REQUIRE(si_loss_tsa(conf, conf, 2, &out) == SI_OK);
  CHECK(out == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const double rn[4] = {0.5, 0.5, 0.5, 0.5};
  REQUIRE(si_loss_fsa(rn, rn, 2, 2, &out) == SI_OK);
  CHECK(out == doctest::Approx(std::log(2.0) / 2.0).epsilon(1e-12));

  const double img[4] = {1.0, 0.0, 0.0, 1.0};
  REQUIRE(si_loss_cmc(img, img, 2, 2, 1.0, &out) == SI_OK);
  CHECK(out == doctest::Approx(2.0 * (std::log(std::exp(1.0) + 1.0) - 1.0)).epsilon(1e-9));

  const double raw[2] = {1.0, 3.0};
  double norm_out[2];
  REQUIRE(si_normalize_interactions(raw, 2, SI_NORM_MINMAX, norm_out) == SI_OK);
  CHECK(norm_out[0] == 0.0);
  CHECK(norm_out[1] == 1.0);
}

TEST_CASE("planted instance handles") {
  si_instance* inst = si_instance_planted(11, 3, 3, 4, 6, 1, 0.1);
  REQUIRE(inst != nullptr);
  CHECK(si_instance_universe(inst) == 13);
  CHECK(si_instance_num_patches(inst) == 9);
  CHECK(si_instance_dim(inst) == 6);
  CHECK(si_instance_pairs(inst) == 1);

  uint32_t members[16];
  size_t count = 0;
  REQUIRE(si_instance_planted_region(inst, 0, members, 16, &count) == SI_OK);
  CHECK(count == 4);
  uint32_t begin = 9, end = 9;
  REQUIRE(si_instance_planted_phrase(inst, 0, &begin, &end) == SI_OK);
  CHECK(end - begin == 2);

  si_game* token_game = si_instance_token_game(inst);
  REQUIRE(token_game != nullptr);
  CHECK(si_game_universe(token_game) == 13);
  double value = 0.0;
  REQUIRE(si_interaction_expectation_exact(token_game, members, count, 20, &value, nullptr) ==
          SI_OK);
  CHECK(std::isfinite(value));

  si_game* sem_game = si_instance_semantics_game(inst);
  REQUIRE(sem_game != nullptr);
  CHECK(si_game_universe(sem_game) == 2);

  double image[6], text[6];
  REQUIRE(si_instance_global_vectors(inst, image, text) == SI_OK);
  double align_raw[1], align_rn[1];
  REQUIRE(si_instance_alignment(inst, align_raw, align_rn) == SI_OK);
  CHECK(align_rn[0] == doctest::Approx(1.0));

  const auto path = std::filesystem::temp_directory_path() / "shapint_capi_instance.txt";
  REQUIRE(si_instance_save(inst, path.string().c_str()) == SI_OK);
  si_instance* loaded = si_instance_load(path.string().c_str());
  REQUIRE(loaded != nullptr);
  CHECK(si_instance_universe(loaded) == 13);
  std::filesystem::remove(path);

  si_instance_destroy(loaded);
  si_game_destroy(sem_game);
  si_game_destroy(token_game);
  si_instance_destroy(inst);
}

TEST_CASE("proposals through the C API") {
  si_instance* inst = si_instance_planted(12, 3, 3, 4, 6, 1, 0.1);
  si_region_list* list = si_instance_propose(inst, 99, 5);
  REQUIRE(list != nullptr);
  CHECK(si_region_list_count(list) == 5);
  for (size_t k = 0; k < 5; ++k) {
    uint32_t members[16];
    size_t count = 0;
    double confidence = 0.0;
    REQUIRE(si_region_list_get(list, k, members, 16, &count, &confidence) == SI_OK);
    CHECK(count >= 1);
    CHECK(confidence > 0.0);
    CHECK(confidence < 1.0);
  }
  si_region_list_destroy(list);
  si_instance_destroy(inst);
}

TEST_CASE("surrogate handle: predict, hybrid, save/load") {
  si_instance* inst = si_instance_planted(13, 3, 3, 4, 6, 1, 0.05);
  si_game* game = si_instance_token_game(inst);
  si_surrogate* sur = si_surrogate_create(6, 16, 21);
  REQUIRE(sur != nullptr);
  REQUIRE(si_surrogate_configure(sur, 1.0, 1.0, 1e-2, 3) == SI_OK);
  CHECK(si_surrogate_configure(sur, -1.0, 1.0, 1e-2, 3) == SI_ERR_INVALID_ARGUMENT);

  uint32_t members[16];
  size_t count = 0;
  REQUIRE(si_instance_planted_region(inst, 0, members, 16, &count) == SI_OK);

  double value = 0.0, sigma = 0.0;
  REQUIRE(si_surrogate_predict(sur, inst, members, count, &value, &sigma) == SI_OK);
  CHECK(sigma > 0.0);
  CHECK(sigma < 1.0);

  // warm-up iterations always sample
  for (uint64_t it = 0; it < 3; ++it) {
    double est = 0.0;
    int sampled = 0;
    uint64_t evals = 0;
    REQUIRE(si_surrogate_hybrid(sur, game, inst, members, count, 16, 40 + it, 1, it, 0, 0,
                                &est, &sigma, &sampled, &evals) == SI_OK);
    CHECK(sampled == 1);
    CHECK(evals == 16 * (count + 2));
  }

  const auto path = std::filesystem::temp_directory_path() / "shapint_capi_surrogate.txt";
  REQUIRE(si_surrogate_save(sur, path.string().c_str()) == SI_OK);
  si_surrogate* loaded = si_surrogate_load(path.string().c_str(), 21);
  REQUIRE(loaded != nullptr);
  double v2 = 0.0, s2 = 0.0;
  REQUIRE(si_surrogate_predict(loaded, inst, members, count, &v2, &s2) == SI_OK);
  REQUIRE(si_surrogate_predict(sur, inst, members, count, &value, &sigma) == SI_OK);
  CHECK(v2 == value);
  CHECK(s2 == sigma);
  std::filesystem::remove(path);

  si_surrogate_destroy(loaded);
  si_surrogate_destroy(sur);
  si_game_destroy(game);
  si_instance_destroy(inst);
}
