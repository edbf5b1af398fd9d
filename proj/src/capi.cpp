#include "shapint.h"

#include <cstring>
#include <memory>
#include <string>

#include "shapint/align.hpp"
#include "shapint/errors.hpp"
#include "shapint/exact.hpp"
#include "shapint/game.hpp"
#include "shapint/sampling.hpp"
#include "shapint/surrogate.hpp"

namespace {

thread_local std::string g_last_error;

si_result fail(si_result status, const char* what) {
  g_last_error = what;
  return status;
}

template <typename F>
si_result guard(F&& body) {
  try {
    body();
    return SI_OK;
  } catch (const std::invalid_argument& e) {
    return fail(SI_ERR_INVALID_ARGUMENT, e.what());
  } catch (const shapint::ResourceLimitError& e) {
    return fail(SI_ERR_RESOURCE_LIMIT, e.what());
  } catch (const shapint::DegenerateInputError& e) {
    return fail(SI_ERR_DEGENERATE, e.what());
  } catch (const shapint::NumericError& e) {
    return fail(SI_ERR_NUMERIC, e.what());
  } catch (const std::exception& e) {
    return fail(SI_ERR_IO, e.what());
  } catch (...) {
    return fail(SI_ERR_UNKNOWN, "unknown error");
  }
}

template <typename F>
auto guard_ptr(F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return nullptr;
  } catch (...) {
    g_last_error = "unknown error";
    return nullptr;
  }
}

shapint::Coalition to_coalition(const uint32_t* members, size_t count, size_t universe) {
  shapint::Coalition c(universe);
  for (size_t k = 0; k < count; ++k) c.add(members[k]);
  return c;
}

}  // namespace

struct si_game {
  shapint::GameEvaluator evaluator;
};

struct si_instance {
  shapint::PlantedInstance planted;
};

struct si_region_list {
  std::vector<shapint::RegionProposal> proposals;
};

struct si_surrogate {
  shapint::SurrogateParams params;
  shapint::TrainConfig config;
  shapint::SplitMix64 gate;
};

extern "C" {

const char* si_result_name(si_result status) {
  switch (status) {
    case SI_OK: return "ok";
    case SI_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SI_ERR_RESOURCE_LIMIT: return "resource limit";
    case SI_ERR_DEGENERATE: return "degenerate input";
    case SI_ERR_NUMERIC: return "numeric failure";
    case SI_ERR_IO: return "io error";
    default: return "unknown";
  }
}

const char* si_last_error(void) { return g_last_error.c_str(); }

si_game* si_game_create(size_t universe_size, si_value_fn fn, void* ctx) {
  if (fn == nullptr) {
    g_last_error = "null value function";
    return nullptr;
  }
  return new si_game{shapint::GameEvaluator(
      universe_size, [fn, ctx](const shapint::Coalition& s) {
        const auto members = s.members();
        return fn(members.data(), members.size(), ctx);
      })};
}

void si_game_destroy(si_game* game) { delete game; }

size_t si_game_universe(const si_game* game) { return game->evaluator.universe_size(); }

uint64_t si_game_eval_count(const si_game* game) { return game->evaluator.eval_count(); }

si_result si_shapley_exact(si_game* game, uint32_t player, size_t enum_cap,
                           double* out_value, uint64_t* out_evals) {
  return guard([&] {
    auto r = shapint::shapley_exact(game->evaluator, player, enum_cap);
    if (out_value) *out_value = r.value;
    if (out_evals) *out_evals = r.evals_used;
  });
}

si_result si_interaction_exact(si_game* game, const uint32_t* members, size_t count,
                               size_t enum_cap, double* out_value, uint64_t* out_evals) {
  return guard([&] {
    auto s = to_coalition(members, count, game->evaluator.universe_size());
    auto r = shapint::shapley_interaction_exact(game->evaluator, s, enum_cap);
    if (out_value) *out_value = r.value;
    if (out_evals) *out_evals = r.evals_used;
  });
}

si_result si_interaction_expectation_exact(si_game* game, const uint32_t* members,
                                           size_t count, size_t enum_cap, double* out_value,
                                           uint64_t* out_evals) {
  return guard([&] {
    auto s = to_coalition(members, count, game->evaluator.universe_size());
    auto r = shapint::interaction_exact_expectation_form(game->evaluator, s, enum_cap);
    if (out_value) *out_value = r.value;
    if (out_evals) *out_evals = r.evals_used;
  });
}

si_result si_pairwise_interaction_exact(si_game* game, uint32_t i, uint32_t j,
                                        size_t enum_cap, double* out_value,
                                        uint64_t* out_evals) {
  return guard([&] {
    auto r = shapint::pairwise_interaction_exact(game->evaluator, i, j, enum_cap);
    if (out_value) *out_value = r.value;
    if (out_evals) *out_evals = r.evals_used;
  });
}

si_result si_sample_interaction(si_game* game, const uint32_t* members, size_t count,
                                uint64_t num_samples, uint64_t seed, unsigned workers,
                                double* out_mean, double* out_variance_of_mean,
                                uint64_t* out_evals) {
  return guard([&] {
    auto s = to_coalition(members, count, game->evaluator.universe_size());
    shapint::SamplingConfig cfg{num_samples, seed, workers};
    auto est = shapint::sample_interaction(game->evaluator, s, cfg);
    if (out_mean) *out_mean = est.mean;
    if (out_variance_of_mean) *out_variance_of_mean = est.variance_of_mean;
    if (out_evals) *out_evals = est.evals_used;
  });
}

si_result si_sample_shapley(si_game* game, uint32_t player, uint64_t num_samples,
                            uint64_t seed, unsigned workers, double* out_mean,
                            double* out_variance_of_mean, uint64_t* out_evals) {
  return guard([&] {
    shapint::SamplingConfig cfg{num_samples, seed, workers};
    auto est = shapint::sample_shapley(game->evaluator, player, cfg);
    if (out_mean) *out_mean = est.mean;
    if (out_variance_of_mean) *out_variance_of_mean = est.variance_of_mean;
    if (out_evals) *out_evals = est.evals_used;
  });
}

si_result si_instability(const double* values, size_t count, double* out) {
  return guard([&] { *out = shapint::instability({values, count}); });
}

si_result si_loss_cmc(const double* image_vecs, const double* text_vecs, size_t batch,
                      size_t dim, double tau, double* out) {
  return guard([&] {
    std::vector<shapint::Vec> imgs(batch), txts(batch);
    for (size_t i = 0; i < batch; ++i) {
      imgs[i].assign(image_vecs + i * dim, image_vecs + (i + 1) * dim);
      txts[i].assign(text_vecs + i * dim, text_vecs + (i + 1) * dim);
    }
    *out = shapint::loss_cmc(imgs, txts, tau);
  });
}

si_result si_loss_tsa(const double* confidences, const double* labels, size_t count,
                      double* out) {
  return guard([&] { *out = shapint::loss_tsa({confidences, count}, {labels, count}); });
}

si_result si_loss_fsa(const double* row_normalized, const double* labels, size_t rows,
                      size_t cols, double* out) {
  return guard([&] {
    shapint::AlignmentMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.row_normalized.assign(row_normalized, row_normalized + rows * cols);
    m.raw = m.row_normalized;
    *out = shapint::loss_fsa(m, {labels, rows * cols});
  });
}

si_result si_normalize_interactions(const double* values, size_t count, si_norm_mode mode,
                                    double* out) {
  return guard([&] {
    auto r = shapint::normalize_interactions(
        {values, count},
        mode == SI_NORM_MINMAX ? shapint::NormMode::minmax : shapint::NormMode::rowwise);
    std::memcpy(out, r.data(), count * sizeof(double));
  });
}

si_result si_normalize_rows(const double* values, size_t rows, size_t cols, double* out) {
  return guard([&] {
    auto r = shapint::normalize_rows({values, rows * cols}, rows, cols);
    std::memcpy(out, r.data(), rows * cols * sizeof(double));
  });
}

si_instance* si_instance_planted(uint64_t seed, size_t height, size_t width,
                                 size_t num_words, size_t dim, size_t pairs, double noise) {
  return guard_ptr([&]() -> si_instance* {
    // Auto-placement: 2x2 boxes anchored on even grid cells, word spans of
    // up to two words, all disjoint.
    const size_t slots_x = (width + 1) / 2;
    const size_t slots_y = (height + 1) / 2;
    if (pairs > slots_x * slots_y)
      throw std::invalid_argument("too many planted pairs for the grid");
    const size_t span = num_words >= 2 * pairs ? 2 : 1;
    if (pairs * span > num_words)
      throw std::invalid_argument("too many planted pairs for the word count");

    std::vector<shapint::PlantedPair> spec(pairs);
    for (size_t k = 0; k < pairs; ++k) {
      const size_t bx = k % slots_x, by = k / slots_x;
      spec[k].center = static_cast<uint32_t>(by * 2 * width + bx * 2);
      spec[k].box_w = 2;
      spec[k].box_h = 2;
      spec[k].phrase = {static_cast<uint32_t>(k * span), static_cast<uint32_t>((k + 1) * span)};
    }
    return new si_instance{
        shapint::make_planted_instance(seed, height, width, num_words, dim, spec, noise)};
  });
}

void si_instance_destroy(si_instance* instance) { delete instance; }

size_t si_instance_universe(const si_instance* instance) {
  return instance->planted.space->universe_size();
}

size_t si_instance_num_patches(const si_instance* instance) {
  return instance->planted.space->num_patches();
}

size_t si_instance_dim(const si_instance* instance) { return instance->planted.space->dim; }

size_t si_instance_pairs(const si_instance* instance) {
  return instance->planted.regions.size();
}

si_result si_instance_planted_region(const si_instance* instance, size_t k,
                                     uint32_t* members, size_t cap, size_t* out_count) {
  return guard([&] {
    const auto& region = instance->planted.regions.at(k);
    if (out_count) *out_count = region.members.size();
    if (members)
      std::memcpy(members, region.members.data(),
                  std::min(cap, region.members.size()) * sizeof(uint32_t));
  });
}

si_result si_instance_planted_phrase(const si_instance* instance, size_t k,
                                     uint32_t* out_begin, uint32_t* out_end) {
  return guard([&] {
    const auto& phrase = instance->planted.phrases.at(k);
    if (out_begin) *out_begin = phrase.begin;
    if (out_end) *out_end = phrase.end;
  });
}

si_game* si_instance_token_game(const si_instance* instance) {
  return guard_ptr([&]() -> si_game* {
    return new si_game{shapint::make_token_game(instance->planted.space)};
  });
}

si_game* si_instance_semantics_game(const si_instance* instance) {
  return guard_ptr([&]() -> si_game* {
    const auto& planted = instance->planted;
    std::vector<shapint::Vec> regions, phrases;
    for (const auto& r : planted.regions)
      regions.push_back(shapint::region_representation(*planted.space, r));
    for (const auto& p : planted.phrases)
      phrases.push_back(shapint::phrase_representation(*planted.space, p));
    return new si_game{
        shapint::make_semantics_game(std::move(regions), std::move(phrases))};
  });
}

si_result si_instance_global_vectors(const si_instance* instance, double* out_image,
                                     double* out_text) {
  return guard([&] {
    const auto& space = *instance->planted.space;
    auto [image, text] = shapint::encode(space, shapint::grand_coalition(space.universe_size()));
    if (out_image) std::memcpy(out_image, image.data(), space.dim * sizeof(double));
    if (out_text) std::memcpy(out_text, text.data(), space.dim * sizeof(double));
  });
}

si_result si_instance_alignment(const si_instance* instance, double* out_raw,
                                double* out_row_normalized) {
  return guard([&] {
    const auto& planted = instance->planted;
    std::vector<shapint::Vec> regions, phrases;
    for (const auto& r : planted.regions)
      regions.push_back(shapint::region_representation(*planted.space, r));
    for (const auto& p : planted.phrases)
      phrases.push_back(shapint::phrase_representation(*planted.space, p));
    auto m = shapint::make_alignment_matrix(regions, phrases);
    if (out_raw) std::memcpy(out_raw, m.raw.data(), m.raw.size() * sizeof(double));
    if (out_row_normalized)
      std::memcpy(out_row_normalized, m.row_normalized.data(),
                  m.row_normalized.size() * sizeof(double));
  });
}

si_result si_instance_save(const si_instance* instance, const char* path) {
  return guard([&] { shapint::save_instance(instance->planted, path); });
}

si_instance* si_instance_load(const char* path) {
  return guard_ptr(
      [&]() -> si_instance* { return new si_instance{shapint::load_instance(path)}; });
}

si_region_list* si_instance_propose(const si_instance* instance, uint64_t head_seed,
                                    size_t m) {
  return guard_ptr([&]() -> si_region_list* {
    const auto& space = *instance->planted.space;
    const auto max_box = static_cast<uint32_t>(std::min(space.height, space.width));
    auto head = shapint::init_proposal_head(space.dim, max_box, head_seed);
    return new si_region_list{shapint::propose_regions(space, head, m)};
  });
}

void si_region_list_destroy(si_region_list* list) { delete list; }

size_t si_region_list_count(const si_region_list* list) { return list->proposals.size(); }

si_result si_region_list_get(const si_region_list* list, size_t index, uint32_t* members,
                             size_t cap, size_t* out_count, double* out_confidence) {
  return guard([&] {
    const auto& proposal = list->proposals.at(index);
    if (out_count) *out_count = proposal.region.members.size();
    if (members)
      std::memcpy(members, proposal.region.members.data(),
                  std::min(cap, proposal.region.members.size()) * sizeof(uint32_t));
    if (out_confidence) *out_confidence = proposal.confidence;
  });
}

si_surrogate* si_surrogate_create(size_t dim, size_t hidden, uint64_t seed) {
  return guard_ptr([&]() -> si_surrogate* {
    return new si_surrogate{
        shapint::surrogate_init(dim, shapint::FeatureKind::token_level, hidden, seed),
        shapint::TrainConfig{}, shapint::SplitMix64(seed ^ 0x6a7e5eedull)};
  });
}

void si_surrogate_destroy(si_surrogate* surrogate) { delete surrogate; }

si_result si_surrogate_configure(si_surrogate* surrogate, double beta1, double beta2,
                                 double learning_rate, uint64_t warmup_iterations) {
  return guard([&] {
    if (beta1 <= 0.0 || beta2 <= 0.0 || learning_rate < 0.0 || warmup_iterations < 1)
      throw std::invalid_argument("invalid surrogate training configuration");
    surrogate->config.beta1 = beta1;
    surrogate->config.beta2 = beta2;
    surrogate->config.learning_rate = learning_rate;
    surrogate->config.warmup_iterations = warmup_iterations;
  });
}

namespace {

shapint::SurrogateInput region_input(const si_instance* instance,
                                     const uint32_t* region_members, size_t count) {
  shapint::Region region;
  region.members.assign(region_members, region_members + count);
  return shapint::make_token_input(*instance->planted.space, region);
}

}  // namespace

si_result si_surrogate_predict(si_surrogate* surrogate, const si_instance* instance,
                               const uint32_t* region_members, size_t count,
                               double* out_value, double* out_sigma) {
  return guard([&] {
    auto pred = shapint::predict(surrogate->params, region_input(instance, region_members, count));
    if (out_value) *out_value = pred.value;
    if (out_sigma) *out_sigma = pred.uncertainty;
  });
}

si_result si_surrogate_hybrid(si_surrogate* surrogate, si_game* game,
                              const si_instance* instance, const uint32_t* region_members,
                              size_t count, uint64_t num_samples, uint64_t sample_seed,
                              unsigned workers, uint64_t iteration, int force_sampling,
                              int freeze_training, double* out_estimate, double* out_sigma,
                              int* out_sampled, uint64_t* out_evals) {
  return guard([&] {
    auto input = region_input(instance, region_members, count);
    auto coalition = to_coalition(region_members, count, game->evaluator.universe_size());
    shapint::SamplingConfig sampling_cfg{num_samples, sample_seed, workers};
    shapint::HybridOptions options{force_sampling != 0, freeze_training != 0};
    if (out_sigma) *out_sigma = shapint::predict(surrogate->params, input).uncertainty;
    auto est = shapint::hybrid_estimate(game->evaluator, coalition, input, surrogate->params,
                                        surrogate->config, sampling_cfg, surrogate->gate,
                                        iteration, options);
    if (out_estimate) *out_estimate = est.mean;
    if (out_sampled) *out_sampled = est.method == shapint::EstimateMethod::sampled ? 1 : 0;
    if (out_evals) *out_evals = est.evals_used;
  });
}

si_result si_surrogate_save(const si_surrogate* surrogate, const char* path) {
  return guard([&] { shapint::save_surrogate(surrogate->params, path); });
}

si_surrogate* si_surrogate_load(const char* path, uint64_t gate_seed) {
  return guard_ptr([&]() -> si_surrogate* {
    return new si_surrogate{shapint::load_surrogate(path), shapint::TrainConfig{},
                            shapint::SplitMix64(gate_seed ^ 0x6a7e5eedull)};
  });
}

}  // extern "C"
