#ifndef SHAPINT_SURROGATE_HPP
#define SHAPINT_SURROGATE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shapint/align.hpp"
#include "shapint/game.hpp"
#include "shapint/linalg.hpp"
#include "shapint/sampling.hpp"

namespace shapint {

/// Additive attention block: score_j = w . tanh(Q q + K x_j), softmax over j,
/// pooled context = sum_j alpha_j x_j. Shared across the two token sequences.
struct AttentionParams {
  Vec score;  // d
  Mat query;  // d x d
  Mat key;    // d x d
};

/// One prediction head: three fully connected layers with tanh activations,
/// scalar output.
struct HeadParams {
  Mat w1;  // hidden x feature_dim
  Vec b1;
  Mat w2;  // hidden x hidden
  Vec b2;
  Vec w3;  // hidden
  double b3 = 0.0;
};

enum class FeatureKind { token_level, semantics_level };

struct SurrogateParams {
  std::size_t dim = 0;
  std::size_t hidden = 0;
  FeatureKind kind = FeatureKind::token_level;
  AttentionParams attention;
  HeadParams value_head;
  HeadParams uncertainty_head;

  std::size_t feature_dim() const {
    return (kind == FeatureKind::token_level ? 3 : 4) * dim;
  }
};

struct Prediction {
  double value = 0.0;
  double uncertainty = 0.5;  // sigma, strictly inside (0,1)
};

struct TrainConfig {
  double beta1 = 1.0;
  double beta2 = 1.0;
  double learning_rate = 1e-2;
  std::uint64_t warmup_iterations = 100;
};

/// Raw inputs the surrogate attends over; kept alongside the target so a
/// training step can push gradients through the attention block too.
struct SurrogateInput {
  FeatureKind kind = FeatureKind::token_level;
  Vec query;                    // attention query
  Vec lead1;                    // token: region avg-pool; semantics: h_i
  Vec lead2;                    // semantics only: h_j
  std::vector<Vec> image_tokens;
  std::vector<Vec> text_tokens;
};

SurrogateInput make_token_input(const TokenSpace& space, const Region& region);
SurrogateInput make_semantics_input(std::span<const Vec> region_reps,
                                    std::span<const Vec> phrase_reps, std::size_t i,
                                    std::size_t j);

SurrogateParams surrogate_init(std::size_t dim, FeatureKind kind, std::size_t hidden,
                               std::uint64_t seed);

/// Concatenated feature vector: (lead blocks, attention-pooled image context,
/// attention-pooled text context); 3d for token-level, 4d for semantics-level.
Vec featurize(const SurrogateParams& params, const SurrogateInput& input);

/// Heads-only forward pass on an already-built feature vector.
Prediction predict_features(const SurrogateParams& params, const Vec& features);

/// Full forward pass: attention pooling then both heads.
Prediction predict(const SurrogateParams& params, const SurrogateInput& input);

/// L = (value - target)^2 / (beta1 * sigma) + beta2 * sigma
double unsil_loss(const Prediction& prediction, double target, const TrainConfig& cfg);

struct TrainExample {
  SurrogateInput input;
  double target = 0.0;
};

/// One gradient-descent step on the mean loss over the batch; gradients are
/// analytic through attention, both heads, and the loss. Returns mean loss.
double train_step(SurrogateParams& params, std::span<const TrainExample> batch,
                  const TrainConfig& cfg);

struct HybridOptions {
  bool force_sampling = false;
  bool freeze_training = false;
};

/// The epsilon/sigma gate: during warm-up (and whenever epsilon <= sigma)
/// compute the interaction by sampling and train the surrogate on the result;
/// otherwise return the surrogate's prediction at zero evaluation cost.
InteractionEstimate hybrid_estimate(const GameEvaluator& game, const Coalition& s,
                                    const SurrogateInput& input, SurrogateParams& params,
                                    const TrainConfig& cfg, const SamplingConfig& sampling_cfg,
                                    SplitMix64& gate_rng, std::uint64_t iteration,
                                    const HybridOptions& options = {});

/// Flattened parameter views; the flattening order is fixed and shared by
/// the checkpoint format and the finite-difference tests.
Vec flatten(const SurrogateParams& params);
void unflatten(SurrogateParams& params, const Vec& values);

/// Checkpoint format: "UNSIL1" magic, dims header, row-major values.
void save_surrogate(const SurrogateParams& params, const std::string& path);
SurrogateParams load_surrogate(const std::string& path);

}  // namespace shapint

#endif  // SHAPINT_SURROGATE_HPP
