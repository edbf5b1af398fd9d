#ifndef SHAPINT_SAMPLING_HPP
#define SHAPINT_SAMPLING_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "shapint/coalition.hpp"
#include "shapint/game.hpp"

namespace shapint {

/// Counter-based splitmix64 stream. Each Monte-Carlo sample derives its own
/// generator from (seed, sample index), so estimates are bit-identical
/// regardless of how samples are spread across workers.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t s) : state(s) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound), bound >= 1. Multiply-shift; no rejection,
  /// bias is negligible for the bounds used here (<= 2^32).
  std::uint64_t bounded(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

  /// Uniform double in (0, 1).
  double uniform01() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }
};

/// Per-sample stream for sample index k under a run seed.
inline SplitMix64 sample_stream(std::uint64_t seed, std::uint64_t k) {
  SplitMix64 mix(seed ^ (0x2545f4914f6cdd1dull * (k + 1)));
  mix.next();
  return mix;
}

struct SamplingConfig {
  std::uint64_t num_samples = 1000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

enum class EstimateMethod { sampled, surrogate, exact };

struct InteractionEstimate {
  double mean = 0.0;
  double variance_of_mean = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t evals_used = 0;
  EstimateMethod method = EstimateMethod::sampled;
};

/// Monte-Carlo estimate of the interaction of coalition s. Each sample draws
/// a context size c uniform on {0..|N\s|}, a uniform context T of that size,
/// and evaluates v(T u s) - sum_{i in s} v(T u {i}) + (|s|-1) v(T);
/// |s| + 2 game evaluations per sample.
InteractionEstimate sample_interaction(const GameEvaluator& game, const Coalition& s,
                                       const SamplingConfig& cfg);

/// Permutation-sampling estimate of phi(i): each sample draws a uniform
/// permutation and evaluates the marginal contribution of i at its position;
/// 2 game evaluations per sample.
InteractionEstimate sample_shapley(const GameEvaluator& game, std::uint32_t player,
                                   const SamplingConfig& cfg);

/// Mean absolute pairwise difference over ordered pairs, divided by the mean
/// absolute value. Throws DegenerateInputError when all values are zero.
double instability(std::span<const double> values);

struct SweepRow {
  std::uint64_t sample_count = 0;
  std::uint64_t repeats = 0;
  double mean_instability = 0.0;
  bool degenerate = false;
  double mean_estimate = 0.0;
  double mean_evals = 0.0;
};

/// For each budget, runs `repeats` independent estimations of the interaction
/// of s and reports their instability. Rows are ordered by budget as given.
std::vector<SweepRow> convergence_sweep(const GameEvaluator& game, const Coalition& s,
                                        std::span<const std::uint64_t> sample_counts,
                                        std::uint64_t repeats, std::uint64_t seed,
                                        unsigned workers = 1);

}  // namespace shapint

#endif  // SHAPINT_SAMPLING_HPP
