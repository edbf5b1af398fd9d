#ifndef SHAPINT_EXACT_HPP
#define SHAPINT_EXACT_HPP

#include <cstdint>

#include "shapint/coalition.hpp"
#include "shapint/game.hpp"

namespace shapint {

/// Default enumeration cap: full enumeration touches 2^n subsets, so n = 20
/// keeps the oracle path around a million evaluations.
inline constexpr std::size_t kDefaultEnumCap = 20;

struct ShapleyResult {
  std::uint32_t player = 0;
  double value = 0.0;
  std::uint64_t evals_used = 0;
};

enum class InteractionMethod { direct, expectation_form, pairwise };

struct InteractionResult {
  Coalition coalition;
  double value = 0.0;
  InteractionMethod method = InteractionMethod::direct;
  std::uint64_t evals_used = 0;
};

/// Shapley weight p(S) = |S|! (n-|S|-1)! / n! for a context of size s in an
/// n-player game; equals 1 / (n * C(n-1, s)).
double shapley_weight(std::size_t n, std::size_t context_size);

/// phi(i) by full enumeration of all contexts S subseteq N \ {i}.
ShapleyResult shapley_exact(const GameEvaluator& game, std::uint32_t player,
                            std::size_t enum_cap = kDefaultEnumCap);

/// Interaction of coalition s via the reduced-game definition:
/// phi([s] | merged game) minus the sum of each member's phi in its
/// restricted game.
InteractionResult shapley_interaction_exact(const GameEvaluator& game, const Coalition& s,
                                            std::size_t enum_cap = kDefaultEnumCap);

/// Same quantity through the nested-expectation identity, enumerated exactly:
/// uniform over context sizes c in {0..|N\s|}, uniform over contexts of each
/// size, of v(T u s) - sum_i v(T u {i}) + (|s|-1) v(T).
InteractionResult interaction_exact_expectation_form(const GameEvaluator& game,
                                                     const Coalition& s,
                                                     std::size_t enum_cap = kDefaultEnumCap);

/// Named pair entry point; equals shapley_interaction_exact on {i, j}.
InteractionResult pairwise_interaction_exact(const GameEvaluator& game, std::uint32_t i,
                                             std::uint32_t j,
                                             std::size_t enum_cap = kDefaultEnumCap);

}  // namespace shapint

#endif  // SHAPINT_EXACT_HPP
