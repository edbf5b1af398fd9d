#ifndef SHAPINT_GAME_HPP
#define SHAPINT_GAME_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>

#include "shapint/coalition.hpp"

namespace shapint {

/// A cooperative game: a deterministic map from coalitions to real scores,
/// with a counter of value-function invocations for cost accounting.
///
/// The value function must be pure; the counter is atomic so a single
/// evaluator may be shared read-only across sampling workers.
class GameEvaluator {
 public:
  using ValueFn = std::function<double(const Coalition&)>;

  GameEvaluator(std::size_t universe_size, ValueFn fn)
      : n_(universe_size), fn_(std::move(fn)), evals_(0) {}

  GameEvaluator(GameEvaluator&& other) noexcept
      : n_(other.n_), fn_(std::move(other.fn_)), evals_(other.evals_.load()) {}

  GameEvaluator(const GameEvaluator&) = delete;
  GameEvaluator& operator=(const GameEvaluator&) = delete;

  std::size_t universe_size() const { return n_; }

  double evaluate(const Coalition& s) const {
    if (s.universe_size() != n_)
      throw std::invalid_argument("coalition drawn from a different universe");
    evals_.fetch_add(1, std::memory_order_relaxed);
    return fn_(s);
  }

  std::uint64_t eval_count() const { return evals_.load(std::memory_order_relaxed); }

 private:
  std::size_t n_;
  ValueFn fn_;
  mutable std::atomic<std::uint64_t> evals_;
};

/// Replaces the members of `s` with one synthetic player so the coalition
/// can be valued as a unit. Players of the base game outside `s` keep their
/// relative order at indices 0..m-1; the synthetic player is index m, where
/// m = n - |s|. Evaluations forward to (and are counted by) the base game.
GameEvaluator reduce_game(const GameEvaluator& base, const Coalition& s);

/// The restricted game over (N \ s) plus the single member i of s: the other
/// members of s are always absent. Index layout matches reduce_game, with i
/// at index m. Used for the subtraction terms of the interaction definition.
GameEvaluator exclude_then_add(const GameEvaluator& base, const Coalition& s,
                               std::uint32_t i);

}  // namespace shapint

#endif  // SHAPINT_GAME_HPP
