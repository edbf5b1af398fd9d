#include "shapint/exact.hpp"

#include <string>
#include <vector>

#include "shapint/errors.hpp"

namespace shapint {
namespace {

void check_cap(std::size_t n, std::size_t cap, const char* what) {
  if (n > cap)
    throw ResourceLimitError(std::string(what) + ": universe size " + std::to_string(n) +
                             " exceeds enumeration cap " + std::to_string(cap) +
                             "; use the sampling engine");
}

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  if (k > n - k) k = n - k;
  double r = 1.0;
  for (std::size_t j = 1; j <= k; ++j) r = r * static_cast<double>(n - k + j) / static_cast<double>(j);
  return r;
}

// Deposits the bits of `mask` onto the player indices in `slots`.
Coalition deposit(std::uint64_t mask, const std::vector<std::uint32_t>& slots,
                  std::size_t universe) {
  Coalition c(universe);
  while (mask) {
    int b = std::countr_zero(mask);
    c.add(slots[static_cast<std::size_t>(b)]);
    mask &= mask - 1;
  }
  return c;
}

}  // namespace

double shapley_weight(std::size_t n, std::size_t context_size) {
  // |S|!(n-|S|-1)!/n! == 1 / (n * C(n-1, |S|))
  return 1.0 / (static_cast<double>(n) * binomial(n - 1, context_size));
}

ShapleyResult shapley_exact(const GameEvaluator& game, std::uint32_t player,
                            std::size_t enum_cap) {
  const std::size_t n = game.universe_size();
  if (player >= n) throw std::invalid_argument("player index out of universe");
  check_cap(n, enum_cap, "shapley_exact");

  std::vector<std::uint32_t> others;
  others.reserve(n - 1);
  for (std::uint32_t j = 0; j < n; ++j)
    if (j != player) others.push_back(j);

  const std::uint64_t before = game.eval_count();
  double phi = 0.0;
  const std::uint64_t limit = std::uint64_t{1} << others.size();
  for (std::uint64_t mask = 0; mask < limit; ++mask) {
    Coalition context = deposit(mask, others, n);
    const double without = game.evaluate(context);
    const double with = game.evaluate(context.united(Coalition({player}, n)));
    phi += shapley_weight(n, context.size()) * (with - without);
  }
  return {player, phi, game.eval_count() - before};
}

InteractionResult shapley_interaction_exact(const GameEvaluator& game, const Coalition& s,
                                            std::size_t enum_cap) {
  if (s.empty_set()) throw std::invalid_argument("interaction of an empty coalition");
  const std::size_t reduced_n = game.universe_size() - s.size() + 1;
  check_cap(reduced_n, enum_cap, "shapley_interaction_exact");

  const std::uint64_t before = game.eval_count();
  const std::uint32_t merged_index = static_cast<std::uint32_t>(reduced_n - 1);

  GameEvaluator reduced = reduce_game(game, s);
  double value = shapley_exact(reduced, merged_index, enum_cap).value;
  for (std::uint32_t i : s.members()) {
    GameEvaluator restricted = exclude_then_add(game, s, i);
    value -= shapley_exact(restricted, merged_index, enum_cap).value;
  }
  return {s, value, InteractionMethod::direct, game.eval_count() - before};
}

InteractionResult interaction_exact_expectation_form(const GameEvaluator& game,
                                                     const Coalition& s,
                                                     std::size_t enum_cap) {
  if (s.empty_set()) throw std::invalid_argument("interaction of an empty coalition");
  const std::size_t n = game.universe_size();
  auto outside = s.complement().members();
  const std::size_t m = outside.size();
  check_cap(m + 1, enum_cap, "interaction_exact_expectation_form");

  const auto members = s.members();
  const double k_minus_1 = static_cast<double>(members.size()) - 1.0;
  const std::uint64_t before = game.eval_count();

  double acc = 0.0;
  const std::uint64_t limit = std::uint64_t{1} << m;
  for (std::uint64_t mask = 0; mask < limit; ++mask) {
    Coalition context = deposit(mask, outside, n);
    // Uniform over sizes, then uniform within a size.
    const double weight = 1.0 / (static_cast<double>(m + 1) * binomial(m, context.size()));
    double bracket = game.evaluate(context.united(s));
    for (std::uint32_t i : members)
      bracket -= game.evaluate(context.united(Coalition({i}, n)));
    bracket += k_minus_1 * game.evaluate(context);
    acc += weight * bracket;
  }
  return {s, acc, InteractionMethod::expectation_form, game.eval_count() - before};
}

InteractionResult pairwise_interaction_exact(const GameEvaluator& game, std::uint32_t i,
                                             std::uint32_t j, std::size_t enum_cap) {
  if (i == j) throw std::invalid_argument("pairwise interaction needs two distinct players");
  InteractionResult r =
      shapley_interaction_exact(game, Coalition({i, j}, game.universe_size()), enum_cap);
  r.method = InteractionMethod::pairwise;
  return r;
}

}  // namespace shapint
