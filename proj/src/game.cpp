#include "shapint/game.hpp"

#include <vector>

namespace shapint {
namespace {

// Sorted indices of N \ s in the base game; these become indices 0..m-1 of
// the derived game, the synthetic/extra player becomes index m.
std::vector<std::uint32_t> outside_members(const Coalition& s) {
  return s.complement().members();
}

Coalition expand(const Coalition& derived, const std::vector<std::uint32_t>& outside,
                 std::size_t base_n) {
  Coalition full(base_n);
  for (std::size_t r = 0; r < outside.size(); ++r)
    if (derived.contains(static_cast<std::uint32_t>(r))) full.add(outside[r]);
  return full;
}

}  // namespace

GameEvaluator reduce_game(const GameEvaluator& base, const Coalition& s) {
  if (s.empty_set()) throw std::invalid_argument("cannot reduce on an empty coalition");
  if (s.universe_size() != base.universe_size())
    throw std::invalid_argument("coalition drawn from a different universe");

  const std::size_t base_n = base.universe_size();
  auto outside = outside_members(s);
  const std::uint32_t merged_index = static_cast<std::uint32_t>(outside.size());

  return GameEvaluator(
      std::size_t{merged_index} + 1,
      [&base, s, outside = std::move(outside), base_n, merged_index](const Coalition& t) {
        Coalition full = expand(t, outside, base_n);
        if (t.contains(merged_index)) full = full.united(s);
        return base.evaluate(full);
      });
}

GameEvaluator exclude_then_add(const GameEvaluator& base, const Coalition& s,
                               std::uint32_t player) {
  if (!s.contains(player))
    throw std::invalid_argument("player is not a member of the excluded coalition");

  const std::size_t base_n = base.universe_size();
  auto outside = outside_members(s);
  const std::uint32_t extra_index = static_cast<std::uint32_t>(outside.size());

  return GameEvaluator(
      std::size_t{extra_index} + 1,
      [&base, outside = std::move(outside), base_n, extra_index, player](const Coalition& t) {
        Coalition full = expand(t, outside, base_n);
        if (t.contains(extra_index)) full.add(player);
        return base.evaluate(full);
      });
}

}  // namespace shapint
