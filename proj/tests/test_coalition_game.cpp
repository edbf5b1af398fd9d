#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shapint/coalition.hpp"
#include "shapint/game.hpp"
#include "test_games.hpp"

using namespace shapint;

TEST_CASE("grand coalition") {
  CHECK(grand_coalition(0).size() == 0);
  CHECK(grand_coalition(3) == Coalition({0, 1, 2}, 3));
  CHECK(grand_coalition(64).size() == 64);
  CHECK(grand_coalition(130).size() == 130);
}

TEST_CASE("coalition membership and invariants") {
  Coalition c({1, 4}, 6);
  CHECK(c.size() == 2);
  CHECK(c.contains(4));
  CHECK(!c.contains(0));
  c.add(4);  // duplicate add is a no-op
  CHECK(c.size() == 2);
  CHECK_THROWS_AS(c.add(6), std::invalid_argument);
  CHECK(c.complement() == Coalition({0, 2, 3, 5}, 6));
  CHECK(c.united(Coalition({0, 1}, 6)) == Coalition({0, 1, 4}, 6));
  CHECK(Coalition(5).empty_set());
  CHECK(c.members() == std::vector<std::uint32_t>{1, 4});
}

TEST_CASE("evaluate: additive example, purity, counter") {
  auto game = testgames::additive_game({1.0, 2.0, 3.0});
  Coalition s({0, 2}, 3);
  CHECK(game.evaluate(s) == doctest::Approx(4.0));
  CHECK(game.evaluate(s) == game.evaluate(s));
  CHECK(game.eval_count() == 3);
  for (int k = 0; k < 5; ++k) game.evaluate(Coalition({1}, 3));
  CHECK(game.eval_count() == 8);
  CHECK_THROWS_AS(game.evaluate(Coalition({0}, 4)), std::invalid_argument);
}

TEST_CASE("reduce_game basics") {
  auto base = testgames::additive_game({1.0, 2.0, 3.0});
  Coalition s({1, 2}, 3);
  auto reduced = reduce_game(base, s);
  CHECK(reduced.universe_size() == 2);
  // synthetic player is the last index
  CHECK(reduced.evaluate(Coalition({1}, 2)) == doctest::Approx(5.0));
  CHECK(reduced.evaluate(Coalition({0, 1}, 2)) == doctest::Approx(6.0));
  CHECK(reduced.evaluate(Coalition(2)) == doctest::Approx(0.0));
  CHECK_THROWS_AS(reduce_game(base, Coalition(3)), std::invalid_argument);
}

TEST_CASE("exclude_then_add basics") {
  auto base = testgames::additive_game({1.0, 2.0});
  Coalition s({0, 1}, 2);
  auto restricted = exclude_then_add(base, s, 0);
  CHECK(restricted.universe_size() == 1);
  CHECK(restricted.evaluate(Coalition({0}, 1)) == doctest::Approx(base.evaluate(Coalition({0}, 2))));
  CHECK(restricted.evaluate(Coalition(1)) == doctest::Approx(base.evaluate(Coalition(2))));
  CHECK_THROWS_AS(exclude_then_add(base, Coalition({1}, 2), 0), std::invalid_argument);
}

TEST_CASE("reduced-game consistency by exhaustive enumeration") {
  for (std::size_t n = 2; n <= 8; ++n) {
    auto base = testgames::random_game(n, 77 + n);
    Coalition s(n);
    s.add(0).add(static_cast<std::uint32_t>(n - 1));
    auto reduced = reduce_game(base, s);
    const std::size_t m = n - s.size();
    auto outside = s.complement().members();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
      Coalition t_reduced(m + 1);
      Coalition t_base(n);
      for (std::size_t b = 0; b < m; ++b)
        if ((mask >> b) & 1) {
          t_reduced.add(static_cast<std::uint32_t>(b));
          t_base.add(outside[b]);
        }
      CHECK(reduced.evaluate(t_reduced) == doctest::Approx(base.evaluate(t_base)).epsilon(1e-12));
      Coalition with_merged = t_reduced;
      with_merged.add(static_cast<std::uint32_t>(m));
      CHECK(reduced.evaluate(with_merged) ==
            doctest::Approx(base.evaluate(t_base.united(s))).epsilon(1e-12));
    }
  }
}

TEST_CASE("evaluation accounting forwards through derived games") {
  auto base = testgames::random_game(4, 5);
  Coalition s({1, 2}, 4);
  auto reduced = reduce_game(base, s);
  const auto before = base.eval_count();
  reduced.evaluate(Coalition({0, 2}, 3));
  reduced.evaluate(Coalition({0}, 3));
  CHECK(base.eval_count() == before + 2);
  CHECK(reduced.eval_count() == 2);
}
