#include "shapint/sampling.hpp"

#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "shapint/errors.hpp"

namespace shapint {
namespace {

// Samples are processed in fixed-size blocks; partial sums are reduced in
// block order afterwards, so the result does not depend on the worker count.
constexpr std::uint64_t kBlockSize = 256;

struct BlockStats {
  double sum = 0.0;
  double sum_sq = 0.0;
};

// Draws a uniform context of size c from `pool` (partial Fisher-Yates).
Coalition draw_context(std::vector<std::uint32_t>& pool, std::uint64_t c, SplitMix64& rng,
                       std::size_t universe) {
  Coalition context(universe);
  const std::size_t m = pool.size();
  for (std::uint64_t k = 0; k < c; ++k) {
    std::uint64_t j = k + rng.bounded(m - k);
    std::swap(pool[k], pool[j]);
    context.add(pool[k]);
  }
  return context;
}

// Runs `draw(sample_index, rng)` for every sample, parallelized over blocks,
// and returns (mean, variance of mean).
template <typename Draw>
InteractionEstimate run_samples(std::uint64_t num_samples, std::uint64_t seed,
                                unsigned workers, Draw&& draw) {
  const std::uint64_t num_blocks = (num_samples + kBlockSize - 1) / kBlockSize;
  std::vector<BlockStats> blocks(num_blocks);

  auto run_block = [&](std::uint64_t b) {
    BlockStats st;
    const std::uint64_t lo = b * kBlockSize;
    const std::uint64_t hi = std::min(lo + kBlockSize, num_samples);
    for (std::uint64_t k = lo; k < hi; ++k) {
      SplitMix64 rng = sample_stream(seed, k);
      const double x = draw(rng);
      st.sum += x;
      st.sum_sq += x * x;
    }
    blocks[b] = st;
  };

  if (workers <= 1 || num_blocks <= 1) {
    for (std::uint64_t b = 0; b < num_blocks; ++b) run_block(b);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    const unsigned count = std::min<std::uint64_t>(workers, num_blocks);
    pool.reserve(count);
    for (unsigned w = 0; w < count; ++w)
      pool.emplace_back([&] {
        for (std::uint64_t b = next.fetch_add(1); b < num_blocks; b = next.fetch_add(1))
          run_block(b);
      });
    for (auto& t : pool) t.join();
  }

  double sum = 0.0, sum_sq = 0.0;
  for (const BlockStats& st : blocks) {
    sum += st.sum;
    sum_sq += st.sum_sq;
  }

  InteractionEstimate est;
  est.samples = num_samples;
  est.mean = sum / static_cast<double>(num_samples);
  if (num_samples > 1) {
    const double nd = static_cast<double>(num_samples);
    double var = (sum_sq - nd * est.mean * est.mean) / (nd - 1.0);
    est.variance_of_mean = std::max(0.0, var / nd);
  }
  est.method = EstimateMethod::sampled;
  return est;
}

}  // namespace

InteractionEstimate sample_interaction(const GameEvaluator& game, const Coalition& s,
                                       const SamplingConfig& cfg) {
  if (s.empty_set()) throw std::invalid_argument("interaction of an empty coalition");
  if (cfg.num_samples < 1) throw std::invalid_argument("num_samples must be >= 1");

  const std::size_t n = game.universe_size();
  const auto outside = s.complement().members();
  const auto members = s.members();
  const double k_minus_1 = static_cast<double>(members.size()) - 1.0;

  InteractionEstimate est = run_samples(
      cfg.num_samples, cfg.seed, cfg.workers, [&](SplitMix64& rng) {
        std::vector<std::uint32_t> pool = outside;
        const std::uint64_t c = rng.bounded(outside.size() + 1);
        Coalition context = draw_context(pool, c, rng, n);
        double bracket = game.evaluate(context.united(s));
        for (std::uint32_t i : members)
          bracket -= game.evaluate(context.united(Coalition({i}, n)));
        bracket += k_minus_1 * game.evaluate(context);
        return bracket;
      });
  est.evals_used = cfg.num_samples * (members.size() + 2);
  return est;
}

InteractionEstimate sample_shapley(const GameEvaluator& game, std::uint32_t player,
                                   const SamplingConfig& cfg) {
  const std::size_t n = game.universe_size();
  if (player >= n) throw std::invalid_argument("player index out of universe");
  if (cfg.num_samples < 1) throw std::invalid_argument("num_samples must be >= 1");

  std::vector<std::uint32_t> identity(n);
  std::iota(identity.begin(), identity.end(), 0);

  InteractionEstimate est = run_samples(
      cfg.num_samples, cfg.seed, cfg.workers, [&](SplitMix64& rng) {
        std::vector<std::uint32_t> perm = identity;
        for (std::size_t k = 0; k + 1 < n; ++k) {
          std::uint64_t j = k + rng.bounded(n - k);
          std::swap(perm[k], perm[j]);
        }
        Coalition before(n);
        for (std::uint32_t p : perm) {
          if (p == player) break;
          before.add(p);
        }
        const double without = game.evaluate(before);
        const double with = game.evaluate(before.united(Coalition({player}, n)));
        return with - without;
      });
  est.evals_used = cfg.num_samples * 2;
  return est;
}

double instability(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("instability needs at least two values");

  double abs_mean = 0.0;
  for (double v : values) abs_mean += std::fabs(v);
  abs_mean /= static_cast<double>(values.size());
  if (abs_mean == 0.0)
    throw DegenerateInputError("instability undefined: all estimates are zero");

  double diff_sum = 0.0;
  for (std::size_t u = 0; u < values.size(); ++u)
    for (std::size_t v = u + 1; v < values.size(); ++v)
      diff_sum += std::fabs(values[u] - values[v]);
  const double pairs = static_cast<double>(values.size()) *
                       static_cast<double>(values.size() - 1) / 2.0;
  return (diff_sum / pairs) / abs_mean;
}

std::vector<SweepRow> convergence_sweep(const GameEvaluator& game, const Coalition& s,
                                        std::span<const std::uint64_t> sample_counts,
                                        std::uint64_t repeats, std::uint64_t seed,
                                        unsigned workers) {
  if (repeats < 2) throw std::invalid_argument("convergence sweep needs repeats >= 2");

  std::vector<SweepRow> rows;
  rows.reserve(sample_counts.size());
  for (std::size_t bi = 0; bi < sample_counts.size(); ++bi) {
    const std::uint64_t budget = sample_counts[bi];
    std::vector<double> estimates;
    estimates.reserve(repeats);
    double evals = 0.0;
    for (std::uint64_t r = 0; r < repeats; ++r) {
      SamplingConfig cfg;
      cfg.num_samples = budget;
      cfg.seed = seed ^ (0x9e3779b97f4a7c15ull * (bi * repeats + r + 1));
      cfg.workers = workers;
      InteractionEstimate est = sample_interaction(game, s, cfg);
      estimates.push_back(est.mean);
      evals += static_cast<double>(est.evals_used);
    }
    SweepRow row;
    row.sample_count = budget;
    row.repeats = repeats;
    row.mean_estimate =
        std::accumulate(estimates.begin(), estimates.end(), 0.0) / static_cast<double>(repeats);
    row.mean_evals = evals / static_cast<double>(repeats);
    try {
      row.mean_instability = instability(estimates);
    } catch (const DegenerateInputError&) {
      row.degenerate = true;
      row.mean_instability = 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace shapint
