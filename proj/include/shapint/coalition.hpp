#ifndef SHAPINT_COALITION_HPP
#define SHAPINT_COALITION_HPP

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace shapint {

/// A subset of players drawn from a fixed universe {0, ..., n-1}.
///
/// Stored as a bitset so that membership, union and complement stay O(1)
/// for the common n <= 64 case (one word); larger universes just use more
/// words and remain usable by the sampling path.
class Coalition {
 public:
  Coalition() = default;

  explicit Coalition(std::size_t universe_size)
      : n_(universe_size), words_((universe_size + 63) / 64, 0) {}

  Coalition(std::initializer_list<std::uint32_t> members, std::size_t universe_size)
      : Coalition(universe_size) {
    for (std::uint32_t m : members) add(m);
  }

  static Coalition empty(std::size_t universe_size) { return Coalition(universe_size); }

  static Coalition grand(std::size_t universe_size) {
    Coalition c(universe_size);
    for (std::size_t w = 0; w < c.words_.size(); ++w) c.words_[w] = ~std::uint64_t{0};
    c.trim();
    return c;
  }

  std::size_t universe_size() const { return n_; }

  std::size_t size() const {
    std::size_t k = 0;
    for (std::uint64_t w : words_) k += static_cast<std::size_t>(std::popcount(w));
    return k;
  }

  bool empty_set() const {
    for (std::uint64_t w : words_)
      if (w != 0) return false;
    return true;
  }

  bool contains(std::uint32_t i) const {
    check_index(i);
    return (words_[i / 64] >> (i % 64)) & 1u;
  }

  Coalition& add(std::uint32_t i) {
    check_index(i);
    words_[i / 64] |= std::uint64_t{1} << (i % 64);
    return *this;
  }

  Coalition& remove(std::uint32_t i) {
    check_index(i);
    words_[i / 64] &= ~(std::uint64_t{1} << (i % 64));
    return *this;
  }

  Coalition united(const Coalition& other) const {
    check_universe(other);
    Coalition r = *this;
    for (std::size_t w = 0; w < words_.size(); ++w) r.words_[w] |= other.words_[w];
    return r;
  }

  Coalition intersected(const Coalition& other) const {
    check_universe(other);
    Coalition r = *this;
    for (std::size_t w = 0; w < words_.size(); ++w) r.words_[w] &= other.words_[w];
    return r;
  }

  Coalition complement() const {
    Coalition r = *this;
    for (std::size_t w = 0; w < words_.size(); ++w) r.words_[w] = ~r.words_[w];
    r.trim();
    return r;
  }

  std::vector<std::uint32_t> members() const {
    std::vector<std::uint32_t> out;
    out.reserve(size());
    for_each_member([&](std::uint32_t i) { out.push_back(i); });
    return out;
  }

  template <typename F>
  void for_each_member(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits) {
        int b = std::countr_zero(bits);
        f(static_cast<std::uint32_t>(w * 64 + static_cast<std::size_t>(b)));
        bits &= bits - 1;
      }
    }
  }

  bool operator==(const Coalition& other) const {
    return n_ == other.n_ && words_ == other.words_;
  }

 private:
  void check_index(std::uint32_t i) const {
    if (i >= n_) throw std::invalid_argument("player index out of universe");
  }
  void check_universe(const Coalition& other) const {
    if (other.n_ != n_) throw std::invalid_argument("coalition universe mismatch");
  }
  void trim() {
    if (words_.empty()) return;
    std::size_t used = n_ % 64;
    if (used != 0) words_.back() &= (std::uint64_t{1} << used) - 1;
  }

  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

/// The full player set {0, ..., n-1}.
inline Coalition grand_coalition(std::size_t n) { return Coalition::grand(n); }

}  // namespace shapint

#endif  // SHAPINT_COALITION_HPP
