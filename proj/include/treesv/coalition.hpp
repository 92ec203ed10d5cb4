#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

namespace treesv {

// A subset of player (feature) indices over a fixed universe {0..M-1},
// stored as a bit pattern. Membership and subset queries are exact.
class Coalition {
 public:
  explicit Coalition(int universe_size)
      : universe_(universe_size), words_((universe_size + 63) / 64, 0) {}

  static Coalition from_members(std::span<const int> members, int universe_size) {
    Coalition s(universe_size);
    for (int m : members) s.add(m);
    return s;
  }

  void add(int i) { words_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
  void remove(int i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }

  bool contains(int i) const {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }

  bool is_subset_of(const Coalition& other) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      if (words_[w] & ~other.words_[w]) return false;
    }
    return true;
  }

  int count() const {
    int c = 0;
    for (std::uint64_t w : words_) c += std::popcount(w);
    return c;
  }

  int universe_size() const { return universe_; }

  bool operator==(const Coalition&) const = default;

 private:
  int universe_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace treesv
