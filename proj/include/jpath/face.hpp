#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "jpath/errors.hpp"

namespace jpath {

/// Subset of node indices whose queue is pinned at zero. Nodes are 0-based
/// internally; rendered labels are 1-based. Stored as a bitmask, so K <= 32.
struct FaceLabel {
  std::uint32_t bits = 0;

  constexpr FaceLabel() = default;
  constexpr explicit FaceLabel(std::uint32_t b) : bits(b) {}

  static constexpr FaceLabel empty_face() { return FaceLabel{0}; }
  static constexpr FaceLabel full_face(int K) {
    return FaceLabel{K >= 32 ? ~0u : ((1u << K) - 1u)};
  }
  static FaceLabel from_indices(const std::vector<int>& idx) {
    FaceLabel f;
    for (int k : idx) f.bits |= (1u << k);
    return f;
  }

  bool contains(int k) const { return (bits >> k) & 1u; }
  FaceLabel with(int k) const { return FaceLabel{bits | (1u << k)}; }
  FaceLabel without(int k) const { return FaceLabel{bits & ~(1u << k)}; }
  int count() const { return std::popcount(bits); }
  bool empty() const { return bits == 0; }
  bool subset_of(FaceLabel o) const { return (bits & ~o.bits) == 0; }
  FaceLabel complement(int K) const {
    return FaceLabel{full_face(K).bits & ~bits};
  }

  std::vector<int> indices() const {
    std::vector<int> out;
    for (int k = 0; k < 32; ++k)
      if (contains(k)) out.push_back(k);
    return out;
  }

  // Label with 1-based node ids, e.g. "J=1|3"; the empty face prints "J=".
  std::string label() const {
    std::string s = "J=";
    bool first = true;
    for (int k : indices()) {
      if (!first) s += '|';
      s += std::to_string(k + 1);
      first = false;
    }
    return s;
  }

  friend bool operator==(FaceLabel a, FaceLabel b) { return a.bits == b.bits; }
  friend bool operator!=(FaceLabel a, FaceLabel b) { return a.bits != b.bits; }
};

// Visits every subset of `super`, including `super` itself and the empty set.
template <typename F>
void for_each_subset(FaceLabel super, F&& fn) {
  std::uint32_t sub = super.bits;
  while (true) {
    fn(FaceLabel{sub});
    if (sub == 0) break;
    sub = (sub - 1) & super.bits;
  }
}

}  // namespace jpath
