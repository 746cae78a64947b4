#pragma once
// Test-side reference implementations. They avoid the library's algorithms
// (no tries, no recurrences shared with the code under test) so agreement is
// meaningful.

#include "fcc/bitcode.hpp"

#include <algorithm>
#include <bitset>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using fcc::Nat;
using fcc::Rational;

// B(n): binary expansion of n+1 without its leading one.
inline std::string lex_word(std::uint64_t n) {
  std::string s = std::bitset<64>(n + 1).to_string();
  s = s.substr(s.find('1'));
  return s.substr(1);
}

// Counts set partitions of {0..N-1} into exactly k blocks by enumerating
// restricted growth strings.
inline std::uint64_t partitions(unsigned N, unsigned k) {
  if (N == 0) return k == 0 ? 1 : 0;
  std::vector<unsigned> a(N, 0);
  std::uint64_t count = 0;
  std::function<void(unsigned, unsigned)> rec = [&](unsigned i, unsigned used) {
    if (i == N) {
      count += used == k ? 1 : 0;
      return;
    }
    if (used + (N - i) < k) return;
    for (unsigned v = 0; v <= used && v < k; ++v) {
      a[i] = v;
      rec(i + 1, std::max(used, v + 1));
    }
  };
  rec(0, 0);
  return count;
}

inline Nat pascal(unsigned M, unsigned k) {
  std::vector<std::vector<Nat>> t(M + 1);
  for (unsigned i = 0; i <= M; ++i) {
    t[i].assign(i + 1, 1);
    for (unsigned j = 1; j < i; ++j) t[i][j] = t[i - 1][j - 1] + t[i - 1][j];
  }
  return k <= M ? t[M][k] : Nat(0);
}

// Minimum expected length over every length vector with lengths in 1..max_len
// (plus the empty word for a single symbol) satisfying Kraft's inequality.
inline Rational optimal_expected_length(const std::vector<Rational>& p, unsigned max_len) {
  const std::size_t n = p.size();
  if (n == 1) return 0;
  Rational best = -1;
  std::vector<unsigned> len(n, 1);
  while (true) {
    Rational kraft = 0, el = 0;
    for (std::size_t i = 0; i < n; ++i) {
      kraft += Rational(1, Nat(1) << len[i]);
      el += p[i] * len[i];
    }
    if (kraft <= 1 && (best < 0 || el < best)) best = el;
    std::size_t i = 0;
    while (i < n && ++len[i] > max_len) len[i++] = 1;
    if (i == n) break;
  }
  return best;
}

// Greedy parse of a stream against a word list by trying every word at each
// position; returns false if no word matches.
inline bool naive_parse(const std::map<std::uint64_t, std::string>& words, const std::string& bits,
                        std::vector<std::uint64_t>& out) {
  std::size_t pos = 0;
  while (pos < bits.size()) {
    bool hit = false;
    for (const auto& [sym, w] : words) {
      if (bits.compare(pos, w.size(), w) == 0 && pos + w.size() <= bits.size()) {
        out.push_back(sym);
        pos += w.size();
        hit = true;
        break;
      }
    }
    if (!hit) return false;
  }
  return true;
}

// Extracts coordinate i of a point with per-coordinate widths (coordinate 0 most significant).
inline std::uint64_t coord(std::uint64_t x, const std::vector<unsigned>& widths, std::size_t i) {
  unsigned shift = 0;
  for (std::size_t j = i + 1; j < widths.size(); ++j) shift += widths[j];
  return (x >> shift) & ((std::uint64_t{1} << widths[i]) - 1);
}

inline std::uint64_t concat(std::uint64_t x, const std::vector<unsigned>& widths, const std::vector<std::size_t>& coords) {
  std::uint64_t v = 0;
  for (auto c : coords) v = (v << widths[c]) | coord(x, widths, c);
  return v;
}

// A random dyadic table with numerators summing to exactly 2^n over `size` cells.
inline std::vector<Nat> random_dyadic(std::mt19937_64& rng, std::size_t size, unsigned n, bool allow_zero = true) {
  std::vector<std::uint64_t> cuts;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::size_t i = 0; i + 1 < size; ++i) cuts.push_back(rng() % (total + 1));
  cuts.push_back(0);
  cuts.push_back(total);
  std::sort(cuts.begin(), cuts.end());
  std::vector<Nat> out;
  for (std::size_t i = 0; i < size; ++i) out.push_back(cuts[i + 1] - cuts[i]);
  if (!allow_zero) {
    // Move one unit into every empty cell from the largest cell.
    for (auto& v : out) {
      if (v == 0) {
        auto big = std::max_element(out.begin(), out.end());
        --*big;
        v = 1;
      }
    }
  }
  return out;
}

}  // namespace oracle
