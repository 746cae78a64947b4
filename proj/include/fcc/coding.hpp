#pragma once
// Prefix codebooks over points of a sample space.

#include "fcc/bitcode.hpp"
#include "fcc/dist.hpp"

#include <map>
#include <span>
#include <vector>

namespace fcc {

/// Injective, prefix-free map from points to code words.
class Codebook {
 public:
  /// Throws DomainError if the words are not prefix-free.
  Codebook(Layout layout, std::map<Point, BitString> words);

  const Layout& layout() const { return layout_; }
  const std::map<Point, BitString>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }
  bool contains(Point p) const { return words_.count(p) != 0; }
  const BitString& word(Point p) const;
  std::vector<std::size_t> lengths() const;

  /// Structural check: no word is a prefix of another.
  static bool is_prefix_free(const std::map<Point, BitString>& words);

 private:
  struct TrieNode {
    int child[2] = {-1, -1};
    bool leaf = false;
    Point point = 0;
  };

  friend std::vector<Point> decode_sequence(const Codebook&, const BitString&);

  Layout layout_;
  std::map<Point, BitString> words_;
  std::vector<TrieNode> trie_;
};

/// Huffman code of the support of p. Merges order nodes by (mass, smallest point);
/// the smaller node becomes the 0-branch.
Codebook huffman_build(const DiscreteDistribution& p);

struct ShannonLength {
  std::size_t bits;  // ceil(-log2 P(x))
  double real;       // -log2 P(x)
};
ShannonLength shannon_length(const DiscreteDistribution& p, Point x);

BitString encode_sequence(const Codebook& c, std::span<const Point> xs);
std::vector<Point> decode_sequence(const Codebook& c, const BitString& bits);

/// P'(x) = 2^{-|c(x)|}; a semi-measure by Kraft.
DiscreteDistribution code_to_semimeasure(const Codebook& c);

Rational expected_length_exact(const Codebook& c, const DiscreteDistribution& p);
double expected_length(const Codebook& c, const DiscreteDistribution& p);

/// Shannon entropy in bits of the (possibly defective) table, -sum p log2 p.
double entropy_bits(const DiscreteDistribution& p);

}  // namespace fcc
