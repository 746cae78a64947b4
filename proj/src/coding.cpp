#include "fcc/coding.hpp"

#include "fcc/error.hpp"

#include <cmath>
#include <queue>
#include <tuple>

namespace fcc {

Codebook::Codebook(Layout layout, std::map<Point, BitString> words)
    : layout_(std::move(layout)), words_(std::move(words)) {
  trie_.emplace_back();
  for (const auto& [point, word] : words_) {
    if (point >= layout_.size()) throw DomainError("codebook point lies outside the sample space");
    std::size_t node = 0;
    for (std::size_t i = 0; i < word.size(); ++i) {
      if (trie_[node].leaf) throw DomainError("codebook is not prefix-free");
      const int bit = word[i] ? 1 : 0;
      if (trie_[node].child[bit] < 0) {
        trie_[node].child[bit] = static_cast<int>(trie_.size());
        trie_.emplace_back();
      }
      node = static_cast<std::size_t>(trie_[node].child[bit]);
    }
    if (trie_[node].leaf || trie_[node].child[0] >= 0 || trie_[node].child[1] >= 0) {
      throw DomainError("codebook is not prefix-free");
    }
    trie_[node].leaf = true;
    trie_[node].point = point;
  }
}

const BitString& Codebook::word(Point p) const {
  auto it = words_.find(p);
  if (it == words_.end()) throw DomainError("point " + layout_.point_string(p) + " is not in the codebook");
  return it->second;
}

std::vector<std::size_t> Codebook::lengths() const {
  std::vector<std::size_t> out;
  out.reserve(words_.size());
  for (const auto& [p, w] : words_) out.push_back(w.size());
  return out;
}

bool Codebook::is_prefix_free(const std::map<Point, BitString>& words) {
  for (auto a = words.begin(); a != words.end(); ++a) {
    for (auto b = words.begin(); b != words.end(); ++b) {
      if (a != b && b->second.starts_with(a->second)) return false;
    }
  }
  return true;
}

Codebook huffman_build(const DiscreteDistribution& p) {
  struct Node {
    Nat mass;
    Point min_point;
    int left = -1, right = -1;
  };
  std::vector<Node> nodes;
  for (Point x : p.support()) nodes.push_back({p.numerator(x), x});
  if (nodes.size() < 2) throw DomainError("Huffman coding needs a support of at least two points");

  auto later = [&](int a, int b) {
    return std::tie(nodes[a].mass, nodes[a].min_point) > std::tie(nodes[b].mass, nodes[b].min_point);
  };
  std::priority_queue<int, std::vector<int>, decltype(later)> queue(later);
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) queue.push(i);
  while (queue.size() > 1) {
    const int a = queue.top();
    queue.pop();
    const int b = queue.top();
    queue.pop();
    Node merged{nodes[a].mass + nodes[b].mass, std::min(nodes[a].min_point, nodes[b].min_point), a, b};
    nodes.push_back(std::move(merged));
    queue.push(static_cast<int>(nodes.size()) - 1);
  }

  std::map<Point, BitString> words;
  std::vector<std::pair<int, BitString>> stack{{queue.top(), BitString()}};
  while (!stack.empty()) {
    auto [id, prefix] = std::move(stack.back());
    stack.pop_back();
    const Node& node = nodes[id];
    if (node.left < 0) {
      words.emplace(node.min_point, std::move(prefix));
      continue;
    }
    BitString zero = prefix, one = prefix;
    zero.push_back(false);
    one.push_back(true);
    stack.emplace_back(node.left, std::move(zero));
    stack.emplace_back(node.right, std::move(one));
  }
  return Codebook(p.layout(), std::move(words));
}

ShannonLength shannon_length(const DiscreteDistribution& p, Point x) {
  const Nat& num = p.numerator(x);
  if (num == 0) throw DomainError("Shannon length of a zero-probability point");
  // -log2(num / 2^n) lies in (n - msb - 1, n - msb], with equality iff num is a power of two.
  const std::size_t top = msb_index(num);
  const double real = static_cast<double>(p.n()) - log2_nat(num);
  return {p.n() - top, real};
}

BitString encode_sequence(const Codebook& c, std::span<const Point> xs) {
  BitString out;
  for (Point x : xs) out.append(c.word(x));
  return out;
}

std::vector<Point> decode_sequence(const Codebook& c, const BitString& bits) {
  std::vector<Point> out;
  std::size_t node = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const int next = c.trie_[node].child[bits[i] ? 1 : 0];
    if (next < 0) throw DecodeError("bit stream contains no valid code word at bit " + std::to_string(i));
    node = static_cast<std::size_t>(next);
    if (c.trie_[node].leaf) {
      out.push_back(c.trie_[node].point);
      node = 0;
    }
  }
  if (node != 0) throw DecodeError("bit stream ends inside a code word");
  return out;
}

DiscreteDistribution code_to_semimeasure(const Codebook& c) {
  std::size_t longest = 0;
  for (const auto& [p, w] : c.words()) longest = std::max(longest, w.size());
  std::vector<Nat> table(c.layout().size(), 0);
  for (const auto& [p, w] : c.words()) table[p] = pow2(longest - w.size());
  return DiscreteDistribution(c.layout(), static_cast<unsigned>(longest), std::move(table));
}

Rational expected_length_exact(const Codebook& c, const DiscreteDistribution& p) {
  if (c.layout() != p.layout()) throw DomainError("codebook and distribution live on different spaces");
  Nat acc = 0;
  for (Point x : p.support()) acc += p.numerator(x) * c.word(x).size();
  return Rational(acc, pow2(p.n()));
}

double expected_length(const Codebook& c, const DiscreteDistribution& p) {
  return expected_length_exact(c, p).convert_to<double>();
}

double entropy_bits(const DiscreteDistribution& p) {
  long double h = 0;
  for (Point x : p.support()) {
    const long double prob = p.probability_double(x);
    const long double surprisal = static_cast<long double>(p.n()) - static_cast<long double>(log2_nat(p.numerator(x)));
    h += prob * surprisal;
  }
  return static_cast<double>(h);
}

}  // namespace fcc
