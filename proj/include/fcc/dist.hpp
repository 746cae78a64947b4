#pragma once
// Dyadic-rational probability tables on (B^m)^d.
//
// A point is the concatenation of its coordinates (coordinate 0 first),
// stored as an unsigned index. Probabilities are numerators over 2^n.

#include "fcc/bitcode.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fcc {

using Point = std::uint64_t;

/// Bit widths of the coordinates of a sample space.
class Layout {
 public:
  static constexpr unsigned kMaxTotalBits = 24;

  Layout() = default;
  explicit Layout(std::vector<unsigned> widths);
  static Layout uniform(unsigned d, unsigned m);

  std::size_t dims() const { return widths_.size(); }
  unsigned width(std::size_t coord) const { return widths_.at(coord); }
  const std::vector<unsigned>& widths() const { return widths_; }
  unsigned total_bits() const { return total_bits_; }
  std::uint64_t size() const { return std::uint64_t{1} << total_bits_; }

  bool is_uniform() const;
  /// Common width when uniform; throws otherwise.
  unsigned m() const;

  std::uint64_t coord(Point p, std::size_t i) const;
  Point with_coord(Point p, std::size_t i, std::uint64_t value) const;
  Point compose(std::span<const std::uint64_t> coords) const;

  /// Sub-layout and projected value for a sorted coordinate subset.
  Layout sub(std::span<const std::size_t> coords) const;
  std::uint64_t project(Point p, std::span<const std::size_t> coords) const;

  std::string point_string(Point p) const;
  Point parse_point(const std::string& bits) const;

  friend bool operator==(const Layout&, const Layout&) = default;

 private:
  std::vector<unsigned> widths_;
  std::vector<unsigned> shifts_;
  unsigned total_bits_ = 0;
};

/// Dyadic rational num / 2^bits.
struct Dyadic {
  Nat num = 0;
  unsigned bits = 0;

  Rational value() const { return Rational(num, pow2(bits)); }
  double to_double() const;
  /// Round-down truncation of the binary expansion to `target` bits.
  Dyadic truncated(unsigned target) const;
  friend Dyadic operator*(const Dyadic& a, const Dyadic& b) { return {a.num * b.num, a.bits + b.bits}; }
};

Dyadic dyadic_sum(const Dyadic& a, const Dyadic& b);
/// Largest k-bit dyadic not exceeding q (q in [0, 1]).
Dyadic truncate_rational(const Rational& q, unsigned bits);

enum class Strictness {
  kTopLevel,      // every value < 1, mass within truncation slack
  kIntermediate,  // values may equal 1; mass <= 1 only
};

class DiscreteDistribution {
 public:
  DiscreteDistribution(Layout layout, unsigned n, std::vector<Nat> numerators,
                       Strictness strictness = Strictness::kIntermediate);

  const Layout& layout() const { return layout_; }
  std::size_t d() const { return layout_.dims(); }
  unsigned n() const { return n_; }
  unsigned m() const { return layout_.m(); }

  const std::vector<Nat>& numerators() const { return num_; }
  const Nat& numerator(Point p) const { return num_.at(p); }
  Dyadic dyadic(Point p) const { return {num_.at(p), n_}; }
  Rational probability(Point p) const { return Rational(num_.at(p), pow2(n_)); }
  double probability_double(Point p) const;

  std::vector<Point> support() const;
  Rational mass() const;
  bool is_semimeasure() const { return mass() < 1; }

  friend bool operator==(const DiscreteDistribution&, const DiscreteDistribution&) = default;

 private:
  Layout layout_;
  unsigned n_;
  std::vector<Nat> num_;
};

/// Validated construction from sparse entries (point -> numerator over 2^n).
DiscreteDistribution make_table_distribution(const std::map<Point, Nat>& entries, unsigned d, unsigned m,
                                             unsigned n);
DiscreteDistribution make_table_distribution(const std::map<Point, Nat>& entries, const Layout& layout,
                                             unsigned n);

/// (m', n')-projection: each coordinate keeps its leading bits (width shrinks by m - m'),
/// cylinder masses are summed exactly, then values are truncated to n' bits.
DiscreteDistribution project_precision(const DiscreteDistribution& p, unsigned m_prime, unsigned n_prime);

/// Per-coordinate variant: `widths` gives the new width of every coordinate.
DiscreteDistribution project_widths(const DiscreteDistribution& p, std::span<const unsigned> widths,
                                    unsigned n_prime);

/// Sum over all coordinates not in `coords` (sorted, unique). Exact; keeps n.
DiscreteDistribution marginal(const DiscreteDistribution& p, std::span<const std::size_t> coords);

/// Distribution of `target` coordinates given an assignment of other coordinates,
/// computed exactly and truncated (round-down) to n bits.
DiscreteDistribution conditional(const DiscreteDistribution& p, std::span<const std::size_t> target,
                                 const std::map<std::size_t, std::uint64_t>& given);

/// max |P(a,b|c) - P(a|c) P(b|c)| over a, b and every c with P(c) > 0, exact.
Rational max_cond_dependence(const DiscreteDistribution& p, std::span<const std::size_t> a,
                             std::span<const std::size_t> b, std::span<const std::size_t> c);
bool is_cond_independent(const DiscreteDistribution& p, std::span<const std::size_t> a,
                         std::span<const std::size_t> b, std::span<const std::size_t> c, const Rational& tol);

/// Bits per factor so that truncating l factors keeps the product within 2^{-n-1}:
/// 2n + ceil(log2 l) + 3.
unsigned required_factor_precision(unsigned n, unsigned l);

/// Poisson pmf on {0..s-2}; the upper tail is absorbed into cell s-1.
std::vector<double> discretize_poisson(double lambda, std::size_t support_size);
/// Integer-bin Gaussian masses on [lo, hi]; tails absorbed into the boundary cells.
std::vector<double> discretize_gaussian(double mu, double sigma, std::int64_t lo, std::int64_t hi);
/// Floors every cell to n bits and gives the residual to the largest cell (first on ties),
/// so the numerators sum to exactly 2^n.
std::vector<Nat> round_to_dyadic(std::span<const double> probs, unsigned n);

/// List of environment distributions sharing one layout and precision, plus a prior.
class MultiEnvSystem {
 public:
  MultiEnvSystem(std::vector<DiscreteDistribution> envs, std::vector<Nat> prior, unsigned prior_bits);

  std::size_t env_count() const { return envs_.size(); }
  const DiscreteDistribution& env(std::size_t i) const { return envs_.at(i); }
  Dyadic prior(std::size_t i) const { return {prior_.at(i), prior_bits_}; }

  /// Bits of the environment coordinate appended as the last coordinate.
  unsigned env_bits() const;
  /// The system as one distribution on X^d x [I] (environment coordinate last), exact.
  DiscreteDistribution joint() const;

 private:
  std::vector<DiscreteDistribution> envs_;
  std::vector<Nat> prior_;
  unsigned prior_bits_;
};

/// ceil(log2 count) with ceil_log2(1) == 0.
unsigned ceil_log2(std::uint64_t count);

}  // namespace fcc
