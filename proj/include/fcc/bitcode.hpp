#pragma once
// Exact binary-string arithmetic: the length-increasing lexicographic code,
// literal lengths, self-delimiting codes and Kraft sums.

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fcc {

using Nat = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Finite binary word, most significant (first transmitted) bit first.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::string_view bits);  // characters '0'/'1'

  static BitString from_uint(std::uint64_t value, unsigned width);
  static BitString from_nat(const Nat& value, unsigned width);

  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  bool operator[](std::size_t i) const { return bits_[i]; }

  void push_back(bool bit) { bits_.push_back(bit); }
  void append(const BitString& other);
  void append_uint(std::uint64_t value, unsigned width);
  void append_nat(const Nat& value, unsigned width);

  BitString substr(std::size_t pos, std::size_t count = npos) const;
  bool starts_with(const BitString& prefix) const;

  /// Interprets [pos, pos+width) as an unsigned big-endian integer.
  Nat read_nat(std::size_t pos, unsigned width) const;
  std::uint64_t read_uint(std::size_t pos, unsigned width) const;

  std::string to_string() const;

  /// Packs bits MSB-first into bytes; the last byte is zero padded.
  std::vector<std::uint8_t> to_bytes() const;
  static BitString from_bytes(std::span<const std::uint8_t> bytes, std::size_t bit_count);

  friend BitString operator+(BitString lhs, const BitString& rhs) {
    lhs.append(rhs);
    return lhs;
  }
  friend bool operator==(const BitString&, const BitString&) = default;
  friend std::strong_ordering operator<=>(const BitString& a, const BitString& b);

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<bool> bits_;
};

/// Sequential reader over a BitString; throws DecodeError when reading past the end.
class BitReader {
 public:
  explicit BitReader(const BitString& bits, std::size_t pos = 0) : bits_(&bits), pos_(pos) {}

  bool read_bit();
  std::uint64_t read_uint(unsigned width);
  Nat read_nat(unsigned width);
  BitString read_bits(std::size_t count);

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bits_->size() - pos_; }
  bool at_end() const { return pos_ == bits_->size(); }

 private:
  void require(std::size_t count) const;

  const BitString* bits_;
  std::size_t pos_;
};

// Lexicographic code B: 0 -> "", 1 -> "0", 2 -> "1", 3 -> "00", ...
BitString lex_encode(const Nat& n);
Nat lex_decode(const BitString& b);

/// l(n) = floor(log2(n + 1)), the exact length of lex_encode(n).
std::size_t literal_length(const Nat& n);

/// 1^{l(n)} 0 B(n); length 2 l(n) + 1.
BitString self_delimit(const Nat& n);
std::size_t self_delimited_length(const Nat& n);

struct ParsedNat {
  Nat value;
  BitString rest;
};

/// Inverse of self_delimit on any stream that begins with a self-delimited prefix.
ParsedNat parse_self_delimited(const BitString& stream);
Nat read_self_delimited(BitReader& reader);

/// <m, n> = self_delimit(m) ++ B(n).
BitString pair_encode(const Nat& m, const Nat& n);
std::pair<Nat, Nat> pair_decode(const BitString& bits);

/// Sum of 2^{-l_i}, exact.
Rational kraft_sum(std::span<const std::size_t> lengths);

/// Real-valued log2 for arbitrarily large naturals (n > 0).
double log2_nat(const Nat& n);

/// Index of the most significant set bit (n > 0).
std::size_t msb_index(const Nat& n);

/// Exact 2^e.
Nat pow2(std::size_t e);

}  // namespace fcc
