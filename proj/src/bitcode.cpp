#include "fcc/bitcode.hpp"

#include "fcc/error.hpp"

#include <algorithm>
#include <cmath>

namespace fcc {

BitString::BitString(std::string_view bits) {
  bits_.reserve(bits.size());
  for (char c : bits) {
    if (c != '0' && c != '1') throw DomainError("bit string may only contain '0' and '1'");
    bits_.push_back(c == '1');
  }
}

BitString BitString::from_uint(std::uint64_t value, unsigned width) {
  BitString out;
  out.append_uint(value, width);
  return out;
}

BitString BitString::from_nat(const Nat& value, unsigned width) {
  BitString out;
  out.append_nat(value, width);
  return out;
}

void BitString::append(const BitString& other) {
  bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end());
}

void BitString::append_uint(std::uint64_t value, unsigned width) {
  if (width < 64 && (value >> width) != 0) throw DomainError("value does not fit in the requested width");
  for (unsigned i = width; i-- > 0;) bits_.push_back(i < 64 && ((value >> i) & 1U));
}

void BitString::append_nat(const Nat& value, unsigned width) {
  if (value < 0 || (value != 0 && msb_index(value) >= width)) {
    throw DomainError("value does not fit in the requested width");
  }
  for (unsigned i = width; i-- > 0;) bits_.push_back(boost::multiprecision::bit_test(value, i));
}

BitString BitString::substr(std::size_t pos, std::size_t count) const {
  if (pos > bits_.size()) throw DomainError("substr position out of range");
  const std::size_t end = count == npos ? bits_.size() : std::min(bits_.size(), pos + count);
  BitString out;
  out.bits_.assign(bits_.begin() + static_cast<std::ptrdiff_t>(pos),
                   bits_.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

bool BitString::starts_with(const BitString& prefix) const {
  return prefix.size() <= size() && std::equal(prefix.bits_.begin(), prefix.bits_.end(), bits_.begin());
}

Nat BitString::read_nat(std::size_t pos, unsigned width) const {
  if (pos + width > bits_.size()) throw DecodeError("read past end of bit string");
  Nat v = 0;
  for (unsigned i = 0; i < width; ++i) {
    v <<= 1;
    if (bits_[pos + i]) v |= 1;
  }
  return v;
}

std::uint64_t BitString::read_uint(std::size_t pos, unsigned width) const {
  if (width > 64) throw DomainError("read_uint width exceeds 64 bits");
  if (pos + width > bits_.size()) throw DecodeError("read past end of bit string");
  std::uint64_t v = 0;
  for (unsigned i = 0; i < width; ++i) v = (v << 1) | static_cast<std::uint64_t>(bits_[pos + i]);
  return v;
}

std::string BitString::to_string() const {
  std::string s;
  s.reserve(bits_.size());
  for (bool b : bits_) s.push_back(b ? '1' : '0');
  return s;
}

std::vector<std::uint8_t> BitString::to_bytes() const {
  std::vector<std::uint8_t> out((bits_.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80U >> (i % 8));
  }
  return out;
}

BitString BitString::from_bytes(std::span<const std::uint8_t> bytes, std::size_t bit_count) {
  if (bit_count > bytes.size() * 8) throw DecodeError("bit count exceeds available bytes");
  BitString out;
  out.bits_.resize(bit_count);
  for (std::size_t i = 0; i < bit_count; ++i) out.bits_[i] = (bytes[i / 8] >> (7 - i % 8)) & 1U;
  return out;
}

std::strong_ordering operator<=>(const BitString& a, const BitString& b) {
  // Length-increasing lexicographic order, the order that defines B.
  if (auto c = a.size() <=> b.size(); c != 0) return c;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.bits_[i] != b.bits_[i]) return a.bits_[i] ? std::strong_ordering::greater : std::strong_ordering::less;
  }
  return std::strong_ordering::equal;
}

void BitReader::require(std::size_t count) const {
  if (count > remaining()) throw DecodeError("unexpected end of bit stream");
}

bool BitReader::read_bit() {
  require(1);
  return (*bits_)[pos_++];
}

std::uint64_t BitReader::read_uint(unsigned width) {
  require(width);
  const auto v = bits_->read_uint(pos_, width);
  pos_ += width;
  return v;
}

Nat BitReader::read_nat(unsigned width) {
  require(width);
  Nat v = bits_->read_nat(pos_, width);
  pos_ += width;
  return v;
}

BitString BitReader::read_bits(std::size_t count) {
  require(count);
  BitString out = bits_->substr(pos_, count);
  pos_ += count;
  return out;
}

std::size_t msb_index(const Nat& n) {
  if (n <= 0) throw DomainError("msb_index requires a positive integer");
  return static_cast<std::size_t>(boost::multiprecision::msb(n));
}

Nat pow2(std::size_t e) {
  Nat v = 1;
  v <<= e;
  return v;
}

std::size_t literal_length(const Nat& n) {
  if (n < 0) throw DomainError("literal_length of a negative number");
  return msb_index(n + 1);
}

BitString lex_encode(const Nat& n) {
  // B(n) is the binary expansion of n + 1 with its leading 1 removed.
  const std::size_t len = literal_length(n);
  const Nat v = n + 1;
  BitString out;
  for (std::size_t i = len; i-- > 0;) out.push_back(boost::multiprecision::bit_test(v, i));
  return out;
}

Nat lex_decode(const BitString& b) {
  Nat v = 1;
  for (std::size_t i = 0; i < b.size(); ++i) {
    v <<= 1;
    if (b[i]) v |= 1;
  }
  return v - 1;
}

BitString self_delimit(const Nat& n) {
  const std::size_t len = literal_length(n);
  BitString out;
  for (std::size_t i = 0; i < len; ++i) out.push_back(true);
  out.push_back(false);
  out.append(lex_encode(n));
  return out;
}

std::size_t self_delimited_length(const Nat& n) { return 2 * literal_length(n) + 1; }

Nat read_self_delimited(BitReader& reader) {
  std::size_t len = 0;
  while (true) {
    if (reader.at_end()) throw DecodeError("unterminated unary length prefix");
    if (!reader.read_bit()) break;
    ++len;
  }
  if (len > reader.remaining()) throw DecodeError("self-delimited payload is truncated");
  return lex_decode(reader.read_bits(len));
}

ParsedNat parse_self_delimited(const BitString& stream) {
  BitReader reader(stream);
  Nat value = read_self_delimited(reader);
  return {std::move(value), stream.substr(reader.position())};
}

BitString pair_encode(const Nat& m, const Nat& n) { return self_delimit(m) + lex_encode(n); }

std::pair<Nat, Nat> pair_decode(const BitString& bits) {
  auto [m, rest] = parse_self_delimited(bits);
  return {std::move(m), lex_decode(rest)};
}

Rational kraft_sum(std::span<const std::size_t> lengths) {
  if (lengths.empty()) return Rational(0);
  const std::size_t longest = *std::max_element(lengths.begin(), lengths.end());
  Nat num = 0;
  for (std::size_t l : lengths) num += pow2(longest - l);
  return Rational(num, pow2(longest));
}

double log2_nat(const Nat& n) {
  if (n <= 0) throw DomainError("log2 of a non-positive integer");
  const std::size_t top = msb_index(n);
  if (top < 63) return std::log2(static_cast<double>(static_cast<std::uint64_t>(n)));
  // Keep the leading 63 bits; the dropped tail is below double resolution.
  const std::size_t shift = top - 62;
  const auto head = static_cast<std::uint64_t>(n >> shift);
  return std::log2(static_cast<double>(head)) + static_cast<double>(shift);
}

}  // namespace fcc
