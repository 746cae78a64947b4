#pragma once
// Two-part code files: a model from a closed registry followed by the Huffman
// code of the data under that model's induced distribution.

#include "fcc/cfmp.hpp"
#include "fcc/coding.hpp"
#include "fcc/select.hpp"
#include "fcc/ufcc.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace fcc {

struct CbnModel {
  Layout layout;
  std::vector<CbnFactor> factors;
  unsigned output_precision;
};

struct InvariantModel {
  Layout layout;  // two coordinates
  std::vector<std::uint32_t> orbit_of;  // quotient of coordinate 2
  ProbMechanism f1;                    // f1(x1 | orbit of x2)
  ProbMechanism f2;                    // f2(x2)
  unsigned output_precision;
};

/// Covariate-shift model: a pool of Poisson mechanisms for X|E, one pool member per
/// environment slot, a shared N(X, sigma) channel for Y|X and a uniform env prior.
struct CompCbnModel {
  std::vector<double> pool_lambdas;
  std::vector<std::size_t> slots;  // pool index per environment
  std::size_t support_size;
  double y_sigma;
  unsigned precision;

  std::size_t k() const;
};

using Model = std::variant<DiscreteDistribution, CbnModel, InvariantModel, CompCbnModel>;

ModelKind model_kind(const Model& model);
Cfmp model_cfmp(const Model& model);
DiscreteDistribution model_distribution(const Model& model);
/// Analytic model cost under the UFCC matching the registry entry.
FcBreakdown model_ledger(const Model& model);

struct ArtifactHeader {
  static constexpr std::array<std::uint8_t, 4> kMagic{'F', 'C', 'C', '1'};
  static constexpr std::uint8_t kVersion = 1;
  static constexpr std::size_t kBytes = 13;

  std::uint16_t m = 0;  // 0 when the layout widths differ; the payload then lists them
  std::uint16_t d = 0;
  std::uint16_t n = 0;
  std::uint16_t I = 1;

  friend bool operator==(const ArtifactHeader&, const ArtifactHeader&) = default;
};

struct EncodedArtifact {
  ArtifactHeader header;
  ModelKind kind;
  BitString payload;
  BitString stream;
  std::vector<LedgerEntry> payload_sections;  // labeled split of the payload bits

  std::size_t header_bits() const { return ArtifactHeader::kBytes * 8; }
  std::size_t index_bits() const;
  static constexpr std::size_t framing_bits() { return 32 + 64; }
  std::size_t body_bits() const;
  std::size_t padding_bits() const;
  std::size_t total_bits() const;

  std::vector<std::uint8_t> to_bytes() const;
  /// Parses framing only; the payload is validated by decode_dataset.
  static EncodedArtifact from_bytes(std::span<const std::uint8_t> bytes);
};

/// Refuses data points of zero mass under the model.
EncodedArtifact encode_dataset(const Model& model, std::span<const Point> data, std::uint16_t env_count = 1);

struct DecodedDataset {
  Model model;
  std::vector<Point> data;
};
DecodedDataset decode_dataset(const EncodedArtifact& artifact);
DecodedDataset decode_bytes(std::span<const std::uint8_t> bytes);

struct ReconcileReport {
  double payload_bits;
  double ledger_model_bits;
  double table_section_bits;   // payload bits spent on mechanism tables
  double ledger_table_bits;    // the matching ledger entries
  double stream_bits;
  double real_nll_bits;        // sum of -log2 P(x)
  double shannon_bits;         // sum of ceil(-log2 P(x))
  double huffman_minus_nll;
  std::size_t data_count;
  bool shannon_gap_ok;         // 0 <= shannon - nll < |data| (0 when empty)
  std::vector<LedgerEntry> overheads;  // header, index, framing, padding

  nlohmann::json to_json() const;
};
ReconcileReport reconcile_bits(const EncodedArtifact& artifact, const FcBreakdown& ledger);

// Ranking helpers for the strategy-2 description.
Nat rank_subset(std::span<const std::size_t> subset, std::size_t M);
std::vector<std::size_t> unrank_subset(Nat rank, std::size_t M, std::size_t k);
/// Restricted-growth string (blocks numbered by first use) with exactly k blocks.
Nat rank_rgs(std::span<const std::size_t> rgs, std::size_t k);
std::vector<std::size_t> unrank_rgs(Nat rank, std::size_t N, std::size_t k);
Nat rank_permutation(std::span<const std::size_t> perm);
std::vector<std::size_t> unrank_permutation(Nat rank, std::size_t k);

// JSON forms.
nlohmann::json distribution_to_json(const DiscreteDistribution& p);
DiscreteDistribution distribution_from_json(const nlohmann::json& j);
nlohmann::json codebook_to_json(const Codebook& c);
nlohmann::json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace fcc
