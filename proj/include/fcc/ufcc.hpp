#pragma once
// Analytic coding-length models for universal finite codebook computers and the
// two-part objective built on them.

#include "fcc/dist.hpp"

#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <vector>

namespace fcc {

class Cfmp;

/// Closed model registry; the index is written self-delimited ahead of the payload.
enum class ModelKind : std::uint32_t { kRawTable = 0, kTabCbn = 1, kInvariant = 2, kCompCbn = 3 };

struct UfccVariant {
  enum class Tag { kUnif, kTabCbn, kCompCbn, kTabInv };
  Tag tag = Tag::kUnif;
  std::uint64_t M = 0;  // mechanism pool size (CompCBN only)
  std::uint64_t N = 0;  // slot count (CompCBN only)

  static UfccVariant comp_cbn(std::uint64_t M, std::uint64_t N);
};

struct LedgerEntry {
  std::string label;
  double bits;
};

class FcBreakdown {
 public:
  FcBreakdown() = default;
  explicit FcBreakdown(std::vector<LedgerEntry> components, double data_bits = 0.0);

  void add(std::string label, double bits);
  void set_data_bits(double bits) { data_bits_ = bits; }

  const std::vector<LedgerEntry>& components() const { return components_; }
  double model_bits() const;
  double data_bits() const { return data_bits_; }
  double total() const { return model_bits() + data_bits_; }
  /// Bits of the entry with this label; throws if absent.
  double entry(const std::string& label) const;

  nlohmann::json to_json() const;

 private:
  std::vector<LedgerEntry> components_;
  double data_bits_ = 0.0;
};

/// Width of one stored table entry at output precision n.
unsigned table_entry_bits(unsigned n);

/// Prop.-17 family P(X, e_i) = P^i(X1 | X_S, e_i) P(X2..Xd) P(e_i) under U_TabCBN.
FcBreakdown model_bits_tabcbn(unsigned m, unsigned d, unsigned n, unsigned I);
/// Sum of the shifted, marginal and env-prior table entries of model_bits_tabcbn.
double tabcbn_table_bits(const FcBreakdown& ledger);
/// Joint probability table of precision n per environment.
double model_bits_density(unsigned m, unsigned d, unsigned n, unsigned I);

/// Table cost of every mechanism of a CFMP stored at table_entry_bits(n) per entry.
FcBreakdown model_bits_tables(const Cfmp& alpha, unsigned n);

Nat binomial(std::uint64_t M, std::uint64_t k);
Nat factorial(std::uint64_t k);
/// Partitions of an N-set into k nonempty blocks.
Nat stirling2(std::uint64_t N, std::uint64_t k);

/// Strategy 1 selects each of N slots from M mechanisms; strategy 2 writes k,
/// the k-subset, the partition of the slots and the block-to-mechanism map.
double strategy_bits(std::uint64_t N, std::uint64_t M, std::uint64_t k, int strategy);
/// A(k) = strategy 2 - strategy 1.
double strategy_diff(std::uint64_t N, std::uint64_t M, std::uint64_t k);
/// Itemized strategy-2 cost.
FcBreakdown strategy2_ledger(std::uint64_t N, std::uint64_t M, std::uint64_t k);

enum class TabInvVariant { kInvariant, kMarkov };
double model_bits_tabinv(unsigned m, unsigned n, std::uint64_t orbit_count, TabInvVariant variant);

enum class FcForm { kExperiment, kGeneral };
/// Experiment form charges the model twice plus one separator bit.
double fc_objective(double model_bits, double data_bits, FcForm form);

struct BayesTwoPart {
  double bayes_bits;
  double twopart_bits;
};
BayesTwoPart bayes_vs_twopart(std::span<const DiscreteDistribution> models, std::span<const double> prior,
                              std::span<const Point> xs);

}  // namespace fcc
