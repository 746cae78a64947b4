#include "fcc/ufcc.hpp"

#include "fcc/bitcode.hpp"
#include "fcc/cfmp.hpp"
#include "fcc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fcc {

UfccVariant UfccVariant::comp_cbn(std::uint64_t M, std::uint64_t N) {
  if (M < 1 || N < 1) throw DomainError("CompCBN needs M >= 1 and N >= 1");
  return {Tag::kCompCbn, M, N};
}

FcBreakdown::FcBreakdown(std::vector<LedgerEntry> components, double data_bits)
    : components_(std::move(components)), data_bits_(data_bits) {}

void FcBreakdown::add(std::string label, double bits) { components_.push_back({std::move(label), bits}); }

double FcBreakdown::model_bits() const {
  double s = 0.0;
  for (const auto& e : components_) s += e.bits;
  return s;
}

double FcBreakdown::entry(const std::string& label) const {
  for (const auto& e : components_) {
    if (e.label == label) return e.bits;
  }
  throw DomainError("no ledger entry '" + label + "'");
}

nlohmann::json FcBreakdown::to_json() const {
  nlohmann::json comp = nlohmann::json::object();
  for (const auto& e : components_) comp[e.label] = e.bits;
  return {{"components", comp}, {"model_bits", model_bits()}, {"data_bits", data_bits_}, {"total", total()}};
}

unsigned table_entry_bits(unsigned n) { return 2 * n + 4; }

namespace {

void require_positive(std::initializer_list<unsigned> params) {
  for (auto p : params) {
    if (p < 1) throw DomainError("ledger parameters must be >= 1");
  }
}

double pow2d(double e) { return std::exp2(e); }

}  // namespace

FcBreakdown model_bits_tabcbn(unsigned m, unsigned d, unsigned n, unsigned I) {
  require_positive({m, d, n, I});
  const double entry = table_entry_bits(n);
  const double rest = pow2d(static_cast<double>(m) * (d - 1));
  FcBreakdown b;
  b.add("shifted_tables", entry * rest * I);
  b.add("marginal_table", entry * rest);
  b.add("env_prior", entry * I);
  b.add("feature_mechanisms", static_cast<double>(I + 3) * (d + 1));
  b.add("featurization", 2.0 * (I + 2) * std::log2(2.0 * I + 3));
  b.add("selection", I * std::log2(static_cast<double>(I)));
  return b;
}

double tabcbn_table_bits(const FcBreakdown& ledger) {
  return ledger.entry("shifted_tables") + ledger.entry("marginal_table") + ledger.entry("env_prior");
}

double model_bits_density(unsigned m, unsigned d, unsigned n, unsigned I) {
  require_positive({m, d, n, I});
  return static_cast<double>(n) * I * pow2d(static_cast<double>(m) * d);
}

FcBreakdown model_bits_tables(const Cfmp& alpha, unsigned n) {
  FcBreakdown b;
  const unsigned width = table_entry_bits(n);
  for (const auto& mech : alpha.mechanisms()) {
    if (mech.precision() + 1 > width) throw DomainError("mechanism '" + mech.name() + "' is too precise for n");
    b.add("table " + mech.name(), static_cast<double>(width) * static_cast<double>(mech.table().size()));
  }
  return b;
}

Nat binomial(std::uint64_t M, std::uint64_t k) {
  if (k > M) return 0;
  k = std::min(k, M - k);
  Nat r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r *= M - k + i;
    r /= i;
  }
  return r;
}

Nat factorial(std::uint64_t k) {
  Nat r = 1;
  for (std::uint64_t i = 2; i <= k; ++i) r *= i;
  return r;
}

Nat stirling2(std::uint64_t N, std::uint64_t k) {
  if (k > N) throw DomainError("stirling2 needs k <= N");
  // row[j] = S(i, j) for the current i
  std::vector<Nat> row(k + 1, 0);
  row[0] = 1;
  for (std::uint64_t i = 1; i <= N; ++i) {
    for (std::uint64_t j = std::min(i, k); j >= 1; --j) row[j] = j * row[j] + row[j - 1];
    row[0] = 0;
  }
  return row[k];
}

FcBreakdown strategy2_ledger(std::uint64_t N, std::uint64_t M, std::uint64_t k) {
  if (k < 1 || k > std::min(N, M)) throw DomainError("strategy 2 needs 1 <= k <= min(N, M)");
  FcBreakdown b;
  b.add("subset", log2_nat(binomial(M, k)));
  b.add("partition", log2_nat(stirling2(N, k)));
  b.add("block_map", log2_nat(factorial(k)));
  b.add("k", std::log2(static_cast<double>(k)));
  return b;
}

double strategy_bits(std::uint64_t N, std::uint64_t M, std::uint64_t k, int strategy) {
  if (N < 1 || M < 1) throw DomainError("strategy costs need N >= 1 and M >= 1");
  if (strategy == 1) return static_cast<double>(N) * std::log2(static_cast<double>(M));
  if (strategy == 2) return strategy2_ledger(N, M, k).model_bits();
  throw DomainError("strategy must be 1 or 2");
}

double strategy_diff(std::uint64_t N, std::uint64_t M, std::uint64_t k) {
  return strategy_bits(N, M, k, 2) - strategy_bits(N, M, k, 1);
}

double model_bits_tabinv(unsigned m, unsigned n, std::uint64_t orbit_count, TabInvVariant variant) {
  require_positive({m, n});
  const double values = pow2d(m);
  if (orbit_count < 1 || static_cast<double>(orbit_count) > values) {
    throw DomainError("orbit count must lie in 1..2^m");
  }
  const double entry = table_entry_bits(n);
  if (variant == TabInvVariant::kInvariant) return entry * (static_cast<double>(orbit_count) * values + values);
  return entry * (values * values + values);
}

double fc_objective(double model_bits, double data_bits, FcForm form) {
  if (model_bits < 0 || data_bits < 0) throw DomainError("bit counts must be nonnegative");
  return form == FcForm::kExperiment ? data_bits + 2.0 * model_bits + 1.0 : data_bits + model_bits;
}

BayesTwoPart bayes_vs_twopart(std::span<const DiscreteDistribution> models, std::span<const double> prior,
                              std::span<const Point> xs) {
  if (models.empty() || models.size() != prior.size()) throw DomainError("one prior weight per model is required");
  double wsum = 0.0;
  for (double w : prior) {
    if (!(w >= 0.0)) throw DomainError("prior weights must be nonnegative");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw DomainError("prior weights must sum to 1");

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;  // log2(P_theta(xs) W(theta))
  terms.reserve(models.size());
  for (std::size_t t = 0; t < models.size(); ++t) {
    double s = prior[t] > 0.0 ? std::log2(prior[t]) : kNegInf;
    for (Point x : xs) {
      if (s == kNegInf) break;
      if (x >= models[t].layout().size()) throw DomainError("data point outside the model's sample space");
      const double p = models[t].probability_double(x);
      s = p > 0.0 ? s + std::log2(p) : kNegInf;
    }
    terms.push_back(s);
  }
  const double best = *std::max_element(terms.begin(), terms.end());
  if (best == kNegInf) throw DomainError("every model assigns zero probability to the data");
  double sum = 0.0;
  for (double t : terms) {
    if (t != kNegInf) sum += std::exp2(t - best);
  }
  return {-(best + std::log2(sum)), -best};
}

}  // namespace fcc
