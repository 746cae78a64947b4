#pragma once
// Conditional feature-mechanism programs: probabilistic mechanisms bound to
// features of the input point, multiplied (and optionally marginalized over a
// latent point) to compute a probability for every point of the sample space.

#include "fcc/dist.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace fcc {

/// Parametric families that expand deterministically into tables.
struct UniformFamily {};
struct PoissonFamily {
  double lambda;
};
/// Integer-binned Gaussian on {0 .. 2^v - 1}; when `shift_by_condition` the mean is
/// `mu` plus the conditioning value.
struct GaussianFamily {
  double mu;
  double sigma;
  bool shift_by_condition = false;
};
using MechanismFamily = std::variant<UniformFamily, PoissonFamily, GaussianFamily>;

/// Table B^v x B^c -> dyadic values over 2^precision, indexed (cond << v) | value.
class ProbMechanism {
 public:
  ProbMechanism(std::string name, unsigned value_bits, unsigned cond_bits, unsigned precision,
                std::vector<Nat> table);
  /// Expands a family; `support` restricts the value range to {0 .. support-1} (0 = all 2^v).
  static ProbMechanism from_family(std::string name, unsigned value_bits, unsigned cond_bits, unsigned precision,
                                   const MechanismFamily& family, std::uint64_t support = 0);

  const std::string& name() const { return name_; }
  unsigned value_bits() const { return value_bits_; }
  unsigned cond_bits() const { return cond_bits_; }
  unsigned precision() const { return precision_; }
  const std::vector<Nat>& table() const { return table_; }
  const std::optional<MechanismFamily>& family() const { return family_; }
  std::uint64_t family_support() const { return family_support_; }

  Dyadic at(std::uint64_t value, std::uint64_t cond) const;

 private:
  std::string name_;
  unsigned value_bits_, cond_bits_, precision_;
  std::vector<Nat> table_;
  std::optional<MechanismFamily> family_;
  std::uint64_t family_support_ = 0;
};

enum class FeatureSource { kObserved, kLatent };

/// Coordinate projection; coordinates are concatenated in increasing order.
struct Projection {
  std::vector<std::size_t> coords;
};
/// Quotient of one coordinate's value space by an orbit partition (phi o pi_coord).
/// `orbit_of[v]` is the orbit index of value v; orbit indices are 0..k-1.
struct Quotient {
  std::size_t coord;
  std::vector<std::uint32_t> orbit_of;
};

class FeatureMechanism {
 public:
  FeatureMechanism(std::string name, std::variant<Projection, Quotient> kind,
                   FeatureSource source = FeatureSource::kObserved);

  const std::string& name() const { return name_; }
  const std::variant<Projection, Quotient>& kind() const { return kind_; }
  FeatureSource source() const { return source_; }
  bool latent() const { return source_ == FeatureSource::kLatent; }

  /// Output width on the given layout; validates the feature against it.
  unsigned output_bits(const Layout& layout) const;
  std::uint64_t apply(const Layout& layout, Point x) const;
  std::size_t orbit_count() const;

 private:
  std::string name_;
  std::variant<Projection, Quotient> kind_;
  FeatureSource source_;
};

struct FeaturizedMechanism {
  std::size_t mechanism;
  std::size_t value_feature;
  std::optional<std::size_t> cond_feature;
};

using GlobalSelection = std::vector<std::size_t>;
using ContextSelection = std::map<Point, std::vector<std::size_t>>;
using Selection = std::variant<GlobalSelection, ContextSelection>;

class Cfmp {
 public:
  static constexpr unsigned kMaxLatentBits = 12;

  /// Validates every reference and featurization arity. `latent` is the layout of x'
  /// for hidden-variable mechanisms (may be empty when none are used).
  Cfmp(Layout layout, unsigned output_precision, std::vector<ProbMechanism> mechanisms,
       std::vector<FeatureMechanism> features, std::vector<FeaturizedMechanism> featurized, Selection selection,
       Layout latent = Layout());

  const Layout& layout() const { return layout_; }
  const Layout& latent_layout() const { return latent_; }
  unsigned output_precision() const { return output_precision_; }
  const std::vector<ProbMechanism>& mechanisms() const { return mechanisms_; }
  const std::vector<FeatureMechanism>& features() const { return features_; }
  const std::vector<FeaturizedMechanism>& featurized() const { return featurized_; }
  const Selection& selection() const { return selection_; }

  bool is_hidden(std::size_t featurized_index) const;
  /// Featurized mechanisms selected at x; throws if the selection is undefined there.
  const std::vector<std::size_t>& selected_at(Point x) const;

 private:
  const Layout& layout_for(const FeatureMechanism& f) const { return f.latent() ? latent_ : layout_; }

  Layout layout_;
  Layout latent_;
  unsigned output_precision_;
  std::vector<ProbMechanism> mechanisms_;
  std::vector<FeatureMechanism> features_;
  std::vector<FeaturizedMechanism> featurized_;
  Selection selection_;

  friend Dyadic evaluate_exact(const Cfmp&, Point);
};

/// One factor of a causal Bayesian network: P(X_value | X_cond) as a table over
/// (cond bits, value bits) in the coordinate order of each set.
struct CbnFactor {
  std::vector<std::size_t> value_coords;
  std::vector<std::size_t> cond_coords;
  unsigned precision;
  std::vector<Nat> table;
  std::string name;
};

/// Factors must have disjoint value sets covering every coordinate, and every
/// conditioning set must lie in the union of earlier value sets.
Cfmp build_cbn(const Layout& layout, std::vector<CbnFactor> factors, std::optional<unsigned> output_precision = {});
Cfmp build_cbn(const Layout& layout, std::vector<CbnFactor> factors, const std::vector<std::string>& coord_names,
               std::optional<unsigned> output_precision = {});

/// P(x) = f1(x_1 | phi(x_2)) f2(x_2) on X^2, phi the quotient of coordinate 2 (index 1).
Cfmp build_invariant_model(const Layout& layout, const Quotient& quotient, ProbMechanism f1, ProbMechanism f2,
                           std::optional<unsigned> output_precision = {});

/// Single-table density estimator with the identity feature.
Cfmp build_density_estimator(const DiscreteDistribution& p);

/// Exact product of the selected mechanisms at x (summed over x' for hidden ones).
Dyadic evaluate_exact(const Cfmp& alpha, Point x);
/// evaluate_exact truncated (round-down) to the program's output precision.
Dyadic evaluate(const Cfmp& alpha, Point x);
DiscreteDistribution induced_distribution(const Cfmp& alpha);

struct CausalStatement {
  std::size_t cause;   // feature index
  std::size_t effect;  // feature index
  bool cause_latent = false;
  friend auto operator<=>(const CausalStatement&, const CausalStatement&) = default;
};

struct LocalCausalStatement {
  CausalStatement statement;
  Point locus;
  friend auto operator<=>(const LocalCausalStatement&, const LocalCausalStatement&) = default;
};

struct CausalReport {
  std::vector<CausalStatement> global;
  /// Local statements whose pair does not hold globally.
  std::vector<LocalCausalStatement> local;
};

CausalReport causal_statements(const Cfmp& alpha);
std::string describe(const Cfmp& alpha, const CausalStatement& s);

}  // namespace fcc
