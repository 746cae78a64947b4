#include "fcc/cfmp.hpp"

#include "fcc/error.hpp"

#include <algorithm>
#include <set>

namespace fcc {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_sorted(const std::vector<std::size_t>& coords, std::size_t dims, const std::string& what) {
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] >= dims) throw DomainError(what + ": coordinate out of range");
    if (i > 0 && coords[i] <= coords[i - 1]) throw DomainError(what + ": coordinates must be sorted and unique");
  }
}

unsigned width_sum(const Layout& layout, const std::vector<std::size_t>& coords) {
  unsigned w = 0;
  for (auto c : coords) w += layout.width(c);
  return w;
}

std::string coord_set_name(const std::vector<std::size_t>& coords, const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (i > 0) out += ",";
    out += names.at(coords[i]);
  }
  return coords.size() == 1 ? out : "{" + out + "}";
}

}  // namespace

// ---------------------------------------------------------------- ProbMechanism

ProbMechanism::ProbMechanism(std::string name, unsigned value_bits, unsigned cond_bits, unsigned precision,
                             std::vector<Nat> table)
    : name_(std::move(name)),
      value_bits_(value_bits),
      cond_bits_(cond_bits),
      precision_(precision),
      table_(std::move(table)) {
  if (value_bits_ + cond_bits_ > Layout::kMaxTotalBits) throw DomainError("mechanism table is too large");
  const std::uint64_t values = std::uint64_t{1} << value_bits_;
  const std::uint64_t conds = std::uint64_t{1} << cond_bits_;
  if (table_.size() != values * conds) throw DomainError("mechanism '" + name_ + "' table has the wrong size");
  const Nat one = pow2(precision_);
  for (std::uint64_t c = 0; c < conds; ++c) {
    Nat slice = 0;
    for (std::uint64_t v = 0; v < values; ++v) {
      const Nat& e = table_[(c << value_bits_) | v];
      if (e < 0) throw DomainError("mechanism '" + name_ + "' has a negative entry");
      slice += e;
    }
    if (slice > one) throw DomainError("mechanism '" + name_ + "' has a conditional slice with mass above 1");
  }
}

ProbMechanism ProbMechanism::from_family(std::string name, unsigned value_bits, unsigned cond_bits,
                                         unsigned precision, const MechanismFamily& family, std::uint64_t support) {
  const std::uint64_t values = std::uint64_t{1} << value_bits;
  if (support == 0) support = values;
  if (support > values || support < 1) throw DomainError("family support does not fit the value bits");
  const std::uint64_t conds = std::uint64_t{1} << cond_bits;
  std::vector<Nat> table(values * conds, 0);
  for (std::uint64_t c = 0; c < conds; ++c) {
    std::vector<double> probs = std::visit(
        Overloaded{
            [&](const UniformFamily&) { return std::vector<double>(support, 1.0); },
            [&](const PoissonFamily& f) {
              if (support < 2) throw DomainError("Poisson family needs at least two cells");
              return discretize_poisson(f.lambda, support);
            },
            [&](const GaussianFamily& f) {
              const double mean = f.mu + (f.shift_by_condition ? static_cast<double>(c) : 0.0);
              return discretize_gaussian(mean, f.sigma, 0, static_cast<std::int64_t>(support) - 1);
            },
        },
        family);
    auto nums = round_to_dyadic(probs, precision);
    for (std::uint64_t v = 0; v < support; ++v) table[(c << value_bits) | v] = std::move(nums[v]);
  }
  ProbMechanism m(std::move(name), value_bits, cond_bits, precision, std::move(table));
  m.family_ = family;
  m.family_support_ = support;
  return m;
}

Dyadic ProbMechanism::at(std::uint64_t value, std::uint64_t cond) const {
  if (value >> value_bits_ || cond >> cond_bits_) throw DomainError("mechanism '" + name_ + "' argument out of range");
  return {table_[(cond << value_bits_) | value], precision_};
}

// ---------------------------------------------------------------- FeatureMechanism

FeatureMechanism::FeatureMechanism(std::string name, std::variant<Projection, Quotient> kind, FeatureSource source)
    : name_(std::move(name)), kind_(std::move(kind)), source_(source) {
  if (auto* q = std::get_if<Quotient>(&kind_)) {
    if (q->orbit_of.empty()) throw DomainError("quotient feature needs an orbit map");
    std::set<std::uint32_t> used(q->orbit_of.begin(), q->orbit_of.end());
    if (*used.rbegin() + 1 != used.size()) throw DomainError("quotient orbits must be numbered 0..k-1 without gaps");
  }
}

std::size_t FeatureMechanism::orbit_count() const {
  if (auto* q = std::get_if<Quotient>(&kind_)) {
    return *std::max_element(q->orbit_of.begin(), q->orbit_of.end()) + std::size_t{1};
  }
  throw DomainError("feature '" + name_ + "' is not a quotient");
}

unsigned FeatureMechanism::output_bits(const Layout& layout) const {
  return std::visit(Overloaded{
                        [&](const Projection& p) {
                          require_sorted(p.coords, layout.dims(), "projection feature '" + name_ + "'");
                          return width_sum(layout, p.coords);
                        },
                        [&](const Quotient& q) {
                          if (q.coord >= layout.dims()) throw DomainError("quotient coordinate out of range");
                          if (q.orbit_of.size() != (std::size_t{1} << layout.width(q.coord))) {
                            throw DomainError("quotient '" + name_ + "' must assign an orbit to every value");
                          }
                          return ceil_log2(orbit_count());
                        },
                    },
                    kind_);
}

std::uint64_t FeatureMechanism::apply(const Layout& layout, Point x) const {
  return std::visit(Overloaded{
                        [&](const Projection& p) { return layout.project(x, p.coords); },
                        [&](const Quotient& q) {
                          return static_cast<std::uint64_t>(q.orbit_of[layout.coord(x, q.coord)]);
                        },
                    },
                    kind_);
}

// ---------------------------------------------------------------- Cfmp

Cfmp::Cfmp(Layout layout, unsigned output_precision, std::vector<ProbMechanism> mechanisms,
           std::vector<FeatureMechanism> features, std::vector<FeaturizedMechanism> featurized, Selection selection,
           Layout latent)
    : layout_(std::move(layout)),
      latent_(std::move(latent)),
      output_precision_(output_precision),
      mechanisms_(std::move(mechanisms)),
      features_(std::move(features)),
      featurized_(std::move(featurized)),
      selection_(std::move(selection)) {
  if (latent_.total_bits() > kMaxLatentBits) throw DomainError("latent grid exceeds 2^12 points");
  for (const auto& f : features_) {
    if (f.latent() && latent_.dims() == 0) throw DomainError("latent feature '" + f.name() + "' without a latent layout");
    (void)f.output_bits(layout_for(f));
  }
  for (const auto& fm : featurized_) {
    if (fm.mechanism >= mechanisms_.size()) throw DomainError("featurization references an unknown mechanism");
    if (fm.value_feature >= features_.size()) throw DomainError("featurization references an unknown feature");
    const auto& mech = mechanisms_[fm.mechanism];
    const auto& vf = features_[fm.value_feature];
    if (vf.output_bits(layout_for(vf)) != mech.value_bits()) {
      throw DomainError("value feature '" + vf.name() + "' does not match the value arity of '" + mech.name() + "'");
    }
    if (fm.cond_feature) {
      if (*fm.cond_feature >= features_.size()) throw DomainError("featurization references an unknown feature");
      const auto& cf = features_[*fm.cond_feature];
      if (cf.output_bits(layout_for(cf)) != mech.cond_bits()) {
        throw DomainError("conditional feature '" + cf.name() + "' does not match the conditional arity of '" +
                          mech.name() + "'");
      }
    } else if (mech.cond_bits() != 0) {
      throw DomainError("mechanism '" + mech.name() + "' is conditional but has no conditional feature");
    }
  }
  auto check_list = [&](const std::vector<std::size_t>& list) {
    for (auto i : list) {
      if (i >= featurized_.size()) throw DomainError("selection references an unknown featurized mechanism");
    }
  };
  std::visit(Overloaded{
                 [&](const GlobalSelection& g) { check_list(g); },
                 [&](const ContextSelection& c) {
                   for (const auto& [x, list] : c) {
                     if (x >= layout_.size()) throw DomainError("selection point lies outside the sample space");
                     check_list(list);
                   }
                 },
             },
             selection_);
}

bool Cfmp::is_hidden(std::size_t i) const {
  const auto& fm = featurized_.at(i);
  return features_[fm.value_feature].latent() || (fm.cond_feature && features_[*fm.cond_feature].latent());
}

const std::vector<std::size_t>& Cfmp::selected_at(Point x) const {
  if (const auto* g = std::get_if<GlobalSelection>(&selection_)) return *g;
  const auto& ctx = std::get<ContextSelection>(selection_);
  auto it = ctx.find(x);
  if (it == ctx.end()) throw DomainError("no mechanism selection at point " + layout_.point_string(x));
  return it->second;
}

Dyadic evaluate_exact(const Cfmp& alpha, Point x) {
  if (x >= alpha.layout_.size()) throw DomainError("point lies outside the sample space");
  const auto& sel = alpha.selected_at(x);
  const bool hidden = std::any_of(sel.begin(), sel.end(), [&](std::size_t i) { return alpha.is_hidden(i); });

  auto product_at = [&](Point latent_point) {
    Dyadic acc{1, 0};
    for (auto i : sel) {
      const auto& fm = alpha.featurized_[i];
      auto feature_value = [&](std::size_t f) {
        const auto& feat = alpha.features_[f];
        return feat.apply(feat.latent() ? alpha.latent_ : alpha.layout_, feat.latent() ? latent_point : x);
      };
      const std::uint64_t v = feature_value(fm.value_feature);
      const std::uint64_t c = fm.cond_feature ? feature_value(*fm.cond_feature) : 0;
      acc = acc * alpha.mechanisms_[fm.mechanism].at(v, c);
    }
    return acc;
  };

  if (!hidden) return product_at(0);
  Dyadic total{0, 0};
  for (Point xp = 0; xp < alpha.latent_.size(); ++xp) total = dyadic_sum(total, product_at(xp));
  return total;
}

Dyadic evaluate(const Cfmp& alpha, Point x) { return evaluate_exact(alpha, x).truncated(alpha.output_precision()); }

DiscreteDistribution induced_distribution(const Cfmp& alpha) {
  std::vector<Nat> table(alpha.layout().size());
  for (Point x = 0; x < alpha.layout().size(); ++x) table[x] = evaluate(alpha, x).num;
  return DiscreteDistribution(alpha.layout(), alpha.output_precision(), std::move(table));
}

// ---------------------------------------------------------------- builders

Cfmp build_cbn(const Layout& layout, std::vector<CbnFactor> factors, std::optional<unsigned> output_precision) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < layout.dims(); ++i) names.push_back("X" + std::to_string(i + 1));
  return build_cbn(layout, std::move(factors), names, output_precision);
}

Cfmp build_cbn(const Layout& layout, std::vector<CbnFactor> factors, const std::vector<std::string>& coord_names,
               std::optional<unsigned> output_precision) {
  if (coord_names.size() != layout.dims()) throw DomainError("one name per coordinate is required");
  std::vector<bool> covered(layout.dims(), false);
  std::vector<ProbMechanism> mechanisms;
  std::vector<FeatureMechanism> features;
  std::map<std::vector<std::size_t>, std::size_t> feature_index;
  std::vector<FeaturizedMechanism> featurized;
  unsigned widest = 0;

  auto feature_for = [&](const std::vector<std::size_t>& coords) {
    auto [it, fresh] = feature_index.try_emplace(coords, features.size());
    if (fresh) features.emplace_back(coord_set_name(coords, coord_names), Projection{coords});
    return it->second;
  };

  for (std::size_t i = 0; i < factors.size(); ++i) {
    auto& f = factors[i];
    require_sorted(f.value_coords, layout.dims(), "CBN value set");
    require_sorted(f.cond_coords, layout.dims(), "CBN conditioning set");
    if (f.value_coords.empty()) throw DomainError("CBN factor with an empty value set");
    for (auto c : f.value_coords) {
      if (covered[c]) throw DomainError("CBN value sets overlap at " + coord_names[c]);
    }
    for (auto c : f.cond_coords) {
      if (!covered[c]) throw DomainError("CBN conditioning set refers to " + coord_names[c] + " before its factor");
    }
    for (auto c : f.value_coords) covered[c] = true;

    std::string name = f.name.empty() ? "f" + std::to_string(i + 1) : f.name;
    mechanisms.emplace_back(std::move(name), width_sum(layout, f.value_coords), width_sum(layout, f.cond_coords),
                            f.precision, std::move(f.table));
    widest = std::max(widest, f.precision);
    FeaturizedMechanism fm{mechanisms.size() - 1, feature_for(f.value_coords), std::nullopt};
    if (!f.cond_coords.empty()) fm.cond_feature = feature_for(f.cond_coords);
    featurized.push_back(fm);
  }
  if (!std::all_of(covered.begin(), covered.end(), [](bool b) { return b; })) {
    throw DomainError("CBN value sets do not cover every coordinate");
  }
  GlobalSelection all(featurized.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return Cfmp(layout, output_precision.value_or(widest), std::move(mechanisms), std::move(features),
              std::move(featurized), std::move(all));
}

Cfmp build_invariant_model(const Layout& layout, const Quotient& quotient, ProbMechanism f1, ProbMechanism f2,
                           std::optional<unsigned> output_precision) {
  if (layout.dims() != 2) throw DomainError("the invariant model lives on X^2");
  if (quotient.coord != 1) throw DomainError("the quotient acts on the conditioning coordinate (index 1)");
  FeatureMechanism phi("phi(X2)", quotient);
  if (f1.cond_bits() != phi.output_bits(layout)) {
    throw DomainError("f1 conditional arity does not match the number of orbits");
  }
  const unsigned widest = std::max(f1.precision(), f2.precision());
  std::vector<FeatureMechanism> features{FeatureMechanism("X1", Projection{{0}}), phi,
                                         FeatureMechanism("X2", Projection{{1}})};
  std::vector<ProbMechanism> mechanisms{std::move(f1), std::move(f2)};
  std::vector<FeaturizedMechanism> featurized{{0, 0, 1}, {1, 2, std::nullopt}};
  return Cfmp(layout, output_precision.value_or(widest), std::move(mechanisms), std::move(features),
              std::move(featurized), GlobalSelection{0, 1});
}

Cfmp build_density_estimator(const DiscreteDistribution& p) {
  std::vector<std::size_t> all(p.d());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  ProbMechanism table("P", p.layout().total_bits(), 0, p.n(), p.numerators());
  return Cfmp(p.layout(), p.n(), {std::move(table)}, {FeatureMechanism("Id", Projection{all})},
              {{0, 0, std::nullopt}}, GlobalSelection{0});
}

// ---------------------------------------------------------------- causal read-off

CausalReport causal_statements(const Cfmp& alpha) {
  auto pairs_at = [&](const std::vector<std::size_t>& sel) {
    std::set<std::pair<std::size_t, std::size_t>> directed;
    for (auto i : sel) {
      const auto& fm = alpha.featurized()[i];
      if (fm.cond_feature) directed.emplace(*fm.cond_feature, fm.value_feature);
    }
    std::set<CausalStatement> out;
    for (const auto& [cause, effect] : directed) {
      if (directed.count({effect, cause}) != 0) continue;
      out.insert({cause, effect, alpha.features()[cause].latent()});
    }
    return out;
  };

  CausalReport report;
  if (const auto* g = std::get_if<GlobalSelection>(&alpha.selection())) {
    for (const auto& s : pairs_at(*g)) report.global.push_back(s);
    return report;
  }
  const auto& ctx = std::get<ContextSelection>(alpha.selection());
  std::map<CausalStatement, std::vector<Point>> loci;
  for (const auto& [x, sel] : ctx) {
    for (const auto& s : pairs_at(sel)) loci[s].push_back(x);
  }
  for (auto& [s, points] : loci) {
    if (points.size() == alpha.layout().size()) {
      report.global.push_back(s);
    } else {
      for (Point x : points) report.local.push_back({s, x});
    }
  }
  return report;
}

std::string describe(const Cfmp& alpha, const CausalStatement& s) {
  const std::string cause = (s.cause_latent ? "latent " : "") + alpha.features().at(s.cause).name();
  return cause + " -> " + alpha.features().at(s.effect).name();
}

}  // namespace fcc
