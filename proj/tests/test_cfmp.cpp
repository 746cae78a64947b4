#include "fcc/cfmp.hpp"
#include "fcc/error.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace fcc;

namespace {

std::set<std::string> global_names(const Cfmp& a) {
  std::set<std::string> out;
  for (const auto& s : causal_statements(a).global) out.insert(describe(a, s));
  return out;
}

// Random conditional table over (cond << v) | value with every slice summing to 2^n.
std::vector<Nat> random_conditional(std::mt19937_64& rng, unsigned v, unsigned c, unsigned n) {
  std::vector<Nat> out;
  for (std::uint64_t cond = 0; cond < (std::uint64_t{1} << c); ++cond) {
    auto slice = oracle::random_dyadic(rng, std::size_t{1} << v, n);
    out.insert(out.end(), slice.begin(), slice.end());
  }
  return out;
}

std::vector<Nat> truncate_table(const std::vector<Nat>& t, unsigned from, unsigned to) {
  std::vector<Nat> out;
  for (const auto& v : t) out.push_back(v >> (from - to));
  return out;
}

Rational entry(const std::vector<Nat>& t, std::uint64_t idx, unsigned n) { return Rational(t[idx], Nat(1) << n); }

}  // namespace

TEST(ProbMechanism, RejectsBadTables) {
  EXPECT_THROW(ProbMechanism("f", 1, 0, 2, {1, 1, 1}), DomainError);
  EXPECT_THROW(ProbMechanism("f", 1, 0, 2, {3, 2}), DomainError);
  EXPECT_THROW(ProbMechanism("f", 1, 1, 2, {1, 1, 4, 1}), DomainError);
  EXPECT_NO_THROW(ProbMechanism("f", 1, 1, 2, {1, 1, 4, 0}));
}

TEST(ProbMechanism, FamiliesExpandToSlices) {
  const auto u = ProbMechanism::from_family("u", 2, 0, 8, UniformFamily{});
  for (std::uint64_t v = 0; v < 4; ++v) EXPECT_EQ(u.at(v, 0).value(), Rational(1, 4));
  const auto p = ProbMechanism::from_family("p", 3, 0, 16, PoissonFamily{2.0}, 6);
  Rational mass = 0;
  for (std::uint64_t v = 0; v < 8; ++v) mass += p.at(v, 0).value();
  EXPECT_EQ(mass, 1);
  EXPECT_EQ(p.at(6, 0).num, 0);
  const auto g = ProbMechanism::from_family("g", 2, 1, 10, GaussianFamily{0.0, 0.5, true});
  EXPECT_GT(g.at(0, 0).value(), g.at(1, 0).value());
  EXPECT_GT(g.at(1, 1).value(), g.at(0, 1).value());
  EXPECT_THROW(g.at(4, 0), DomainError);
}

TEST(FeatureMechanism, QuotientValidation) {
  EXPECT_THROW(FeatureMechanism("q", Quotient{0, {0, 2}}), DomainError);
  const FeatureMechanism q("q", Quotient{0, {0, 1, 2, 1}});
  EXPECT_EQ(q.orbit_count(), 3u);
  EXPECT_EQ(q.output_bits(Layout::uniform(1, 2)), 2u);
  EXPECT_THROW(q.output_bits(Layout::uniform(1, 3)), DomainError);
  EXPECT_EQ(q.apply(Layout::uniform(1, 2), 3), 1u);
}

TEST(Cfmp, RejectsArityMismatchAndDanglingReferences) {
  const Layout l = Layout::uniform(2, 1);
  std::vector<FeatureMechanism> feats{FeatureMechanism("X1", Projection{{0}}), FeatureMechanism("X2", Projection{{1}})};
  ProbMechanism f("f", 2, 0, 2, {1, 1, 1, 1});
  EXPECT_THROW(Cfmp(l, 2, {f}, feats, {{0, 0, std::nullopt}}, GlobalSelection{0}), DomainError);
  ProbMechanism g("g", 1, 0, 1, {1, 1});
  EXPECT_THROW(Cfmp(l, 2, {g}, feats, {{1, 0, std::nullopt}}, GlobalSelection{0}), DomainError);
  EXPECT_THROW(Cfmp(l, 2, {g}, feats, {{0, 0, std::nullopt}}, GlobalSelection{1}), DomainError);
  ProbMechanism h("h", 1, 1, 1, {1, 1, 1, 1});
  EXPECT_THROW(Cfmp(l, 2, {h}, feats, {{0, 1, std::nullopt}}, GlobalSelection{0}), DomainError);
  ContextSelection partial{{0, {0}}};
  const Cfmp ctx(l, 2, {g}, feats, {{0, 0, std::nullopt}}, partial);
  EXPECT_THROW(evaluate(ctx, 1), DomainError);
}

TEST(Cfmp, LatentGridIsCapped) {
  const Layout l = Layout::uniform(1, 1);
  std::vector<FeatureMechanism> feats{FeatureMechanism("X1", Projection{{0}})};
  ProbMechanism g("g", 1, 0, 1, {1, 1});
  EXPECT_THROW(Cfmp(l, 1, {g}, feats, {{0, 0, std::nullopt}}, GlobalSelection{0}, Layout::uniform(1, 13)),
               DomainError);
}

TEST(BuildCbn, RejectsInvalidFactorizations) {
  const Layout l = Layout::uniform(2, 1);
  CbnFactor a{{0}, {}, 1, {1, 1}, ""};
  CbnFactor b{{1}, {0}, 1, {1, 1, 1, 1}, ""};
  CbnFactor forward{{0}, {1}, 1, {1, 1, 1, 1}, ""};
  CbnFactor overlap{{0, 1}, {}, 2, {1, 1, 1, 1}, ""};
  EXPECT_NO_THROW(build_cbn(l, {a, b}));
  EXPECT_THROW(build_cbn(l, {forward, a}), DomainError);
  EXPECT_THROW(build_cbn(l, {a, overlap}), DomainError);
  EXPECT_THROW(build_cbn(l, {a}), DomainError);
}

TEST(BuildCbn, SingleVariableIsTheTable) {
  const Layout l = Layout::uniform(1, 2);
  const auto c = build_cbn(l, {CbnFactor{{0}, {}, 3, {4, 2, 1, 1}, ""}});
  const auto p = induced_distribution(c);
  EXPECT_EQ(p.numerators(), (std::vector<Nat>{4, 2, 1, 1}));
  EXPECT_TRUE(causal_statements(c).global.empty());
}

// Multi-environment network on z = (x1, x2, e): f1(X2 | X1) f2(X1 | E) f3(E).
TEST(BuildCbn, WorkedMultiEnvironmentExample) {
  const Layout l = Layout::uniform(3, 1);
  CbnFactor f3{{2}, {}, 1, {1, 1}, "f3"};
  CbnFactor f2{{0}, {2}, 2, {3, 1, 1, 3}, "f2"};
  CbnFactor f1{{1}, {0}, 2, {2, 2, 1, 3}, "f1"};
  const auto c = build_cbn(l, {f3, f2, f1}, {"X1", "X2", "E"});
  for (Point z = 0; z < 8; ++z) {
    const auto x1 = l.coord(z, 0), x2 = l.coord(z, 1), e = l.coord(z, 2);
    const Rational want = Rational(f1.table[(x1 << 1) | x2], 4) * Rational(f2.table[(e << 1) | x1], 4) *
                          Rational(f3.table[e], 2);
    EXPECT_EQ(evaluate_exact(c, z).value(), want) << z;
  }
  EXPECT_EQ(global_names(c), (std::set<std::string>{"E -> X1", "X1 -> X2"}));
  EXPECT_TRUE(causal_statements(c).local.empty());
}

// Factors are drawn at 40 bits and truncated to the required width before building,
// so the induced table is compared against the untruncated product.
TEST(BuildCbn, ChainMatchesExactProduct) {
  std::mt19937_64 rng(11);
  const Layout l = Layout::uniform(3, 2);
  const std::vector<unsigned> w{2, 2, 2};
  for (int trial = 0; trial < 20; ++trial) {
    const unsigned n = 2 + trial % 5;
    const unsigned k = required_factor_precision(n, 3);
    const auto ta = random_conditional(rng, 2, 0, 40), tb = random_conditional(rng, 2, 2, 40),
               tc = random_conditional(rng, 2, 4, 40);
    CbnFactor a{{0}, {}, k, truncate_table(ta, 40, k), ""};
    CbnFactor b{{1}, {0}, k, truncate_table(tb, 40, k), ""};
    CbnFactor c{{2}, {0, 1}, k, truncate_table(tc, 40, k), ""};
    const auto p = induced_distribution(build_cbn(l, {a, b, c}));
    const Rational tol(1, Nat(1) << (n + 1));
    for (Point x = 0; x < l.size(); ++x) {
      const auto x0 = oracle::coord(x, w, 0), x1 = oracle::coord(x, w, 1), x2 = oracle::coord(x, w, 2);
      const Rational exact = entry(ta, x0, 40) * entry(tb, (x0 << 2) | x1, 40) *
                             entry(tc, (oracle::concat(x, w, {0, 1}) << 2) | x2, 40);
      const Rational diff = exact - p.probability(x);
      EXPECT_GE(diff, 0);
      EXPECT_LE(diff, tol);
    }
  }
}

TEST(BuildCbn, TwoFactorChainWithinHalfUlp) {
  std::mt19937_64 rng(5);
  const Layout l = Layout::uniform(2, 2);
  for (unsigned n = 1; n <= 8; ++n) {
    const unsigned k = required_factor_precision(n, 2);
    const auto ta = random_conditional(rng, 2, 0, 40), tb = random_conditional(rng, 2, 2, 40);
    CbnFactor a{{0}, {}, k, truncate_table(ta, 40, k), ""};
    CbnFactor b{{1}, {0}, k, truncate_table(tb, 40, k), ""};
    const auto p = induced_distribution(build_cbn(l, {a, b}));
    for (Point x = 0; x < 16; ++x) {
      const Rational exact = entry(ta, x >> 2, 40) * entry(tb, x, 40);
      EXPECT_LE(abs(exact - p.probability(x)), Rational(1, Nat(1) << (n + 1)));
    }
  }
}

TEST(DensityEstimator, EvaluatesToTheStoredTable) {
  std::mt19937_64 rng(3);
  const DiscreteDistribution p(Layout::uniform(2, 2), 6, oracle::random_dyadic(rng, 16, 6));
  const auto c = build_density_estimator(p);
  EXPECT_EQ(induced_distribution(c), p);
  EXPECT_TRUE(causal_statements(c).global.empty());
  EXPECT_TRUE(causal_statements(c).local.empty());
}

TEST(InvariantModel, TrivialGroupMatchesChain) {
  std::mt19937_64 rng(8);
  const Layout l = Layout::uniform(2, 2);
  const auto t1 = random_conditional(rng, 2, 2, 8);
  const auto t2 = random_conditional(rng, 2, 0, 8);
  const auto inv = build_invariant_model(l, Quotient{1, {0, 1, 2, 3}}, ProbMechanism("f1", 2, 2, 8, t1),
                                         ProbMechanism("f2", 2, 0, 8, t2));
  const auto cbn = build_cbn(l, {CbnFactor{{1}, {}, 8, t2, ""}, CbnFactor{{0}, {1}, 8, t1, ""}});
  EXPECT_EQ(induced_distribution(inv), induced_distribution(cbn));
}

TEST(InvariantModel, SignFlipOrbitsMatchDirectTable) {
  // Orbits of x -> -x mod 4: {0}, {1, 3}, {2}.
  const std::vector<std::uint32_t> orbit{0, 1, 2, 1};
  std::mt19937_64 rng(21);
  const Layout l = Layout::uniform(2, 2);
  const auto t1 = random_conditional(rng, 2, 2, 8);  // 4 slices, the last one unused
  const auto t2 = random_conditional(rng, 2, 0, 8);
  const auto c = build_invariant_model(l, Quotient{1, orbit}, ProbMechanism("f1", 2, 2, 8, t1),
                                       ProbMechanism("f2", 2, 0, 8, t2));
  for (Point x = 0; x < 16; ++x) {
    const auto x1 = x >> 2, x2 = x & 3;
    EXPECT_EQ(evaluate_exact(c, x).value(), entry(t1, (orbit[x2] << 2) | x1, 8) * entry(t2, x2, 8));
  }
  for (std::uint64_t x1 = 0; x1 < 4; ++x1) {
    const Rational r1 = evaluate_exact(c, (x1 << 2) | 1).value() / entry(t2, 1, 8);
    const Rational r3 = evaluate_exact(c, (x1 << 2) | 3).value() / entry(t2, 3, 8);
    EXPECT_EQ(r1, r3);
  }
}

TEST(InvariantModel, TwoOrbitsGiveTwoSlices) {
  const Layout l = Layout::uniform(2, 3);
  const Quotient q{1, {0, 0, 0, 0, 1, 1, 1, 1}};
  std::mt19937_64 rng(2);
  ProbMechanism f1("f1", 3, 1, 6, random_conditional(rng, 3, 1, 6));
  ProbMechanism f2("f2", 3, 0, 6, random_conditional(rng, 3, 0, 6));
  const auto c = build_invariant_model(l, q, f1, f2);
  EXPECT_EQ(c.mechanisms()[0].table().size(), 2u * 8u);
  EXPECT_EQ(std::size_t{1} << c.mechanisms()[0].cond_bits(), 2u);
  const auto p = induced_distribution(c);
  for (std::uint64_t x1 = 0; x1 < 8; ++x1) {
    for (std::uint64_t a = 0; a < 8; ++a) {
      for (std::uint64_t b = 0; b < 8; ++b) {
        if (q.orbit_of[a] != q.orbit_of[b] || f2.at(a, 0).num == 0 || f2.at(b, 0).num == 0) continue;
        EXPECT_EQ(evaluate_exact(c, (x1 << 3) | a).value() / f2.at(a, 0).value(),
                  evaluate_exact(c, (x1 << 3) | b).value() / f2.at(b, 0).value());
      }
    }
  }
  EXPECT_THROW(build_invariant_model(l, q, ProbMechanism("bad", 3, 2, 6, random_conditional(rng, 3, 2, 6)), f2),
               DomainError);
}

TEST(HiddenVariable, MarginalizesOneLatentBit) {
  // P(x) = sum_z f(x | z) g(z), z a 1-bit latent.
  const Layout l = Layout::uniform(1, 2);
  const Layout latent = Layout::uniform(1, 1);
  std::vector<FeatureMechanism> feats{FeatureMechanism("X", Projection{{0}}),
                                      FeatureMechanism("Z", Projection{{0}}, FeatureSource::kLatent)};
  ProbMechanism f("f", 2, 1, 3, {4, 2, 1, 1, 1, 1, 2, 4});
  ProbMechanism g("g", 1, 0, 2, {1, 3});
  const Cfmp c(l, 5, {f, g}, feats, {{0, 0, 1}, {1, 1, std::nullopt}}, GlobalSelection{0, 1}, latent);
  for (std::uint64_t x = 0; x < 4; ++x) {
    const Rational want = f.at(x, 0).value() * g.at(0, 0).value() + f.at(x, 1).value() * g.at(1, 0).value();
    EXPECT_EQ(evaluate_exact(c, x).value(), want);
  }
  EXPECT_EQ(induced_distribution(c).mass(), 1);
  const auto names = global_names(c);
  EXPECT_EQ(names, (std::set<std::string>{"latent Z -> X"}));
}

TEST(CausalStatements, ContextSpecificGivesOnlyLocalStatements) {
  const Layout l = Layout::uniform(2, 1);
  std::vector<FeatureMechanism> feats{FeatureMechanism("X1", Projection{{0}}), FeatureMechanism("X2", Projection{{1}})};
  ProbMechanism m("m", 1, 0, 1, {1, 1});
  ProbMechanism c("c", 1, 1, 1, {1, 1, 1, 1});
  std::vector<FeaturizedMechanism> fms{{0, 0, std::nullopt}, {1, 1, 0}, {0, 1, std::nullopt}, {1, 0, 1}};
  // X1 -> X2 when x1 = 0, X2 -> X1 when x1 = 1.
  ContextSelection sel{{0b00, {0, 1}}, {0b01, {0, 1}}, {0b10, {2, 3}}, {0b11, {2, 3}}};
  const Cfmp a(l, 2, {m, c}, feats, fms, sel);
  const auto r = causal_statements(a);
  EXPECT_TRUE(r.global.empty());
  EXPECT_EQ(r.local.size(), 4u);
  EXPECT_EQ(induced_distribution(a).mass(), 1);

  // Both directions selected at one point: neither is stated there.
  ContextSelection both{{0b00, {0, 1, 3}}, {0b01, {0, 1}}, {0b10, {0, 1}}, {0b11, {0, 1}}};
  const Cfmp b(l, 2, {m, c}, feats, fms, both);
  const auto rb = causal_statements(b);
  EXPECT_TRUE(rb.global.empty());
  EXPECT_EQ(rb.local.size(), 3u);
}

TEST(CausalStatements, NeverBothDirectionsGlobally) {
  std::mt19937_64 rng(17);
  const Layout l = Layout::uniform(2, 1);
  std::vector<FeatureMechanism> feats{FeatureMechanism("X1", Projection{{0}}), FeatureMechanism("X2", Projection{{1}})};
  ProbMechanism m("m", 1, 0, 1, {1, 1});
  ProbMechanism c("c", 1, 1, 1, {1, 1, 1, 1});
  std::vector<FeaturizedMechanism> fms{{0, 0, std::nullopt}, {1, 1, 0}, {0, 1, std::nullopt}, {1, 0, 1}};
  for (int trial = 0; trial < 200; ++trial) {
    ContextSelection sel;
    for (Point x = 0; x < 4; ++x) {
      std::vector<std::size_t> s;
      for (std::size_t i = 0; i < 4; ++i) {
        if (rng() & 1) s.push_back(i);
      }
      sel[x] = s;
    }
    const Cfmp a(l, 2, {m, c}, feats, fms, sel);
    std::set<std::pair<std::size_t, std::size_t>> g;
    for (const auto& s : causal_statements(a).global) g.emplace(s.cause, s.effect);
    for (const auto& [u, v] : g) EXPECT_EQ(g.count({v, u}), 0u);
  }
}
