// Acceptance run: one PASS/FAIL line per criterion, each with its time budget.

#include "fcc/cfmp.hpp"
#include "fcc/coding.hpp"
#include "fcc/select.hpp"
#include "fcc/ufcc.hpp"
#include "oracles.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace fcc;

namespace {

struct Outcome {
  bool ok;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double budget_ms;
  std::function<Outcome()> run;
};

nlohmann::json load(const std::string& name) {
  std::ifstream in(std::string(FCC_CONFIG_DIR) + "/" + name);
  return nlohmann::json::parse(in);
}

std::vector<Nat> random_conditional(std::mt19937_64& rng, unsigned v, unsigned c, unsigned n, bool allow_zero = true) {
  std::vector<Nat> out;
  for (std::uint64_t cond = 0; cond < (std::uint64_t{1} << c); ++cond) {
    auto slice = oracle::random_dyadic(rng, std::size_t{1} << v, n, allow_zero);
    out.insert(out.end(), slice.begin(), slice.end());
  }
  return out;
}

Rational frac(const Nat& num, unsigned bits) { return Rational(num, Nat(1) << bits); }

std::size_t median(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// ---------------------------------------------------------------- 1

Outcome huffman_fixture() {
  const DiscreteDistribution p(Layout::uniform(1, 2), 3, {4, 2, 1, 1});
  const auto c = huffman_build(p);
  const bool lengths = c.lengths() == std::vector<std::size_t>{1, 2, 3, 3};
  const bool el = expected_length_exact(c, p) == Rational(7, 4);
  const std::vector<Point> xs{0, 2, 3, 1, 0, 2};
  const auto bits = encode_sequence(c, xs);
  const bool round = decode_sequence(c, bits) == xs;
  std::ostringstream os;
  os << "E[L] = " << expected_length(c, p) << ", lengths (1,2,3,3) " << (lengths ? "yes" : "no") << ", \"134213\" -> "
     << bits.size() << " bits, round-trip " << (round ? "ok" : "broken");
  return {lengths && el && bits.size() == 13 && round, os.str()};
}

// ---------------------------------------------------------------- 2

Outcome shannon_bound() {
  std::mt19937_64 rng(2);
  std::size_t ok = 0;
  const std::size_t trials = 1000;
  double worst = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const unsigned m = 1 + rng() % 5;  // up to 32 cells
    const unsigned n = 4 + rng() % 20;
    const DiscreteDistribution p(Layout::uniform(1, m), n, oracle::random_dyadic(rng, std::size_t{1} << m, n));
    if (p.support().size() < 2) {
      ++ok;
      continue;
    }
    const double h = entropy_bits(p);
    const double l = expected_length(huffman_build(p), p);
    worst = std::max(worst, l - h);
    ok += (h <= l + 1e-12 && l < h + 1) ? 1 : 0;
  }
  std::ostringstream os;
  os << ok << "/" << trials << " with H <= L < H+1, max L-H = " << worst;
  return {ok == trials, os.str()};
}

// ---------------------------------------------------------------- 3

Outcome kraft_and_round_trip() {
  std::mt19937_64 rng(3);
  std::size_t codebooks = 0, bad_codebooks = 0, bad_trips = 0;
  const std::size_t trips = 10000;
  for (std::size_t t = 0; t < trips; ++t) {
    const unsigned m = 1 + rng() % 6;
    const unsigned n = 2 + rng() % 16;
    const DiscreteDistribution p(Layout::uniform(1, m), n, oracle::random_dyadic(rng, std::size_t{1} << m, n));
    const auto support = p.support();
    if (support.size() < 2) continue;
    const auto c = huffman_build(p);
    ++codebooks;
    const auto lengths = c.lengths();
    if (!Codebook::is_prefix_free(c.words()) || kraft_sum(lengths) > 1) ++bad_codebooks;
    std::vector<Point> xs(rng() % 64);
    for (auto& x : xs) x = support[rng() % support.size()];
    if (decode_sequence(c, encode_sequence(c, xs)) != xs) ++bad_trips;
  }
  std::ostringstream os;
  os << codebooks << " codebooks, " << bad_codebooks << " violating prefix/Kraft, " << bad_trips
     << " lossy round-trips";
  return {bad_codebooks == 0 && bad_trips == 0 && codebooks > 9000, os.str()};
}

// ---------------------------------------------------------------- 4

Outcome prop18() {
  const std::uint64_t M = 18;
  bool ok = true;
  std::ostringstream os;
  for (std::uint64_t N : {10, 100, 1000}) {
    std::vector<double> s1_minus_s2;
    for (std::uint64_t k = 1; k <= std::min(M, N); ++k) s1_minus_s2.push_back(-strategy_diff(N, M, k));
    const std::uint64_t rise = std::min(M / 2, N / 2);
    bool increasing = true;
    for (std::uint64_t k = 1; k < rise; ++k) increasing &= s1_minus_s2[k] < s1_minus_s2[k - 1];
    const bool starts_positive = s1_minus_s2[0] > 0;
    const bool ends_negative = *std::min_element(s1_minus_s2.begin(), s1_minus_s2.end()) < 0;
    ok &= starts_positive && increasing && ends_negative;
    os << "N=" << N << ": A(1)=" << -s1_minus_s2[0] << (increasing ? " rising" : " NOT rising") << " to k="
       << rise << (ends_negative ? ", s1-s2 turns negative" : ", s1-s2 never negative") << "; ";
  }
  return {ok, os.str()};
}

// ---------------------------------------------------------------- 5

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

Outcome prop17() {
  std::vector<double> over_m, over_d;
  for (unsigned m = 2; m <= 8; ++m) over_m.push_back(model_bits_tabcbn(m, 3, 4, 2).model_bits() / model_bits_density(m, 3, 4, 2));
  for (unsigned d = 2; d <= 6; ++d) over_d.push_back(model_bits_tabcbn(3, d, 4, 2).model_bits() / model_bits_density(3, d, 4, 2));
  const bool ok = strictly_decreasing(over_m) && over_m.back() < 0.05 && strictly_decreasing(over_d);
  std::ostringstream os;
  os << "m sweep " << (strictly_decreasing(over_m) ? "decreasing" : "NOT decreasing") << ", ratio(m=8) = "
     << over_m.back() << "; d sweep " << (strictly_decreasing(over_d) ? "decreasing" : "NOT decreasing")
     << ", ratio(d=6) = " << over_d.back() << " (limit in d at m=3 is 0.5625)";
  return {ok, os.str()};
}

// ---------------------------------------------------------------- 6

Outcome prop19() {
  std::vector<double> r;
  for (unsigned m = 2; m <= 10; ++m) {
    r.push_back(model_bits_tabinv(m, 4, 2, TabInvVariant::kInvariant) / model_bits_tabinv(m, 4, 2, TabInvVariant::kMarkov));
  }
  std::ostringstream os;
  os << (strictly_decreasing(r) ? "decreasing" : "NOT decreasing") << ", ratio(m=10) = " << r.back();
  return {strictly_decreasing(r) && r.back() < 0.05, os.str()};
}

// ---------------------------------------------------------------- 7

Outcome lemma22() {
  std::mt19937_64 rng(7);
  std::size_t checked = 0, violations = 0;
  Rational worst = 0;
  auto check = [&](const std::vector<std::uint64_t>& nums, unsigned n) {
    const unsigned k = required_factor_precision(n, static_cast<unsigned>(nums.size()));
    Dyadic approx{1, 0};
    Rational exact = 1;
    for (auto v : nums) {
      const Dyadic y{v, 6};
      approx = approx * y.truncated(k);
      exact *= y.value();
    }
    const Rational err = exact - approx.value();
    const Rational bound(1, Nat(1) << (n + 1));
    worst = std::max(worst, Rational(err / bound));
    ++checked;
    if (err < 0 || err > bound) ++violations;
  };
  for (unsigned n = 0; n <= 5; ++n) {
    for (std::uint64_t a = 0; a <= 64; ++a) {
      check({a}, n);
      for (std::uint64_t b = 0; b <= 64; ++b) check({a, b}, n);
    }
    for (int t = 0; t < 10000; ++t) check({rng() % 65, rng() % 65, rng() % 65}, n);
  }
  std::ostringstream os;
  os << checked << " tuples, " << violations << " outside 2^-(n+1), max err/bound = "
     << static_cast<double>(worst);
  return {violations == 0, os.str()};
}

// ---------------------------------------------------------------- 8

Outcome covariate_shift() {
  bool ok = true;
  std::ostringstream os;
  for (const char* name : {"f1_k2.json", "f1_k4.json", "f1_k7.json"}) {
    auto cfg = CovariateShiftConfig::from_json(load(name));
    std::size_t left = 0;
    bool monotone = true;
    std::string ks;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      cfg.seed = seed;
      const auto r = run_covariate_shift(cfg);
      left += r.argmin_fc <= r.argmin_nll ? 1 : 0;
      for (std::size_t i = 1; i < r.rows.size(); ++i) monotone &= r.rows[i].nll_bits <= r.rows[i - 1].nll_bits + 1e-9;
      ks += " " + std::to_string(r.argmin_fc) + "/" + std::to_string(r.argmin_nll);
    }
    ok &= left >= 4 && monotone;
    os << name << ": fc<=nll " << left << "/5" << (monotone ? "" : ", NLL NOT monotone") << " (fc/nll" << ks << "); ";
  }
  auto cfg = CovariateShiftConfig::from_json(load("f1_k7.json"));
  std::vector<std::size_t> medians;
  for (std::size_t n : {10, 50, 200, 1000}) {
    cfg.samples_per_env = n;
    std::vector<std::size_t> picks;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      cfg.seed = seed;
      picks.push_back(run_covariate_shift(cfg).argmin_fc);
    }
    medians.push_back(median(picks));
  }
  const bool sweep = std::is_sorted(medians.begin(), medians.end());
  ok &= sweep;
  os << "sweep {10,50,200,1000} median argmin_fc =";
  for (auto m : medians) os << ' ' << m;
  os << (sweep ? " (nondecreasing)" : " (NOT nondecreasing)");
  return {ok, os.str()};
}

// ---------------------------------------------------------------- 9

Outcome bivariate() {
  auto cfg = BivariateConfig::from_json(load("f2.json"));
  std::ostringstream os;
  const auto data = gen_linear_gaussian_data(cfg);
  const BivariateSearch causal(data, causal_pool(cfg), Direction::kCausal);
  const double gap = causal.fit(8).nll_bits - causal.unconstrained_nll();
  std::size_t samples = 0;
  for (const auto& e : data) samples += e.size();
  const bool near = gap <= static_cast<double>(samples);
  os << "seed 0: k=8 causal gap " << gap << " bits over " << samples << " samples; argmin_fc per seed:";
  std::size_t small = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = seed;
    const auto r = run_bivariate(cfg);
    small += r.argmin_fc <= 8 ? 1 : 0;
    os << ' ' << r.argmin_fc << '(' << r.row(r.argmin_fc).direction << ')';
  }
  os << "; k<=8 in " << small << "/5";
  return {near && small >= 4, os.str()};
}

// ---------------------------------------------------------------- 10

Outcome bayes() {
  const Layout l = Layout::uniform(1, 2);
  std::vector<DiscreteDistribution> models{DiscreteDistribution(l, 2, {2, 1, 1, 0}),
                                           DiscreteDistribution(l, 2, {1, 1, 1, 1})};
  const std::vector<double> half{0.5, 0.5};
  const std::vector<Point> x0{0};
  const auto r = bayes_vs_twopart(models, half, x0);
  const bool example = std::abs(r.twopart_bits - 2.0) <= 1e-12 && std::abs(r.bayes_bits + std::log2(3.0 / 8.0)) <= 1e-12;
  std::mt19937_64 rng(10);
  std::size_t ok = 0;
  const Layout l3 = Layout::uniform(1, 3);
  for (int t = 0; t < 1000; ++t) {
    std::vector<DiscreteDistribution> ms;
    std::vector<double> w;
    double sum = 0;
    const std::size_t count = 1 + rng() % 4;
    for (std::size_t i = 0; i < count; ++i) {
      ms.emplace_back(l3, 16, oracle::random_dyadic(rng, 8, 16, false));
      w.push_back(1.0 + static_cast<double>(rng() % 1000));
      sum += w.back();
    }
    for (auto& v : w) v /= sum;
    std::vector<Point> xs(1 + rng() % 20);
    for (auto& x : xs) x = rng() % 8;
    const auto b = bayes_vs_twopart(ms, w, xs);
    ok += b.bayes_bits <= b.twopart_bits ? 1 : 0;
  }
  std::ostringstream os;
  os << "example twopart=" << r.twopart_bits << " bayes=" << r.bayes_bits << "; " << ok << "/1000 bayes <= twopart";
  return {example && ok == 1000, os.str()};
}

// ---------------------------------------------------------------- 11

Outcome cfmp_semantics() {
  std::mt19937_64 rng(11);
  std::size_t instances = 0, violations = 0;
  for (int t = 0; t < 300; ++t) {
    const unsigned d = 1 + rng() % 3, m = 1 + rng() % 3, n = 1 + rng() % 8;
    const Layout layout = Layout::uniform(d, m);
    const std::vector<unsigned> widths(d, m);
    const unsigned k = required_factor_precision(n, d);
    // Random topological order; each coordinate conditions on a random subset of earlier ones.
    std::vector<std::size_t> order(d);
    for (std::size_t i = 0; i < d; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<CbnFactor> factors;
    std::vector<std::vector<Nat>> exact_tables;
    for (std::size_t i = 0; i < d; ++i) {
      std::vector<std::size_t> cond;
      for (std::size_t j = 0; j < i; ++j) {
        if (rng() & 1) cond.push_back(order[j]);
      }
      std::sort(cond.begin(), cond.end());
      auto table = random_conditional(rng, m, static_cast<unsigned>(m * cond.size()), 40);
      std::vector<Nat> trunc;
      for (const auto& v : table) trunc.push_back(v >> (40 - k));
      factors.push_back({{order[i]}, cond, k, trunc, ""});
      exact_tables.push_back(std::move(table));
    }
    const auto p = induced_distribution(build_cbn(layout, factors));
    ++instances;
    const Rational bound(1, Nat(1) << (n + 1));
    for (Point x = 0; x < layout.size(); ++x) {
      Rational exact = 1;
      for (std::size_t i = 0; i < d; ++i) {
        const auto& f = factors[i];
        const std::uint64_t idx =
            (oracle::concat(x, widths, f.cond_coords) << m) | oracle::coord(x, widths, f.value_coords[0]);
        exact *= frac(exact_tables[i][idx], 40);
      }
      const Rational err = exact - p.probability(x);
      if (err < 0 || err > bound) {
        ++violations;
        break;
      }
    }
  }
  // Worked example on (x1, x2, e): f1(X2 | X1) f2(X1 | E) f3(E).
  const auto worked = build_cbn(Layout::uniform(3, 1),
                                {CbnFactor{{2}, {}, 1, {1, 1}, "f3"}, CbnFactor{{0}, {2}, 2, {3, 1, 1, 3}, "f2"},
                                 CbnFactor{{1}, {0}, 2, {2, 2, 1, 3}, "f1"}},
                                {"X1", "X2", "E"});
  const auto report = causal_statements(worked);
  std::set<std::string> got;
  for (const auto& s : report.global) got.insert(describe(worked, s));
  const bool statements = got == std::set<std::string>{"E -> X1", "X1 -> X2"} && report.local.empty();
  std::ostringstream os;
  os << instances << " random CBNs, " << violations << " outside 2^-(n+1); worked example statements {";
  for (const auto& s : got) os << ' ' << s << ';';
  os << " }";
  return {violations == 0 && statements, os.str()};
}

// ---------------------------------------------------------------- 12

Outcome ci_coarsening() {
  std::mt19937_64 rng(12);
  std::size_t ok = 0;
  const std::size_t systems = 100;
  const std::vector<std::size_t> X{0}, Y{1}, Z{2};
  Rational worst = 0;
  for (std::size_t s = 0; s < systems; ++s) {
    const unsigned mx = 2 + rng() % 2, my = 1 + rng() % 2, mz = 1 + rng() % 2, q = 4;
    const Layout l({mx, my, mz});
    const auto px = random_conditional(rng, mx, mz, q);
    const auto py = random_conditional(rng, my, mz, q);
    const auto pz = oracle::random_dyadic(rng, std::size_t{1} << mz, q);
    std::vector<Nat> t(l.size());
    for (Point p = 0; p < l.size(); ++p) {
      const auto x = l.coord(p, 0), y = l.coord(p, 1), z = l.coord(p, 2);
      t[p] = px[(z << mx) | x] * py[(z << my) | y] * pz[z];
    }
    const unsigned n = 3 * q;
    const DiscreteDistribution joint(l, n, t);
    const std::vector<unsigned> coarse{mx - 1, my, mz};
    const auto c = project_widths(joint, coarse, n);
    const Rational tol(1, Nat(1) << (n - 2));
    const Rational dep = max_cond_dependence(c, X, Y, Z);
    worst = std::max(worst, dep);
    ok += dep <= tol ? 1 : 0;
  }
  // Negative control: X's top bit copies Y.
  const Layout l({2, 1, 1});
  std::vector<Nat> t(l.size(), 0);
  for (Point p = 0; p < l.size(); ++p) {
    if ((l.coord(p, 0) >> 1) == l.coord(p, 1)) t[p] = 512;
  }
  const unsigned n = 12;
  const auto c = project_widths(DiscreteDistribution(l, n, t), std::vector<unsigned>{1, 1, 1}, n);
  const bool control = !is_cond_independent(c, X, Y, Z, Rational(1, Nat(1) << (n - 2)));
  std::ostringstream os;
  os << ok << "/" << systems << " independent after coarsening (max dependence " << static_cast<double>(worst)
     << "); dependent control " << (control ? "detected" : "MISSED");
  return {ok == systems && control, os.str()};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "Huffman fixture", 1, huffman_fixture},
      {2, "Shannon bound", 1000, shannon_bound},
      {3, "Kraft and round-trip", 10000, kraft_and_round_trip},
      {4, "Strategy cost difference (M=18)", 1000, prop18},
      {5, "Tabular CBN vs joint table asymptotics", 1000, prop17},
      {6, "Invariant vs Markov asymptotics", 1000, prop19},
      {7, "Factor truncation bound", 30000, lemma22},
      {8, "Covariate-shift selection", 120000, covariate_shift},
      {9, "Bivariate causal vs anticausal", 120000, bivariate},
      {10, "Bayes vs two-part", 1000, bayes},
      {11, "CFMP semantics", 10000, cfmp_semantics},
      {12, "CI coarsening", 5000, ci_coarsening},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out{false, ""};
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = ms < c.budget_ms;
    const bool pass = out.ok && in_time;
    failed += pass ? 0 : 1;
    std::printf("%s AC%-2d %s: %s [%.3f ms, budget %.0f ms%s]\n", pass ? "PASS" : "FAIL", c.id, c.title.c_str(),
                out.detail.c_str(), ms, c.budget_ms, in_time ? "" : ", OVER BUDGET");
    std::fflush(stdout);
  }
  std::printf("%d/%zu acceptance criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
