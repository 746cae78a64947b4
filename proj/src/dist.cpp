#include "fcc/dist.hpp"

#include "fcc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

namespace fcc {

namespace {

void require_sorted_unique(std::span<const std::size_t> coords, std::size_t dims, const char* what) {
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] >= dims) throw DomainError(std::string(what) + ": coordinate out of range");
    if (i > 0 && coords[i] <= coords[i - 1]) throw DomainError(std::string(what) + ": coordinates must be sorted and unique");
  }
}

double nat_to_double_scaled(const Nat& num, unsigned bits) {
  if (num == 0) return 0.0;
  const std::size_t top = msb_index(num);
  if (top < 900) return std::ldexp(num.convert_to<double>(), -static_cast<int>(bits));
  const std::size_t shift = top - 64;
  const double head = static_cast<Nat>(num >> shift).convert_to<double>();
  return std::ldexp(head, static_cast<int>(shift) - static_cast<int>(bits));
}

}  // namespace

// ---------------------------------------------------------------- Layout

Layout::Layout(std::vector<unsigned> widths) : widths_(std::move(widths)) {
  shifts_.resize(widths_.size());
  unsigned acc = 0;
  for (std::size_t i = widths_.size(); i-- > 0;) {
    shifts_[i] = acc;
    acc += widths_[i];
  }
  total_bits_ = acc;
  if (total_bits_ > kMaxTotalBits) throw DomainError("sample space exceeds the supported table size");
}

Layout Layout::uniform(unsigned d, unsigned m) { return Layout(std::vector<unsigned>(d, m)); }

bool Layout::is_uniform() const {
  return std::all_of(widths_.begin(), widths_.end(), [&](unsigned w) { return w == widths_.front(); });
}

unsigned Layout::m() const {
  if (widths_.empty()) return 0;
  if (!is_uniform()) throw DomainError("layout has coordinates of different widths");
  return widths_.front();
}

std::uint64_t Layout::coord(Point p, std::size_t i) const {
  const unsigned w = widths_.at(i);
  return (p >> shifts_[i]) & ((std::uint64_t{1} << w) - 1);
}

Point Layout::with_coord(Point p, std::size_t i, std::uint64_t value) const {
  const unsigned w = widths_.at(i);
  const std::uint64_t mask = ((std::uint64_t{1} << w) - 1) << shifts_[i];
  if (value >> w) throw DomainError("coordinate value exceeds its width");
  return (p & ~mask) | (value << shifts_[i]);
}

Point Layout::compose(std::span<const std::uint64_t> coords) const {
  if (coords.size() != widths_.size()) throw DomainError("coordinate count does not match layout");
  Point p = 0;
  for (std::size_t i = 0; i < coords.size(); ++i) p = with_coord(p, i, coords[i]);
  return p;
}

Layout Layout::sub(std::span<const std::size_t> coords) const {
  require_sorted_unique(coords, dims(), "sub-layout");
  std::vector<unsigned> w;
  for (auto c : coords) w.push_back(widths_[c]);
  return Layout(std::move(w));
}

std::uint64_t Layout::project(Point p, std::span<const std::size_t> coords) const {
  std::uint64_t v = 0;
  for (auto c : coords) v = (v << widths_.at(c)) | coord(p, c);
  return v;
}

std::string Layout::point_string(Point p) const { return BitString::from_uint(p, total_bits_).to_string(); }

Point Layout::parse_point(const std::string& bits) const {
  if (bits.size() != total_bits_) throw DomainError("point '" + bits + "' has the wrong number of bits");
  return BitString(bits).read_uint(0, total_bits_);
}

// ---------------------------------------------------------------- Dyadic

double Dyadic::to_double() const { return nat_to_double_scaled(num, bits); }

Dyadic Dyadic::truncated(unsigned target) const {
  if (target >= bits) return {num << (target - bits), target};
  return {num >> (bits - target), target};
}

Dyadic dyadic_sum(const Dyadic& a, const Dyadic& b) {
  const unsigned bits = std::max(a.bits, b.bits);
  return {(a.num << (bits - a.bits)) + (b.num << (bits - b.bits)), bits};
}

Dyadic truncate_rational(const Rational& q, unsigned bits) {
  if (q < 0) throw DomainError("negative probability");
  const Nat num = boost::multiprecision::numerator(q) * pow2(bits) / boost::multiprecision::denominator(q);
  return {num, bits};
}

// ---------------------------------------------------------------- DiscreteDistribution

DiscreteDistribution::DiscreteDistribution(Layout layout, unsigned n, std::vector<Nat> numerators,
                                           Strictness strictness)
    : layout_(std::move(layout)), n_(n), num_(std::move(numerators)) {
  if (num_.size() != layout_.size()) throw DomainError("table size does not match the sample space");
  const Nat one = pow2(n_);
  Nat total = 0;
  std::size_t support = 0;
  for (const auto& v : num_) {
    if (v < 0) throw DomainError("negative probability");
    if (strictness == Strictness::kTopLevel ? v >= one : v > one) {
      throw DomainError("probability value must be below 1");
    }
    total += v;
    if (v != 0) ++support;
  }
  if (total > one) throw DomainError("total mass exceeds 1");
  if (strictness == Strictness::kTopLevel && total + support < one) {
    throw DomainError("total mass is below the truncation slack");
  }
}

double DiscreteDistribution::probability_double(Point p) const { return nat_to_double_scaled(num_.at(p), n_); }

std::vector<Point> DiscreteDistribution::support() const {
  std::vector<Point> out;
  for (Point p = 0; p < num_.size(); ++p) {
    if (num_[p] != 0) out.push_back(p);
  }
  return out;
}

Rational DiscreteDistribution::mass() const {
  Nat total = std::accumulate(num_.begin(), num_.end(), Nat(0));
  return Rational(total, pow2(n_));
}

DiscreteDistribution make_table_distribution(const std::map<Point, Nat>& entries, const Layout& layout,
                                             unsigned n) {
  std::vector<Nat> table(layout.size(), 0);
  for (const auto& [point, num] : entries) {
    if (point >= layout.size()) throw DomainError("entry key lies outside the sample space");
    table[point] = num;
  }
  return DiscreteDistribution(layout, n, std::move(table), Strictness::kTopLevel);
}

DiscreteDistribution make_table_distribution(const std::map<Point, Nat>& entries, unsigned d, unsigned m,
                                             unsigned n) {
  return make_table_distribution(entries, Layout::uniform(d, m), n);
}

DiscreteDistribution project_widths(const DiscreteDistribution& p, std::span<const unsigned> widths,
                                    unsigned n_prime) {
  const Layout& src = p.layout();
  if (widths.size() != src.dims()) throw DomainError("projection needs one width per coordinate");
  if (n_prime > p.n()) throw DomainError("value precision can only decrease");
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] > src.width(i)) throw DomainError("variable precision can only decrease");
  }
  Layout dst(std::vector<unsigned>(widths.begin(), widths.end()));
  std::vector<Nat> sums(dst.size(), 0);
  std::vector<std::uint64_t> coords(src.dims());
  for (Point x = 0; x < src.size(); ++x) {
    for (std::size_t i = 0; i < src.dims(); ++i) coords[i] = src.coord(x, i) >> (src.width(i) - widths[i]);
    sums[dst.compose(coords)] += p.numerator(x);
  }
  for (auto& s : sums) s >>= (p.n() - n_prime);
  return DiscreteDistribution(std::move(dst), n_prime, std::move(sums));
}

DiscreteDistribution project_precision(const DiscreteDistribution& p, unsigned m_prime, unsigned n_prime) {
  const unsigned m = p.layout().m();
  if (m_prime > m) throw DomainError("variable precision can only decrease");
  std::vector<unsigned> widths(p.d(), m_prime);
  return project_widths(p, widths, n_prime);
}

DiscreteDistribution marginal(const DiscreteDistribution& p, std::span<const std::size_t> coords) {
  Layout dst = p.layout().sub(coords);
  std::vector<Nat> sums(dst.size(), 0);
  for (Point x = 0; x < p.layout().size(); ++x) sums[p.layout().project(x, coords)] += p.numerator(x);
  return DiscreteDistribution(std::move(dst), p.n(), std::move(sums));
}

DiscreteDistribution conditional(const DiscreteDistribution& p, std::span<const std::size_t> target,
                                 const std::map<std::size_t, std::uint64_t>& given) {
  const Layout& src = p.layout();
  Layout dst = src.sub(target);
  for (const auto& [c, v] : given) {
    if (c >= src.dims()) throw DomainError("conditioning coordinate out of range");
    if (std::find(target.begin(), target.end(), c) != target.end()) {
      throw DomainError("target and conditioning coordinates overlap");
    }
    if (v >> src.width(c)) throw DomainError("conditioning value exceeds coordinate width");
  }
  std::vector<Nat> joint(dst.size(), 0);
  Nat event = 0;
  for (Point x = 0; x < src.size(); ++x) {
    bool match = true;
    for (const auto& [c, v] : given) match = match && src.coord(x, c) == v;
    if (!match) continue;
    event += p.numerator(x);
    joint[src.project(x, target)] += p.numerator(x);
  }
  if (event == 0) throw DomainError("conditioning event has zero mass");
  // floor(joint / event * 2^n): round-down truncation of the exact ratio.
  for (auto& j : joint) j = (j << p.n()) / event;
  return DiscreteDistribution(std::move(dst), p.n(), std::move(joint));
}

Rational max_cond_dependence(const DiscreteDistribution& p, std::span<const std::size_t> a,
                             std::span<const std::size_t> b, std::span<const std::size_t> c) {
  const Layout& lay = p.layout();
  require_sorted_unique(a, lay.dims(), "conditional independence");
  require_sorted_unique(b, lay.dims(), "conditional independence");
  require_sorted_unique(c, lay.dims(), "conditional independence");
  std::set<std::size_t> seen;
  for (auto s : {a, b, c}) {
    for (auto i : s) {
      if (!seen.insert(i).second) throw DomainError("coordinate sets must be disjoint");
    }
  }
  const std::uint64_t na = lay.sub(a).size();
  const std::uint64_t nb = lay.sub(b).size();
  const std::uint64_t nc = lay.sub(c).size();
  std::vector<Nat> pabc(na * nb * nc, 0), pac(na * nc, 0), pbc(nb * nc, 0), pc(nc, 0);
  for (Point x = 0; x < lay.size(); ++x) {
    const auto& v = p.numerator(x);
    if (v == 0) continue;
    const auto ia = lay.project(x, a), ib = lay.project(x, b), ic = lay.project(x, c);
    pabc[(ic * na + ia) * nb + ib] += v;
    pac[ic * na + ia] += v;
    pbc[ic * nb + ib] += v;
    pc[ic] += v;
  }
  // |P(abc)P(c) - P(ac)P(bc)| / P(c)^2, all numerators over the same 2^n.
  Rational worst = 0;
  for (std::uint64_t ic = 0; ic < nc; ++ic) {
    if (pc[ic] == 0) continue;
    const Nat denom = pc[ic] * pc[ic];
    for (std::uint64_t ia = 0; ia < na; ++ia) {
      for (std::uint64_t ib = 0; ib < nb; ++ib) {
        Nat diff = pabc[(ic * na + ia) * nb + ib] * pc[ic] - pac[ic * na + ia] * pbc[ic * nb + ib];
        if (diff < 0) diff = -diff;
        if (diff == 0) continue;
        Rational r(diff, denom);
        if (r > worst) worst = r;
      }
    }
  }
  return worst;
}

bool is_cond_independent(const DiscreteDistribution& p, std::span<const std::size_t> a,
                         std::span<const std::size_t> b, std::span<const std::size_t> c, const Rational& tol) {
  return max_cond_dependence(p, a, b, c) <= tol;
}

unsigned ceil_log2(std::uint64_t count) {
  if (count == 0) throw DomainError("ceil_log2 of zero");
  unsigned bits = 0;
  while ((std::uint64_t{1} << bits) < count) ++bits;
  return bits;
}

unsigned required_factor_precision(unsigned n, unsigned l) {
  if (l < 1) throw DomainError("factor count must be at least 1");
  return 2 * n + ceil_log2(l) + 3;
}

std::vector<double> discretize_poisson(double lambda, std::size_t support_size) {
  if (!(lambda > 0)) throw DomainError("Poisson rate must be positive");
  if (support_size < 2) throw DomainError("support must have at least two cells");
  std::vector<double> pmf(support_size, 0.0);
  double term = std::exp(-lambda);
  double head = 0.0;
  for (std::size_t k = 0; k + 1 < support_size; ++k) {
    pmf[k] = term;
    head += term;
    term *= lambda / static_cast<double>(k + 1);
  }
  pmf.back() = std::max(0.0, 1.0 - head);
  return pmf;
}

std::vector<double> discretize_gaussian(double mu, double sigma, std::int64_t lo, std::int64_t hi) {
  if (!(sigma > 0)) throw DomainError("Gaussian scale must be positive");
  if (hi < lo) throw DomainError("empty grid");
  auto lower_tail = [&](double edge) { return 0.5 * std::erfc(-(edge - mu) / (sigma * std::sqrt(2.0))); };
  auto upper_tail = [&](double edge) { return 0.5 * std::erfc((edge - mu) / (sigma * std::sqrt(2.0))); };
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (std::int64_t i = lo; i <= hi; ++i) {
    const double left = static_cast<double>(i) - 0.5;
    const double right = static_cast<double>(i) + 0.5;
    double mass;
    if (i == lo && i == hi) {
      mass = 1.0;
    } else if (i == lo) {
      mass = lower_tail(right);
    } else if (i == hi) {
      mass = upper_tail(left);
    } else if (left >= mu) {
      mass = upper_tail(left) - upper_tail(right);
    } else {
      mass = lower_tail(right) - lower_tail(left);
    }
    out.push_back(std::max(0.0, mass));
  }
  return out;
}

std::vector<Nat> round_to_dyadic(std::span<const double> probs, unsigned n) {
  if (probs.empty()) throw DomainError("empty probability vector");
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (!(total > 0)) throw DomainError("probability vector has no mass");
  std::vector<Nat> out;
  out.reserve(probs.size());
  Nat sum = 0;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] < 0) throw DomainError("negative probability");
    if (probs[i] > probs[largest]) largest = i;
    out.emplace_back(std::floor(std::ldexp(probs[i] / total, static_cast<int>(n))));
    sum += out.back();
  }
  out[largest] += pow2(n) - sum;
  if (out[largest] < 0) throw DomainError("dyadic rounding failed");
  return out;
}

// ---------------------------------------------------------------- MultiEnvSystem

MultiEnvSystem::MultiEnvSystem(std::vector<DiscreteDistribution> envs, std::vector<Nat> prior, unsigned prior_bits)
    : envs_(std::move(envs)), prior_(std::move(prior)), prior_bits_(prior_bits) {
  if (envs_.empty()) throw DomainError("a multi-environment system needs at least one environment");
  if (prior_.size() != envs_.size()) throw DomainError("environment prior has the wrong length");
  for (const auto& e : envs_) {
    if (e.layout() != envs_.front().layout() || e.n() != envs_.front().n()) {
      throw DomainError("environments must share layout and precision");
    }
  }
  const Nat total = std::accumulate(prior_.begin(), prior_.end(), Nat(0));
  if (total > pow2(prior_bits_)) throw DomainError("environment prior exceeds unit mass");
}

unsigned MultiEnvSystem::env_bits() const { return ceil_log2(envs_.size()); }

DiscreteDistribution MultiEnvSystem::joint() const {
  std::vector<unsigned> widths = envs_.front().layout().widths();
  widths.push_back(env_bits());
  Layout lay(widths);
  const unsigned n = envs_.front().n() + prior_bits_;
  std::vector<Nat> table(lay.size(), 0);
  const std::size_t env_coord = widths.size() - 1;
  for (Point z = 0; z < lay.size(); ++z) {
    const auto e = lay.coord(z, env_coord);
    if (e >= envs_.size()) continue;
    const Point x = z >> env_bits();
    table[z] = envs_[e].numerator(x) * prior_[e];
  }
  return DiscreteDistribution(std::move(lay), n, std::move(table));
}

}  // namespace fcc
