#include "fcc/select.hpp"

#include "fcc/bitcode.hpp"
#include "fcc/error.hpp"
#include "fcc/ufcc.hpp"

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <bit>
#include <functional>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <set>

namespace fcc {

namespace {

using json = nlohmann::json;

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw ConfigError("unknown configuration key '" + key + "'");
    }
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::vector<double> to_doubles(const std::vector<Nat>& nums, unsigned precision) {
  std::vector<double> out;
  out.reserve(nums.size());
  for (const auto& v : nums) out.push_back(std::ldexp(v.convert_to<double>(), -static_cast<int>(precision)));
  return out;
}

std::vector<std::uint64_t> cumulative(const std::vector<Nat>& nums) {
  std::vector<std::uint64_t> cum;
  std::uint64_t acc = 0;
  for (const auto& v : nums) {
    acc += v.convert_to<std::uint64_t>();
    cum.push_back(acc);
  }
  return cum;
}

// Inverse-CDF draw against dyadic numerators with `precision` <= 63 bits.
std::uint32_t draw(const std::vector<std::uint64_t>& cum, unsigned precision, std::mt19937_64& rng) {
  const std::uint64_t u = rng() >> (64 - precision);
  auto it = std::upper_bound(cum.begin(), cum.end(), u);
  if (it == cum.end()) --it;
  return static_cast<std::uint32_t>(it - cum.begin());
}

double neg_log2(double p, unsigned precision) {
  return -std::log2(std::max(p, std::ldexp(1.0, -static_cast<int>(precision))));
}

bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t k = idx.size();
  for (std::size_t i = k; i-- > 0;) {
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------- covariate shift

void CovariateShiftConfig::validate() const {
  if (samples_per_env < 1) throw ConfigError("samples_per_env must be at least 1");
  if (support_size < 2) throw ConfigError("support_size must be at least 2");
  if (candidate_lambdas.empty()) throw ConfigError("candidate list is empty");
  if (ground_truth_lambdas.empty()) throw ConfigError("ground-truth list is empty");
  for (double l : candidate_lambdas) {
    if (!(l > 0)) throw ConfigError("candidate rates must be positive");
  }
  for (double l : ground_truth_lambdas) {
    if (!(l > 0)) throw ConfigError("ground-truth rates must be positive");
  }
  if (precision < 8 || precision > 62) throw ConfigError("precision must lie in 8..62");
  if (!(y_sigma > 0)) throw ConfigError("y_sigma must be positive");
  const std::size_t k_cap = std::min(candidate_lambdas.size(), env_count());
  if (k_min < 1 || k_min > k_max || k_max > k_cap) throw ConfigError("k range must lie in 1..min(M, I)");
}

CovariateShiftConfig CovariateShiftConfig::from_json(const json& j) {
  reject_unknown_keys(j, {"candidate_lambdas", "ground_truth_lambdas", "lambda_scale", "samples_per_env",
                          "support_size", "seed", "precision", "y_sigma", "k_range", "name"});
  CovariateShiftConfig cfg;
  const double scale = get_or(j, "lambda_scale", 1.0);
  cfg.candidate_lambdas = get_or(j, "candidate_lambdas", std::vector<double>{});
  cfg.ground_truth_lambdas = get_or(j, "ground_truth_lambdas", std::vector<double>{});
  for (auto& l : cfg.candidate_lambdas) l *= scale;
  for (auto& l : cfg.ground_truth_lambdas) l *= scale;
  cfg.samples_per_env = get_or(j, "samples_per_env", cfg.samples_per_env);
  cfg.support_size = get_or(j, "support_size", cfg.support_size);
  cfg.seed = get_or(j, "seed", cfg.seed);
  cfg.precision = get_or(j, "precision", cfg.precision);
  cfg.y_sigma = get_or(j, "y_sigma", cfg.y_sigma);
  cfg.k_max = std::min(cfg.candidate_lambdas.size(), cfg.env_count());
  if (j.contains("k_range")) {
    auto r = get_or(j, "k_range", std::vector<std::size_t>{});
    if (r.size() != 2) throw ConfigError("k_range must be [k_min, k_max]");
    cfg.k_min = r[0];
    cfg.k_max = r[1];
  }
  cfg.validate();
  return cfg;
}

json CovariateShiftConfig::to_json() const {
  return {{"candidate_lambdas", candidate_lambdas},
          {"ground_truth_lambdas", ground_truth_lambdas},
          {"lambda_scale", 1.0},
          {"samples_per_env", samples_per_env},
          {"support_size", support_size},
          {"seed", seed},
          {"precision", precision},
          {"y_sigma", y_sigma},
          {"k_range", {k_min, k_max}}};
}

std::size_t MultiEnvSamples::total() const {
  std::size_t n = 0;
  for (const auto& e : envs) n += e.size();
  return n;
}

std::vector<double> poisson_table(double lambda, std::size_t support, unsigned precision) {
  return to_doubles(round_to_dyadic(discretize_poisson(lambda, support), precision), precision);
}

std::vector<double> gaussian_channel_table(std::size_t support, double sigma, unsigned precision) {
  std::vector<double> out;
  out.reserve(support * support);
  for (std::size_t x = 0; x < support; ++x) {
    auto row = discretize_gaussian(static_cast<double>(x), sigma, 0, static_cast<std::int64_t>(support) - 1);
    auto d = to_doubles(round_to_dyadic(row, precision), precision);
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

double pmf_mean(const std::vector<double>& pmf) {
  double m = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) m += static_cast<double>(i) * pmf[i];
  return m;
}

MultiEnvSamples gen_covariate_shift_data(const CovariateShiftConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const auto support = cfg.support_size;
  std::vector<std::vector<std::uint64_t>> channel;
  for (std::size_t x = 0; x < support; ++x) {
    auto row = discretize_gaussian(static_cast<double>(x), cfg.y_sigma, 0, static_cast<std::int64_t>(support) - 1);
    channel.push_back(cumulative(round_to_dyadic(row, cfg.precision)));
  }
  MultiEnvSamples out;
  for (double lambda : cfg.ground_truth_lambdas) {
    const auto cum = cumulative(round_to_dyadic(discretize_poisson(lambda, support), cfg.precision));
    auto& env = out.envs.emplace_back();
    for (std::size_t i = 0; i < cfg.samples_per_env; ++i) {
      const auto x = draw(cum, cfg.precision, rng);
      const auto y = draw(channel[x], cfg.precision, rng);
      env.push_back({x, y});
    }
  }
  return out;
}

CovariateShiftSearch::CovariateShiftSearch(const MultiEnvSamples& samples, std::vector<double> candidate_lambdas,
                                           std::size_t support_size, unsigned precision, double y_sigma)
    : lambdas_(std::move(candidate_lambdas)) {
  if (lambdas_.empty()) throw DomainError("candidate list is empty");
  if (samples.envs.empty()) throw DomainError("no environments");
  const auto channel = gaussian_channel_table(support_size, y_sigma, precision);
  std::vector<std::vector<double>> pmfs;
  for (double l : lambdas_) {
    pmfs.push_back(poisson_table(l, support_size, precision));
    means_.push_back(pmf_mean(pmfs.back()));
  }
  const double env_bits = std::log2(static_cast<double>(samples.envs.size()));
  for (const auto& env : samples.envs) {
    if (env.empty()) throw DomainError("environment without samples");
    double sum_x = 0.0;
    double fixed = 0.0;  // Y|X and environment-prior terms shared by every candidate
    for (const auto& s : env) {
      if (s.x >= support_size || s.y >= support_size) throw DomainError("sample outside the support");
      sum_x += s.x;
      fixed += neg_log2(channel[s.x * support_size + s.y], precision) + env_bits;
    }
    emp_means_.push_back(sum_x / static_cast<double>(env.size()));
    auto& row = env_nll_.emplace_back();
    for (const auto& pmf : pmfs) {
      double nll = fixed;
      for (const auto& s : env) nll += neg_log2(pmf[s.x], precision);
      row.push_back(nll);
    }
  }
}

CovariateShiftFit CovariateShiftSearch::fit(std::size_t k) const {
  const std::size_t M = lambdas_.size();
  if (k < 1 || k > M) throw DomainError("k must lie in 1..|candidates|");
  std::vector<std::size_t> subset(k);
  for (std::size_t i = 0; i < k; ++i) subset[i] = i;
  std::vector<std::size_t> assign(env_nll_.size());
  CovariateShiftFit best{{}, {}, std::numeric_limits<double>::infinity()};
  do {
    double nll = 0.0;
    for (std::size_t e = 0; e < env_nll_.size(); ++e) {
      std::size_t pick = subset[0];
      double dist = std::abs(means_[pick] - emp_means_[e]);
      for (std::size_t i = 1; i < k; ++i) {
        const std::size_t j = subset[i];
        const double dj = std::abs(means_[j] - emp_means_[e]);
        if (dj < dist || (dj == dist && lambdas_[j] < lambdas_[pick])) {
          pick = j;
          dist = dj;
        }
      }
      assign[e] = pick;
      nll += env_nll_[e][pick];
    }
    if (nll < best.nll_bits) best = {subset, assign, nll};
  } while (next_combination(subset, M));
  return best;
}

CovariateShiftFit fit_covariate_shift(const MultiEnvSamples& samples, const std::vector<double>& candidate_lambdas,
                                      std::size_t k, std::size_t support_size, unsigned precision) {
  return CovariateShiftSearch(samples, candidate_lambdas, support_size, precision).fit(k);
}

// ---------------------------------------------------------------- selection result

const SelectionRow& SelectionResult::row(std::size_t k) const {
  for (const auto& r : rows) {
    if (r.k == k) return r;
  }
  throw DomainError("no row for k = " + std::to_string(k));
}

void finalize_argmins(SelectionResult& result) {
  if (result.rows.empty()) throw DomainError("empty selection result");
  const SelectionRow* best_nll = &result.rows.front();
  const SelectionRow* best_fc = &result.rows.front();
  for (const auto& r : result.rows) {
    if (r.nll_bits < best_nll->nll_bits || (r.nll_bits == best_nll->nll_bits && r.k < best_nll->k)) best_nll = &r;
    if (r.fc_total < best_fc->fc_total || (r.fc_total == best_fc->fc_total && r.k < best_fc->k)) best_fc = &r;
  }
  result.argmin_nll = best_nll->k;
  result.argmin_fc = best_fc->k;
}

json SelectionResult::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    json row = {{"k", r.k},
                {"subset", r.subset},
                {"assignment", r.assignment},
                {"nll_bits", r.nll_bits},
                {"model_bits", r.model_bits},
                {"fc_total", r.fc_total}};
    if (!r.direction.empty()) row["direction"] = r.direction;
    rows_json.push_back(std::move(row));
  }
  return {{"seed", seed}, {"argmin_nll", argmin_nll}, {"argmin_fc", argmin_fc}, {"rows", rows_json}};
}

void SelectionResult::write_csv(std::ostream& os) const {
  os << "seed,k,nll_bits,model_bits,fc_total,direction,argmin_nll,argmin_fc\n";
  const auto old = os.precision(17);
  for (const auto& r : rows) {
    os << seed << ',' << r.k << ',' << r.nll_bits << ',' << r.model_bits << ',' << r.fc_total << ','
       << r.direction << ',' << (r.k == argmin_nll ? 1 : 0) << ',' << (r.k == argmin_fc ? 1 : 0) << '\n';
  }
  os.precision(old);
}

SelectionResult select_k(const MultiEnvSamples& samples, const std::vector<double>& candidate_lambdas,
                         std::size_t k_min, std::size_t k_max, std::size_t support_size, unsigned precision) {
  if (k_min < 1 || k_min > k_max || k_max > candidate_lambdas.size()) {
    throw DomainError("k range must lie in 1..|candidates|");
  }
  CovariateShiftSearch search(samples, candidate_lambdas, support_size, precision);
  const std::size_t N = samples.envs.size();
  const std::size_t M = candidate_lambdas.size();
  SelectionResult result;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    auto fit = search.fit(k);
    const double model = strategy_bits(N, M, k, 2);
    result.rows.push_back({k, std::move(fit.subset), std::move(fit.assignment), "", fit.nll_bits, model,
                           fc_objective(model, fit.nll_bits, FcForm::kExperiment)});
  }
  finalize_argmins(result);
  return result;
}

SelectionResult run_covariate_shift(const CovariateShiftConfig& cfg) {
  cfg.validate();
  const auto samples = gen_covariate_shift_data(cfg);
  auto result = select_k(samples, cfg.candidate_lambdas, cfg.k_min, cfg.k_max, cfg.support_size, cfg.precision);
  result.seed = cfg.seed;
  return result;
}

// ---------------------------------------------------------------- bivariate

GaussianParams anticausal_params(const GaussianParams& p) {
  const double t1 = p.coef * p.coef * p.var1 + p.var2;
  return {t1, p.var1 * p.var2 / t1, p.coef * p.var1 / t1};
}

void BivariateConfig::validate() const {
  if (env_params.empty()) throw ConfigError("no environments");
  for (const auto& p : env_params) {
    if (!(p.var1 > 0) || !(p.var2 > 0) || !std::isfinite(p.coef)) {
      throw ConfigError("variances must be positive and coefficients finite");
    }
  }
  if (grid_size < 1 || grid_size > 12) throw ConfigError("grid_size must lie in 1..12");
  if (samples_per_env < 1) throw ConfigError("samples_per_env must be at least 1");
  const std::size_t cap = std::min(3 * grid_size, 3 * env_params.size());
  if (k_min < 3 || k_min > k_max || k_max > cap) throw ConfigError("k range must lie in 3..min(pool, slots)");
}

BivariateConfig BivariateConfig::from_json(const json& j) {
  reject_unknown_keys(j, {"env_params", "grid_size", "samples_per_env", "seed", "k_range", "name"});
  BivariateConfig cfg;
  for (const auto& row : get_or(j, "env_params", std::vector<std::vector<double>>{})) {
    if (row.size() != 3) throw ConfigError("env_params rows must be [var1, var2, coef]");
    cfg.env_params.push_back({row[0], row[1], row[2]});
  }
  cfg.grid_size = get_or(j, "grid_size", cfg.grid_size);
  cfg.samples_per_env = get_or(j, "samples_per_env", cfg.samples_per_env);
  cfg.seed = get_or(j, "seed", cfg.seed);
  cfg.k_max = std::min(3 * cfg.grid_size, 3 * cfg.env_params.size());
  if (j.contains("k_range")) {
    auto r = get_or(j, "k_range", std::vector<std::size_t>{});
    if (r.size() != 2) throw ConfigError("k_range must be [k_min, k_max]");
    cfg.k_min = r[0];
    cfg.k_max = r[1];
  }
  cfg.validate();
  return cfg;
}

json BivariateConfig::to_json() const {
  json rows = json::array();
  for (const auto& p : env_params) rows.push_back({p.var1, p.var2, p.coef});
  return {{"env_params", rows},
          {"grid_size", grid_size},
          {"samples_per_env", samples_per_env},
          {"seed", seed},
          {"k_range", {k_min, k_max}}};
}

BivariateSamples gen_linear_gaussian_data(const BivariateConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  BivariateSamples out;
  for (const auto& p : cfg.env_params) {
    auto& env = out.emplace_back();
    for (std::size_t i = 0; i < cfg.samples_per_env; ++i) {
      const double x = std::sqrt(p.var1) * normal(rng);
      const double y = p.coef * x + std::sqrt(p.var2) * normal(rng);
      env.push_back({x, y});
    }
  }
  return out;
}

std::vector<double> make_grid(const std::vector<double>& values, std::size_t size) {
  if (values.empty() || size < 1) throw DomainError("grid needs values and a positive size");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> grid(size);
  for (std::size_t i = 0; i < size; ++i) {
    grid[i] = size == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(size - 1);
  }
  const std::set<double> required(values.begin(), values.end());
  if (required.size() > size) throw DomainError("grid is smaller than the number of distinct values");
  std::vector<bool> pinned(size, false);
  auto tol = [&](double v) { return 1e-12 * std::max(1.0, std::abs(v)); };
  for (double v : required) {
    for (std::size_t i = 0; i < size; ++i) {
      if (!pinned[i] && std::abs(grid[i] - v) <= tol(v)) {
        grid[i] = v;
        pinned[i] = true;
        break;
      }
    }
  }
  for (double v : required) {
    if (std::any_of(grid.begin(), grid.end(), [&](double g) { return g == v; })) continue;
    std::size_t nearest = size;
    for (std::size_t i = 0; i < size; ++i) {
      if (pinned[i]) continue;
      if (nearest == size || std::abs(grid[i] - v) < std::abs(grid[nearest] - v)) nearest = i;
    }
    grid[nearest] = v;
    pinned[nearest] = true;
  }
  std::sort(grid.begin(), grid.end());
  return grid;
}

std::string direction_name(Direction d) { return d == Direction::kCausal ? "causal" : "anticausal"; }

namespace {

ParameterPool pool_from(const std::vector<GaussianParams>& params, std::size_t grid_size) {
  std::array<std::vector<double>, 3> values;
  for (const auto& p : params) {
    values[0].push_back(p.var1);
    values[1].push_back(p.var2);
    values[2].push_back(p.coef);
  }
  return {{make_grid(values[0], grid_size), make_grid(values[1], grid_size), make_grid(values[2], grid_size)}};
}

double gauss_nll_bits(double v, double mean, double var) {
  const double r = v - mean;
  return (0.5 * std::log(2.0 * std::numbers::pi * var) + r * r / (2.0 * var)) / std::numbers::ln2;
}

}  // namespace

ParameterPool causal_pool(const BivariateConfig& cfg) { return pool_from(cfg.env_params, cfg.grid_size); }

ParameterPool anticausal_pool(const BivariateConfig& cfg) {
  std::vector<GaussianParams> rev;
  for (const auto& p : cfg.env_params) rev.push_back(anticausal_params(p));
  return pool_from(rev, cfg.grid_size);
}

double gaussian_nll_bits(const std::vector<XYReal>& env, Direction dir, const GaussianParams& p) {
  double s = 0.0;
  for (const auto& v : env) {
    const double cause = dir == Direction::kCausal ? v.x : v.y;
    const double effect = dir == Direction::kCausal ? v.y : v.x;
    s += gauss_nll_bits(cause, 0.0, p.var1) + gauss_nll_bits(effect, p.coef * cause, p.var2);
  }
  return s;
}

BivariateSearch::BivariateSearch(const BivariateSamples& samples, ParameterPool pool, Direction dir)
    : samples_(samples),
      pool_(std::move(pool)),
      dir_(dir),
      g1_(pool_.grids[0].size()),
      g2_(pool_.grids[1].size()),
      g3_(pool_.grids[2].size()) {
  if (samples_.empty()) throw DomainError("no environments");
  for (auto g : {g1_, g2_, g3_}) {
    if (g < 1 || g > 12) throw DomainError("grid sizes must lie in 1..12");
  }
  for (const auto& env : samples_) {
    if (env.empty()) throw DomainError("environment without samples");
    auto& r1 = nll1_.emplace_back();
    auto& r23 = nll23_.emplace_back();
    for (double v1 : pool_.grids[0]) {
      double s = 0.0;
      for (const auto& v : env) s += gauss_nll_bits(dir == Direction::kCausal ? v.x : v.y, 0.0, v1);
      r1.push_back(s);
    }
    for (double v2 : pool_.grids[1]) {
      for (double c : pool_.grids[2]) {
        double s = 0.0;
        for (const auto& v : env) {
          const double cause = dir == Direction::kCausal ? v.x : v.y;
          const double effect = dir == Direction::kCausal ? v.y : v.x;
          s += gauss_nll_bits(effect, c * cause, v2);
        }
        r23.push_back(s);
      }
    }
  }

  const std::size_t n1 = std::size_t{1} << g1_, n2 = std::size_t{1} << g2_, n3 = std::size_t{1} << g3_;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  best1_.assign(n1, 0.0);
  std::vector<double> cur(std::max({n1, n2, n3}));
  for (std::size_t e = 0; e < samples_.size(); ++e) {
    cur[0] = kInf;
    for (std::size_t m = 1; m < n1; ++m) {
      cur[m] = std::min(cur[m & (m - 1)], nll1_[e][std::countr_zero(m)]);
      best1_[m] += cur[m];
    }
  }
  best23_.assign(n2 * n3, 0.0);
  std::vector<double> inner(g2_ * n3);  // [i2][mask3] min over i3 in mask3
  for (std::size_t e = 0; e < samples_.size(); ++e) {
    for (std::size_t i2 = 0; i2 < g2_; ++i2) {
      double* row = &inner[i2 * n3];
      row[0] = kInf;
      for (std::size_t m3 = 1; m3 < n3; ++m3) {
        row[m3] = std::min(row[m3 & (m3 - 1)], nll23_[e][i2 * g3_ + std::countr_zero(m3)]);
      }
    }
    for (std::size_t m3 = 1; m3 < n3; ++m3) {
      cur[0] = kInf;
      for (std::size_t m2 = 1; m2 < n2; ++m2) {
        cur[m2] = std::min(cur[m2 & (m2 - 1)], inner[std::countr_zero(m2) * n3 + m3]);
        best23_[m2 * n3 + m3] += cur[m2];
      }
    }
  }
}

BivariateFit BivariateSearch::fit(std::size_t k) const {
  if (k < 3 || k > g1_ + g2_ + g3_) throw DomainError("k must lie in 3..pool size");
  const std::size_t n1 = std::size_t{1} << g1_, n2 = std::size_t{1} << g2_, n3 = std::size_t{1} << g3_;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Best value per popcount with the smallest mask (pair) on ties.
  std::vector<std::pair<double, std::uint32_t>> by1(g1_ + 1, {kInf, 0});
  for (std::uint32_t m = 1; m < n1; ++m) {
    auto& b = by1[std::popcount(m)];
    if (best1_[m] < b.first) b = {best1_[m], m};
  }
  struct Pair {
    double v = kInf;
    std::uint32_t m2 = 0, m3 = 0;
  };
  std::vector<Pair> by23((g2_ + 1) * (g3_ + 1));
  for (std::uint32_t m2 = 1; m2 < n2; ++m2) {
    for (std::uint32_t m3 = 1; m3 < n3; ++m3) {
      auto& b = by23[std::popcount(m2) * (g3_ + 1) + std::popcount(m3)];
      const double v = best23_[m2 * n3 + m3];
      if (v < b.v) b = {v, m2, m3};
    }
  }
  double best = kInf;
  std::array<std::uint32_t, 3> masks{0, 0, 0};
  for (std::size_t k1 = 1; k1 <= g1_; ++k1) {
    for (std::size_t k2 = 1; k2 <= g2_; ++k2) {
      if (k1 + k2 >= k) continue;
      const std::size_t k3 = k - k1 - k2;
      if (k3 > g3_) continue;
      const auto& p = by23[k2 * (g3_ + 1) + k3];
      const double v = by1[k1].first + p.v;
      const std::array<std::uint32_t, 3> cand{by1[k1].second, p.m2, p.m3};
      if (v < best || (v == best && cand < masks)) {
        best = v;
        masks = cand;
      }
    }
  }
  return {dir_, masks, assign(masks), best};
}

std::vector<std::array<std::size_t, 3>> BivariateSearch::assign(const std::array<std::uint32_t, 3>& masks) const {
  std::vector<std::array<std::size_t, 3>> out;
  for (std::size_t e = 0; e < samples_.size(); ++e) {
    std::array<std::size_t, 3> a{g1_, g2_, g3_};
    for (std::size_t i = 0; i < g1_; ++i) {
      if ((masks[0] >> i & 1U) && (a[0] == g1_ || nll1_[e][i] < nll1_[e][a[0]])) a[0] = i;
    }
    for (std::size_t i2 = 0; i2 < g2_; ++i2) {
      if (!(masks[1] >> i2 & 1U)) continue;
      for (std::size_t i3 = 0; i3 < g3_; ++i3) {
        if (!(masks[2] >> i3 & 1U)) continue;
        if (a[1] == g2_ || nll23_[e][i2 * g3_ + i3] < nll23_[e][a[1] * g3_ + a[2]]) {
          a[1] = i2;
          a[2] = i3;
        }
      }
    }
    out.push_back(a);
  }
  return out;
}

double BivariateSearch::unconstrained_nll() const { return fit(g1_ + g2_ + g3_).nll_bits; }

BivariateFit fit_bivariate(const BivariateSamples& samples, const ParameterPool& causal,
                           const ParameterPool& anticausal, std::size_t k) {
  if (k > causal.size() || k > anticausal.size()) throw DomainError("k exceeds the parameter pool");
  auto a = BivariateSearch(samples, causal, Direction::kCausal).fit(k);
  auto b = BivariateSearch(samples, anticausal, Direction::kAnticausal).fit(k);
  return b.nll_bits < a.nll_bits ? b : a;
}

std::size_t bivariate_slots(const BivariateConfig& cfg) { return 3 * cfg.env_params.size(); }

SelectionResult run_bivariate(const BivariateConfig& cfg) {
  cfg.validate();
  const auto samples = gen_linear_gaussian_data(cfg);
  const BivariateSearch causal(samples, causal_pool(cfg), Direction::kCausal);
  const BivariateSearch anti(samples, anticausal_pool(cfg), Direction::kAnticausal);
  const std::size_t M = causal.pool().size();
  const std::size_t N = bivariate_slots(cfg);
  const std::size_t g = cfg.grid_size;
  SelectionResult result;
  result.seed = cfg.seed;
  for (std::size_t k = cfg.k_min; k <= cfg.k_max; ++k) {
    auto a = causal.fit(k);
    auto b = anti.fit(k);
    const BivariateFit& win = b.nll_bits < a.nll_bits ? b : a;
    SelectionRow row{k, {}, {}, direction_name(win.direction), win.nll_bits, strategy_bits(N, M, k, 2), 0.0};
    for (std::size_t p = 0; p < 3; ++p) {
      for (std::size_t i = 0; i < g; ++i) {
        if (win.masks[p] >> i & 1U) row.subset.push_back(p * g + i);
      }
    }
    for (const auto& triple : win.assignment) {
      for (std::size_t p = 0; p < 3; ++p) row.assignment.push_back(p * g + triple[p]);
    }
    row.fc_total = fc_objective(row.model_bits, row.nll_bits, FcForm::kExperiment);
    result.rows.push_back(std::move(row));
  }
  finalize_argmins(result);
  return result;
}

// ---------------------------------------------------------------- causal read-off

namespace {

ProbMechanism uniform_env_prior(std::size_t envs, unsigned env_bits, unsigned precision) {
  std::vector<Nat> table(std::size_t{1} << env_bits, 0);
  const auto nums = round_to_dyadic(std::vector<double>(envs, 1.0), precision);
  std::copy(nums.begin(), nums.end(), table.begin());
  return {"u", env_bits, 0, precision, std::move(table)};
}

ContextSelection select_by_env(const Layout& layout, std::size_t env_coord, std::size_t envs,
                               const std::function<std::vector<std::size_t>(std::size_t)>& pick) {
  ContextSelection ctx;
  for (Point x = 0; x < layout.size(); ++x) {
    const auto e = layout.coord(x, env_coord);
    ctx.emplace(x, pick(e < envs ? e : 0));
  }
  return ctx;
}

}  // namespace

Cfmp covariate_shift_cfmp(const CovariateShiftConfig& cfg, const SelectionRow& row) {
  const std::size_t I = cfg.env_count();
  if (row.assignment.size() != I || row.subset.empty()) throw DomainError("selection row does not match config");
  const unsigned mx = ceil_log2(cfg.support_size);
  const unsigned me = std::max(1U, ceil_log2(I));
  const Layout layout({mx, mx, me});
  const unsigned p = cfg.precision;

  std::vector<ProbMechanism> mechs;
  std::vector<FeaturizedMechanism> fms;
  std::map<std::size_t, std::size_t> fm_of_candidate;
  for (auto j : row.subset) {
    const double l = cfg.candidate_lambdas.at(j);
    mechs.push_back(ProbMechanism::from_family("f[" + std::to_string(l) + "]", mx, me, p, PoissonFamily{l},
                                               cfg.support_size));
    fm_of_candidate[j] = fms.size();
    fms.push_back({mechs.size() - 1, 0, 2});
  }
  mechs.push_back(ProbMechanism::from_family("g", mx, mx, p, GaussianFamily{0.0, cfg.y_sigma, true},
                                             cfg.support_size));
  const std::size_t g = fms.size();
  fms.push_back({mechs.size() - 1, 1, 0});
  mechs.push_back(uniform_env_prior(I, me, p));
  const std::size_t u = fms.size();
  fms.push_back({mechs.size() - 1, 2, std::nullopt});

  std::vector<FeatureMechanism> feats{FeatureMechanism("X", Projection{{0}}), FeatureMechanism("Y", Projection{{1}}),
                                      FeatureMechanism("E", Projection{{2}})};
  auto ctx = select_by_env(layout, 2, I, [&](std::size_t e) {
    return std::vector<std::size_t>{fm_of_candidate.at(row.assignment[e]), g, u};
  });
  return Cfmp(layout, p, std::move(mechs), std::move(feats), std::move(fms), std::move(ctx));
}

Cfmp bivariate_cfmp(const BivariateConfig& cfg, const SelectionRow& row) {
  const std::size_t I = cfg.env_params.size();
  const std::size_t g = cfg.grid_size;
  if (row.assignment.size() != 3 * I) throw DomainError("selection row does not match config");
  const bool causal = row.direction != "anticausal";
  const ParameterPool pool = causal ? causal_pool(cfg) : anticausal_pool(cfg);
  constexpr unsigned kBits = 4;
  constexpr double kScale = 2.0;  // continuous units per cell
  constexpr double kCenter = 8.0;
  constexpr unsigned kPrecision = 16;
  const unsigned me = std::max(1U, ceil_log2(I));
  const Layout layout({kBits, kBits, me});
  const std::size_t cells = std::size_t{1} << kBits;
  const std::size_t cause = causal ? 0 : 1;
  const std::size_t effect = causal ? 1 : 0;

  std::vector<ProbMechanism> mechs;
  std::vector<FeaturizedMechanism> fms;
  for (std::size_t e = 0; e < I; ++e) {
    const double v1 = pool.grids[0].at(row.assignment[3 * e] % g);
    const double v2 = pool.grids[1].at(row.assignment[3 * e + 1] % g);
    const double c = pool.grids[2].at(row.assignment[3 * e + 2] % g);
    std::vector<Nat> f_table, g_table;
    const auto f_row = round_to_dyadic(discretize_gaussian(kCenter, std::sqrt(v1) / kScale, 0, cells - 1), kPrecision);
    for (std::size_t ec = 0; ec < (std::size_t{1} << me); ++ec) f_table.insert(f_table.end(), f_row.begin(), f_row.end());
    for (std::size_t x = 0; x < cells; ++x) {
      const double mean = kCenter + c * (static_cast<double>(x) - kCenter);
      const auto r = round_to_dyadic(discretize_gaussian(mean, std::sqrt(v2) / kScale, 0, cells - 1), kPrecision);
      g_table.insert(g_table.end(), r.begin(), r.end());
    }
    mechs.emplace_back("f" + std::to_string(e), kBits, me, kPrecision, std::move(f_table));
    fms.push_back({mechs.size() - 1, cause, 2});
    mechs.emplace_back("g" + std::to_string(e), kBits, kBits, kPrecision, std::move(g_table));
    fms.push_back({mechs.size() - 1, effect, cause});
  }
  mechs.push_back(uniform_env_prior(I, me, kPrecision));
  const std::size_t u = fms.size();
  fms.push_back({mechs.size() - 1, 2, std::nullopt});
  std::vector<FeatureMechanism> feats{FeatureMechanism("X", Projection{{0}}), FeatureMechanism("Y", Projection{{1}}),
                                      FeatureMechanism("E", Projection{{2}})};
  auto ctx = select_by_env(layout, 2, I, [&](std::size_t e) { return std::vector<std::size_t>{2 * e, 2 * e + 1, u}; });
  return Cfmp(layout, kPrecision, std::move(mechs), std::move(feats), std::move(fms), std::move(ctx));
}

CausalReadout causal_readout(const Cfmp& winner) {
  CausalReadout out{causal_statements(winner), {}};
  for (const auto& s : out.report.global) out.global.push_back(describe(winner, s));
  return out;
}

}  // namespace fcc
