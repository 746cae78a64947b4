#pragma once
// Model-selection searches for the two multi-environment experiments: sparse
// covariate shift with Poisson mechanisms, and causal vs anticausal linear
// Gaussian models over per-parameter grids.

#include "fcc/cfmp.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fcc {

// ---------------------------------------------------------------- covariate shift

struct CovariateShiftConfig {
  std::size_t samples_per_env = 10;
  std::size_t support_size = 18;
  std::vector<double> candidate_lambdas;     // already scaled
  std::vector<double> ground_truth_lambdas;  // one per environment, already scaled
  std::uint64_t seed = 0;
  unsigned precision = 32;  // dyadic precision of the generating and fitted tables
  double y_sigma = 1.0;
  std::size_t k_min = 1;
  std::size_t k_max = 10;

  std::size_t env_count() const { return ground_truth_lambdas.size(); }
  void validate() const;
  /// Reads {"candidate_lambdas", "ground_truth_lambdas", "lambda_scale", ...}.
  static CovariateShiftConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct XYSample {
  std::uint32_t x;
  std::uint32_t y;
  friend bool operator==(const XYSample&, const XYSample&) = default;
};

struct MultiEnvSamples {
  std::vector<std::vector<XYSample>> envs;
  std::size_t total() const;
};

MultiEnvSamples gen_covariate_shift_data(const CovariateShiftConfig& cfg);

/// Absorbed Poisson pmf on {0 .. support-1} rounded to `precision` bits.
std::vector<double> poisson_table(double lambda, std::size_t support, unsigned precision);
/// Discretized N(x, sigma^2) rows on {0 .. support-1}, row-major [x][y].
std::vector<double> gaussian_channel_table(std::size_t support, double sigma, unsigned precision);
double pmf_mean(const std::vector<double>& pmf);

struct CovariateShiftFit {
  std::vector<std::size_t> subset;      // candidate indices, ascending
  std::vector<std::size_t> assignment;  // candidate index per environment
  double nll_bits;
};

/// Exhaustive search over k-subsets with closest-mean assignment.
class CovariateShiftSearch {
 public:
  CovariateShiftSearch(const MultiEnvSamples& samples, std::vector<double> candidate_lambdas,
                       std::size_t support_size, unsigned precision, double y_sigma = 1.0);

  CovariateShiftFit fit(std::size_t k) const;
  std::size_t candidate_count() const { return lambdas_.size(); }
  std::size_t env_count() const { return env_nll_.size(); }
  /// NLL of environment e under candidate j.
  double env_nll(std::size_t e, std::size_t j) const { return env_nll_[e][j]; }

 private:
  std::vector<double> lambdas_;
  std::vector<double> means_;                 // mean of each candidate's discretized pmf
  std::vector<double> emp_means_;             // empirical mean of X per environment
  std::vector<std::vector<double>> env_nll_;  // [env][candidate]
};

CovariateShiftFit fit_covariate_shift(const MultiEnvSamples& samples, const std::vector<double>& candidate_lambdas,
                                      std::size_t k, std::size_t support_size = 18, unsigned precision = 32);

// ---------------------------------------------------------------- selection result

struct SelectionRow {
  std::size_t k;
  std::vector<std::size_t> subset;
  std::vector<std::size_t> assignment;
  std::string direction;  // empty for the covariate-shift experiment
  double nll_bits;
  double model_bits;
  double fc_total;
};

struct SelectionResult {
  std::vector<SelectionRow> rows;
  std::size_t argmin_nll = 0;
  std::size_t argmin_fc = 0;
  std::uint64_t seed = 0;

  const SelectionRow& row(std::size_t k) const;
  nlohmann::json to_json() const;
  void write_csv(std::ostream& os) const;
};

/// Fills argmins; ties go to the smallest k.
void finalize_argmins(SelectionResult& result);

SelectionResult select_k(const MultiEnvSamples& samples, const std::vector<double>& candidate_lambdas,
                         std::size_t k_min, std::size_t k_max, std::size_t support_size = 18,
                         unsigned precision = 32);
SelectionResult run_covariate_shift(const CovariateShiftConfig& cfg);

// ---------------------------------------------------------------- bivariate

struct GaussianParams {
  double var1;   // variance of the cause
  double var2;   // noise variance
  double coef;   // regression coefficient
};

/// Parameters of the reverse model Y ~ N(0, t1), X = b Y + N(0, t2) with the same joint.
GaussianParams anticausal_params(const GaussianParams& p);

struct BivariateConfig {
  std::vector<GaussianParams> env_params;
  std::size_t grid_size = 8;
  std::size_t samples_per_env = 10;
  std::uint64_t seed = 0;
  std::size_t k_min = 3;
  std::size_t k_max = 15;

  void validate() const;
  static BivariateConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct XYReal {
  double x;
  double y;
};
using BivariateSamples = std::vector<std::vector<XYReal>>;

BivariateSamples gen_linear_gaussian_data(const BivariateConfig& cfg);

/// `size` evenly spaced points over [min, max] of `values`; the nearest point is
/// replaced by any value that is not already on the grid.
std::vector<double> make_grid(const std::vector<double>& values, std::size_t size);

struct ParameterPool {
  std::array<std::vector<double>, 3> grids;  // var1, var2, coef
  std::size_t size() const { return grids[0].size() + grids[1].size() + grids[2].size(); }
};

enum class Direction { kCausal, kAnticausal };
std::string direction_name(Direction d);

ParameterPool causal_pool(const BivariateConfig& cfg);
ParameterPool anticausal_pool(const BivariateConfig& cfg);

/// Gaussian negative log density of the samples in bits under one parameter triple.
double gaussian_nll_bits(const std::vector<XYReal>& env, Direction dir, const GaussianParams& p);

struct BivariateFit {
  Direction direction;
  std::array<std::uint32_t, 3> masks;                   // chosen grid points per parameter
  std::vector<std::array<std::size_t, 3>> assignment;  // grid indices per environment
  double nll_bits;
};

/// Exact best k-subset search for one direction; the x-part and the (noise,
/// coefficient) part are minimized separately per subset of each grid.
class BivariateSearch {
 public:
  BivariateSearch(const BivariateSamples& samples, ParameterPool pool, Direction dir);

  BivariateFit fit(std::size_t k) const;
  /// Per-environment minimum over the whole grid.
  double unconstrained_nll() const;
  const ParameterPool& pool() const { return pool_; }

 private:
  std::vector<std::array<std::size_t, 3>> assign(const std::array<std::uint32_t, 3>& masks) const;

  BivariateSamples samples_;
  ParameterPool pool_;
  Direction dir_;
  std::size_t g1_, g2_, g3_;
  std::vector<std::vector<double>> nll1_;  // [env][i1]
  std::vector<std::vector<double>> nll23_;  // [env][i2 * g3 + i3]
  std::vector<double> best1_;               // [mask1]
  std::vector<double> best23_;              // [mask2 * 2^g3 + mask3]
};

BivariateFit fit_bivariate(const BivariateSamples& samples, const ParameterPool& causal,
                           const ParameterPool& anticausal, std::size_t k);

SelectionResult run_bivariate(const BivariateConfig& cfg);
/// Environment slot count used for the strategy-2 model cost.
std::size_t bivariate_slots(const BivariateConfig& cfg);

// ---------------------------------------------------------------- causal read-off

/// CFMP on (X, Y, E) with the chosen Poisson mechanisms selected per environment.
Cfmp covariate_shift_cfmp(const CovariateShiftConfig& cfg, const SelectionRow& row);
/// Discretized CFMP with per-environment mechanisms in the chosen direction.
Cfmp bivariate_cfmp(const BivariateConfig& cfg, const SelectionRow& row);

struct CausalReadout {
  CausalReport report;
  std::vector<std::string> global;  // described statements
};
CausalReadout causal_readout(const Cfmp& winner);

}  // namespace fcc
