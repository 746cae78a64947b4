// fcc: experiment runner, proposition checks and .fcc codec.
//
// Exit status: 0 success, 1 failed assertion, 2 usage error, 3 configuration or
// I/O error, 4 decode error.

#include "fcc/codec.hpp"
#include "fcc/error.hpp"
#include "fcc/parallel.hpp"
#include "fcc/select.hpp"
#include "fcc/ufcc.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace fcc;

namespace {

enum Exit { kOk = 0, kAssertion = 1, kUsage = 2, kConfig = 3, kDecode = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    std::cout << (ok ? "PASS " : "FAIL ") << what << '\n';
    failed_ += ok ? 0 : 1;
    report_.push_back({{"check", what}, {"pass", ok}});
  }
  int status() const { return failed_ == 0 ? kOk : kAssertion; }
  const json& report() const { return report_; }

 private:
  int failed_ = 0;
  json report_ = json::array();
};

// "2..8" (inclusive) or "10,100,1000".
std::vector<std::uint64_t> parse_list(const std::string& spec) {
  std::vector<std::uint64_t> out;
  try {
    if (auto dots = spec.find(".."); dots != std::string::npos) {
      const auto lo = std::stoull(spec.substr(0, dots));
      const auto hi = std::stoull(spec.substr(dots + 2));
      if (lo > hi) throw UsageError("empty range " + spec);
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
      return out;
    }
    std::stringstream ss(spec);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stoull(item));
  } catch (const std::logic_error&) {
    throw UsageError("cannot parse list '" + spec + "'");
  }
  if (out.empty()) throw UsageError("empty list '" + spec + "'");
  return out;
}

// A single number N means seeds base..base+N-1; a list is taken verbatim.
std::vector<std::uint64_t> seed_list(const std::string& spec, std::uint64_t base) {
  if (spec.find_first_of(",.") != std::string::npos) return parse_list(spec);
  const auto count = parse_list(spec).front();
  std::vector<std::uint64_t> out;
  for (std::uint64_t i = 0; i < count; ++i) out.push_back(base + i);
  return out;
}

json read_json(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, text);
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

void check_rows(Checks& checks, const SelectionResult& r, std::size_t k_min, std::size_t k_max,
                const std::string& tag) {
  bool arithmetic = true, monotone = true;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    arithmetic &= row.fc_total == fc_objective(row.model_bits, row.nll_bits, FcForm::kExperiment);
    if (i > 0) monotone &= row.nll_bits <= r.rows[i - 1].nll_bits;
  }
  checks.expect(r.rows.size() == k_max - k_min + 1 && r.rows.front().k == k_min, tag + ": rows cover the k range");
  checks.expect(arithmetic, tag + ": fc_total = nll + 2 model + 1 on every row");
  checks.expect(monotone, tag + ": nll nonincreasing in k");
}

// ---------------------------------------------------------------- experiment

int experiment_covariate_shift(const std::string& config, const std::string& seeds_spec, const fs::path& out,
                               std::size_t samples_override) {
  auto base = CovariateShiftConfig::from_json(read_json(config));
  if (samples_override > 0) base.samples_per_env = samples_override;
  const auto seeds = seed_list(seeds_spec, base.seed);
  std::vector<SelectionResult> results(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    auto cfg = base;
    cfg.seed = seeds[i];
    results[i] = run_covariate_shift(cfg);
  });

  Checks checks;
  std::ostringstream csv;
  json summary = {{"experiment", "covariate-shift"}, {"config", base.to_json()}, {"seeds", seeds}};
  json runs = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    std::ostringstream one;
    r.write_csv(one);
    const auto text = one.str();
    csv << (i == 0 ? text : text.substr(text.find('\n') + 1));
    json run = r.to_json();
    run["config"] = base.to_json();
    run["config"]["seed"] = r.seed;
    write_text(out / ("covariate_shift_seed" + std::to_string(r.seed) + ".json"), run.dump(2));
    check_rows(checks, r, base.k_min, base.k_max, "seed " + std::to_string(r.seed));
    auto cfg = base;
    cfg.seed = r.seed;
    const auto readout = causal_readout(covariate_shift_cfmp(cfg, r.row(r.argmin_fc)));
    runs.push_back({{"seed", r.seed},
                    {"argmin_nll", r.argmin_nll},
                    {"argmin_fc", r.argmin_fc},
                    {"global_causal_statements", readout.global}});
    std::cout << "seed " << r.seed << ": argmin_nll=" << r.argmin_nll << " argmin_fc=" << r.argmin_fc << '\n';
  }
  summary["runs"] = runs;
  summary["checks"] = checks.report();
  write_text(out / "covariate_shift.csv", csv.str());
  write_text(out / "summary.json", summary.dump(2));
  return checks.status();
}

int experiment_bivariate(const std::string& config, const std::string& seeds_spec, const fs::path& out) {
  const auto base = BivariateConfig::from_json(read_json(config));
  const auto seeds = seed_list(seeds_spec, base.seed);
  std::vector<SelectionResult> results(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    auto cfg = base;
    cfg.seed = seeds[i];
    results[i] = run_bivariate(cfg);
  });

  Checks checks;
  std::ostringstream csv;
  json summary = {{"experiment", "bivariate"}, {"config", base.to_json()}, {"seeds", seeds}};
  json runs = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    std::ostringstream one;
    r.write_csv(one);
    const auto text = one.str();
    csv << (i == 0 ? text : text.substr(text.find('\n') + 1));
    json run = r.to_json();
    run["config"] = base.to_json();
    run["config"]["seed"] = r.seed;
    write_text(out / ("bivariate_seed" + std::to_string(r.seed) + ".json"), run.dump(2));
    check_rows(checks, r, base.k_min, base.k_max, "seed " + std::to_string(r.seed));
    const auto readout = causal_readout(bivariate_cfmp(base, r.row(r.argmin_fc)));
    runs.push_back({{"seed", r.seed},
                    {"argmin_nll", r.argmin_nll},
                    {"argmin_fc", r.argmin_fc},
                    {"direction", r.row(r.argmin_fc).direction},
                    {"global_causal_statements", readout.global}});
    std::cout << "seed " << r.seed << ": argmin_nll=" << r.argmin_nll << " argmin_fc=" << r.argmin_fc << " ("
              << r.row(r.argmin_fc).direction << ")\n";
  }
  summary["runs"] = runs;
  summary["checks"] = checks.report();
  write_text(out / "bivariate.csv", csv.str());
  write_text(out / "summary.json", summary.dump(2));
  return checks.status();
}

// ---------------------------------------------------------------- checks

int check_prop17(const std::string& m_grid, unsigned d, const std::string& d_grid, unsigned m, unsigned n,
                 unsigned I, const fs::path& out) {
  Checks checks;
  std::ostringstream csv;
  csv << "sweep,m,d,tabcbn_bits,density_bits,ratio\n";
  csv.precision(17);
  auto sweep = [&](const char* name, const std::vector<std::uint64_t>& grid, bool over_m) {
    std::vector<double> ratios;
    for (auto v : grid) {
      const unsigned mm = over_m ? static_cast<unsigned>(v) : m;
      const unsigned dd = over_m ? d : static_cast<unsigned>(v);
      const double a = model_bits_tabcbn(mm, dd, n, I).model_bits();
      const double b = model_bits_density(mm, dd, n, I);
      ratios.push_back(a / b);
      csv << name << ',' << mm << ',' << dd << ',' << a << ',' << b << ',' << a / b << '\n';
    }
    return ratios;
  };
  const auto rm = sweep("m", parse_list(m_grid), true);
  checks.expect(strictly_decreasing(rm), "ratio strictly decreasing over m = " + m_grid);
  checks.expect(rm.back() < 0.05, "ratio at top of m grid = " + std::to_string(rm.back()) + " < 0.05");
  const auto rd = sweep("d", parse_list(d_grid), false);
  checks.expect(strictly_decreasing(rd), "ratio strictly decreasing over d = " + d_grid + " (top value " +
                                             std::to_string(rd.back()) + ")");
  write_text(out / "prop17.csv", csv.str());
  return checks.status();
}

int check_prop18(std::uint64_t M, const std::string& n_spec, const fs::path& out) {
  Checks checks;
  std::ostringstream csv;
  csv << "N,k,strategy1_bits,strategy2_bits,A,s1_minus_s2\n";
  csv.precision(17);
  for (auto N : parse_list(n_spec)) {
    const std::uint64_t kmax = std::min(M, N);
    std::vector<double> A;
    for (std::uint64_t k = 1; k <= kmax; ++k) {
      const double s1 = strategy_bits(N, M, k, 1);
      const double s2 = strategy_bits(N, M, k, 2);
      A.push_back(s2 - s1);
      csv << N << ',' << k << ',' << s1 << ',' << s2 << ',' << s2 - s1 << ',' << s1 - s2 << '\n';
    }
    const std::uint64_t rise = std::min(M / 2, N / 2);
    bool increasing = true;
    for (std::uint64_t k = 1; k < rise; ++k) increasing &= A[k] > A[k - 1];
    const std::string tag = "M=" + std::to_string(M) + " N=" + std::to_string(N);
    checks.expect(A[0] < 0, tag + ": A(1) = " + std::to_string(A[0]) + " < 0");
    checks.expect(increasing, tag + ": A(k+1) > A(k) for 1 <= k < " + std::to_string(rise));
  }
  write_text(out / "prop18.csv", csv.str());
  return checks.status();
}

int check_prop19(const std::string& m_grid, std::uint64_t orbits, unsigned n, const fs::path& out) {
  Checks checks;
  std::ostringstream csv;
  csv << "m,invariant_bits,markov_bits,ratio\n";
  csv.precision(17);
  std::vector<double> ratios;
  for (auto m : parse_list(m_grid)) {
    const double a = model_bits_tabinv(static_cast<unsigned>(m), n, orbits, TabInvVariant::kInvariant);
    const double b = model_bits_tabinv(static_cast<unsigned>(m), n, orbits, TabInvVariant::kMarkov);
    ratios.push_back(a / b);
    csv << m << ',' << a << ',' << b << ',' << a / b << '\n';
  }
  checks.expect(strictly_decreasing(ratios), "ratio strictly decreasing over m = " + m_grid);
  checks.expect(ratios.back() < 0.05, "ratio at top of m grid = " + std::to_string(ratios.back()) + " < 0.05");
  write_text(out / "prop19.csv", csv.str());
  return checks.status();
}

int check_bayes(std::size_t trials, std::uint64_t seed, const fs::path& out) {
  Checks checks;
  {
    const Layout l = Layout::uniform(1, 1);
    std::vector<DiscreteDistribution> models{DiscreteDistribution(l, 2, {2, 2}), DiscreteDistribution(l, 2, {1, 3})};
    const std::vector<double> prior{0.5, 0.5};
    const std::vector<Point> xs{0};
    const auto r = bayes_vs_twopart(models, prior, xs);
    checks.expect(std::abs(r.twopart_bits - 2.0) < 1e-12, "worked example: two-part = 2 bits");
    checks.expect(std::abs(r.bayes_bits + std::log2(3.0 / 8.0)) < 1e-12, "worked example: bayes = -log2(3/8)");
  }
  std::mt19937_64 rng(seed);
  std::ostringstream csv;
  csv << "trial,models,bayes_bits,twopart_bits\n";
  csv.precision(17);
  std::size_t ok = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const unsigned m = 1 + rng() % 3;
    const Layout l = Layout::uniform(1, m);
    const std::size_t T = 1 + rng() % 4;
    std::vector<DiscreteDistribution> models;
    std::vector<double> prior;
    for (std::size_t i = 0; i < T; ++i) {
      std::vector<double> w(l.size());
      for (auto& v : w) v = 1.0 + static_cast<double>(rng() % 100);
      models.emplace_back(l, 16, round_to_dyadic(w, 16));
      prior.push_back(1.0 + static_cast<double>(rng() % 100));
    }
    double total = 0.0;
    for (double p : prior) total += p;
    for (auto& p : prior) p /= total;
    std::vector<Point> xs(1 + rng() % 20);
    for (auto& x : xs) x = rng() % l.size();
    const auto r = bayes_vs_twopart(models, prior, xs);
    ok += r.bayes_bits <= r.twopart_bits ? 1 : 0;
    csv << t << ',' << T << ',' << r.bayes_bits << ',' << r.twopart_bits << '\n';
  }
  checks.expect(ok == trials, std::to_string(ok) + "/" + std::to_string(trials) + " random instances with bayes <= two-part");
  write_text(out / "bayes.csv", csv.str());
  return checks.status();
}

// ---------------------------------------------------------------- codec

std::vector<Point> read_points(const json& j, const Layout& layout) {
  const json& arr = j.is_object() ? j.at("points") : j;
  std::vector<Point> out;
  for (const auto& v : arr) out.push_back(v.is_string() ? layout.parse_point(v.get<std::string>()) : v.get<Point>());
  return out;
}

int codec_encode(const fs::path& model_path, const fs::path& data_path, const fs::path& out, unsigned env_count) {
  const Model model = model_from_json(read_json(model_path));
  const Layout layout = model_cfmp(model).layout();
  std::vector<Point> data;
  try {
    data = read_points(read_json(data_path), layout);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed data file: ") + e.what());
  }
  const auto artifact = encode_dataset(model, data, static_cast<std::uint16_t>(env_count));
  const auto bytes = artifact.to_bytes();
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_file_atomic(out, bytes);
  auto ledger = model_ledger(model);
  const auto report = reconcile_bits(artifact, ledger);
  ledger.set_data_bits(report.real_nll_bits);
  json j = {{"file", out.string()}, {"bytes", bytes.size()}, {"ledger", ledger.to_json()}, {"reconcile", report.to_json()}};
  std::cout << j.dump(2) << '\n';
  Checks checks;
  checks.expect(decode_bytes(bytes).data == data, "round trip reproduces the data");
  checks.expect(report.shannon_gap_ok, "0 <= Shannon bits - NLL < |data|");
  return checks.status();
}

int codec_decode(const fs::path& file, const fs::path& out) {
  const auto decoded = decode_bytes(read_file(file));
  const Layout layout = model_cfmp(decoded.model).layout();
  json points = json::array();
  for (Point x : decoded.data) points.push_back(layout.point_string(x));
  write_text(out / "model.json", model_to_json(decoded.model).dump(2));
  write_text(out / "data.json", json{{"points", points}}.dump(2));
  std::cout << "decoded " << decoded.data.size() << " points into " << out.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-codebook complexity toolkit"};
  app.require_subcommand(1);

  auto* experiment = app.add_subcommand("experiment", "Run a model-selection experiment");
  experiment->require_subcommand(1);
  std::string config, seeds = "5";
  fs::path out = "fcc_out";
  std::size_t samples_override = 0;
  auto* cs = experiment->add_subcommand("covariate-shift", "Sparse covariate-shift mechanism selection");
  cs->add_option("--config", config, "JSON configuration")->required();
  cs->add_option("--seeds", seeds, "Seed count (offset from the config seed) or explicit list");
  cs->add_option("--out", out, "Output directory");
  cs->add_option("--samples-per-env", samples_override, "Override samples per environment");
  auto* bv = experiment->add_subcommand("bivariate", "Causal vs anticausal linear Gaussian selection");
  bv->add_option("--config", config, "JSON configuration")->required();
  bv->add_option("--seeds", seeds, "Seed count (offset from the config seed) or explicit list");
  bv->add_option("--out", out, "Output directory");

  auto* check = app.add_subcommand("check", "Numerical checks of the coding-length propositions");
  check->require_subcommand(1);
  std::string m_grid = "2..8", d_grid = "2..6", n_spec = "10,100,1000";
  unsigned d = 3, m = 3, n = 4, I = 2;
  std::uint64_t M = 18, orbits = 2, seed = 0;
  std::size_t trials = 1000;
  auto* p17 = check->add_subcommand("prop17", "Tabular CBN vs joint table model bits");
  p17->add_option("--m-grid", m_grid);
  p17->add_option("--d", d);
  p17->add_option("--d-grid", d_grid);
  p17->add_option("--m", m);
  p17->add_option("--n", n);
  p17->add_option("--I", I);
  p17->add_option("--out", out);
  auto* p18 = check->add_subcommand("prop18", "Strategy 2 vs strategy 1 selection cost");
  p18->add_option("--M", M);
  p18->add_option("--N", n_spec, "List or inclusive range of slot counts");
  p18->add_option("--out", out);
  auto* p19 = check->add_subcommand("prop19", "Invariant vs Markov model bits");
  std::string m_grid19 = "2..10";
  p19->add_option("--m-grid", m_grid19);
  p19->add_option("--orbits", orbits);
  p19->add_option("--n", n);
  p19->add_option("--out", out);
  auto* bayes = check->add_subcommand("bayes", "Bayes code vs two-part code");
  bayes->add_option("--trials", trials);
  bayes->add_option("--seed", seed);
  bayes->add_option("--out", out);

  auto* codec = app.add_subcommand("codec", "Encode or decode .fcc files");
  codec->require_subcommand(1);
  fs::path model_path, data_path, file;
  unsigned env_count = 1;
  auto* enc = codec->add_subcommand("encode", "Encode a dataset under a model");
  enc->add_option("--model", model_path, "Model JSON")->required();
  enc->add_option("--data", data_path, "Data JSON")->required();
  enc->add_option("file", file, "Output .fcc file")->required();
  enc->add_option("--env-count", env_count, "Environment count recorded in the header");
  auto* dec = codec->add_subcommand("decode", "Decode an .fcc file");
  dec->add_option("file", file, "Input .fcc file")->required();
  dec->add_option("--out", out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (cs->parsed()) return experiment_covariate_shift(config, seeds, out, samples_override);
    if (bv->parsed()) return experiment_bivariate(config, seeds, out);
    if (p17->parsed()) return check_prop17(m_grid, d, d_grid, m, n, I, out);
    if (p18->parsed()) return check_prop18(M, n_spec, out);
    if (p19->parsed()) return check_prop19(m_grid19, orbits, n, out);
    if (bayes->parsed()) return check_bayes(trials, seed, out);
    if (enc->parsed()) return codec_encode(model_path, data_path, file, env_count);
    if (dec->parsed()) return codec_decode(file, out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DecodeError& e) {
    std::cerr << "decode error: " << e.what() << '\n';
    return kDecode;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kConfig;
  }
  return kUsage;
}
