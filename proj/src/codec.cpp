#include "fcc/codec.hpp"

#include "fcc/error.hpp"

#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

namespace fcc {

namespace {

using json = nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Largest value accepted for structural counts read from a file.
constexpr std::uint64_t kMaxCount = 1U << 16;

unsigned nat_ceil_log2(const Nat& count) {
  if (count <= 1) return 0;
  return static_cast<unsigned>(msb_index(Nat(count - 1))) + 1;
}

std::uint64_t read_count(BitReader& r, std::uint64_t max, const char* what) {
  const Nat v = read_self_delimited(r);
  if (v > max) throw DecodeError(std::string(what) + " out of range");
  return v.convert_to<std::uint64_t>();
}

const Layout& model_layout_ref(const Model& model, Layout& scratch) {
  return std::visit(Overloaded{
                        [&](const DiscreteDistribution& p) -> const Layout& { return p.layout(); },
                        [&](const CbnModel& c) -> const Layout& { return c.layout; },
                        [&](const InvariantModel& v) -> const Layout& { return v.layout; },
                        [&](const CompCbnModel& c) -> const Layout& {
                          scratch = model_cfmp(c).layout();
                          return scratch;
                        },
                    },
                    model);
}

// Smallest n with every stored numerator fitting in 2n+4 bits, at least `floor`.
unsigned entry_precision(unsigned floor, unsigned widest_mechanism) {
  unsigned n = floor;
  while (table_entry_bits(n) < widest_mechanism + 1) ++n;
  return n;
}

unsigned header_precision(const Model& model) {
  return std::visit(Overloaded{
                        [](const DiscreteDistribution& p) { return p.n(); },
                        [](const CbnModel& c) {
                          unsigned w = 0;
                          for (const auto& f : c.factors) w = std::max(w, f.precision);
                          return entry_precision(c.output_precision, w);
                        },
                        [](const InvariantModel& v) {
                          return entry_precision(v.output_precision, std::max(v.f1.precision(), v.f2.precision()));
                        },
                        [](const CompCbnModel& c) { return c.precision; },
                    },
                    model);
}

CovariateShiftConfig comp_config(const CompCbnModel& c) {
  CovariateShiftConfig cfg;
  cfg.candidate_lambdas = c.pool_lambdas;
  cfg.ground_truth_lambdas.assign(c.slots.size(), 1.0);
  cfg.support_size = c.support_size;
  cfg.y_sigma = c.y_sigma;
  cfg.precision = c.precision;
  return cfg;
}

SelectionRow comp_row(const CompCbnModel& c) {
  SelectionRow row{};
  std::set<std::size_t> used(c.slots.begin(), c.slots.end());
  row.subset.assign(used.begin(), used.end());
  row.assignment = c.slots;
  row.k = used.size();
  return row;
}

void append_double(BitString& b, double v) { b.append_uint(std::bit_cast<std::uint64_t>(v), 64); }
double read_double(BitReader& r) { return std::bit_cast<double>(r.read_uint(64)); }

void append_table(BitString& b, const std::vector<Nat>& table, std::size_t begin, std::size_t count, unsigned width) {
  for (std::size_t i = begin; i < begin + count; ++i) b.append_nat(table[i], width);
}

std::vector<Nat> read_table(BitReader& r, std::size_t count, unsigned width) {
  if (r.remaining() / width < count) throw DecodeError("truncated table");
  std::vector<Nat> t;
  t.reserve(count);
  for (std::size_t i = 0; i < count; ++i) t.push_back(r.read_nat(width));
  return t;
}

unsigned coords_mask_width(const Layout& l, std::uint64_t mask, std::vector<std::size_t>& coords) {
  unsigned w = 0;
  for (std::size_t i = 0; i < l.dims(); ++i) {
    if (mask >> i & 1U) {
      coords.push_back(i);
      w += l.width(i);
    }
  }
  return w;
}

class SectionWriter {
 public:
  explicit SectionWriter(BitString& out) : out_(out) {}
  void begin(std::string label) {
    close();
    label_ = std::move(label);
    start_ = out_.size();
  }
  std::vector<LedgerEntry> finish() {
    close();
    return std::move(sections_);
  }

 private:
  void close() {
    if (!label_.empty()) sections_.push_back({label_, static_cast<double>(out_.size() - start_)});
    label_.clear();
  }
  BitString& out_;
  std::string label_;
  std::size_t start_ = 0;
  std::vector<LedgerEntry> sections_;
};

struct ParsedPayload {
  Model model;
  std::vector<LedgerEntry> sections;
};

std::vector<LedgerEntry> write_payload(const Model& model, const ArtifactHeader& h, const Layout& layout,
                                       BitString& out) {
  SectionWriter sw(out);
  if (h.m == 0) {
    sw.begin("layout");
    for (auto w : layout.widths()) out.append(self_delimit(w));
  }
  const unsigned W = table_entry_bits(h.n);
  std::visit(
      Overloaded{
          [&](const DiscreteDistribution& p) {
            sw.begin("table");
            const Nat cap = pow2(p.n());
            for (const auto& v : p.numerators()) {
              if (v >= cap) throw DomainError("raw tables cannot store the value 1");
              out.append_nat(v, p.n());
            }
          },
          [&](const CbnModel& c) {
            sw.begin("structure");
            out.append(self_delimit(c.factors.size()));
            for (const auto& f : c.factors) {
              std::uint64_t vm = 0, cm = 0;
              for (auto i : f.value_coords) vm |= std::uint64_t{1} << i;
              for (auto i : f.cond_coords) cm |= std::uint64_t{1} << i;
              out.append_uint(vm, layout.dims());
              out.append_uint(cm, layout.dims());
              out.append(self_delimit(f.precision));
            }
            out.append(self_delimit(c.output_precision));
            sw.begin("tables");
            for (const auto& f : c.factors) append_table(out, f.table, 0, f.table.size(), W);
          },
          [&](const InvariantModel& v) {
            const std::size_t values = std::size_t{1} << layout.width(1);
            if (v.orbit_of.size() != values) throw DomainError("orbit map must cover every value");
            const std::uint32_t k = *std::max_element(v.orbit_of.begin(), v.orbit_of.end()) + 1;
            const unsigned ob = ceil_log2(k);
            sw.begin("structure");
            out.append(self_delimit(k));
            for (auto o : v.orbit_of) out.append_uint(o, ob);
            out.append(self_delimit(v.f1.precision()));
            out.append(self_delimit(v.f2.precision()));
            out.append(self_delimit(v.output_precision));
            sw.begin("tables");
            append_table(out, v.f1.table(), 0, std::size_t{k} << v.f1.value_bits(), W);
            append_table(out, v.f2.table(), 0, v.f2.table().size(), W);
          },
          [&](const CompCbnModel& c) {
            sw.begin("pool");
            out.append(self_delimit(c.pool_lambdas.size()));
            for (double l : c.pool_lambdas) append_double(out, l);
            out.append(self_delimit(c.support_size));
            append_double(out, c.y_sigma);
            out.append(self_delimit(c.precision));
            out.append(self_delimit(c.slots.size()));
            sw.begin("strategy2");
            const auto row = comp_row(c);
            const std::size_t M = c.pool_lambdas.size(), N = c.slots.size(), k = row.k;
            std::map<std::size_t, std::size_t> block_of;  // pool index -> block
            std::vector<std::size_t> rgs, perm;
            for (auto s : c.slots) {
              auto [it, fresh] = block_of.try_emplace(s, block_of.size());
              if (fresh) perm.push_back(std::lower_bound(row.subset.begin(), row.subset.end(), s) - row.subset.begin());
              rgs.push_back(it->second);
            }
            out.append(self_delimit(k));
            out.append_nat(rank_subset(row.subset, M), nat_ceil_log2(binomial(M, k)));
            out.append_nat(rank_rgs(rgs, k), nat_ceil_log2(stirling2(N, k)));
            out.append_nat(rank_permutation(perm), nat_ceil_log2(factorial(k)));
          },
      },
      model);
  return sw.finish();
}

ParsedPayload parse_payload(const ArtifactHeader& h, ModelKind kind, const BitString& payload) try {
  BitReader r(payload);
  std::vector<LedgerEntry> sections;
  std::size_t mark = 0;
  auto section = [&](const char* label) {
    sections.push_back({label, static_cast<double>(r.position() - mark)});
    mark = r.position();
  };
  if (h.d < 1 || h.d > Layout::kMaxTotalBits) throw DecodeError("bad dimension count");
  std::vector<unsigned> widths;
  if (h.m == 0) {
    for (unsigned i = 0; i < h.d; ++i) {
      widths.push_back(static_cast<unsigned>(read_count(r, Layout::kMaxTotalBits, "coordinate width")));
    }
    section("layout");
  } else {
    if (std::uint64_t{h.m} * h.d > Layout::kMaxTotalBits) throw DecodeError("layout too large");
    widths.assign(h.d, h.m);
  }
  const Layout layout(widths);
  const unsigned W = table_entry_bits(h.n);
  auto check_precision = [&](std::uint64_t p) {
    if (p + 1 > W) throw DecodeError("mechanism precision exceeds the entry width");
    return static_cast<unsigned>(p);
  };

  Model model = DiscreteDistribution(Layout::uniform(1, 1), 1, {0, 0});
  switch (kind) {
    case ModelKind::kRawTable: {
      if (h.n < 1) throw DecodeError("precision must be positive");
      auto nums = read_table(r, layout.size(), h.n);
      section("table");
      model = DiscreteDistribution(layout, h.n, std::move(nums));
      break;
    }
    case ModelKind::kTabCbn: {
      const auto F = read_count(r, layout.dims(), "factor count");
      std::vector<CbnFactor> factors;
      for (std::uint64_t i = 0; i < F; ++i) {
        CbnFactor f{};
        const auto vm = r.read_uint(static_cast<unsigned>(layout.dims()));
        const auto cm = r.read_uint(static_cast<unsigned>(layout.dims()));
        coords_mask_width(layout, vm, f.value_coords);
        coords_mask_width(layout, cm, f.cond_coords);
        f.precision = check_precision(read_count(r, kMaxCount, "precision"));
        factors.push_back(std::move(f));
      }
      const auto out_prec = static_cast<unsigned>(read_count(r, kMaxCount, "output precision"));
      section("structure");
      for (auto& f : factors) {
        const unsigned bits = layout.sub(f.value_coords).total_bits() + layout.sub(f.cond_coords).total_bits();
        if (bits > Layout::kMaxTotalBits) throw DecodeError("factor table too large");
        f.table = read_table(r, std::size_t{1} << bits, W);
      }
      section("tables");
      CbnModel c{layout, std::move(factors), out_prec};
      (void)model_cfmp(c);
      model = std::move(c);
      break;
    }
    case ModelKind::kInvariant: {
      if (layout.dims() != 2) throw DecodeError("invariant model needs two coordinates");
      const std::size_t values = std::size_t{1} << layout.width(1);
      const auto k = read_count(r, values, "orbit count");
      if (k < 1) throw DecodeError("orbit count must be positive");
      const unsigned ob = ceil_log2(k);
      std::vector<std::uint32_t> orbit_of;
      for (std::size_t v = 0; v < values; ++v) orbit_of.push_back(static_cast<std::uint32_t>(r.read_uint(ob)));
      const unsigned p1 = check_precision(read_count(r, kMaxCount, "precision"));
      const unsigned p2 = check_precision(read_count(r, kMaxCount, "precision"));
      const auto out_prec = static_cast<unsigned>(read_count(r, kMaxCount, "output precision"));
      section("structure");
      const unsigned v1 = layout.width(0);
      auto t1 = read_table(r, k << v1, W);
      t1.resize(std::size_t{1} << (v1 + ob), 0);
      auto t2 = read_table(r, values, W);
      section("tables");
      InvariantModel m{layout, std::move(orbit_of), ProbMechanism("f1", v1, ob, p1, std::move(t1)),
                       ProbMechanism("f2", layout.width(1), 0, p2, std::move(t2)), out_prec};
      (void)model_cfmp(m);
      model = std::move(m);
      break;
    }
    case ModelKind::kCompCbn: {
      CompCbnModel c{};
      const auto M = read_count(r, kMaxCount, "pool size");
      if (M < 1 || r.remaining() / 64 < M) throw DecodeError("bad pool size");
      for (std::uint64_t i = 0; i < M; ++i) c.pool_lambdas.push_back(read_double(r));
      c.support_size = read_count(r, 1U << 12, "support size");
      c.y_sigma = read_double(r);
      c.precision = static_cast<unsigned>(read_count(r, 62, "precision"));
      const auto N = read_count(r, kMaxCount, "slot count");
      section("pool");
      if (N < 1) throw DecodeError("slot count must be positive");
      const auto k = read_count(r, std::min(N, M), "mechanism count");
      if (k < 1) throw DecodeError("mechanism count must be positive");
      const Nat sr = r.read_nat(nat_ceil_log2(binomial(M, k)));
      const Nat pr = r.read_nat(nat_ceil_log2(stirling2(N, k)));
      const Nat qr = r.read_nat(nat_ceil_log2(factorial(k)));
      section("strategy2");
      const auto subset = unrank_subset(sr, M, k);
      const auto rgs = unrank_rgs(pr, N, k);
      const auto perm = unrank_permutation(qr, k);
      for (auto b : rgs) c.slots.push_back(subset[perm[b]]);
      auto cfg = comp_config(c);
      cfg.k_max = cfg.k_min = 1;
      try {
        cfg.validate();
      } catch (const ConfigError& e) {
        throw DecodeError(std::string("bad pool: ") + e.what());
      }
      (void)model_cfmp(c);
      model = std::move(c);
      break;
    }
    default:
      throw DecodeError("unknown model index");
  }
  if (!r.at_end()) throw DecodeError("payload has trailing bits");
  if (layout.is_uniform() != (h.m != 0)) throw DecodeError("header width does not match the layout");
  return {std::move(model), std::move(sections)};
} catch (const DomainError& e) {
  throw DecodeError(std::string("invalid model payload: ") + e.what());
}

Nat num_from_json(const json& v) {
  if (v.is_string()) return Nat(v.get<std::string>());
  if (v.is_number_unsigned() || v.is_number_integer()) return Nat(v.get<std::int64_t>());
  throw ConfigError("numerators must be integers or decimal strings");
}

json num_to_json(const Nat& v) {
  if (v < Nat(1) << 53) return v.convert_to<std::int64_t>();
  return v.str();
}

json table_to_json(const std::vector<Nat>& t) {
  json a = json::array();
  for (const auto& v : t) a.push_back(num_to_json(v));
  return a;
}

std::vector<Nat> table_from_json(const json& a) {
  std::vector<Nat> t;
  for (const auto& v : a) t.push_back(num_from_json(v));
  return t;
}

Layout layout_from_json(const json& j) {
  if (j.contains("widths")) return Layout(j.at("widths").get<std::vector<unsigned>>());
  return Layout::uniform(j.at("d").get<unsigned>(), j.at("m").get<unsigned>());
}

}  // namespace

std::size_t CompCbnModel::k() const { return std::set<std::size_t>(slots.begin(), slots.end()).size(); }

ModelKind model_kind(const Model& model) {
  return std::visit(Overloaded{
                        [](const DiscreteDistribution&) { return ModelKind::kRawTable; },
                        [](const CbnModel&) { return ModelKind::kTabCbn; },
                        [](const InvariantModel&) { return ModelKind::kInvariant; },
                        [](const CompCbnModel&) { return ModelKind::kCompCbn; },
                    },
                    model);
}

Cfmp model_cfmp(const Model& model) {
  return std::visit(
      Overloaded{
          [](const DiscreteDistribution& p) { return build_density_estimator(p); },
          [](const CbnModel& c) { return build_cbn(c.layout, c.factors, c.output_precision); },
          [](const InvariantModel& v) {
            return build_invariant_model(v.layout, Quotient{1, v.orbit_of}, v.f1, v.f2, v.output_precision);
          },
          [](const CompCbnModel& c) {
            if (c.slots.empty() || c.pool_lambdas.empty()) throw DomainError("empty pool or slot list");
            for (auto s : c.slots) {
              if (s >= c.pool_lambdas.size()) throw DomainError("slot refers outside the pool");
            }
            return covariate_shift_cfmp(comp_config(c), comp_row(c));
          },
      },
      model);
}

DiscreteDistribution model_distribution(const Model& model) {
  if (const auto* p = std::get_if<DiscreteDistribution>(&model)) return *p;
  return induced_distribution(model_cfmp(model));
}

FcBreakdown model_ledger(const Model& model) {
  const unsigned n = header_precision(model);
  return std::visit(
      Overloaded{
          [&](const DiscreteDistribution& p) {
            return FcBreakdown({{"table", static_cast<double>(n) * static_cast<double>(p.layout().size())}});
          },
          [&](const CbnModel& c) { return model_bits_tables(model_cfmp(c), n); },
          [&](const InvariantModel& v) {
            const auto k = *std::max_element(v.orbit_of.begin(), v.orbit_of.end()) + std::uint64_t{1};
            return FcBreakdown({{"tables", model_bits_tabinv(v.layout.m(), n, k, TabInvVariant::kInvariant)}});
          },
          [&](const CompCbnModel& c) { return strategy2_ledger(c.slots.size(), c.pool_lambdas.size(), c.k()); },
      },
      model);
}

// ---------------------------------------------------------------- artifact framing

std::size_t EncodedArtifact::index_bits() const { return self_delimited_length(static_cast<std::uint32_t>(kind)); }

std::size_t EncodedArtifact::body_bits() const {
  return index_bits() + framing_bits() + payload.size() + stream.size();
}

std::size_t EncodedArtifact::padding_bits() const { return (8 - body_bits() % 8) % 8; }

std::size_t EncodedArtifact::total_bits() const { return header_bits() + body_bits() + padding_bits(); }

std::vector<std::uint8_t> EncodedArtifact::to_bytes() const {
  std::vector<std::uint8_t> out(ArtifactHeader::kMagic.begin(), ArtifactHeader::kMagic.end());
  out.push_back(ArtifactHeader::kVersion);
  for (std::uint16_t v : {header.m, header.d, header.n, header.I}) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  BitString body = self_delimit(static_cast<std::uint32_t>(kind));
  if (payload.size() > UINT32_MAX) throw DomainError("payload too large");
  body.append_uint(payload.size(), 32);
  body.append(payload);
  body.append_uint(stream.size(), 64);
  body.append(stream);
  const auto bytes = body.to_bytes();
  out.insert(out.end(), bytes.begin(), bytes.end());
  return out;
}

EncodedArtifact EncodedArtifact::from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < ArtifactHeader::kBytes) throw DecodeError("file shorter than the header");
  if (!std::equal(ArtifactHeader::kMagic.begin(), ArtifactHeader::kMagic.end(), bytes.begin())) {
    throw DecodeError("bad magic");
  }
  if (bytes[4] != ArtifactHeader::kVersion) throw DecodeError("unsupported version " + std::to_string(bytes[4]));
  auto u16 = [&](std::size_t at) { return static_cast<std::uint16_t>(bytes[at] | (bytes[at + 1] << 8)); };
  EncodedArtifact a{};
  a.header = {u16(5), u16(7), u16(9), u16(11)};
  const auto body_bytes = bytes.subspan(ArtifactHeader::kBytes);
  const BitString body = BitString::from_bytes(body_bytes, body_bytes.size() * 8);
  BitReader r(body);
  const Nat index = read_self_delimited(r);
  if (index > static_cast<std::uint32_t>(ModelKind::kCompCbn)) throw DecodeError("unknown model index");
  a.kind = static_cast<ModelKind>(index.convert_to<std::uint32_t>());
  const auto plen = r.read_uint(32);
  if (plen > r.remaining()) throw DecodeError("truncated payload");
  a.payload = r.read_bits(plen);
  const auto slen = r.read_uint(64);
  if (slen > r.remaining()) throw DecodeError("truncated stream");
  a.stream = r.read_bits(slen);
  if (r.remaining() >= 8) throw DecodeError("trailing bytes after the stream");
  while (!r.at_end()) {
    if (r.read_bit()) throw DecodeError("non-zero padding");
  }
  return a;
}

EncodedArtifact encode_dataset(const Model& model, std::span<const Point> data, std::uint16_t env_count) {
  Layout scratch;
  const Layout& layout = model_layout_ref(model, scratch);
  const auto dist = model_distribution(model);
  for (Point x : data) {
    if (x >= layout.size() || dist.numerator(x) == 0) {
      throw DomainError("data point " + (x < layout.size() ? layout.point_string(x) : std::to_string(x)) +
                        " has zero mass under the model");
    }
  }
  EncodedArtifact a{};
  const unsigned n = header_precision(model);
  if (n > UINT16_MAX) throw DomainError("precision does not fit the header");
  a.header = {static_cast<std::uint16_t>(layout.is_uniform() ? layout.m() : 0),
              static_cast<std::uint16_t>(layout.dims()), static_cast<std::uint16_t>(n), env_count};
  if (const auto* c = std::get_if<CompCbnModel>(&model)) a.header.I = static_cast<std::uint16_t>(c->slots.size());
  a.kind = model_kind(model);
  a.payload_sections = write_payload(model, a.header, layout, a.payload);
  if (!data.empty()) a.stream = encode_sequence(huffman_build(dist), data);
  return a;
}

DecodedDataset decode_dataset(const EncodedArtifact& artifact) {
  auto parsed = parse_payload(artifact.header, artifact.kind, artifact.payload);
  DecodedDataset out{std::move(parsed.model), {}};
  if (!artifact.stream.empty()) {
    DiscreteDistribution dist = [&] {
      try {
        return model_distribution(out.model);
      } catch (const DomainError& e) {
        throw DecodeError(std::string("model does not induce a distribution: ") + e.what());
      }
    }();
    out.data = decode_sequence(huffman_build(dist), artifact.stream);
  }
  return out;
}

DecodedDataset decode_bytes(std::span<const std::uint8_t> bytes) {
  return decode_dataset(EncodedArtifact::from_bytes(bytes));
}

ReconcileReport reconcile_bits(const EncodedArtifact& artifact, const FcBreakdown& ledger) {
  const auto decoded = decode_dataset(artifact);
  const auto sections = parse_payload(artifact.header, artifact.kind, artifact.payload).sections;
  const auto dist = model_distribution(decoded.model);
  ReconcileReport rep{};
  rep.payload_bits = static_cast<double>(artifact.payload.size());
  rep.ledger_model_bits = ledger.model_bits();
  for (const auto& s : sections) {
    if (s.label == "table" || s.label == "tables" || s.label == "strategy2") rep.table_section_bits += s.bits;
  }
  rep.ledger_table_bits = ledger.model_bits();
  rep.stream_bits = static_cast<double>(artifact.stream.size());
  for (Point x : decoded.data) {
    const auto s = shannon_length(dist, x);
    rep.real_nll_bits += s.real;
    rep.shannon_bits += static_cast<double>(s.bits);
  }
  rep.huffman_minus_nll = rep.stream_bits - rep.real_nll_bits;
  rep.data_count = decoded.data.size();
  const double gap = rep.shannon_bits - rep.real_nll_bits;
  rep.shannon_gap_ok = decoded.data.empty() ? gap == 0.0 : (gap >= -1e-9 && gap < static_cast<double>(rep.data_count));
  rep.overheads = {{"header", static_cast<double>(artifact.header_bits())},
                   {"model_index", static_cast<double>(artifact.index_bits())},
                   {"framing", static_cast<double>(EncodedArtifact::framing_bits())},
                   {"padding", static_cast<double>(artifact.padding_bits())}};
  for (const auto& s : sections) {
    if (s.label != "table" && s.label != "tables" && s.label != "strategy2") rep.overheads.push_back(s);
  }
  return rep;
}

json ReconcileReport::to_json() const {
  json o = json::object();
  for (const auto& e : overheads) o[e.label] = e.bits;
  return {{"payload_bits", payload_bits},
          {"ledger_model_bits", ledger_model_bits},
          {"table_section_bits", table_section_bits},
          {"ledger_table_bits", ledger_table_bits},
          {"stream_bits", stream_bits},
          {"real_nll_bits", real_nll_bits},
          {"shannon_bits", shannon_bits},
          {"huffman_minus_nll", huffman_minus_nll},
          {"data_count", data_count},
          {"shannon_gap_ok", shannon_gap_ok},
          {"overheads", o}};
}

// ---------------------------------------------------------------- ranking

Nat rank_subset(std::span<const std::size_t> subset, std::size_t M) {
  // Lexicographic rank among k-subsets of {0..M-1}.
  Nat rank = 0;
  const std::size_t k = subset.size();
  std::size_t prev = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (subset[i] >= M || (i > 0 && subset[i] <= subset[i - 1])) throw DomainError("subset must be sorted and in range");
    for (std::size_t v = prev; v < subset[i]; ++v) rank += binomial(M - v - 1, k - i - 1);
    prev = subset[i] + 1;
  }
  return rank;
}

std::vector<std::size_t> unrank_subset(Nat rank, std::size_t M, std::size_t k) {
  if (k > M || rank >= binomial(M, k)) throw DecodeError("subset rank out of range");
  std::vector<std::size_t> out;
  std::size_t v = 0;
  for (std::size_t i = 0; i < k; ++i) {
    while (true) {
      const Nat c = binomial(M - v - 1, k - i - 1);
      if (rank < c) break;
      rank -= c;
      ++v;
    }
    out.push_back(v++);
  }
  return out;
}

namespace {

// completions[r][j]: ways to fill r more positions from j used blocks ending with exactly k.
std::vector<std::vector<Nat>> rgs_completions(std::size_t N, std::size_t k) {
  std::vector<std::vector<Nat>> f(N + 1, std::vector<Nat>(k + 2, 0));
  f[0][k] = 1;
  for (std::size_t r = 1; r <= N; ++r) {
    for (std::size_t j = 0; j <= k; ++j) f[r][j] = j * f[r - 1][j] + (j < k ? f[r - 1][j + 1] : Nat(0));
  }
  return f;
}

}  // namespace

Nat rank_rgs(std::span<const std::size_t> rgs, std::size_t k) {
  const std::size_t N = rgs.size();
  const auto f = rgs_completions(N, k);
  Nat rank = 0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t r = N - i - 1;
    if (rgs[i] > used || rgs[i] >= k) throw DomainError("not a restricted growth string");
    for (std::size_t v = 0; v < rgs[i]; ++v) rank += f[r][used];  // v < used keeps the block count
    if (rgs[i] == used) ++used;
  }
  if (used != k) throw DomainError("restricted growth string has the wrong block count");
  return rank;
}

std::vector<std::size_t> unrank_rgs(Nat rank, std::size_t N, std::size_t k) {
  if (k < 1 || k > N || rank >= stirling2(N, k)) throw DecodeError("partition rank out of range");
  const auto f = rgs_completions(N, k);
  std::vector<std::size_t> out;
  std::size_t used = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t r = N - i - 1;
    std::size_t v = 0;
    while (v < used && rank >= f[r][used]) {
      rank -= f[r][used];
      ++v;
    }
    out.push_back(v);
    if (v == used) ++used;
  }
  return out;
}

Nat rank_permutation(std::span<const std::size_t> perm) {
  const std::size_t k = perm.size();
  std::vector<bool> seen(k, false);
  Nat rank = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (perm[i] >= k || seen[perm[i]]) throw DomainError("not a permutation");
    std::size_t smaller = 0;
    for (std::size_t v = 0; v < perm[i]; ++v) smaller += seen[v] ? 0 : 1;
    seen[perm[i]] = true;
    rank = rank * (k - i) + smaller;
  }
  return rank;
}

std::vector<std::size_t> unrank_permutation(Nat rank, std::size_t k) {
  if (rank >= factorial(k)) throw DecodeError("permutation rank out of range");
  std::vector<std::size_t> digits(k);
  for (std::size_t i = k; i-- > 0;) {
    const std::size_t base = k - i;
    digits[i] = static_cast<std::size_t>(Nat(rank % base).convert_to<std::uint64_t>());
    rank /= base;
  }
  std::vector<std::size_t> pool(k);
  for (std::size_t i = 0; i < k; ++i) pool[i] = i;
  std::vector<std::size_t> out;
  for (auto d : digits) {
    out.push_back(pool[d]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(d));
  }
  return out;
}

// ---------------------------------------------------------------- JSON

json distribution_to_json(const DiscreteDistribution& p) {
  json entries = json::array();
  for (Point x = 0; x < p.layout().size(); ++x) {
    if (p.numerator(x) != 0) entries.push_back({{"point", p.layout().point_string(x)}, {"num", num_to_json(p.numerator(x))}});
  }
  json j = {{"d", p.d()}, {"n", p.n()}, {"widths", p.layout().widths()}, {"entries", entries}};
  if (p.layout().is_uniform()) j["m"] = p.layout().m();
  return j;
}

DiscreteDistribution distribution_from_json(const json& j) {
  try {
    const Layout layout = layout_from_json(j);
    const unsigned n = j.at("n").get<unsigned>();
    std::map<Point, Nat> entries;
    for (const auto& e : j.at("entries")) {
      const auto& pt = e.at("point");
      const Point x = pt.is_string() ? layout.parse_point(pt.get<std::string>()) : pt.get<Point>();
      if (!entries.emplace(x, num_from_json(e.at("num"))).second) throw ConfigError("duplicate point in table");
    }
    return make_table_distribution(entries, layout, n);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed distribution: ") + e.what());
  }
}

json codebook_to_json(const Codebook& c) {
  json words = json::array();
  for (const auto& [x, w] : c.words()) words.push_back({{"point", c.layout().point_string(x)}, {"word", w.to_string()}});
  const auto lengths = c.lengths();
  const Rational k = kraft_sum(lengths);
  return {{"widths", c.layout().widths()},
          {"words", words},
          {"prefix_free", Codebook::is_prefix_free(c.words())},
          {"kraft_sum", boost::multiprecision::numerator(k).str() + "/" + boost::multiprecision::denominator(k).str()}};
}

json model_to_json(const Model& model) {
  return std::visit(
      Overloaded{
          [](const DiscreteDistribution& p) {
            json j = distribution_to_json(p);
            j["kind"] = "table";
            return j;
          },
          [](const CbnModel& c) {
            json fs = json::array();
            for (const auto& f : c.factors) {
              fs.push_back({{"value", f.value_coords},
                            {"cond", f.cond_coords},
                            {"precision", f.precision},
                            {"name", f.name},
                            {"table", table_to_json(f.table)}});
            }
            return json{{"kind", "cbn"}, {"widths", c.layout.widths()}, {"output_precision", c.output_precision},
                        {"factors", fs}};
          },
          [](const InvariantModel& v) {
            return json{{"kind", "invariant"},
                        {"widths", v.layout.widths()},
                        {"orbit_of", v.orbit_of},
                        {"f1", {{"precision", v.f1.precision()}, {"table", table_to_json(v.f1.table())}}},
                        {"f2", {{"precision", v.f2.precision()}, {"table", table_to_json(v.f2.table())}}},
                        {"output_precision", v.output_precision}};
          },
          [](const CompCbnModel& c) {
            return json{{"kind", "compcbn"},   {"pool_lambdas", c.pool_lambdas}, {"slots", c.slots},
                        {"support_size", c.support_size}, {"y_sigma", c.y_sigma}, {"precision", c.precision}};
          },
      },
      model);
}

Model model_from_json(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "table") return distribution_from_json(j);
    if (kind == "cbn") {
      CbnModel c{layout_from_json(j), {}, j.at("output_precision").get<unsigned>()};
      for (const auto& f : j.at("factors")) {
        c.factors.push_back({f.at("value").get<std::vector<std::size_t>>(),
                             f.value("cond", std::vector<std::size_t>{}), f.at("precision").get<unsigned>(),
                             table_from_json(f.at("table")), f.value("name", std::string())});
      }
      (void)model_cfmp(c);
      return c;
    }
    if (kind == "invariant") {
      const Layout layout = layout_from_json(j);
      if (layout.dims() != 2) throw ConfigError("invariant model needs two coordinates");
      auto orbit_of = j.at("orbit_of").get<std::vector<std::uint32_t>>();
      if (orbit_of.empty()) throw ConfigError("empty orbit map");
      const unsigned ob = ceil_log2(*std::max_element(orbit_of.begin(), orbit_of.end()) + std::uint64_t{1});
      InvariantModel v{layout, std::move(orbit_of),
                       ProbMechanism("f1", layout.width(0), ob, j.at("f1").at("precision").get<unsigned>(),
                                     table_from_json(j.at("f1").at("table"))),
                       ProbMechanism("f2", layout.width(1), 0, j.at("f2").at("precision").get<unsigned>(),
                                     table_from_json(j.at("f2").at("table"))),
                       j.at("output_precision").get<unsigned>()};
      (void)model_cfmp(v);
      return v;
    }
    if (kind == "compcbn") {
      CompCbnModel c{j.at("pool_lambdas").get<std::vector<double>>(), j.at("slots").get<std::vector<std::size_t>>(),
                     j.at("support_size").get<std::size_t>(), j.at("y_sigma").get<double>(),
                     j.at("precision").get<unsigned>()};
      (void)model_cfmp(c);
      return c;
    }
    throw ConfigError("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid model: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) throw ConfigError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ConfigError("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fcc
