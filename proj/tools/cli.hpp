#pragma once
// Command implementations for the paddist front end. Each command maps a resolved configuration
// to a JSON report plus named matrices that are also written as CSV sidecars.

#include <boost/algorithm/string.hpp>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "paddist/pipeline.hpp"
#include "paddist/version.hpp"

namespace paddist::cli {

using nlohmann::json;

/// Raised for configurations rejected before any computation.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WeightSpec {
  std::vector<i64> k;
  bool disk = false;
};

/// "k=2", "k=2,1" or "disk:k=0".
inline WeightSpec parse_weight(const std::string& text) {
  WeightSpec w;
  std::string s = boost::algorithm::trim_copy(text);
  if (boost::algorithm::starts_with(s, "disk:")) {
    w.disk = true;
    s = s.substr(5);
  }
  if (!boost::algorithm::starts_with(s, "k=")) throw ValidationError("weight must look like k=<int>[,<int>...]");
  std::vector<std::string> parts;
  boost::algorithm::split(parts, s.substr(2), boost::is_any_of(","));
  for (auto& part : parts) {
    std::string t = boost::algorithm::trim_copy(part);
    try {
      size_t used = 0;
      long long v = std::stoll(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      w.k.push_back(v);
    } catch (const std::exception&) {
      throw ValidationError("malformed weight component '" + t + "'");
    }
  }
  return w;
}

inline Rational parse_rational(const std::string& text) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, boost::algorithm::trim_copy(text), boost::is_any_of("/"));
  try {
    if (parts.size() == 1) return Rational(std::stoll(parts[0]));
    if (parts.size() == 2) {
      i64 d = std::stoll(parts[1]);
      if (d == 0) throw ValidationError("zero denominator in '" + text + "'");
      return Rational(std::stoll(parts[0]), d);
    }
  } catch (const std::logic_error&) {
  }
  throw ValidationError("malformed rational '" + text + "'");
}

inline std::string rational_string(const Rational& r) {
  return r.denominator() == 1 ? std::to_string(r.numerator())
                              : std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

struct RunConfig {
  std::string command;
  i64 p = 3;
  int g = 1;
  int cap_p = 20;
  int cap_w = 0;
  std::optional<int> trunc;
  std::string weight = "k=0";
  i64 level = 4;
  std::optional<std::string> h;
  // Command options.
  std::string source;  // "file" or "modsym"
  std::string series;
  std::string series_file;
  std::string operator_file;
  std::string bundle;
  std::string coefficients;  // algebraic | distributions | trivial
  std::vector<i64> hecke_primes;
  bool parabolic = true;
  std::string output;

  WeightSpec weight_spec() const { return parse_weight(weight); }
  std::optional<Rational> slope() const {
    if (!h) return std::nullopt;
    return parse_rational(*h);
  }
  Ring ring() const { return Ring::make(p, cap_p, cap_w); }
  Weight weight_value() const {
    WeightSpec w = weight_spec();
    return w.disk ? Weight::disk_family(ring(), w.k) : Weight::algebraic(ring(), w.k);
  }
};

/// Keys accepted in configuration files; the same names as the long flags.
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{"p",      "g",           "cap-p",         "cap-w",        "trunc",
                                             "weight", "level",       "h",             "source",       "series",
                                             "series-file", "operator-file", "bundle", "coefficients",
                                             "hecke-primes", "parabolic", "output"};
  return keys;
}

inline json config_to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["p"] = c.p;
  j["g"] = c.g;
  j["cap-p"] = c.cap_p;
  j["cap-w"] = c.cap_w;
  j["trunc"] = c.trunc ? json(*c.trunc) : json(nullptr);
  j["weight"] = c.weight;
  j["level"] = c.level;
  j["h"] = c.h ? json(*c.h) : json(nullptr);
  j["source"] = c.source;
  j["series"] = c.series;
  j["series-file"] = c.series_file;
  j["operator-file"] = c.operator_file;
  j["bundle"] = c.bundle;
  j["coefficients"] = c.coefficients;
  j["hecke-primes"] = c.hecke_primes;
  j["parabolic"] = c.parabolic;
  j["output"] = c.output;
  return j;
}

/// Builds a configuration from merged key/value pairs and validates it.
inline RunConfig resolve_config(const std::string& command, const json& kv) {
  RunConfig c;
  c.command = command;
  for (auto it = kv.begin(); it != kv.end(); ++it)
    if (std::find(config_keys().begin(), config_keys().end(), it.key()) == config_keys().end())
      throw ValidationError("unknown configuration key '" + it.key() + "'");
  auto get = [&](const char* key, auto& dst) {
    if (!kv.contains(key) || kv[key].is_null()) return;
    try {
      kv[key].get_to(dst);
    } catch (const json::exception&) {
      throw ValidationError(std::string("configuration key '") + key + "' has the wrong type");
    }
  };
  get("p", c.p);
  get("g", c.g);
  get("cap-p", c.cap_p);
  get("cap-w", c.cap_w);
  if (kv.contains("trunc") && !kv["trunc"].is_null()) {
    int t = 0;
    get("trunc", t);
    c.trunc = t;
  }
  get("weight", c.weight);
  get("level", c.level);
  if (kv.contains("h") && !kv["h"].is_null()) {
    if (kv["h"].is_number_integer())
      c.h = std::to_string(kv["h"].get<long long>());
    else {
      std::string h;
      get("h", h);
      c.h = h;
    }
  }
  get("source", c.source);
  get("series", c.series);
  get("series-file", c.series_file);
  get("operator-file", c.operator_file);
  get("bundle", c.bundle);
  get("coefficients", c.coefficients);
  get("hecke-primes", c.hecke_primes);
  get("parabolic", c.parabolic);
  get("output", c.output);

  if (c.p < 3 || !is_prime_i64(c.p)) throw ValidationError("p must be an odd prime");
  if (c.g < 1 || c.g > 2) throw ValidationError("g must be 1 or 2");
  if (c.cap_p < 2 || c.cap_p > detail::max_cap(c.p)) throw ValidationError("cap-p out of range for this p");
  if (c.cap_w < 0 || c.cap_w > kMaxW) throw ValidationError("cap-w out of range");
  if (c.trunc && *c.trunc < 0) throw ValidationError("trunc must be non-negative");
  WeightSpec w = c.weight_spec();
  if (static_cast<int>(w.k.size()) != c.g) throw ValidationError("weight has the wrong number of components for g");
  if (w.disk && c.cap_w == 0) throw ValidationError("a disk weight needs cap-w > 0");
  if (c.h) {
    Rational h = *c.slope();
    if (h < Rational(0)) throw ValidationError("h must be non-negative");
  }
  if (!c.source.empty() && c.source != "file" && c.source != "modsym")
    throw ValidationError("source must be 'file' or 'modsym'");
  if (!c.coefficients.empty() && c.coefficients != "algebraic" && c.coefficients != "distributions" &&
      c.coefficients != "trivial")
    throw ValidationError("coefficients must be algebraic, distributions or trivial");
  for (i64 q : c.hecke_primes)
    if (!is_prime_i64(q) || (c.level * c.p) % q == 0) throw ValidationError("hecke primes must be primes prime to level*p");
  return c;
}

// ---------------------------------------------------------------------------------------------
// Element encoding. A scalar is written as "n" or "n/d" (d a power of p, n a symmetric residue); a
// weight-disk element as the list of its w-coefficients in that form.

inline std::string coeff_string(const RingElem& x, int i) {
  const Ring& R = x.ring();
  i64 c = x.coeff(i);
  if (c > R.mod / 2) c -= R.mod;
  if (x.denom_exp() == 0 || c == 0) return std::to_string(c);
  BigInt d = boost::multiprecision::pow(BigInt(R.p), x.denom_exp());
  return std::to_string(c) + "/" + d.str();
}

inline json elem_json(const RingElem& x) {
  if (x.len() == 1) return coeff_string(x, 0);
  json a = json::array();
  for (int i = 0; i < x.len(); ++i) a.push_back(coeff_string(x, i));
  return a;
}

inline RingElem parse_scalar(const Ring& R, const json& j) {
  if (j.is_number_integer()) return RingElem::from_int(R, j.get<i64>());
  if (!j.is_string()) throw ValidationError("ring elements are integers, rational strings or coefficient lists");
  std::vector<std::string> parts;
  std::string s = boost::algorithm::trim_copy(j.get<std::string>());
  boost::algorithm::split(parts, s, boost::is_any_of("/"));
  try {
    if (parts.size() == 1) return RingElem::from_big(R, BigInt(parts[0]));
    if (parts.size() == 2) return RingElem::from_rational(R, BigInt(parts[0]), BigInt(parts[1]));
  } catch (const std::runtime_error&) {
  }
  throw ValidationError("malformed ring element '" + s + "'");
}

inline RingElem parse_elem(const Ring& R, const json& j) {
  if (!j.is_array()) return parse_scalar(R, j);
  if (static_cast<int>(j.size()) > R.len()) throw ValidationError("more w-coefficients than cap-w allows");
  RingElem x = RingElem::zero(R), wk = RingElem::one(R);
  for (size_t i = 0; i < j.size(); ++i) {
    x += parse_scalar(R.scalar_ring(), j[i]).embed(R) * wk;
    if (i + 1 < j.size()) wk *= RingElem::w(R);
  }
  return x;
}

inline json matrix_json(const Matrix& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < M.cols(); ++j) r.push_back(elem_json(M(i, j)));
    rows.push_back(r);
  }
  return rows;
}

inline json valuation_json(int v) { return v >= kInfVal ? json("inf") : json(v); }

inline json matrix_valuations(const Matrix& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < M.cols(); ++j) r.push_back(valuation_json(M(i, j).is_zero() ? kInfVal : M(i, j).valuation()));
    rows.push_back(r);
  }
  return rows;
}

inline Matrix parse_matrix(const Ring& R, const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw ValidationError("a matrix is a non-empty list of rows");
  const int r = static_cast<int>(j.size()), c = static_cast<int>(j[0].size());
  Matrix M = zero_matrix(r, c, R);
  for (int a = 0; a < r; ++a) {
    if (!j[a].is_array() || static_cast<int>(j[a].size()) != c) throw ValidationError("matrix rows differ in length");
    for (int b = 0; b < c; ++b) M(a, b) = parse_elem(R, j[a][b]);
  }
  return M;
}

inline json vec_json(const Vec& v) {
  json a = json::array();
  for (auto& x : v) a.push_back(elem_json(x));
  return a;
}

inline Vec parse_vec(const Ring& R, const json& j) {
  if (!j.is_array()) throw ValidationError("expected a list of ring elements");
  Vec v;
  for (auto& x : j) v.push_back(parse_elem(R, x));
  return v;
}

inline json series_json(const CharSeries& F) {
  json c = json::array(), v = json::array();
  for (auto& x : F.c) {
    c.push_back(elem_json(x));
    v.push_back(valuation_json(x.is_zero() ? kInfVal : x.valuation()));
  }
  return {{"coefficients", c}, {"valuations", v}, {"dim", F.dim}, {"complete", F.complete()}};
}

inline json polygon_json(const NewtonPolygon& np) {
  json vs = json::array(), segs = json::array(), slopes = json::array();
  for (auto& [n, v] : np.vertices) vs.push_back({n, v});
  for (auto& s : np.segments) segs.push_back({{"slope", rational_string(s.slope)}, {"length", s.length}});
  for (auto& s : np.slopes()) slopes.push_back(rational_string(s));
  return {{"vertices", vs}, {"segments", segs}, {"slopes", slopes}};
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

struct Report {
  json result;
  std::map<std::string, Matrix> matrices;
};

// ---------------------------------------------------------------------------------------------
// pair-gram

inline Report run_pair_gram(const RunConfig& c) {
  Weight w = c.weight_value();
  WeightSpec ws = c.weight_spec();
  i64 deg = 0;
  for (i64 k : ws.k) deg += k;
  if (!c.trunc && (ws.disk || deg < 0)) throw ValidationError("trunc is required for this weight");
  const int M = c.trunc ? *c.trunc : static_cast<int>(c.g == 1 ? deg : c.g * deg);
  PairKernel K = pair_kernel(w, M, M);
  Matrix G = zero_matrix(K.rows(), K.cols(), w.ring);
  int nonzero = 0, minval = kInfVal;
  for (int i = 0; i < K.rows(); ++i)
    for (int j = 0; j < K.cols(); ++j) {
      G(i, j) = K.at(i, j);
      if (!G(i, j).is_zero()) ++nonzero, minval = std::min(minval, G(i, j).valuation());
    }
  json diag = json::array(), diagval = json::array();
  for (int i = 0; i < std::min(G.rows(), G.cols()); ++i) {
    diag.push_back(elem_json(G(i, i)));
    diagval.push_back(valuation_json(G(i, i).is_zero() ? kInfVal : G(i, i).valuation()));
  }
  Report r;
  r.result["kernel"] = {{"rows", K.rows()}, {"cols", K.cols()},        {"nonzero", nonzero},
                        {"min_valuation", valuation_json(minval)}, {"diagonal", diag}, {"diagonal_valuations", diagval}};
  r.result["gram"] = matrix_json(G);
  r.result["gram_valuations"] = matrix_valuations(G);
  r.matrices["gram"] = G;
  if (w.dominant() && (w.comps.back().a >= 0)) {
    AlgModel am = alg_model(w);
    json pv = json::array();
    for (int v : am.pivot_valuations) pv.push_back(v);
    r.result["algebraic_model"] = {{"dim", am.dim},
                                   {"weyl_dim", am.weyl_dim},
                                   {"det_valuation", am.det_valuation},
                                   {"pivot_valuations", pv},
                                   {"gram", matrix_json(am.gram)}};
    r.result["nondegenerate"] = am.nondegenerate;
    r.matrices["algebraic_gram"] = am.gram;
  } else {
    r.result["algebraic_model"] = nullptr;
    r.result["nondegenerate"] = nullptr;
  }
  return r;
}

// ---------------------------------------------------------------------------------------------
// Operator sources

struct CoeffChoice {
  CoeffModule module;
  std::string kind;
};

inline CoeffChoice coefficient_module(const RunConfig& c) {
  Weight w = c.weight_value();
  std::string kind = c.coefficients;
  if (kind.empty()) kind = (c.trunc || w.is_disk()) ? "distributions" : "algebraic";
  if (kind == "trivial") return {CoeffModule::trivial(c.ring()), kind};
  if (kind == "algebraic") {
    if (w.is_disk()) throw ValidationError("algebraic coefficients need an algebraic weight");
    return {CoeffModule::algebraic(w), kind};
  }
  if (!c.trunc) throw ValidationError("distribution coefficients need trunc");
  return {CoeffModule::distributions(w, *c.trunc), kind};
}

struct ModsymData {
  std::shared_ptr<const CosetTable> table;
  SymbSpace space;
  std::optional<ParabolicSpace> parabolic;
  std::string kind;
};

inline ModsymData build_modsym(const RunConfig& c, bool parabolic) {
  if (c.g != 1) throw ValidationError("modular symbols are implemented for g = 1");
  auto T = std::make_shared<const CosetTable>(manin_presentation(c.level, c.p));
  CoeffChoice cc = coefficient_module(c);
  ModsymData d{T, symb_space(T, cc.module), std::nullopt, cc.kind};
  if (parabolic) d.parabolic = parabolic_quotient(d.space);
  return d;
}

struct OperatorSource {
  Matrix U;
  CharSeries series;
  std::optional<CoeffModule> coeff;
  json origin;
};

inline OperatorSource load_operator(const RunConfig& c) {
  if (c.source == "modsym") {
    ModsymData d = build_modsym(c, c.parabolic);
    Matrix U = d.parabolic ? d.parabolic->hecke(HeckeOp::U()) : hecke_matrix(d.space, HeckeOp::U());
    json origin = {{"kind", "modsym"}, {"coefficients", d.kind}, {"space", d.parabolic ? "parabolic" : "ambient"},
                   {"dim", U.rows()}};
    if (U.rows() == 0) return {U, CharSeries::one(c.ring()), d.space.coeff, origin};
    return {U, trusted_series(U, d.space.coeff), d.space.coeff, origin};
  }
  if (c.operator_file.empty()) throw ValidationError("an operator needs --operator-file or --source modsym");
  json j = load_json_file(c.operator_file);
  Matrix U = parse_matrix(c.ring(), j.contains("matrix") ? j["matrix"] : j);
  if (U.rows() != U.cols()) throw ValidationError("operator matrix must be square");
  return {U, char_series(U), std::nullopt, {{"kind", "file"}, {"path", c.operator_file}, {"dim", U.rows()}}};
}

inline CharSeries load_series(const RunConfig& c, json& origin) {
  const Ring R = c.ring();
  if (!c.series.empty()) {
    std::vector<std::string> parts;
    boost::algorithm::split(parts, c.series, boost::is_any_of(","));
    std::vector<RingElem> cs;
    for (auto& s : parts) cs.push_back(parse_elem(R, json(boost::algorithm::trim_copy(s))));
    origin = {{"kind", "inline"}};
    return CharSeries::from_coeffs(R, cs, static_cast<int>(cs.size()) - 1);
  }
  if (!c.series_file.empty()) {
    json j = load_json_file(c.series_file);
    json cs = j.contains("coefficients") ? j["coefficients"] : j;
    Vec v = parse_vec(R, cs);
    int dim = j.is_object() && j.contains("dim") ? j["dim"].get<int>() : static_cast<int>(v.size()) - 1;
    origin = {{"kind", "file"}, {"path", c.series_file}};
    return CharSeries::from_coeffs(R, v, dim);
  }
  OperatorSource op = load_operator(c);
  origin = op.origin;
  return op.series;
}

// ---------------------------------------------------------------------------------------------
// newton, slope-split

inline json factor_json(const SlopeFactorization& sf) {
  return {{"h", rational_string(sf.h)},
          {"Q", vec_json(sf.Q)},
          {"S", vec_json(sf.S)},
          {"resultant_valuation", valuation_json(sf.resultant_valuation)},
          {"iterations", sf.iterations}};
}

inline Report run_newton(const RunConfig& c) {
  json origin;
  CharSeries F = load_series(c, origin);
  Report r;
  r.result["source"] = origin;
  r.result["series"] = series_json(F);
  r.result["polygon"] = polygon_json(newton_polygon(F));
  if (auto h = c.slope()) {
    if (!is_slope_datum(F, *h)) fail(Errc::NotASlopeDatum, "h is not a unit vertex slope of this series");
    r.result["factorization"] = factor_json(slope_factor(F, *h));
  }
  return r;
}

inline Report run_slope_split(const RunConfig& c) {
  auto h = c.slope();
  if (!h) throw ValidationError("slope-split needs --h");
  OperatorSource op = load_operator(c);
  Report r;
  r.result["source"] = op.origin;
  r.result["series"] = series_json(op.series);
  r.result["polygon"] = polygon_json(newton_polygon(op.series));
  r.matrices["operator"] = op.U;
  if (op.U.rows() == 0) {
    r.result["slope_dim"] = 0;
    r.result["complement_dim"] = 0;
    return r;
  }
  if (op.coeff && !op.coeff->exact) {
    SlopeSubspace K = slope_subspace(op.U, *op.coeff, *h);
    r.result["Q"] = vec_json(K.Q);
    r.result["slope_dim"] = K.dim();
    r.result["degree_Q"] = static_cast<int>(K.Q.size()) - 1;
    r.result["restricted_operator"] = matrix_json(K.op);
    r.matrices["slope_basis"] = K.coords;
    r.matrices["restricted_operator"] = K.op;
    return r;
  }
  if (!is_slope_datum(op.series, *h)) fail(Errc::NotASlopeDatum, "h is not a unit vertex slope of this operator");
  SlopeIdempotents si = slope_idempotents(op.U, *h);
  const int n = op.U.rows();
  const Ring& R = op.U(0, 0).ring();
  auto small = [&](const Matrix& X) {
    int v = kInfVal;
    for (auto& x : X.data())
      if (!x.is_zero()) v = std::min(v, x.valuation());
    return valuation_json(v);
  };
  int rank_small = eliminate(si.eta_small).rank();
  r.result["factorization"] = factor_json(si.factors);
  r.result["slope_dim"] = rank_small;
  r.result["complement_dim"] = n - rank_small;
  r.result["degree_Q"] = static_cast<int>(si.factors.Q.size()) - 1;
  r.result["checks"] = {
      {"idempotent_residual_valuation", small(si.eta_small * si.eta_small - si.eta_small)},
      {"sum_residual_valuation", small(si.eta_small + si.eta_large - identity_matrix(n, R))},
      {"commutator_residual_valuation", small(si.eta_small * op.U - op.U * si.eta_small)}};
  r.matrices["eta_small"] = si.eta_small;
  r.matrices["eta_large"] = si.eta_large;
  return r;
}

// ---------------------------------------------------------------------------------------------
// modsym

inline Report run_modsym(const RunConfig& c) {
  ModsymData d = build_modsym(c, c.parabolic);
  const CosetTable& T = *d.table;
  Report r;
  json widths = json::array();
  for (int w : T.width) widths.push_back(w);
  r.result["cosets"] = T.size();
  r.result["cusps"] = T.cusp_count();
  r.result["cusp_widths"] = widths;
  r.result["coefficients"] = d.kind;
  r.result["precision"] = d.space.coeff.precision();
  r.result["ambient_dim"] = d.space.dim();
  std::vector<i64> primes = c.hecke_primes.empty() ? detail::default_hecke_primes(c.level * c.p) : c.hecke_primes;
  auto op_matrix = [&](const HeckeOp& op) {
    return d.parabolic ? d.parabolic->hecke(op) : hecke_matrix(d.space, op);
  };
  if (d.parabolic) {
    r.result["boundary_dim"] = d.parabolic->boundary_dim();
    r.result["parabolic_dim"] = d.parabolic->dim();
  }
  const int dim = d.parabolic ? d.parabolic->dim() : d.space.dim();
  json ops = json::object();
  if (dim > 0) {
    Matrix U = op_matrix(HeckeOp::U());
    r.matrices["U_" + std::to_string(c.p)] = U;
    ops["U_" + std::to_string(c.p)] = matrix_json(U);
    for (i64 q : primes) {
      Matrix Tq = op_matrix(HeckeOp::T(q));
      r.matrices["T_" + std::to_string(q)] = Tq;
      ops["T_" + std::to_string(q)] = matrix_json(Tq);
    }
    CharSeries F = trusted_series(U, d.space.coeff);
    r.result["U_series"] = series_json(F);
    r.result["U_polygon"] = polygon_json(newton_polygon(F));
    if (d.parabolic) {
      Matrix G = cup_gram(*d.parabolic);
      r.matrices["cup_gram"] = G;
      r.result["cup_gram_valuation"] = valuation_json(det_valuation(G));
    }
  }
  r.result["operators"] = ops;
  r.result["space"] = d.parabolic ? "parabolic" : "ambient";
  return r;
}

// ---------------------------------------------------------------------------------------------
// control-check

inline json control_json(const ControlReport& rep) {
  return {{"k", rep.k},
          {"h", rational_string(rep.h)},
          {"M", rep.M},
          {"h_K", rational_string(rep.h_K)},
          {"h_dagger", rational_string(rep.h_dagger)},
          {"h_alg", rational_string(rep.h_alg)},
          {"h_k", rational_string(rep.h_k)},
          {"dim_overconvergent", rep.dim_overconvergent},
          {"dim_algebraic", rep.dim_algebraic},
          {"ambient_overconvergent", rep.ambient_overconvergent},
          {"ambient_algebraic", rep.ambient_algebraic},
          {"parabolic_overconvergent", rep.parabolic_overconvergent},
          {"parabolic_algebraic", rep.parabolic_algebraic},
          {"polygon_overconvergent", polygon_json(rep.polygon_overconvergent)},
          {"polygon_algebraic", polygon_json(rep.polygon_algebraic)},
          {"gram_valuation", valuation_json(rep.gram_valuation)},
          {"equal", rep.equal()}};
}

inline void require_control_inputs(const RunConfig& c) {
  if (c.g != 1) throw ValidationError("control comparison is implemented for g = 1");
  if (c.weight_spec().disk) throw ValidationError("control comparison needs an algebraic weight");
  if (!c.h) throw ValidationError("control comparison needs --h");
  if (!c.trunc) throw ValidationError("control comparison needs --trunc");
}

inline Report run_control_check(const RunConfig& c) {
  require_control_inputs(c);
  auto T = std::make_shared<const CosetTable>(manin_presentation(c.level, c.p));
  ControlReport rep = control_check(T, Ring::scalar(c.p, c.cap_p), c.weight_spec().k[0], *c.slope(), *c.trunc);
  Report r;
  r.result = control_json(rep);
  return r;
}

// ---------------------------------------------------------------------------------------------
// ramify

inline json ideal_json(const Ideal& I) {
  json a = json::array();
  for (auto& g : I.gens) a.push_back(vec_json(g));
  return a;
}

inline json algebra_json(const FiniteAlgebra& B) {
  json mult = json::array();
  for (auto& L : B.mult) mult.push_back(matrix_json(L));
  return {{"rank", B.rank}, {"mult", mult}, {"one", vec_json(B.one)}};
}

inline json bundle_json(const PairedModule& pm) {
  json M = json::array(), N = json::array();
  for (auto& a : pm.act_M) M.push_back(matrix_json(a));
  for (auto& a : pm.act_N) N.push_back(matrix_json(a));
  const Ring& A = pm.algebra.base;
  return {{"base", {{"p", A.p}, {"cap-p", A.cap_p}, {"cap-w", A.cap_w}}},
          {"algebra", algebra_json(pm.algebra)},
          {"module_action", {{"M", M}, {"N", N}}},
          {"gram", matrix_json(pm.gram)}};
}

inline FiniteAlgebra parse_algebra(const Ring& A, const json& j) {
  if (!j.is_object()) throw ValidationError("algebra must be an object");
  if (j.contains("monogenic")) return monogenic_algebra(A, parse_vec(A, j["monogenic"]));
  if (j.contains("product")) return product_algebra(A, j["product"].get<int>());
  if (j.contains("operators")) {
    std::vector<Matrix> ops;
    for (auto& m : j["operators"]) ops.push_back(parse_matrix(A, m));
    return algebra_from_operators(A, ops);
  }
  if (j.contains("mult")) {
    const int n = static_cast<int>(j["mult"].size());
    std::vector<std::vector<Vec>> table(n, std::vector<Vec>(n));
    for (int i = 0; i < n; ++i) {
      Matrix L = parse_matrix(A, j["mult"][i]);
      if (L.rows() != n || L.cols() != n) throw ValidationError("multiplication matrices must be rank x rank");
      for (int jj = 0; jj < n; ++jj)
        for (int k = 0; k < n; ++k) table[i][jj].push_back(L(k, jj));
    }
    Vec one = j.contains("one") ? parse_vec(A, j["one"]) : Vec{};
    if (one.empty()) {
      one.assign(n, RingElem::zero(A));
      one[0] = RingElem::one(A);
    }
    return algebra_from_table(A, table, one);
  }
  throw ValidationError("algebra needs one of monogenic, product, operators or mult");
}

inline PairedModule parse_bundle(const RunConfig& c, const json& j) {
  Ring A = c.ring();
  if (j.contains("base")) {
    const json& b = j["base"];
    A = Ring::make(b.value("p", c.p), b.value("cap-p", c.cap_p), b.value("cap-w", c.cap_w));
  }
  if (!j.contains("algebra") || !j.contains("gram")) throw ValidationError("bundle needs algebra and gram");
  FiniteAlgebra B = parse_algebra(A, j["algebra"]);
  const json& ma = j.contains("module_action") ? j["module_action"] : json("regular");
  const json& gram = j["gram"];
  if (ma.is_string() && ma.get<std::string>() == "regular") {
    if (gram.is_object() && gram.contains("form")) return regular_paired_module(B, parse_vec(A, gram["form"]));
    PairedModule pm{B, B.mult, B.mult, parse_matrix(A, gram)};
    pm.validate();
    return pm;
  }
  auto actions = [&](const json& list) {
    std::vector<Matrix> out;
    for (auto& m : list) out.push_back(parse_matrix(A, m));
    return out;
  };
  PairedModule pm{B, {}, {}, parse_matrix(A, gram)};
  if (ma.is_object() && ma.contains("M")) {
    pm.act_M = actions(ma["M"]);
    pm.act_N = actions(ma.contains("N") ? ma["N"] : ma["M"]);
  } else if (ma.is_array()) {
    pm.act_M = pm.act_N = actions(ma);
  } else {
    throw ValidationError("module_action must be 'regular', a list of matrices or {M, N}");
  }
  pm.validate();
  return pm;
}

inline json point_json(const FiniteAlgebra& B, const Point& x, const RamificationReport& rep) {
  (void)B;
  return {{"lambda", elem_json(x.lambda)},
          {"generator", vec_json(x.pres.b)},
          {"idempotent", vec_json(x.eta)},
          {"ladj", vec_json(rep.ladj)},
          {"ramified", rep.ramified},
          {"ord", rep.ord},
          {"e", rep.e},
          {"smooth", rep.smooth},
          {"etale", rep.etale},
          {"different_in_max", rep.different_in_max},
          {"fitting_in_max", rep.fitting_in_max}};
}

inline json algebra_invariants(const PairedModule& pm) {
  const FiniteAlgebra& B = pm.algebra;
  LIdeal L = l_ideal(pm);
  json out = {{"rank", B.rank},
              {"different", ideal_json(noether_different(B))},
              {"l_ideal", vec_json(L.generator)},
              {"m_tilde", vec_json(L.m_tilde)},
              {"n_tilde", vec_json(L.n_tilde)}};
  Presentation P = find_presentation(B);
  out["presentation"] = {{"generator", vec_json(P.b)}, {"min_poly", vec_json(P.f)}};
  out["fitting"] = ideal_json(fitting_omega(B));
  return out;
}

inline Report run_ramify(const RunConfig& c) {
  Report r;
  if (c.source == "modsym") {
    if (c.g != 1) throw ValidationError("the modular-symbol chain is implemented for g = 1");
    if (c.weight_spec().disk) throw ValidationError("the modular-symbol chain runs at an algebraic weight");
    if (!c.h) throw ValidationError("the modular-symbol chain needs --h");
    ModsymChainConfig mc;
    mc.N = c.level, mc.p = c.p, mc.k = c.weight_spec().k[0], mc.h = *c.slope();
    mc.M = c.trunc ? *c.trunc : static_cast<int>(mc.k) + 4;
    mc.cap = c.cap_p;
    mc.hecke_primes = c.hecke_primes;
    ModsymChainResult res = modsym_chain(mc);
    json primes = res.hecke_primes;
    r.result["source"] = {{"kind", "modsym"}, {"hecke_primes", primes}, {"precision", res.precision}};
    r.result["control"] = control_json(res.control);
    r.result["stages"] = {{"ambient_dim", res.ambient_dim},   {"boundary_dim", res.boundary_dim},
                          {"parabolic_dim", res.parabolic_dim}, {"slope_dim", res.slope_dim},
                          {"plus_dim", res.plus_dim},           {"minus_dim", res.minus_dim},
                          {"algebra_rank", res.bundle ? res.bundle->algebra.rank : 0}};
    for (size_t i = 0; i < res.slope_ops.size(); ++i) r.matrices["slope_" + res.op_names[i]] = res.slope_ops[i];
    json pts = json::array();
    if (res.bundle) {
      r.result["bundle"] = bundle_json(*res.bundle);
      r.matrices["gram"] = res.bundle->gram;
      r.result["algebra"] = algebra_invariants(*res.bundle);
      for (auto& x : res.points) pts.push_back(point_json(res.bundle->algebra, x.point, x.report));
    } else {
      r.result["bundle"] = nullptr;
      r.result["algebra"] = nullptr;
    }
    r.result["points"] = pts;
    return r;
  }
  if (c.bundle.empty()) throw ValidationError("ramify needs --bundle or --source modsym");
  PairedModule pm = parse_bundle(c, load_json_file(c.bundle));
  r.result["source"] = {{"kind", "bundle"}, {"path", c.bundle}};
  r.result["algebra"] = algebra_invariants(pm);
  r.matrices["gram"] = pm.gram;
  json pts = json::array();
  for (Point& x : enumerate_points(pm.algebra)) pts.push_back(point_json(pm.algebra, x, ramification_report(pm, x)));
  r.result["points"] = pts;
  return r;
}

// ---------------------------------------------------------------------------------------------

inline Report run_command(const RunConfig& c) {
  if (c.command == "pair-gram") return run_pair_gram(c);
  if (c.command == "newton") return run_newton(c);
  if (c.command == "slope-split") return run_slope_split(c);
  if (c.command == "modsym") return run_modsym(c);
  if (c.command == "ramify") return run_ramify(c);
  if (c.command == "control-check") return run_control_check(c);
  throw ValidationError("unknown command '" + c.command + "'");
}

/// Full report document: resolved configuration, version and command result.
inline json report_document(const RunConfig& c, const Report& r, const std::vector<std::string>& sidecars) {
  return {{"version", kVersion}, {"config", config_to_json(c)}, {"result", r.result}, {"sidecars", sidecars}};
}

inline std::string matrix_csv(const Matrix& M) {
  std::string out;
  for (int i = 0; i < M.rows(); ++i) {
    for (int j = 0; j < M.cols(); ++j) {
      json e = elem_json(M(i, j));
      std::string s = e.is_string() ? e.get<std::string>() : e.dump();
      if (e.is_array()) s = "\"" + boost::algorithm::replace_all_copy(s, "\"", "\"\"") + "\"";
      out += (j ? "," : "") + s;
    }
    out += "\n";
  }
  return out;
}

/// Exit status for a library error.
inline int exit_code(Errc e) {
  switch (e) {
    case Errc::PrecisionExhausted:
    case Errc::InsufficientDegree:
    case Errc::RankUnstable:
      return 3;
    case Errc::NotASlopeDatum:
      return 4;
    case Errc::DegeneratePairing:
      return 5;
    case Errc::NotRankOne:
      return 6;
    case Errc::InvalidArgument:
    case Errc::BadLevel:
    case Errc::BadPrime:
    case Errc::NotDominant:
    case Errc::HNotAdmissible:
    case Errc::IndexOutOfRange:
      return 2;
    default:
      return 1;
  }
}

}  // namespace paddist::cli
