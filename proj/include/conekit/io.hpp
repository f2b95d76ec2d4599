#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "conekit/errors.hpp"
#include "conekit/models.hpp"
#include "conekit/simulators.hpp"
#include "conekit/spectral.hpp"

namespace conekit::io {

namespace fs = std::filesystem;
using nlohmann::json;

/// 17 significant digits: enough for an exact double round trip.
inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::input, "cannot open " + p.string());
  return in;
}

inline std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::input, "cannot write " + p.string());
  return out;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string where(const std::string& src, std::size_t line) {
  return src + ":" + std::to_string(line) + ": ";
}

template <class T>
T parse_number(const std::string& tok, const std::string& ctx) {
  std::istringstream ss(tok);
  T v{};
  ss >> v;
  if (ss.fail() || !ss.eof()) throw Error(ErrorKind::input, ctx + "bad number '" + tok + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
  return out;
}

}  // namespace detail

// ---- edge lists ------------------------------------------------------------

/**
 * @brief Reads "i<TAB>j[<TAB>weight]" lines, 0-based. '#' starts a comment;
 *        a "# nodes: n" comment fixes the node count (otherwise max index + 1).
 */
inline SparseSymAdjacency read_edge_list(std::istream& in, const std::string& src = "<edges>") {
  std::vector<Edge> edges;
  std::optional<std::size_t> declared;
  std::size_t max_index = 0;
  bool any = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      const std::string comment = detail::trim(line.substr(hash + 1));
      if (comment.rfind("nodes:", 0) == 0) {
        declared = detail::parse_number<std::size_t>(detail::trim(comment.substr(6)), detail::where(src, lineno));
      }
      line = line.substr(0, hash);
    }
    line = detail::trim(line);
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok.size() != 2 && tok.size() != 3) {
      throw Error(ErrorKind::input, detail::where(src, lineno) + "expected 'i j [weight]'");
    }
    Edge e;
    e.i = detail::parse_number<std::size_t>(tok[0], detail::where(src, lineno));
    e.j = detail::parse_number<std::size_t>(tok[1], detail::where(src, lineno));
    if (tok.size() == 3) e.weight = detail::parse_number<double>(tok[2], detail::where(src, lineno));
    max_index = std::max({max_index, e.i, e.j});
    any = true;
    edges.push_back(e);
  }
  const std::size_t n = declared ? *declared : (any ? max_index + 1 : 0);
  return SparseSymAdjacency(n, std::move(edges));
}

inline SparseSymAdjacency read_edge_list(const fs::path& p) {
  auto in = open_in(p);
  return read_edge_list(in, p.string());
}

inline void write_edge_list(std::ostream& out, const SparseSymAdjacency& A) {
  out << "# nodes: " << A.n() << "\n";
  for (const auto& e : A.entries()) {
    out << e.i << '\t' << e.j;
    if (e.weight != 1.0) out << '\t' << fmt(e.weight);
    out << '\n';
  }
}

inline void write_edge_list(const fs::path& p, const SparseSymAdjacency& A) {
  auto out = open_out(p);
  write_edge_list(out, A);
}

// ---- UCI bag of words ------------------------------------------------------

/// UCI docword: header lines D, V, NNZ, then 1-based "docID wordID count" triples.
inline SparseCounts read_docword(std::istream& in, const std::string& src = "<docword>") {
  std::string line;
  std::size_t lineno = 0;
  std::vector<long> header;
  std::vector<CountEntry> entries;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty()) continue;
    if (header.size() < 3) {
      header.push_back(detail::parse_number<long>(line, detail::where(src, lineno)));
      continue;
    }
    std::istringstream ss(line);
    long d = 0, w = 0, c = 0;
    std::string extra;
    if (!(ss >> d >> w >> c) || (ss >> extra)) {
      throw Error(ErrorKind::input, detail::where(src, lineno) + "expected 'docID wordID count'");
    }
    if (d < 1 || w < 1 || d > header[0] || w > header[1]) {
      throw Error(ErrorKind::input, detail::where(src, lineno) + "index out of range (1-based)");
    }
    entries.push_back({static_cast<std::size_t>(w - 1), static_cast<std::size_t>(d - 1), c});
  }
  if (header.size() < 3) throw Error(ErrorKind::input, src + ": missing D/V/NNZ header");
  if (header[0] < 0 || header[1] < 0) throw Error(ErrorKind::input, src + ": negative dimensions");
  if (static_cast<long>(entries.size()) != header[2]) {
    throw Error(ErrorKind::input, src + ": header says " + std::to_string(header[2]) + " entries, found " +
                                      std::to_string(entries.size()));
  }
  return SparseCounts(static_cast<std::size_t>(header[1]), static_cast<std::size_t>(header[0]), std::move(entries));
}

inline SparseCounts read_docword(const fs::path& p) {
  auto in = open_in(p);
  return read_docword(in, p.string());
}

inline void write_docword(std::ostream& out, const SparseCounts& A) {
  out << A.cols() << '\n' << A.rows() << '\n' << A.entries().size() << '\n';
  for (const auto& e : A.entries()) out << e.doc + 1 << ' ' << e.word + 1 << ' ' << e.count << '\n';
}

inline void write_docword(const fs::path& p, const SparseCounts& A) {
  auto out = open_out(p);
  write_docword(out, A);
}

// ---- dense matrices --------------------------------------------------------

/// "# rows,cols" header line, then comma-separated rows at 17 significant digits.
inline void write_matrix_csv(std::ostream& out, const Matrix& m) {
  out << "# " << m.rows() << ',' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << fmt(m(i, j));
    }
    out << '\n';
  }
}

inline void write_matrix_csv(const fs::path& p, const Matrix& m) {
  auto out = open_out(p);
  write_matrix_csv(out, m);
}

inline Matrix read_matrix_csv(std::istream& in, const std::string& src = "<csv>") {
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::pair<Index, Index>> shape;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (!shape) {
        const auto parts = detail::split(detail::trim(line.substr(1)), ',');
        if (parts.size() == 2) {
          shape = {detail::parse_number<Index>(parts[0], detail::where(src, lineno)),
                   detail::parse_number<Index>(parts[1], detail::where(src, lineno))};
        }
      }
      continue;
    }
    std::vector<double> row;
    for (const auto& t : detail::split(line, ',')) row.push_back(detail::parse_number<double>(t, detail::where(src, lineno)));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorKind::input, detail::where(src, lineno) + "ragged row");
    }
    rows.push_back(std::move(row));
  }
  const Index r = static_cast<Index>(rows.size());
  const Index c = rows.empty() ? (shape ? shape->second : 0) : static_cast<Index>(rows.front().size());
  if (shape && (shape->first != r || shape->second != c)) {
    throw Error(ErrorKind::input, src + ": header declares " + std::to_string(shape->first) + "x" +
                                      std::to_string(shape->second) + ", found " + std::to_string(r) + "x" +
                                      std::to_string(c));
  }
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

inline Matrix read_matrix_csv(const fs::path& p) {
  auto in = open_in(p);
  return read_matrix_csv(in, p.string());
}

// ---- JSON parameter documents ----------------------------------------------

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline json to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorKind::input, what + " must be an array of rows");
  const Index r = static_cast<Index>(j.size());
  const Index c = r ? static_cast<Index>(j[0].size()) : 0;
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != c) throw Error(ErrorKind::input, what + " is ragged");
    for (Index k = 0; k < c; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

inline Vector vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorKind::input, what + " must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

inline json diagnostics_json(const ConeSolution& cone, const ConeDiagnostics& d, const Spectrum& s) {
  json out;
  out["delta_used"] = cone.delta_used;
  out["band_size"] = cone.band.size();
  out["probes"] = cone.probes;
  out["b"] = cone.hyperplane.b;
  out["duality_gap"] = cone.hyperplane.duality_gap;
  out["eta"] = d.eta;
  out["zeta"] = std::isfinite(d.zeta) ? json(d.zeta) : json(nullptr);
  out["kappa"] = d.kappa;
  out["lambda_K"] = d.lambda_K;
  out["spectral_residual"] = s.max_residual;
  out["spectrum"] = to_json(s.values);
  out["iterative"] = s.iterative;
  return out;
}

inline json network_json(const NetworkParams& p) {
  json j;
  j["theta"] = to_json(p.Theta);
  j["gamma"] = to_json(p.Gamma);
  j["b"] = to_json(p.B);
  j["rho"] = p.rho;
  j["p"] = p.p;
  if (p.Z_binary) j["z"] = to_json(Matrix(p.Z_binary->cast<double>()));
  return j;
}

inline json network_fit_json(const NetworkFit& f) {
  json j = network_json(f.params);
  j["corners"] = f.cone.corners;
  j["delta_used"] = f.cone.delta_used;
  j["diagnostics"] = diagnostics_json(f.cone, f.diagnostics, f.spectrum);
  j["warnings"] = f.warnings;
  return j;
}

inline json topic_fit_json(const TopicFit& f) {
  json j;
  j["t"] = to_json(f.T);
  j["corners"] = f.cone.corners;
  j["delta_used"] = f.cone.delta_used;
  j["diagnostics"] = diagnostics_json(f.cone, f.diagnostics, f.spectrum);
  j["warnings"] = f.warnings;
  return j;
}

inline json read_json(const fs::path& p) {
  auto in = open_in(p);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::input, p.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& p, const json& j) {
  auto out = open_out(p);
  out << j.dump(2) << '\n';
}

// ---- INI configuration -----------------------------------------------------

using Ini = boost::property_tree::ptree;

inline Ini read_ini(const fs::path& p) {
  if (!fs::exists(p)) throw Error(ErrorKind::input, "config " + p.string() + " not found");
  Ini t;
  try {
    boost::property_tree::read_ini(p.string(), t);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::input, std::string("config: ") + e.what());
  }
  return t;
}

namespace detail {

inline std::optional<std::string> get(const Ini& t, const std::string& key) {
  if (auto v = t.get_optional<std::string>(boost::property_tree::ptree::path_type(key, '.'))) {
    std::string s = trim(*v);
    const auto c = s.find_first_of(";#");
    if (c != std::string::npos) s = trim(s.substr(0, c));
    return s;
  }
  return std::nullopt;
}

template <class T>
std::optional<T> field(const Ini& t, const std::string& key) {
  const auto s = get(t, key);
  if (!s) return std::nullopt;
  return parse_number<T>(*s, "config field " + key + ": ");
}

inline std::vector<double> list_field(const Ini& t, const std::string& key) {
  std::vector<double> out;
  if (auto s = get(t, key)) {
    for (const auto& tok : split(*s, ',')) {
      if (!tok.empty()) out.push_back(parse_number<double>(tok, "config field " + key + ": "));
    }
  }
  return out;
}

inline bool bool_field(const Ini& t, const std::string& key, bool fallback) {
  const auto s = get(t, key);
  if (!s) return fallback;
  if (*s == "true" || *s == "1" || *s == "yes") return true;
  if (*s == "false" || *s == "0" || *s == "no") return false;
  throw Error(ErrorKind::input, "config field " + key + ": expected true/false, got '" + *s + "'");
}

inline void reject_unknown(const Ini& t, const std::string& section, const std::vector<std::string>& known) {
  const auto sec = t.get_child_optional(section);
  if (!sec) return;
  for (const auto& kv : *sec) {
    if (std::find(known.begin(), known.end(), kv.first) == known.end()) {
      throw Error(ErrorKind::input, "config field " + section + "." + kv.first + ": unknown key");
    }
  }
}

}  // namespace detail

inline NetworkModel parse_network_model(const std::string& s) {
  if (s == "dcmmsb") return NetworkModel::dcmmsb;
  if (s == "occam") return NetworkModel::occam;
  if (s == "sbmo") return NetworkModel::sbmo;
  throw Error(ErrorKind::input, "unknown network model '" + s + "' (dcmmsb|occam|sbmo)");
}

/// What a simulate config describes: one network or one topic corpus.
struct SimulationSpec {
  bool topics = false;
  NetworkConfig network;
  TopicConfig corpus;
};

inline const std::vector<std::string>& network_keys() {
  static const std::vector<std::string> k{"n", "k", "alpha", "b", "b_diag", "b_offdiag", "rho", "mean_degree",
                                          "gamma", "gamma_values", "gamma_beta", "overlap_fraction", "plant_pure"};
  return k;
}

inline const std::vector<std::string>& topic_keys() {
  static const std::vector<std::string> k{"v", "d", "n", "k", "anchors_per_topic", "anchor_mass",
                                          "word_concentration", "doc_concentration"};
  return k;
}

/**
 * @brief Simulation config from INI. [simulate] model = dcmmsb|occam|sbmo|topics
 *        and seed; parameters under [network] or [topics].
 */
inline SimulationSpec simulation_from_ini(const Ini& t) {
  using detail::field;
  detail::reject_unknown(t, "simulate", {"model", "seed"});
  SimulationSpec spec;
  const std::string model = detail::get(t, "simulate.model").value_or("dcmmsb");
  const std::uint64_t seed = field<std::uint64_t>(t, "simulate.seed").value_or(0);
  if (model == "topics" || model == "topic") {
    detail::reject_unknown(t, "topics", topic_keys());
    spec.topics = true;
    auto& c = spec.corpus;
    c.seed = seed;
    if (auto v = field<std::size_t>(t, "topics.v")) c.V = *v;
    if (auto v = field<std::size_t>(t, "topics.d")) c.D = *v;
    if (auto v = field<long>(t, "topics.n")) c.N = *v;
    if (auto v = field<Index>(t, "topics.k")) c.K = *v;
    if (auto v = field<int>(t, "topics.anchors_per_topic")) c.anchors_per_topic = *v;
    if (auto v = field<double>(t, "topics.anchor_mass")) c.anchor_mass = *v;
    if (auto v = field<double>(t, "topics.word_concentration")) c.word_concentration = *v;
    if (auto v = field<double>(t, "topics.doc_concentration")) c.doc_concentration = *v;
    return spec;
  }
  detail::reject_unknown(t, "network", network_keys());
  auto& c = spec.network;
  c.model = parse_network_model(model);
  if (c.model == NetworkModel::occam) c = occam_defaults(c);
  c.seed = seed;
  if (auto v = field<std::size_t>(t, "network.n")) c.n = *v;
  if (auto v = field<Index>(t, "network.k")) c.K = *v;
  c.alpha = detail::list_field(t, "network.alpha");
  if (auto v = field<double>(t, "network.b_diag")) c.b_diag = *v;
  if (auto v = field<double>(t, "network.b_offdiag")) c.b_offdiag = *v;
  const auto b = detail::list_field(t, "network.b");
  if (!b.empty()) {
    const auto k = static_cast<std::size_t>(c.K);
    if (b.size() != k * k) {
      throw Error(ErrorKind::input, "config field network.b: expected " + std::to_string(k * k) + " values (row-major)");
    }
    c.B = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(b.data(), c.K, c.K);
  }
  c.rho = field<double>(t, "network.rho");
  c.mean_degree = field<double>(t, "network.mean_degree");
  if (auto g = detail::get(t, "network.gamma")) {
    if (*g == "values") c.gamma.kind = GammaSpec::Kind::values;
    else if (*g == "beta") c.gamma.kind = GammaSpec::Kind::beta;
    else if (*g == "constant") c.gamma.kind = GammaSpec::Kind::constant;
    else throw Error(ErrorKind::input, "config field network.gamma: expected values|beta|constant");
  }
  const auto gv = detail::list_field(t, "network.gamma_values");
  if (!gv.empty()) c.gamma.values = gv;
  const auto gb = detail::list_field(t, "network.gamma_beta");
  if (!gb.empty()) {
    if (gb.size() != 2) throw Error(ErrorKind::input, "config field network.gamma_beta: expected 'a,b'");
    c.gamma.a = gb[0];
    c.gamma.b = gb[1];
  }
  if (auto v = field<double>(t, "network.overlap_fraction")) c.overlap_fraction = *v;
  c.plant_pure = detail::bool_field(t, "network.plant_pure", c.plant_pure);
  return spec;
}

inline json simulation_json(const SimulationSpec& s) {
  json j;
  if (s.topics) {
    const auto& c = s.corpus;
    j = {{"model", "topics"}, {"seed", c.seed}, {"V", c.V}, {"D", c.D}, {"N", c.N}, {"K", c.K},
         {"anchors_per_topic", c.anchors_per_topic}, {"anchor_mass", c.anchor_mass},
         {"word_concentration", c.word_concentration}, {"doc_concentration", c.doc_concentration}};
    return j;
  }
  const auto& c = s.network;
  j = {{"model", to_string(c.model)}, {"seed", c.seed}, {"n", c.n}, {"K", c.K},
       {"alpha", to_json(c.dirichlet_alpha())}, {"B", to_json(c.block_matrix())},
       {"overlap_fraction", c.overlap_fraction}, {"plant_pure", c.plant_pure}};
  j["rho"] = c.rho ? json(*c.rho) : json(nullptr);
  j["mean_degree"] = c.mean_degree ? json(*c.mean_degree) : json(nullptr);
  switch (c.gamma.kind) {
    case GammaSpec::Kind::values: j["gamma"] = {{"rule", "values"}, {"values", c.gamma.values}}; break;
    case GammaSpec::Kind::beta: j["gamma"] = {{"rule", "beta"}, {"a", c.gamma.a}, {"b", c.gamma.b}}; break;
    case GammaSpec::Kind::constant: j["gamma"] = {{"rule", "constant"}}; break;
  }
  return j;
}

}  // namespace conekit::io
