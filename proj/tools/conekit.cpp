// conekit: simulate, fit, evaluate and sweep from the command line.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "conekit/io.hpp"
#include "conekit/metrics.hpp"
#include "conekit/models.hpp"
#include "conekit/simulators.hpp"

using namespace conekit;
namespace fs = std::filesystem;
using io::json;

namespace {

#ifndef CONEKIT_VERSION
#define CONEKIT_VERSION "dev"
#endif

using Clock = std::chrono::steady_clock;

struct Globals {
  std::optional<int> threads;
  std::vector<std::string> argv;
};

int resolve_threads(const Globals& g) {
  if (g.threads) {
    if (*g.threads < 1) throw Error(ErrorKind::input, "--threads must be at least 1");
    return *g.threads;
  }
  if (const char* env = std::getenv("CONEKIT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw Error(ErrorKind::input, std::string("CONEKIT_THREADS must be a positive integer, got '") + env + "'");
    }
    return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

json manifest(const std::string& command, const Globals& g, json config, std::uint64_t seed, double seconds,
              const std::vector<fs::path>& outputs, json diagnostics = json::object()) {
  json m;
  m["command"] = command;
  m["argv"] = g.argv;
  m["config"] = std::move(config);
  m["seed"] = seed;
  m["version"] = CONEKIT_VERSION;
  m["wall_time_s"] = seconds;
  json outs = json::array();
  for (const auto& p : outputs) outs.push_back(p.generic_string());
  m["outputs"] = outs;
  m["diagnostics"] = std::move(diagnostics);
  return m;
}

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---- simulate --------------------------------------------------------------

std::vector<fs::path> write_network_dataset(const SimulatedNetwork& sim, const fs::path& out) {
  std::vector<fs::path> files{out / "edges.tsv", out / "truth" / "params.json", out / "truth" / "theta.csv",
                              out / "truth" / "gamma.csv", out / "truth" / "b.csv"};
  io::write_edge_list(files[0], sim.A);
  io::write_json(files[1], io::network_json(sim.truth));
  io::write_matrix_csv(files[2], sim.truth.Theta);
  io::write_matrix_csv(files[3], Matrix(sim.truth.Gamma));
  io::write_matrix_csv(files[4], sim.truth.B);
  if (sim.truth.Z_binary) {
    files.push_back(out / "truth" / "z.csv");
    io::write_matrix_csv(files.back(), Matrix(sim.truth.Z_binary->cast<double>()));
  }
  return files;
}

std::vector<fs::path> write_topic_dataset(const SimulatedCorpus& c, const fs::path& out) {
  std::vector<fs::path> files{out / "docword.txt", out / "truth" / "params.json", out / "truth" / "t.csv",
                              out / "truth" / "h.csv"};
  io::write_docword(files[0], c.A);
  json j;
  j["t"] = io::to_json(c.truth.T);
  j["h"] = io::to_json(c.truth.H);
  j["n"] = c.truth.N;
  io::write_json(files[1], j);
  io::write_matrix_csv(files[2], c.truth.T);
  io::write_matrix_csv(files[3], c.truth.H);
  return files;
}

int cmd_simulate(const Globals& g, const fs::path& config, const fs::path& out) {
  const auto t0 = Clock::now();
  const auto spec = io::simulation_from_ini(io::read_ini(config));
  std::vector<fs::path> files;
  json diag = json::object();
  std::uint64_t seed = 0;
  if (spec.topics) {
    const auto c = gen_topics(spec.corpus);
    files = write_topic_dataset(c, out);
    seed = spec.corpus.seed;
    diag["tokens"] = static_cast<double>(spec.corpus.N) * static_cast<double>(spec.corpus.D);
  } else {
    const auto sim = simulate_network(spec.network);
    files = write_network_dataset(sim, out);
    seed = spec.network.seed;
    diag["edges"] = sim.A.edge_count();
    diag["isolated_nodes"] = sim.A.isolated_nodes().size();
    diag["expected_edges"] = sim.population.expected_edges();
    diag["rho"] = sim.truth.rho;
  }
  io::write_json(out / "manifest.json",
                 manifest("simulate", g, io::simulation_json(spec), seed, since(t0), files, diag));
  std::cout << "wrote " << files.size() << " files to " << out.generic_string() << "\n";
  return 0;
}

// ---- fit -------------------------------------------------------------------

struct FitArgs {
  std::string model = "dcmmsb";
  Index k = 0;
  std::uint64_t seed = 0;
  bool population = false;
  std::optional<double> delta;
  std::string format = "csv";
  std::string eig_order = "algebraic";
  bool drop_isolated = false;
};

fs::path dataset_file(const fs::path& dataset, bool topic, bool population) {
  if (!fs::exists(dataset)) throw Error(ErrorKind::input, "dataset " + dataset.string() + " not found");
  if (!fs::is_directory(dataset)) return dataset;
  const fs::path f = population ? dataset / "truth" / "params.json" : dataset / (topic ? "docword.txt" : "edges.tsv");
  if (!fs::exists(f)) throw Error(ErrorKind::input, "dataset directory lacks " + f.filename().string());
  return f;
}

Matrix network_population(const json& truth) {
  for (const char* key : {"theta", "gamma", "b"}) {
    if (!truth.contains(key)) throw Error(ErrorKind::input, std::string("truth parameters lack '") + key + "'");
  }
  const Matrix Theta = io::matrix_from_json(truth["theta"], "theta");
  const Vector Gamma = io::vector_from_json(truth["gamma"], "gamma");
  const Matrix B = io::matrix_from_json(truth["b"], "b");
  const double rho = truth.value("rho", 1.0);
  const Matrix G = Gamma.asDiagonal() * Theta;
  return rho * G * B * G.transpose();
}

FitOptions fit_options(const FitArgs& a) {
  FitOptions opt;
  opt.delta = a.delta;
  opt.cone.seed = a.seed;
  opt.eig.seed = a.seed;
  if (a.eig_order == "magnitude") opt.eig.order = EigenOrder::magnitude;
  else if (a.eig_order == "algebraic") opt.eig.order = EigenOrder::algebraic;
  else throw Error(ErrorKind::input, "--eig-order must be algebraic or magnitude");
  return opt;
}

void write_index_list(const fs::path& p, const std::vector<std::size_t>& idx) {
  Matrix m(static_cast<Index>(idx.size()), 1);
  for (std::size_t i = 0; i < idx.size(); ++i) m(static_cast<Index>(i), 0) = static_cast<double>(idx[i]);
  io::write_matrix_csv(p, m);
}

int cmd_fit(const Globals& g, const fs::path& dataset, const fs::path& out, const FitArgs& a) {
  const auto t0 = Clock::now();
  const bool topic = a.model == "topic" || a.model == "topics";
  if (!topic && a.model != "dcmmsb" && a.model != "occam" && a.model != "sbmo") {
    throw Error(ErrorKind::input, "--model must be dcmmsb, occam, sbmo or topic");
  }
  if (a.k < 1) throw Error(ErrorKind::input, "--k is required and must be positive");
  if (a.format != "csv" && a.format != "json") throw Error(ErrorKind::input, "--format must be csv or json");
  const FitOptions opt = fit_options(a);
  const fs::path src = dataset_file(dataset, topic, a.population);
  std::vector<fs::path> files;
  std::optional<std::vector<std::size_t>> kept;
  json doc;
  json diag;

  if (topic) {
    TopicFit fit;
    if (a.population) {
      const json truth = io::read_json(src);
      if (!truth.contains("t") || !truth.contains("h")) throw Error(ErrorKind::input, "truth parameters lack 't'/'h'");
      const Matrix T = io::matrix_from_json(truth["t"], "t");
      const Matrix H = io::matrix_from_json(truth["h"], "h");
      const Matrix TH = T * H;
      fit = fit_topics_population(TH * TH.transpose(), a.k, opt);
    } else {
      SparseCounts A = io::read_docword(src);
      if (a.drop_isolated) {
        auto [reduced, ids] = remove_empty_words(A);
        A = std::move(reduced);
        kept = std::move(ids);
      }
      fit = fit_topics(A, a.k, a.seed, opt);
    }
    doc = io::topic_fit_json(fit);
    diag = doc["diagnostics"];
    if (a.format == "json") {
      files.push_back(out / "params.json");
      io::write_json(files.back(), doc);
    } else {
      files.push_back(out / "t.csv");
      io::write_matrix_csv(files.back(), fit.T);
    }
  } else {
    const int p = a.model == "occam" ? 2 : 1;
    NetworkFit fit;
    if (a.population) {
      const Matrix P = network_population(io::read_json(src));
      fit = a.model == "sbmo" ? fit_sbmo(P, a.k, opt) : fit_dcmmsb(P, a.k, p, opt);
    } else {
      SparseSymAdjacency A = io::read_edge_list(src);
      if (a.drop_isolated) {
        auto [sub, ids] = remove_isolated_nodes(A);
        A = std::move(sub);
        kept = std::move(ids);
      }
      fit = a.model == "sbmo" ? fit_sbmo(A, a.k, opt) : fit_dcmmsb(A, a.k, p, opt);
    }
    doc = io::network_fit_json(fit);
    diag = doc["diagnostics"];
    diag["warnings"] = fit.warnings;
    if (a.format == "json") {
      files.push_back(out / "params.json");
      io::write_json(files.back(), doc);
    } else {
      files.push_back(out / "theta.csv");
      io::write_matrix_csv(files.back(), fit.params.Theta);
      files.push_back(out / "gamma.csv");
      io::write_matrix_csv(files.back(), Matrix(fit.params.Gamma));
      files.push_back(out / "b.csv");
      io::write_matrix_csv(files.back(), fit.params.B);
      if (fit.params.Z_binary) {
        files.push_back(out / "z.csv");
        io::write_matrix_csv(files.back(), Matrix(fit.params.Z_binary->cast<double>()));
      }
    }
  }
  if (a.format == "csv") {
    std::vector<std::size_t> corners = doc["corners"].get<std::vector<std::size_t>>();
    files.push_back(out / "corners.csv");
    write_index_list(files.back(), corners);
  }
  if (kept) {
    files.push_back(out / "kept.csv");
    write_index_list(files.back(), *kept);
  }
  diag["delta_used"] = doc["delta_used"];
  json config = {{"dataset", src.generic_string()}, {"model", a.model}, {"k", a.k}, {"population", a.population},
                 {"format", a.format}, {"eig_order", a.eig_order}, {"drop_isolated", a.drop_isolated}};
  config["delta"] = a.delta ? json(*a.delta) : json("auto");
  io::write_json(out / "manifest.json", manifest("fit", g, config, a.seed, since(t0), files, diag));
  std::cout << "fit " << a.model << " K=" << a.k << " delta_used=" << io::fmt(doc["delta_used"].get<double>())
            << " -> " << out.generic_string() << "\n";
  return 0;
}

// ---- evaluate --------------------------------------------------------------

struct LoadedParams {
  std::optional<Matrix> theta;
  std::optional<Matrix> t;
  std::optional<std::vector<std::size_t>> kept;
};

LoadedParams load_params(const fs::path& where) {
  if (!fs::exists(where)) throw Error(ErrorKind::input, where.string() + " not found");
  LoadedParams out;
  auto from_json = [&](const fs::path& f) {
    const json j = io::read_json(f);
    if (j.contains("theta")) out.theta = io::matrix_from_json(j["theta"], "theta");
    if (j.contains("t")) out.t = io::matrix_from_json(j["t"], "t");
  };
  if (!fs::is_directory(where)) {
    if (where.extension() == ".json") from_json(where);
    else out.theta = io::read_matrix_csv(where);
    return out;
  }
  if (fs::exists(where / "params.json")) {
    from_json(where / "params.json");
  } else if (fs::exists(where / "theta.csv")) {
    out.theta = io::read_matrix_csv(where / "theta.csv");
  } else if (fs::exists(where / "t.csv")) {
    out.t = io::read_matrix_csv(where / "t.csv");
  } else if (fs::exists(where / "truth")) {
    return load_params(where / "truth");
  }
  if (fs::exists(where / "kept.csv")) {
    const Matrix k = io::read_matrix_csv(where / "kept.csv");
    std::vector<std::size_t> ids;
    for (Index i = 0; i < k.rows(); ++i) ids.push_back(static_cast<std::size_t>(k(i, 0)));
    out.kept = std::move(ids);
  }
  if (!out.theta && !out.t) throw Error(ErrorKind::input, where.string() + " holds no theta or t parameters");
  return out;
}

json evaluate(const LoadedParams& truth, const LoadedParams& est) {
  json r;
  auto perm_json = [](const std::vector<int>& p) { return json(p); };
  if (truth.theta && est.theta) {
    Matrix T = *truth.theta;
    if (est.kept) T = select_rows(T, *est.kept);
    const Matrix& E = *est.theta;
    if (T.rows() != E.rows() || T.cols() != E.cols()) {
      throw Error(ErrorKind::dimension, "theta shapes differ: truth " + std::to_string(T.rows()) + "x" +
                                            std::to_string(T.cols()) + ", estimate " + std::to_string(E.rows()) +
                                            "x" + std::to_string(E.cols()));
    }
    r["kind"] = "network";
    r["n"] = T.rows();
    r["K"] = T.cols();
    r["rel_error_l1"] = rel_error(T, E, ErrorNorm::l1);
    r["rel_error_l2"] = rel_error(T, E, ErrorNorm::l2);
    r["rc_avg"] = rc_avg(T, E);
    r["permutation_l1"] = perm_json(perm_match(T, E, MatchLoss::l1).permutation);
    r["permutation_rc"] = perm_json(perm_match(T, E, MatchLoss::neg_spearman).permutation);
    return r;
  }
  if (truth.t && est.t) {
    Matrix T = *truth.t;
    if (est.kept) T = select_rows(T, *est.kept);
    const Matrix& E = *est.t;
    if (T.rows() != E.rows() || T.cols() != E.cols()) throw Error(ErrorKind::dimension, "topic matrix shapes differ");
    r["kind"] = "topics";
    r["V"] = T.rows();
    r["K"] = T.cols();
    r["l1_topic_error"] = l1_topic_error(T, E);
    r["permutation_l1"] = perm_json(perm_match(T, E, MatchLoss::l1).permutation);
    return r;
  }
  throw Error(ErrorKind::input, "truth and estimate hold different parameter kinds");
}

void print_report(const json& r, const std::string& format, std::ostream& out) {
  if (format == "json") {
    out << r.dump(2) << "\n";
    return;
  }
  out << "metric,value\n";
  for (const auto& [k, v] : r.items()) {
    if (k == "manifest") continue;
    if (v.is_number_float()) out << k << ',' << io::fmt(v.get<double>()) << '\n';
    else if (v.is_array()) {
      out << k << ',';
      for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i].get<int>();
      out << '\n';
    } else out << k << ',' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
  }
}

int cmd_evaluate(const Globals& g, const fs::path& truth, const fs::path& est, const std::string& format,
                 const std::optional<fs::path>& out_path) {
  const auto t0 = Clock::now();
  if (format != "csv" && format != "json") throw Error(ErrorKind::input, "--format must be csv or json");
  json r = evaluate(load_params(truth), load_params(est));
  if (out_path) {
    auto out = io::open_out(*out_path);
    print_report(r, format, out);
    json cfg = {{"truth", truth.generic_string()}, {"estimate", est.generic_string()}, {"format", format}};
    fs::path mpath = *out_path;
    mpath += ".manifest.json";
    io::write_json(mpath, manifest("evaluate", g, cfg, 0, since(t0), {*out_path}));
  } else {
    print_report(r, format, std::cout);
  }
  return 0;
}

// ---- sweep -----------------------------------------------------------------

struct SweepSpec {
  std::string variable;
  std::vector<double> grid;
  int reps = 1;
  std::uint64_t seed = 0;
  std::string fit_model;
  Index k = 0;
  bool drop_isolated = true;
  std::optional<double> delta;
  io::Ini base;
  bool topics = false;
};

SweepSpec sweep_from_ini(const io::Ini& t) {
  using io::detail::field;
  io::detail::reject_unknown(t, "sweep", {"variable", "grid", "reps", "seed", "fit_model", "k", "drop_isolated", "delta"});
  SweepSpec s;
  s.base = t;
  s.variable = io::detail::get(t, "sweep.variable").value_or("");
  if (s.variable.empty()) throw Error(ErrorKind::input, "config field sweep.variable: required");
  s.grid = io::detail::list_field(t, "sweep.grid");
  s.reps = field<int>(t, "sweep.reps").value_or(1);
  if (s.reps < 0) throw Error(ErrorKind::input, "config field sweep.reps: must be non-negative");
  if (s.grid.empty() || s.reps == 0) throw Error(ErrorKind::input, "empty sweep grid (no settings or reps = 0)");
  s.seed = field<std::uint64_t>(t, "sweep.seed").value_or(0);
  s.drop_isolated = io::detail::bool_field(t, "sweep.drop_isolated", true);
  s.delta = field<double>(t, "sweep.delta");
  const auto probe = io::simulation_from_ini(t);
  s.topics = probe.topics;
  s.fit_model = io::detail::get(t, "sweep.fit_model").value_or(s.topics ? "topic" : to_string(probe.network.model));
  s.k = field<Index>(t, "sweep.k").value_or(s.topics ? probe.corpus.K : probe.network.K);
  const auto& keys = s.topics ? io::topic_keys() : io::network_keys();
  if (std::find(keys.begin(), keys.end(), s.variable) == keys.end()) {
    throw Error(ErrorKind::input, "config field sweep.variable: '" + s.variable + "' is not a " +
                                      (s.topics ? "[topics]" : "[network]") + " key");
  }
  return s;
}

struct SweepRow {
  double value = 0.0;
  std::uint64_t seed = 0;
  std::string status = "ok";
  int exit_code = 0;
  double rel_l1 = NAN, rel_l2 = NAN, rc = NAN, topic_l1 = NAN, delta_used = NAN;
};

SweepRow run_replicate(const SweepSpec& s, double value, std::uint64_t seed) {
  SweepRow row;
  row.value = value;
  row.seed = seed;
  try {
    io::Ini cfg = s.base;
    cfg.put(boost::property_tree::ptree::path_type(std::string(s.topics ? "topics." : "network.") + s.variable, '.'),
            io::fmt(value));
    cfg.put(boost::property_tree::ptree::path_type("simulate.seed", '.'), std::to_string(seed));
    const auto spec = io::simulation_from_ini(cfg);
    FitOptions opt;
    opt.delta = s.delta;
    opt.cone.seed = seed;
    opt.eig.seed = seed;
    if (s.topics) {
      const auto corpus = gen_topics(spec.corpus);
      SparseCounts A = corpus.A;
      Matrix T = corpus.truth.T;
      if (s.drop_isolated) {
        auto [reduced, kept] = remove_empty_words(A);
        A = std::move(reduced);
        T = select_rows(T, kept);
      }
      const auto fit = fit_topics(A, s.k, seed, opt);
      row.topic_l1 = l1_topic_error(T, fit.T);
      row.delta_used = fit.cone.delta_used;
    } else {
      const auto sim = simulate_network(spec.network);
      SparseSymAdjacency A = sim.A;
      Matrix Theta = sim.truth.Theta;
      if (s.drop_isolated) {
        auto [sub, kept] = remove_isolated_nodes(A);
        A = std::move(sub);
        Theta = select_rows(Theta, kept);
      }
      const int p = s.fit_model == "occam" ? 2 : 1;
      const auto fit = fit_dcmmsb(A, s.k, p, opt);
      row.rel_l1 = rel_error(Theta, fit.params.Theta, ErrorNorm::l1);
      row.rel_l2 = rel_error(Theta, fit.params.Theta, ErrorNorm::l2);
      row.rc = rc_avg(Theta, fit.params.Theta);
      row.delta_used = fit.cone.delta_used;
    }
  } catch (const Error& e) {
    row.status = to_string(e.kind());
    row.exit_code = e.exit_code();
  }
  return row;
}

std::string num(double x) { return std::isnan(x) ? std::string() : io::fmt(x); }

void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  mean = NAN;
  sd = NAN;
  if (xs.empty()) return;
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
}

int cmd_sweep(const Globals& g, const fs::path& spec_path, const fs::path& out, const std::string& format) {
  const auto t0 = Clock::now();
  if (format != "csv" && format != "json") throw Error(ErrorKind::input, "--format must be csv or json");
  const SweepSpec s = sweep_from_ini(io::read_ini(spec_path));
  const int threads = resolve_threads(g);

  const std::size_t jobs = s.grid.size() * static_cast<std::size_t>(s.reps);
  std::vector<SweepRow> rows(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const std::size_t setting = j / static_cast<std::size_t>(s.reps);
      const std::size_t rep = j % static_cast<std::size_t>(s.reps);
      rows[j] = run_replicate(s, s.grid[setting], s.seed + rep);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min<int>(threads, static_cast<int>(jobs)); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const std::vector<std::string> metrics = s.topics ? std::vector<std::string>{"l1_topic_error"}
                                                    : std::vector<std::string>{"rel_error_l1", "rel_error_l2", "rc_avg"};
  auto metric_values = [&](const SweepRow& r) {
    return s.topics ? std::vector<double>{r.topic_l1} : std::vector<double>{r.rel_l1, r.rel_l2, r.rc};
  };

  json runs = json::array(), agg = json::array();
  std::ostringstream runs_csv, agg_csv;
  runs_csv << "setting," << s.variable << ",seed,status,exit_code";
  for (const auto& m : metrics) runs_csv << ',' << m;
  runs_csv << ",delta_used\n";
  for (std::size_t j = 0; j < jobs; ++j) {
    const auto& r = rows[j];
    const auto vals = metric_values(r);
    runs_csv << j / static_cast<std::size_t>(s.reps) << ',' << io::fmt(r.value) << ',' << r.seed << ',' << r.status
             << ',' << r.exit_code;
    json jr = {{"setting", j / static_cast<std::size_t>(s.reps)}, {s.variable, r.value}, {"seed", r.seed},
               {"status", r.status}, {"exit_code", r.exit_code}};
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      runs_csv << ',' << num(vals[m]);
      jr[metrics[m]] = std::isnan(vals[m]) ? json(nullptr) : json(vals[m]);
    }
    runs_csv << ',' << num(r.delta_used) << '\n';
    runs.push_back(jr);
  }

  agg_csv << "setting," << s.variable << ",runs,ok";
  for (const auto& m : metrics) agg_csv << ',' << m << "_mean," << m << "_std";
  agg_csv << '\n';
  int failures = 0;
  for (std::size_t st = 0; st < s.grid.size(); ++st) {
    std::vector<std::vector<double>> vals(metrics.size());
    int ok = 0;
    for (int rep = 0; rep < s.reps; ++rep) {
      const auto& r = rows[st * static_cast<std::size_t>(s.reps) + static_cast<std::size_t>(rep)];
      if (r.exit_code != 0) {
        ++failures;
        continue;
      }
      ++ok;
      const auto v = metric_values(r);
      for (std::size_t m = 0; m < metrics.size(); ++m) vals[m].push_back(v[m]);
    }
    agg_csv << st << ',' << io::fmt(s.grid[st]) << ',' << s.reps << ',' << ok;
    json ja = {{"setting", st}, {s.variable, s.grid[st]}, {"runs", s.reps}, {"ok", ok}};
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      double mean = NAN, sd = NAN;
      mean_std(vals[m], mean, sd);
      agg_csv << ',' << num(mean) << ',' << num(sd);
      ja[metrics[m] + "_mean"] = std::isnan(mean) ? json(nullptr) : json(mean);
      ja[metrics[m] + "_std"] = std::isnan(sd) ? json(nullptr) : json(sd);
    }
    agg_csv << '\n';
    agg.push_back(ja);
  }

  std::vector<fs::path> files;
  if (format == "csv") {
    files = {out / "runs.csv", out / "aggregate.csv"};
    io::open_out(files[0]) << runs_csv.str();
    io::open_out(files[1]) << agg_csv.str();
  } else {
    files = {out / "runs.json", out / "aggregate.json"};
    io::write_json(files[0], runs);
    io::write_json(files[1], agg);
  }
  json cfg = {{"variable", s.variable}, {"grid", s.grid}, {"reps", s.reps}, {"fit_model", s.fit_model}, {"k", s.k},
              {"drop_isolated", s.drop_isolated}, {"base", io::simulation_json(io::simulation_from_ini(s.base))}};
  json diag = {{"threads", threads}, {"failed_runs", failures}};
  io::write_json(out / "manifest.json", manifest("sweep", g, cfg, s.seed, since(t0), files, diag));
  std::cout << "sweep: " << jobs << " runs (" << failures << " failed) over " << s.grid.size() << " settings -> "
            << out.generic_string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conekit: SVM-cone estimation for mixed-membership networks and topic models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CONEKIT_VERSION);
  Globals g;
  g.argv.assign(argv, argv + argc);
  app.add_option("--threads", g.threads, "worker threads for sweep (default: CONEKIT_THREADS, then all cores)");

  std::string sim_config, sim_out;
  auto* sim = app.add_subcommand("simulate", "generate a network or corpus from an INI config");
  sim->add_option("config", sim_config, "INI config")->required();
  sim->add_option("outdir", sim_out, "output directory")->required();

  FitArgs fa;
  std::string fit_data, fit_out;
  auto* fit = app.add_subcommand("fit", "estimate model parameters from a dataset");
  fit->add_option("dataset", fit_data, "dataset directory or file")->required();
  fit->add_option("outdir", fit_out, "output directory")->required();
  fit->add_option("--model", fa.model, "dcmmsb | occam | sbmo | topic")->capture_default_str();
  fit->add_option("--k", fa.k, "number of communities / topics")->required();
  fit->add_option("--seed", fa.seed, "seed for k-means, Lanczos start and document splitting");
  fit->add_flag("--population", fa.population, "fit the population matrix built from truth/params.json");
  fit->add_option("--delta", fa.delta, "fixed band width (default: adaptive search)");
  fit->add_option("--format", fa.format, "csv | json")->capture_default_str();
  fit->add_option("--eig-order", fa.eig_order, "algebraic | magnitude eigenvalue selection")->capture_default_str();
  fit->add_flag("--drop-isolated", fa.drop_isolated,
                "remove isolated nodes / never-occurring words first; writes kept.csv");

  std::string ev_truth, ev_est, ev_format = "json", ev_out;
  auto* ev = app.add_subcommand("evaluate", "compare estimated parameters against truth");
  ev->add_option("truth", ev_truth, "truth directory or file")->required();
  ev->add_option("estimate", ev_est, "estimate directory or file")->required();
  ev->add_option("--format", ev_format, "csv | json")->capture_default_str();
  ev->add_option("--out", ev_out, "write the report here instead of stdout");

  std::string sw_spec, sw_out, sw_format = "csv";
  auto* sw = app.add_subcommand("sweep", "simulate, fit and evaluate over a parameter grid");
  sw->add_option("spec", sw_spec, "sweep INI")->required();
  sw->add_option("outdir", sw_out, "output directory")->required();
  sw->add_option("--format", sw_format, "csv | json")->capture_default_str();
  for (auto* sub : {sim, fit, ev, sw}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*sim) return cmd_simulate(g, sim_config, sim_out);
    if (*fit) return cmd_fit(g, fit_data, fit_out, fa);
    if (*ev) return cmd_evaluate(g, ev_truth, ev_est, ev_format, ev_out.empty() ? std::nullopt : std::optional<fs::path>(ev_out));
    if (*sw) return cmd_sweep(g, sw_spec, sw_out, sw_format);
  } catch (const Error& e) {
    std::cerr << "conekit: " << e.what() << "\n";
    if (!e.indices().empty()) std::cerr << "  entities: " << detail::join_indices(e.indices(), 50) << "\n";
    if (e.residual() > 0.0) std::cerr << "  residual: " << io::fmt(e.residual()) << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "conekit: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
