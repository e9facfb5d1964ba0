// dbm-lab: divergence calculators, one-shot sample-and-recover, and the
// Monte Carlo experiment runners.
//
// Exit codes: 0 ok, 1 I/O or internal failure, 2 bad command line,
// 3 numeric domain error, 4 output file conflict.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dbm/divergences.hpp"
#include "dbm/experiments.hpp"
#include "dbm/metrics.hpp"
#include "dbm/model.hpp"
#include "dbm/recovery.hpp"
#include "dbm/rng.hpp"

namespace {

constexpr int kExitIo = 1;
constexpr int kExitParse = 2;
constexpr int kExitDomain = 3;
constexpr int kExitConflict = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(',', pos), text.size());
    const std::string tok = text.substr(pos, end - pos);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw UsageError(std::string(what) + ": not a comma-separated list of numbers: '" + text + "'");
    }
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

std::string fmt(double x) { return dbm::format_number(x); }

// ---- model flags shared by `divergence --rate` and `recover`

struct ModelFlags {
  std::int64_t n = 1000;
  std::size_t k = 2;
  std::string prior;  // empty: uniform
  std::string q;      // empty: a on the diagonal, b elsewhere
  double a = 20.0;
  double b = 10.0;
  double alpha = 0.3;
  std::string channel;  // empty: erased:alpha
  bool clip = false;
};

void add_model_flags(CLI::App* app, ModelFlags& m, bool with_ab) {
  app->add_option("--n", m.n, "number of vertices")->capture_default_str();
  app->add_option("--k", m.k, "number of communities")->capture_default_str();
  app->add_option("--prior", m.prior, "community prior p_1,...,p_k (default uniform)");
  app->add_option("--q", m.q, "connectivity matrix Q, row-major comma-separated k*k values (edge prob = Q log n / n)");
  if (with_ab) {
    app->add_option("--a", m.a, "within-community Q entry, used when --q is absent")->capture_default_str();
    app->add_option("--b", m.b, "across-community Q entry, used when --q is absent")->capture_default_str();
    app->add_option("--alpha", m.alpha, "erasure exponent: label hidden with prob n^-alpha (used when --channel is absent)")
        ->capture_default_str();
  }
  app->add_option("--channel", m.channel, "attribute channel: erased:ALPHA | noisy:ALPHA | file:PATH (JSON)");
  app->add_flag("--clip", m.clip, "clip edge probabilities above 1 instead of rejecting them");
}

dbm::ChannelSpec channel_from_json(const std::string& path, std::int64_t n, std::size_t k) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open channel file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("channel file " + path + ": " + e.what());
  }
  try {
    if (j.is_object() && j.contains("exponents")) {
      const auto rows = j.at("exponents").get<std::vector<std::vector<double>>>();
      if (rows.empty()) throw std::invalid_argument("channel file: empty exponent table");
      dbm::ExponentTable d(rows.size(), rows.front().size());
      for (std::size_t u = 0; u < rows.size(); ++u) {
        if (rows[u].size() != d.communities) throw std::invalid_argument("channel file: ragged exponent table");
        for (std::size_t x = 0; x < d.communities; ++x) d(u, x) = rows[u][x];
      }
      return dbm::ChannelSpec::exponent_family(d, n);
    }
    const auto& cols_json = j.is_object() ? j.at("columns") : j;
    auto columns = cols_json.get<std::vector<std::vector<double>>>();
    std::optional<int> erasure;
    if (j.is_object() && j.contains("erasure_symbol")) erasure = j.at("erasure_symbol").get<int>();
    if (columns.size() != k) throw std::invalid_argument("channel file: expected one column per community");
    return dbm::ChannelSpec(std::move(columns), erasure);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("channel file " + path + ": " + e.what());
  }
}

dbm::ChannelSpec parse_channel(const std::string& spec, std::int64_t n, std::size_t k) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw UsageError("--channel must look like erased:ALPHA, noisy:ALPHA or file:PATH");
  const std::string kind = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);
  if (kind == "file") return channel_from_json(arg, n, k);
  const auto values = parse_list(arg, "--channel");
  if (values.size() != 1) throw UsageError("--channel " + kind + " takes a single exponent");
  if (kind == "erased") return dbm::ChannelSpec::erased(values[0], n, k);
  if (kind == "noisy") return dbm::ChannelSpec::noisy(values[0], n, k);
  throw UsageError("unknown channel kind '" + kind + "'");
}

dbm::DbmParams build_params(const ModelFlags& m) {
  if (m.k < 1) throw std::invalid_argument("--k must be >= 1");
  std::vector<double> prior = m.prior.empty() ? std::vector<double>(m.k, 1.0 / static_cast<double>(m.k))
                                              : parse_list(m.prior, "--prior");
  if (prior.size() != m.k) throw UsageError("--prior needs exactly k values");
  std::vector<double> q;
  if (m.q.empty()) {
    q.assign(m.k * m.k, m.b);
    for (std::size_t i = 0; i < m.k; ++i) q[i * m.k + i] = m.a;
  } else {
    q = parse_list(m.q, "--q");
    if (q.size() != m.k * m.k) throw UsageError("--q needs exactly k*k values");
  }
  const std::string channel = m.channel.empty() ? "erased:" + fmt(m.alpha) : m.channel;
  return dbm::DbmParams(m.n, std::move(prior), std::move(q), parse_channel(channel, m.n, m.k), m.clip);
}

// ---- divergence

struct DivergenceFlags {
  std::vector<std::string> ch, chernoff, tv, ct;
  bool rate = false;
  std::string threshold;
  ModelFlags model;
};

int cmd_divergence(const DivergenceFlags& f) {
  const int modes = !f.ch.empty() + !f.chernoff.empty() + !f.tv.empty() + !f.ct.empty() + f.rate + !f.threshold.empty();
  if (modes != 1) throw UsageError("divergence: give exactly one of --ch, --chernoff, --tv, --ct, --rate, --threshold");

  if (!f.ch.empty()) {
    const dbm::MeanVector a(parse_list(f.ch[0], "--ch"));
    const dbm::MeanVector b(parse_list(f.ch[1], "--ch"));
    std::cout << fmt(dbm::ch_divergence(a, b)) << '\n';
  } else if (!f.chernoff.empty()) {
    const dbm::Pmf p(parse_list(f.chernoff[0], "--chernoff"));
    const dbm::Pmf q(parse_list(f.chernoff[1], "--chernoff"));
    std::cout << fmt(dbm::chernoff_information(p, q)) << '\n';
  } else if (!f.tv.empty()) {
    const dbm::Pmf p(parse_list(f.tv[0], "--tv"));
    const dbm::Pmf q(parse_list(f.tv[1], "--tv"));
    std::cout << fmt(dbm::tv_distance(p, q)) << '\n';
  } else if (!f.ct.empty()) {
    const dbm::Pmf p1(parse_list(f.ct[0], "--ct"));
    const dbm::Pmf q1(parse_list(f.ct[1], "--ct"));
    const dbm::Pmf p2(parse_list(f.ct[2], "--ct"));
    const dbm::Pmf q2(parse_list(f.ct[3], "--ct"));
    std::cout << fmt(dbm::ct_divergence(p1, q1, p2, q2)) << '\n';
  } else if (f.rate) {
    const dbm::DbmParams params = build_params(f.model);
    const std::size_t k = params.k();
    if (k < 2) throw std::invalid_argument("--rate needs k >= 2");
    const auto d = dbm::separation_matrix(params);
    double worst = dbm::kInfinity;
    for (std::size_t s = 0; s < k; ++s) {
      for (std::size_t t = 0; t < k; ++t) {
        std::cout << (t ? "," : "") << fmt(d[s * k + t]);
        if (s != t) worst = std::min(worst, d[s * k + t]);
      }
      std::cout << '\n';
    }
    std::cout << (worst > 1.0 ? "PASS" : "FAIL") << " min=" << fmt(worst) << '\n';
  } else {
    if (f.threshold != "erased") throw UsageError("--threshold supports only 'erased'");
    std::cout << "dbm," << fmt(dbm::threshold_erased(f.model.b, f.model.alpha)) << '\n';
    std::cout << "sbm," << fmt(dbm::threshold_sbm(f.model.b)) << '\n';
  }
  return 0;
}

// ---- recover

struct RecoverFlags {
  ModelFlags model;
  std::string method = "dbm_iter";
  std::uint64_t seed = 1;
  std::optional<double> gamma;
  double epsilon = 1e-3;
  int t_max = 5;
  double delta = 0.01;
  std::string out;
  std::string dump;
};

int cmd_recover(const RecoverFlags& f) {
  const dbm::Method method = dbm::parse_method(f.method);
  const dbm::DbmParams params = build_params(f.model);
  dbm::RefineConfig cfg;
  cfg.gamma = f.gamma;
  cfg.epsilon = f.epsilon;
  cfg.t_max = f.t_max;
  cfg.symmetry_delta = f.delta;
  cfg.validate();

  const dbm::DbmSample sample = dbm::sample_dbm(params, f.seed);
  const dbm::RecoveryResult rec = dbm::recover(sample, params, method, cfg, dbm::substream(f.seed, 77));
  const dbm::TrialOutcome outcome = dbm::flip_invariant_error(rec.assignment.labels, sample.labels, params.k());

  if (!f.out.empty()) {
    std::ofstream out(f.out);
    if (!out) throw std::runtime_error("cannot open " + f.out);
    for (dbm::Label l : rec.assignment.labels) out << l + 1 << '\n';
  }
  if (!f.dump.empty()) {
    std::ofstream edges(f.dump + ".edges");
    std::ofstream nodes(f.dump + ".nodes.csv");
    if (!edges || !nodes) throw std::runtime_error("cannot write sample dump " + f.dump);
    dbm::write_edge_list(edges, sample.graph);
    dbm::write_node_table(nodes, sample);
  }
  std::cout << "error,exact,iterations\n";
  std::cout << fmt(outcome.error) << ',' << (outcome.exact ? "true" : "false") << ',' << rec.iterations << '\n';
  return 0;
}

// ---- experiment

struct ExperimentFlags {
  std::string kind = "phase";
  std::string out;
  int workers = 1;
  bool resume = false;
  std::vector<std::int64_t> n;
  std::vector<double> a;
  std::optional<double> b;
  std::vector<double> alpha;
  std::vector<std::string> methods;
  std::optional<int> replicates;
  std::uint64_t seed = 20250101;
  std::optional<double> gamma;
  double epsilon = 1e-3;
  int t_max = 5;
  double delta = 0.01;
  double level = 0.95;
};

int cmd_experiment(const ExperimentFlags& f) {
  dbm::SweepConfig cfg;
  if (f.kind == "phase") {
    cfg = dbm::SweepConfig::phase_defaults();
  } else if (f.kind == "scaling") {
    cfg = dbm::SweepConfig::scaling_defaults();
  } else {
    throw UsageError("--kind must be phase or scaling");
  }
  if (!f.n.empty()) cfg.n_list = f.n;
  if (!f.a.empty()) cfg.a_list = f.a;
  if (f.b) cfg.b = *f.b;
  if (!f.alpha.empty()) cfg.alpha_list = f.alpha;
  if (!f.methods.empty()) {
    cfg.methods.clear();
    for (const auto& m : f.methods) cfg.methods.push_back(dbm::parse_method(m));
  }
  if (f.replicates) cfg.replicates = *f.replicates;
  cfg.base_seed = f.seed;
  cfg.refine.gamma = f.gamma;
  cfg.refine.epsilon = f.epsilon;
  cfg.refine.t_max = f.t_max;
  cfg.refine.symmetry_delta = f.delta;
  cfg.output_path = f.out;
  cfg.workers = f.workers;
  cfg.resume = f.resume;

  const auto progress = [](const dbm::GridPointDone& p) {
    std::cerr << "[" << p.completed_points << "/" << p.total_points << "] n=" << p.n << " a=" << fmt(p.a)
              << " alpha=" << fmt(p.alpha) << " done\n";
  };
  const auto records = f.kind == "phase" ? dbm::run_phase_diagram(cfg, progress) : dbm::run_scaling(cfg, progress);

  if (f.kind == "phase") {
    std::cout << dbm::format_crossing_table(dbm::crossing_table(records, f.level));
  } else {
    std::cout << "n,method,trials,erp,mean_error\n";
    for (const auto& g : dbm::summarize(records)) {
      std::cout << g.n << ',' << dbm::method_name(g.method) << ',' << g.summary.trials << ',' << fmt(g.summary.erp)
                << ',' << fmt(g.summary.mean_error) << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data block model toolkit: divergences, recovery, experiments"};
  app.require_subcommand(1);
  // Config keys live in a section named after the subcommand, e.g. [experiment].
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file of flag values in a [subcommand] section; command-line flags win");
  app.allow_config_extras(false);

  DivergenceFlags div;
  auto* d = app.add_subcommand("divergence", "divergences, separation rates and thresholds");
  d->add_option("--ch", div.ch, "CH divergence of two mean vectors A B (comma-separated)")->expected(2);
  d->add_option("--chernoff", div.chernoff, "Chernoff information of two pmfs P Q")->expected(2);
  d->add_option("--tv", div.tv, "total variation distance of two pmfs P Q")->expected(2);
  d->add_option("--ct", div.ct, "Chernoff-TV divergence of pmf pairs P1 Q1 P2 Q2")->expected(4);
  d->add_flag("--rate", div.rate, "separation-rate matrix D_st of the model flags; PASS when every D_st > 1");
  d->add_option("--threshold", div.threshold, "closed-form thresholds for a channel family (erased); uses --b --alpha");
  add_model_flags(d, div.model, true);

  RecoverFlags rec;
  auto* r = app.add_subcommand("recover", "sample one instance and run a recovery method");
  add_model_flags(r, rec.model, true);
  r->add_option("--method", rec.method, "dbm | dbm_iter | sbm | sbm_iter | spectral | data_only")->capture_default_str();
  r->add_option("--seed", rec.seed, "sampling seed")->capture_default_str();
  r->add_option("--gamma", rec.gamma, "edge-split fraction in (0,1) (default: no split)");
  r->add_option("--epsilon", rec.epsilon, "stop when fewer than this fraction of labels change")->capture_default_str();
  r->add_option("--t-max", rec.t_max, "maximum MAP sweeps")->capture_default_str();
  r->add_option("--delta", rec.delta, "symmetry tolerance")->capture_default_str();
  r->add_option("--out", rec.out, "write estimated labels (1-based) one per line to this file");
  r->add_option("--dump-sample", rec.dump, "write PREFIX.edges and PREFIX.nodes.csv");

  ExperimentFlags ex;
  auto* e = app.add_subcommand("experiment", "Monte Carlo sweeps writing CSV records plus a .meta.json sidecar");
  e->add_option("--kind", ex.kind, "phase | scaling")->capture_default_str();
  e->add_option("--out", ex.out, "output CSV path")->required();
  e->add_option("--workers", ex.workers, "worker threads")->capture_default_str();
  e->add_flag("--resume", ex.resume, "skip records already present in --out");
  e->add_option("--n", ex.n, "vertex counts (phase: 1000; scaling: 10 100 1000)")->delimiter(',');
  e->add_option("--a", ex.a, "within-community Q values (phase: 14..23; scaling: 1.10 x DBM threshold)")->delimiter(',');
  e->add_option("--b", ex.b, "across-community Q value (default 10)");
  e->add_option("--alpha", ex.alpha, "erasure exponents (phase: 0.2 0.4 0.6 0.8; scaling: 0.3)")->delimiter(',');
  e->add_option("--methods", ex.methods, "methods to run (phase: all six; scaling: dbm dbm_iter sbm sbm_iter)")
      ->delimiter(',');
  e->add_option("--replicates", ex.replicates, "replicates M per grid point (default 1000)");
  e->add_option("--seed", ex.seed, "base seed")->capture_default_str();
  e->add_option("--gamma", ex.gamma, "edge-split fraction in (0,1) (default: no split)");
  e->add_option("--epsilon", ex.epsilon, "MAP stopping fraction")->capture_default_str();
  e->add_option("--t-max", ex.t_max, "maximum MAP sweeps")->capture_default_str();
  e->add_option("--delta", ex.delta, "symmetry tolerance")->capture_default_str();
  e->add_option("--level", ex.level, "ERP level of the crossing table")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitParse;
  }

  try {
    if (d->parsed()) return cmd_divergence(div);
    if (r->parsed()) return cmd_recover(rec);
    return cmd_experiment(ex);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitParse;
  } catch (const dbm::OutputConflict& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitConflict;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitIo;
  }
}
