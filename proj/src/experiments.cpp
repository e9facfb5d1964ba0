#include "dbm/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "dbm/rng.hpp"

namespace dbm {

namespace {

using Clock = std::chrono::steady_clock;

struct Task {
  std::int64_t n;
  double a;
  double alpha;
  int replicate;
  std::size_t point;  // index of (n, a, alpha)
};

auto identity_tuple(const ExperimentRecord& r) {
  return std::make_tuple(r.n, r.a, r.b, r.alpha, static_cast<int>(r.method), r.replicate);
}

using Key = decltype(identity_tuple(std::declval<const ExperimentRecord&>()));

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
T parse_field(const std::string& s, const char* name) {
  T value{};
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw std::invalid_argument(std::string("bad CSV field '") + name + "': " + s);
  }
  return value;
}

std::string iso_time(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- config

SweepConfig SweepConfig::phase_defaults() {
  SweepConfig c;
  c.n_list = {1000};
  for (int a = 14; a <= 23; ++a) c.a_list.push_back(a);
  c.b = 10.0;
  c.alpha_list = {0.2, 0.4, 0.6, 0.8};
  c.methods = {Method::dbm, Method::dbm_iter, Method::sbm, Method::sbm_iter, Method::spectral, Method::data_only};
  c.replicates = 1000;
  return c;
}

SweepConfig SweepConfig::scaling_defaults() {
  SweepConfig c;
  c.n_list = {10, 100, 1000};
  c.b = 10.0;
  c.alpha_list = {0.3};
  c.a_list = {1.10 * threshold_erased(10.0, 0.3)};
  c.methods = {Method::dbm, Method::dbm_iter, Method::sbm, Method::sbm_iter};
  c.replicates = 1000;
  c.clip_edge_probabilities = true;
  return c;
}

void SweepConfig::validate() const {
  if (n_list.empty() || a_list.empty() || alpha_list.empty() || methods.empty()) {
    throw std::invalid_argument("SweepConfig: n, a, alpha and method lists must be nonempty");
  }
  if (replicates < 1) throw std::invalid_argument("SweepConfig: replicates must be >= 1");
  if (workers < 1) throw std::invalid_argument("SweepConfig: workers must be >= 1");
  for (auto n : n_list) {
    if (n < 2) throw std::invalid_argument("SweepConfig: every n must be >= 2");
  }
  for (double a : a_list) {
    if (!(a >= 0.0)) throw std::invalid_argument("SweepConfig: a must be >= 0");
  }
  if (!(b >= 0.0)) throw std::invalid_argument("SweepConfig: b must be >= 0");
  for (double al : alpha_list) {
    if (!(al >= 0.0)) throw std::invalid_argument("SweepConfig: alpha must be >= 0");
  }
  refine.validate();
}

std::uint64_t replicate_seed(std::uint64_t base_seed, std::int64_t n, double a, double b, double alpha, int replicate) {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(n));
  h = hash_combine(h, hash_double(a));
  h = hash_combine(h, hash_double(b));
  h = hash_combine(h, hash_double(alpha));
  h = hash_combine(h, static_cast<std::uint64_t>(replicate));
  return base_seed ^ h;
}

// ---------------------------------------------------------------- CSV

std::string format_number(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf, ptr);
}

std::string format_record(const ExperimentRecord& r) {
  std::string s;
  s += std::to_string(r.n) + ',' + format_number(r.a) + ',' + format_number(r.b) + ',' + format_number(r.alpha) + ',';
  s += std::string(method_name(r.method)) + ',' + std::to_string(r.replicate) + ',' + std::to_string(r.seed) + ',';
  s += format_number(r.error) + ',' + (r.exact ? "1" : "0") + ',' + format_number(r.runtime_seconds) + ',';
  s += std::to_string(r.iterations);
  return s;
}

ExperimentRecord parse_record(const std::string& line) {
  const auto f = split_csv(line);
  if (f.size() != 11) throw std::invalid_argument("CSV record must have 11 fields: " + line);
  ExperimentRecord r;
  r.n = parse_field<std::int64_t>(f[0], "n");
  r.a = parse_field<double>(f[1], "a");
  r.b = parse_field<double>(f[2], "b");
  r.alpha = parse_field<double>(f[3], "alpha");
  r.method = parse_method(f[4]);
  r.replicate = parse_field<int>(f[5], "replicate");
  r.seed = parse_field<std::uint64_t>(f[6], "seed");
  r.error = parse_field<double>(f[7], "error");
  const int exact = parse_field<int>(f[8], "exact");
  if (exact != 0 && exact != 1) throw std::invalid_argument("CSV field 'exact' must be 0 or 1");
  r.exact = exact == 1;
  r.runtime_seconds = parse_field<double>(f[9], "runtime_seconds");
  r.iterations = parse_field<int>(f[10], "iterations");
  return r;
}

std::vector<ExperimentRecord> read_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  if (line != kCsvHeader) throw std::invalid_argument("CSV header mismatch: " + line);
  std::vector<ExperimentRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_record(line));
  }
  return out;
}

std::vector<ExperimentRecord> read_records_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_records(in);
}

void write_records(std::ostream& out, const std::vector<ExperimentRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) out << format_record(r) << '\n';
}

void sort_records(std::vector<ExperimentRecord>& records) {
  std::sort(records.begin(), records.end(), [](const ExperimentRecord& x, const ExperimentRecord& y) {
    return std::make_tuple(x.n, x.a, x.alpha, x.b, static_cast<int>(x.method), x.replicate) <
           std::make_tuple(y.n, y.a, y.alpha, y.b, static_cast<int>(y.method), y.replicate);
  });
}

bool same_identity(const ExperimentRecord& x, const ExperimentRecord& y) {
  return identity_tuple(x) == identity_tuple(y);
}

std::string metadata_path(const std::string& output_path) { return output_path + ".meta.json"; }

std::string metadata_json(const SweepConfig& config, const std::string& kind,
                          std::chrono::system_clock::time_point start, std::chrono::system_clock::time_point end) {
  nlohmann::json j;
  j["software"] = "dbm-lab";
  j["version"] = kSoftwareVersion;
  j["kind"] = kind;
  j["start_time"] = iso_time(start);
  j["end_time"] = iso_time(end);
  nlohmann::json c;
  c["n_list"] = config.n_list;
  c["a_list"] = config.a_list;
  c["b"] = config.b;
  c["alpha_list"] = config.alpha_list;
  std::vector<std::string> methods;
  for (Method m : config.methods) methods.emplace_back(method_name(m));
  c["methods"] = methods;
  c["replicates"] = config.replicates;
  c["base_seed"] = config.base_seed;
  c["workers"] = config.workers;
  c["clip_edge_probabilities"] = config.clip_edge_probabilities;
  c["refine"] = {{"gamma", config.refine.gamma ? nlohmann::json(*config.refine.gamma) : nlohmann::json(nullptr)},
                 {"epsilon", config.refine.epsilon},
                 {"t_max", config.refine.t_max},
                 {"symmetry_delta", config.refine.symmetry_delta}};
  c["output_path"] = config.output_path;
  j["config"] = c;
  j["model"] = "P=(1/2,1/2), Q=[[a,b],[b,a]], erased labels P(erasure|x)=n^-alpha";
  j["seeding"] = "seed = base_seed XOR hash(n, a, b, alpha, replicate)";
  j["paired_samples"] = true;
  j["paired_samples_note"] = "all methods at a grid point and replicate share one sample";
  j["runtime_definition"] = "wall clock of one recover() call, sampling excluded";
  return j.dump(2);
}

// ---------------------------------------------------------------- sweeps

namespace {

std::vector<ExperimentRecord> sweep(const SweepConfig& config, const ProgressFn& progress, const char* kind) {
  config.validate();
  const auto wall_start = std::chrono::system_clock::now();

  std::vector<ExperimentRecord> existing;
  const bool to_file = !config.output_path.empty();
  if (to_file && std::filesystem::exists(config.output_path) && std::filesystem::file_size(config.output_path) > 0) {
    if (!config.resume) {
      throw OutputConflict("output file already exists: " + config.output_path + " (use resume)");
    }
    existing = read_records_file(config.output_path);
  }
  std::set<Key> done;
  for (const auto& r : existing) done.insert(identity_tuple(r));

  std::ofstream out;
  if (to_file) {
    const bool fresh = existing.empty();
    out.open(config.output_path, fresh ? std::ios::trunc : std::ios::app);
    if (!out) throw std::runtime_error("cannot open " + config.output_path + " for writing");
    if (fresh) out << kCsvHeader << '\n' << std::flush;
  }

  std::vector<Task> tasks;
  std::size_t points = 0;
  for (auto n : config.n_list) {
    for (double a : config.a_list) {
      for (double alpha : config.alpha_list) {
        for (int rep = 0; rep < config.replicates; ++rep) tasks.push_back({n, a, alpha, rep, points});
        ++points;
      }
    }
  }
  std::vector<int> remaining(points, config.replicates);
  std::size_t completed_points = 0;

  std::vector<ExperimentRecord> produced;
  std::mutex sink;
  std::exception_ptr failure;

  const auto task_count = static_cast<std::int64_t>(tasks.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(config.workers)
  for (std::int64_t ti = 0; ti < task_count; ++ti) {
    {
      std::lock_guard lock(sink);
      if (failure) continue;
    }
    try {
      const Task& task = tasks[static_cast<std::size_t>(ti)];
      std::vector<Method> todo;
      for (Method m : config.methods) {
        ExperimentRecord probe;
        probe.n = task.n;
        probe.a = task.a;
        probe.b = config.b;
        probe.alpha = task.alpha;
        probe.method = m;
        probe.replicate = task.replicate;
        if (!done.count(identity_tuple(probe))) todo.push_back(m);
      }

      std::vector<ExperimentRecord> local;
      if (!todo.empty()) {
        const std::uint64_t seed =
            replicate_seed(config.base_seed, task.n, task.a, config.b, task.alpha, task.replicate);
        const DbmParams params =
            DbmParams::symmetric_erased(task.n, task.a, config.b, task.alpha, config.clip_edge_probabilities);
        const DbmSample sample = sample_dbm(params, seed);
        for (Method m : todo) {
          const auto t0 = Clock::now();
          const RecoveryResult rec = recover(sample, params, m, config.refine, substream(seed, 77));
          const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
          const TrialOutcome outcome = flip_invariant_error(rec.assignment.labels, sample.labels, params.k());
          ExperimentRecord r;
          r.n = task.n;
          r.a = task.a;
          r.b = config.b;
          r.alpha = task.alpha;
          r.method = m;
          r.replicate = task.replicate;
          r.seed = seed;
          r.error = outcome.error;
          r.exact = outcome.exact;
          r.runtime_seconds = elapsed;
          r.iterations = rec.iterations;
          local.push_back(r);
        }
      }

      std::lock_guard lock(sink);
      for (const auto& r : local) {
        if (to_file) out << format_record(r) << '\n';
        produced.push_back(r);
      }
      if (to_file) out.flush();
      if (--remaining[task.point] == 0) {
        ++completed_points;
        if (progress) progress(GridPointDone{task.n, task.a, task.alpha, completed_points, points});
      }
    } catch (...) {
      std::lock_guard lock(sink);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<ExperimentRecord> all = std::move(existing);
  all.insert(all.end(), produced.begin(), produced.end());
  sort_records(all);

  if (to_file) {
    out.close();
    // Rewrite in canonical order; rename keeps the file whole if we die here.
    const std::string tmp = config.output_path + ".tmp";
    {
      std::ofstream sorted(tmp, std::ios::trunc);
      write_records(sorted, all);
      if (!sorted) throw std::runtime_error("failed writing " + tmp);
    }
    std::filesystem::rename(tmp, config.output_path);
    std::ofstream meta(metadata_path(config.output_path), std::ios::trunc);
    meta << metadata_json(config, kind, wall_start, std::chrono::system_clock::now()) << '\n';
  }
  return all;
}

}  // namespace

std::vector<ExperimentRecord> run_sweep(const SweepConfig& config, const ProgressFn& progress) {
  return sweep(config, progress, "sweep");
}

std::vector<ExperimentRecord> run_phase_diagram(const SweepConfig& config, const ProgressFn& progress) {
  return sweep(config, progress, "phase");
}

std::vector<ExperimentRecord> run_scaling(const SweepConfig& config, const ProgressFn& progress) {
  SweepConfig c = config;
  // Small n puts (log n / n) Q above 1; those probabilities saturate at 1.
  c.clip_edge_probabilities = true;
  return sweep(c, progress, "scaling");
}

// ---------------------------------------------------------------- summaries

std::vector<GroupSummary> summarize(const std::vector<ExperimentRecord>& records) {
  using GroupKey = std::tuple<std::int64_t, double, double, int>;
  std::map<GroupKey, std::vector<const ExperimentRecord*>> groups;
  for (const auto& r : records) groups[{r.n, r.a, r.alpha, static_cast<int>(r.method)}].push_back(&r);

  std::vector<GroupSummary> out;
  for (const auto& [key, rows] : groups) {
    std::vector<double> errors;
    std::vector<std::uint8_t> exact;
    double iters = 0.0, runtime = 0.0;
    for (const auto* r : rows) {
      errors.push_back(r->error);
      exact.push_back(r->exact ? 1 : 0);
      iters += r->iterations;
      runtime += r->runtime_seconds;
    }
    GroupSummary g{std::get<0>(key), std::get<1>(key), std::get<2>(key), static_cast<Method>(std::get<3>(key)),
                   aggregate(errors, exact)};
    g.mean_iterations = iters / static_cast<double>(rows.size());
    g.mean_runtime = runtime / static_cast<double>(rows.size());
    out.push_back(g);
  }
  return out;
}

std::optional<double> CrossingTable::at(Method m, double alpha) const {
  const auto mi = std::find(methods.begin(), methods.end(), m);
  const auto ai = std::find(alphas.begin(), alphas.end(), alpha);
  if (mi == methods.end() || ai == alphas.end()) return std::nullopt;
  return entries[static_cast<std::size_t>(mi - methods.begin()) * alphas.size() +
                 static_cast<std::size_t>(ai - alphas.begin())];
}

CrossingTable crossing_table(const std::vector<ExperimentRecord>& records, double level) {
  CrossingTable table;
  table.level = level;
  std::set<int> methods;
  std::set<double> alphas;
  for (const auto& r : records) {
    methods.insert(static_cast<int>(r.method));
    alphas.insert(r.alpha);
  }
  for (int m : methods) table.methods.push_back(static_cast<Method>(m));
  table.alphas.assign(alphas.begin(), alphas.end());
  table.entries.assign(table.methods.size() * table.alphas.size(), std::nullopt);

  for (const auto& g : summarize(records)) {
    if (g.summary.erp < level) continue;
    const auto mi = static_cast<std::size_t>(
        std::find(table.methods.begin(), table.methods.end(), g.method) - table.methods.begin());
    const auto ai = static_cast<std::size_t>(
        std::find(table.alphas.begin(), table.alphas.end(), g.alpha) - table.alphas.begin());
    auto& cell = table.entries[mi * table.alphas.size() + ai];
    if (!cell || g.a < *cell) cell = g.a;
  }
  return table;
}

std::string format_crossing_table(const CrossingTable& table) {
  std::ostringstream os;
  os << "method";
  for (double al : table.alphas) os << ",alpha=" << format_number(al);
  os << '\n';
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    os << method_name(table.methods[m]);
    for (std::size_t j = 0; j < table.alphas.size(); ++j) {
      const auto& e = table.entries[m * table.alphas.size() + j];
      os << ',' << (e ? format_number(*e) : std::string("--"));
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace dbm
