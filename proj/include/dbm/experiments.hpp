#pragma once

// Monte Carlo sweeps over the symmetric two-community erased-label model:
// the (a, alpha) phase diagram and the finite-size scaling in n. Records
// stream to an append-only CSV keyed by (n, a, b, alpha, method, replicate)
// so an interrupted run can resume.

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dbm/metrics.hpp"
#include "dbm/recovery.hpp"

namespace dbm {

inline constexpr const char* kSoftwareVersion = "0.3.1";

struct SweepConfig {
  std::vector<std::int64_t> n_list;
  std::vector<double> a_list;
  double b = 10.0;
  std::vector<double> alpha_list;
  std::vector<Method> methods;
  int replicates = 1;
  std::uint64_t base_seed = 20250101;
  RefineConfig refine;  // mode and side-info flag are set per method
  std::string output_path;  // empty: keep records in memory only
  int workers = 1;
  bool resume = false;
  bool clip_edge_probabilities = false;

  /// n = 1000, b = 10, a in 14..23, alpha in {0.2, 0.4, 0.6, 0.8}, all methods.
  static SweepConfig phase_defaults();
  /// (b, alpha) = (10, 0.3), a = 1.10 * threshold_erased(10, 0.3),
  /// n in {10, 100, 1000}, the four MAP methods, clipped edge probabilities.
  static SweepConfig scaling_defaults();

  void validate() const;
};

struct ExperimentRecord {
  std::int64_t n = 0;
  double a = 0.0;
  double b = 0.0;
  double alpha = 0.0;
  Method method = Method::dbm;
  int replicate = 0;
  std::uint64_t seed = 0;
  double error = 0.0;
  bool exact = false;
  double runtime_seconds = 0.0;
  int iterations = 0;
};

/// Thrown when the output file already holds records and resume is off.
class OutputConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// seed = base_seed XOR hash(n, a, b, alpha, replicate). Shared by all
/// methods at a grid point (paired design).
std::uint64_t replicate_seed(std::uint64_t base_seed, std::int64_t n, double a, double b, double alpha, int replicate);

struct GridPointDone {
  std::int64_t n;
  double a;
  double alpha;
  std::size_t completed_points;
  std::size_t total_points;
};
using ProgressFn = std::function<void(const GridPointDone&)>;

/// Runs every (n, a, alpha, replicate) task and every method on it.
/// Returns all records (including resumed ones) in canonical order.
std::vector<ExperimentRecord> run_sweep(const SweepConfig& config, const ProgressFn& progress = {});
std::vector<ExperimentRecord> run_phase_diagram(const SweepConfig& config, const ProgressFn& progress = {});
std::vector<ExperimentRecord> run_scaling(const SweepConfig& config, const ProgressFn& progress = {});

// ---- CSV / metadata

inline constexpr const char* kCsvHeader = "n,a,b,alpha,method,replicate,seed,error,exact,runtime_seconds,iterations";

std::string format_number(double x);
std::string format_record(const ExperimentRecord& r);
/// Parses one CSV data line; throws std::invalid_argument on malformed input.
ExperimentRecord parse_record(const std::string& line);
/// Reads a CSV written by run_sweep (header required).
std::vector<ExperimentRecord> read_records(std::istream& in);
std::vector<ExperimentRecord> read_records_file(const std::string& path);
void write_records(std::ostream& out, const std::vector<ExperimentRecord>& records);
void sort_records(std::vector<ExperimentRecord>& records);
/// Identity columns compare equal (runtime excluded).
bool same_identity(const ExperimentRecord& x, const ExperimentRecord& y);

std::string metadata_path(const std::string& output_path);
std::string metadata_json(const SweepConfig& config, const std::string& kind,
                          std::chrono::system_clock::time_point start, std::chrono::system_clock::time_point end);

// ---- summaries

struct GroupSummary {
  std::int64_t n;
  double a;
  double alpha;
  Method method;
  Summary summary;
  double mean_iterations = 0.0;
  double mean_runtime = 0.0;
};

/// Aggregates records per (n, a, alpha, method), canonical order.
std::vector<GroupSummary> summarize(const std::vector<ExperimentRecord>& records);

struct CrossingTable {
  double level = 0.95;
  std::vector<Method> methods;
  std::vector<double> alphas;
  /// entries[m * alphas.size() + j]: smallest a with ERP >= level, if any.
  std::vector<std::optional<double>> entries;

  std::optional<double> at(Method m, double alpha) const;
};

/// Smallest grid a whose ERP reaches `level`, per (method, alpha). Records
/// are expected to come from a single n.
CrossingTable crossing_table(const std::vector<ExperimentRecord>& records, double level);
/// Plain-text table; "--" marks a level never reached.
std::string format_crossing_table(const CrossingTable& table);

}  // namespace dbm
