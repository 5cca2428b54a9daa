#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "c4v/dataset.hpp"
#include "c4v/mlp.hpp"
#include "c4v/tree.hpp"

namespace c4v {

/// One measurement row; the unit all experiments emit.
struct ExperimentRecord {
  std::string experiment;
  std::string learner;
  std::uint64_t seed = 0;
  std::optional<int> chosen_digit;
  // Split index for sequential experiments; the N_max value for the sweep.
  int split_index = 0;
  std::string metric = "accuracy";
  double value = 0.0;
};

using RecordSink = std::function<void(const ExperimentRecord&)>;

inline constexpr const char* kCsvHeader =
    "experiment,learner,seed,chosen_digit,split_index,metric,value";

std::string to_csv_row(const ExperimentRecord& record);
std::string to_jsonl_row(const ExperimentRecord& record);
std::vector<ExperimentRecord> read_records_csv(std::istream& in);

/// Fraction of `test` instances whose predicted label matches, at one
/// expansion budget.
double cobweb_accuracy(const Tree& tree, std::span<const Instance> test,
                       int n_max);
/// One best-first pass per instance serving every budget (ascending).
std::vector<double> cobweb_accuracy_at(const Tree& tree,
                                       std::span<const Instance> test,
                                       std::span<const int> n_max_values);
double mlp_accuracy(const MlpModel& model, std::span<const Instance> test);

/// Which split indices of a sequential run get a full evaluation: a list of
/// (stride, until) segments, e.g. {{1,100},{100,6000}} evaluates after every
/// split up to 100 and then every 100th. The final split always evaluates.
struct EvalSchedule {
  std::vector<std::pair<int, int>> segments{{1, 100}, {100, 1 << 30}};
  bool should_eval(int split_index, int total_splits) const;
};

/// Parses "1:100,100:6000" into an EvalSchedule.
EvalSchedule parse_eval_schedule(const std::string& text);

struct Exp1Options {
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> learners;  // "cobweb", "fc"
  EvalSchedule schedule;
  int n_max = kDefaultNmax;
  double sigma_floor = kDefaultSigmaFloor;
  std::size_t max_splits = 0;  // 0 = all
  int jobs = 1;
};

struct Exp2Options {
  std::vector<int> digits;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> learners;  // "cobweb", "fc", "fc-replay"
  int n_max = kDefaultNmax;
  double sigma_floor = kDefaultSigmaFloor;
  int jobs = 1;
};

struct SweepOptions {
  std::vector<int> n_max_values;
  std::vector<std::uint64_t> seeds;
  double sigma_floor = kDefaultSigmaFloor;
  std::size_t train_limit = 0;  // 0 = full training set
};

void run_nmax_sweep(const Dataset& train, const Dataset& test,
                    const SweepOptions& options, const RecordSink& sink);
void run_exp1(const Dataset& train, const Dataset& test,
              const Exp1Options& options, const RecordSink& sink);
void run_exp2(const Dataset& train, const Dataset& test,
              const Exp2Options& options, const RecordSink& sink);

/// Per-group mean / sd / 95% CI over seeds (and digits, when present).
struct SummaryRow {
  std::string experiment;
  std::string learner;
  int split_index = 0;
  std::string metric;
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;
  double ci95 = 0.0;
};

std::vector<SummaryRow> summarize(std::span<const ExperimentRecord> records);

}  // namespace c4v
