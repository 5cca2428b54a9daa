#include "c4v/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "c4v/learner.hpp"
#include "c4v/predictor.hpp"

namespace c4v {

std::string to_csv_row(const ExperimentRecord& r) {
  std::ostringstream out;
  out.precision(12);
  out << r.experiment << ',' << r.learner << ',' << r.seed << ',';
  if (r.chosen_digit) out << *r.chosen_digit;
  out << ',' << r.split_index << ',' << r.metric << ',' << r.value;
  return out.str();
}

std::string to_jsonl_row(const ExperimentRecord& r) {
  nlohmann::json j;
  j["experiment"] = r.experiment;
  j["learner"] = r.learner;
  j["seed"] = r.seed;
  if (r.chosen_digit)
    j["chosen_digit"] = *r.chosen_digit;
  else
    j["chosen_digit"] = nullptr;
  j["split_index"] = r.split_index;
  j["metric"] = r.metric;
  j["value"] = r.value;
  return j.dump();
}

std::vector<ExperimentRecord> read_records_csv(std::istream& in) {
  std::vector<ExperimentRecord> records;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line == kCsvHeader) continue;  // header row is optional
    }
    std::istringstream row(line);
    std::string field;
    ExperimentRecord r;
    std::getline(row, r.experiment, ',');
    std::getline(row, r.learner, ',');
    std::getline(row, field, ',');
    r.seed = std::stoull(field);
    std::getline(row, field, ',');
    if (!field.empty()) r.chosen_digit = std::stoi(field);
    std::getline(row, field, ',');
    r.split_index = std::stoi(field);
    std::getline(row, r.metric, ',');
    std::getline(row, field, ',');
    r.value = std::stod(field);
    records.push_back(std::move(r));
  }
  return records;
}

double cobweb_accuracy(const Tree& tree, std::span<const Instance> test,
                       int n_max) {
  const int budgets[] = {n_max};
  return cobweb_accuracy_at(tree, test, budgets).front();
}

std::vector<double> cobweb_accuracy_at(const Tree& tree,
                                       std::span<const Instance> test,
                                       std::span<const int> n_max_values) {
  std::vector<std::size_t> hits(n_max_values.size(), 0);
  for (const Instance& inst : test) {
    const auto labels = predict_labels_at(tree, inst, n_max_values);
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (inst.label && labels[i] == *inst.label) ++hits[i];
  }
  std::vector<double> acc(n_max_values.size());
  for (std::size_t i = 0; i < acc.size(); ++i)
    acc[i] = static_cast<double>(hits[i]) / static_cast<double>(test.size());
  return acc;
}

double mlp_accuracy(const MlpModel& model, std::span<const Instance> test) {
  std::size_t hits = 0;
  for (const Instance& inst : test)
    if (inst.label && mlp_predict(model, inst) == *inst.label) ++hits;
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

bool EvalSchedule::should_eval(int split_index, int total_splits) const {
  if (split_index == total_splits) return true;
  for (const auto& [stride, until] : segments) {
    if (split_index <= until)
      return stride > 0 && split_index % stride == 0;
  }
  return false;
}

EvalSchedule parse_eval_schedule(const std::string& text) {
  EvalSchedule schedule;
  schedule.segments.clear();
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("eval schedule: expected stride:until, got " +
                                  part);
    schedule.segments.emplace_back(std::stoi(part.substr(0, colon)),
                                   std::stoi(part.substr(colon + 1)));
  }
  if (schedule.segments.empty())
    throw std::invalid_argument("eval schedule: empty specification");
  return schedule;
}

namespace {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  // splitmix64 step over master ^ stream
  std::uint64_t z = (master ^ stream) + 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Tree fit_cobweb(std::span<const Instance> stream, double sigma_floor,
                Eigen::Index dim, std::uint64_t seed) {
  TreeConfig config;
  config.sigma_floor = sigma_floor;
  config.seed = seed;
  Tree tree(dim, config);
  for (const Instance& inst : stream) ifit(tree, inst);
  return tree;
}

// Runs independent experiment cells on up to `jobs` worker threads.
void run_pool(std::vector<std::function<void()>> cells, int jobs) {
  if (jobs <= 1) {
    for (auto& cell : cells) cell();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  const int count = std::min<int>(jobs, static_cast<int>(cells.size()));
  for (int w = 0; w < count; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < cells.size();
           i = next.fetch_add(1))
        cells[i]();
    });
  }
  for (auto& worker : workers) worker.join();
}

RecordSink locked_sink(const RecordSink& sink, std::mutex& mutex) {
  return [&sink, &mutex](const ExperimentRecord& record) {
    std::scoped_lock lock(mutex);
    sink(record);
  };
}

}  // namespace

void run_nmax_sweep(const Dataset& train, const Dataset& test,
                    const SweepOptions& options, const RecordSink& sink) {
  std::vector<int> budgets = options.n_max_values;
  std::sort(budgets.begin(), budgets.end());
  for (std::uint64_t seed : options.seeds) {
    std::vector<Instance> stream = train.images;
    Rng rng(seed);
    seeded_shuffle(stream, rng);
    if (options.train_limit > 0 && stream.size() > options.train_limit)
      stream.resize(options.train_limit);
    const Tree tree =
        fit_cobweb(stream, options.sigma_floor, train.dim(), seed);
    const auto acc = cobweb_accuracy_at(tree, test.images, budgets);
    for (std::size_t i = 0; i < budgets.size(); ++i)
      sink({"sweep", "cobweb", seed, std::nullopt, budgets[i], "accuracy",
            acc[i]});
  }
}

namespace {

void run_exp1_cell(const Dataset& train, const Dataset& test,
                   const Exp1Options& options, std::uint64_t seed,
                   const std::string& learner, const RecordSink& sink) {
  auto splits = make_exp1_splits(train, seed);
  if (options.max_splits > 0 && splits.size() > options.max_splits)
    splits.resize(options.max_splits);
  const int total = static_cast<int>(splits.size());

  if (learner == "cobweb") {
    TreeConfig config;
    config.sigma_floor = options.sigma_floor;
    config.seed = seed;
    Tree tree(train.dim(), config);
    for (int i = 0; i < total; ++i) {
      for (const Instance& inst : splits[static_cast<std::size_t>(i)])
        ifit(tree, inst);
      if (options.schedule.should_eval(i + 1, total))
        sink({"exp1", "cobweb", seed, std::nullopt, i + 1, "accuracy",
              cobweb_accuracy(tree, test.images, options.n_max)});
    }
  } else {
    MlpModel model(train.dim(), 128, kNumLabels, derive_seed(seed, 0x11));
    MlpHyper hyper;
    hyper.batch_size = 5;  // splits of 10 give 2 batches per epoch
    for (int i = 0; i < total; ++i) {
      train_on_split(model, splits[static_cast<std::size_t>(i)], hyper,
                     derive_seed(seed, 0x100 + static_cast<std::uint64_t>(i)));
      if (options.schedule.should_eval(i + 1, total))
        sink({"exp1", "fc", seed, std::nullopt, i + 1, "accuracy",
              mlp_accuracy(model, test.images)});
    }
  }
}

void run_exp2_cell(const Dataset& train,
                   std::span<const Instance> chosen_test,
                   const Exp2Options& options, int digit, std::uint64_t seed,
                   const std::string& learner, const RecordSink& sink) {
  const auto splits = make_exp2_splits(train, digit, seed);
  const int total = static_cast<int>(splits.size());

  if (learner == "cobweb") {
    TreeConfig config;
    config.sigma_floor = options.sigma_floor;
    config.seed = seed;
    Tree tree(train.dim(), config);
    for (int i = 0; i < total; ++i) {
      for (const Instance& inst : splits[static_cast<std::size_t>(i)])
        ifit(tree, inst);
      sink({"exp2", "cobweb", seed, digit, i + 1, "accuracy",
            cobweb_accuracy(tree, chosen_test, options.n_max)});
    }
  } else {
    MlpModel model(train.dim(), 128, kNumLabels, derive_seed(seed, 0x22));
    MlpHyper hyper;  // batch size 64 outside Experiment 1
    ReplayBuffer buffer;
    for (int i = 0; i < total; ++i) {
      const auto& split = splits[static_cast<std::size_t>(i)];
      const std::uint64_t step_seed =
          derive_seed(seed, 0x200 + static_cast<std::uint64_t>(i));
      if (learner == "fc-replay")
        train_with_replay(model, buffer, split, hyper, step_seed);
      else
        train_on_split(model, split, hyper, step_seed);
      sink({"exp2", learner, seed, digit, i + 1, "accuracy",
            mlp_accuracy(model, chosen_test)});
    }
  }
}

}  // namespace

void run_exp1(const Dataset& train, const Dataset& test,
              const Exp1Options& options, const RecordSink& sink) {
  std::mutex sink_mutex;
  const RecordSink emit =
      options.jobs > 1 ? locked_sink(sink, sink_mutex) : sink;
  std::vector<std::function<void()>> cells;
  for (std::uint64_t seed : options.seeds) {
    for (const std::string& learner : options.learners) {
      if (learner != "cobweb" && learner != "fc")
        throw std::invalid_argument("exp1: unknown learner " + learner);
      cells.push_back([&train, &test, &options, seed, learner, &emit] {
        run_exp1_cell(train, test, options, seed, learner, emit);
      });
    }
  }
  run_pool(std::move(cells), options.jobs);
}

void run_exp2(const Dataset& train, const Dataset& test,
              const Exp2Options& options, const RecordSink& sink) {
  std::mutex sink_mutex;
  const RecordSink emit =
      options.jobs > 1 ? locked_sink(sink, sink_mutex) : sink;

  auto chosen_test = std::make_shared<
      std::map<int, std::vector<Instance>>>();
  for (int digit : options.digits) {
    auto& subset = (*chosen_test)[digit];
    for (const Instance& inst : test.images)
      if (inst.label && *inst.label == digit) subset.push_back(inst);
  }

  std::vector<std::function<void()>> cells;
  for (int digit : options.digits) {
    for (std::uint64_t seed : options.seeds) {
      for (const std::string& learner : options.learners) {
        if (learner != "cobweb" && learner != "fc" &&
            learner != "fc-replay")
          throw std::invalid_argument("exp2: unknown learner " + learner);
        cells.push_back([&train, &options, chosen_test, digit, seed, learner,
                         &emit] {
          run_exp2_cell(train, chosen_test->at(digit), options, digit, seed,
                        learner, emit);
        });
      }
    }
  }
  run_pool(std::move(cells), options.jobs);
}


std::vector<SummaryRow> summarize(std::span<const ExperimentRecord> records) {
  std::map<std::tuple<std::string, std::string, int, std::string>,
           std::vector<double>>
      groups;
  for (const ExperimentRecord& r : records)
    groups[{r.experiment, r.learner, r.split_index, r.metric}].push_back(
        r.value);

  std::vector<SummaryRow> rows;
  for (const auto& [key, values] : groups) {
    SummaryRow row;
    std::tie(row.experiment, row.learner, row.split_index, row.metric) = key;
    row.count = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    row.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - row.mean) * (v - row.mean);
      row.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
      row.ci95 = 1.96 * row.sd /
                 std::sqrt(static_cast<double>(values.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace c4v
