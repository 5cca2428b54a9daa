// Command-line entry point: binds datasets, learners, and experiments.
//
// Exit codes: 0 success, 1 usage error, 2 I/O error, 3 data-format error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "c4v/experiments.hpp"
#include "c4v/learner.hpp"
#include "c4v/predictor.hpp"

namespace {

using namespace c4v;

struct DataFlags {
  std::string dir = "data/mnist";
  std::string train_images, train_labels, test_images, test_labels;

  void attach(CLI::App* cmd, bool need_train, bool need_test) {
    cmd->add_option("--data-dir", dir,
                    "Directory holding the standard MNIST IDX files")
        ->envname("C4V_MNIST_DIR")
        ->capture_default_str();
    if (need_train) {
      cmd->add_option("--train", train_images, "Training images IDX file");
      cmd->add_option("--train-labels", train_labels,
                      "Training labels IDX file");
    }
    if (need_test) {
      cmd->add_option("--test", test_images, "Test images IDX file");
      cmd->add_option("--test-labels", test_labels, "Test labels IDX file");
    }
  }

  std::string resolve(const std::string& given,
                      const std::string& standard_name) const {
    if (!given.empty()) return given;
    return (std::filesystem::path(dir) / standard_name).string();
  }

  Dataset load_train() const {
    return load_dataset(resolve(train_images, "train-images-idx3-ubyte"),
                        resolve(train_labels, "train-labels-idx1-ubyte"),
                        "train");
  }
  Dataset load_test() const {
    return load_dataset(resolve(test_images, "t10k-images-idx3-ubyte"),
                        resolve(test_labels, "t10k-labels-idx1-ubyte"),
                        "test");
  }
};

std::vector<std::uint64_t> seed_range(int count, std::uint64_t base) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(base + static_cast<std::uint64_t>(i));
  return seeds;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> parts;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) parts.push_back(part);
  return parts;
}

std::vector<int> parse_digits(const std::string& text) {
  std::vector<int> digits;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const int lo = std::stoi(text.substr(0, dots));
    const int hi = std::stoi(text.substr(dots + 2));
    for (int d = lo; d <= hi; ++d) digits.push_back(d);
    return digits;
  }
  for (const std::string& part : split_csv(text))
    digits.push_back(std::stoi(part));
  return digits;
}

std::vector<int> parse_nmax_list(const std::string& text) {
  std::vector<int> values;
  for (const std::string& part : split_csv(text))
    values.push_back(std::stoi(part));
  return values;
}

/// Streams records to CSV (and optionally JSONL), flushing per row so
/// partial runs stay analyzable.
class RecordWriter {
 public:
  RecordWriter(const std::string& csv_path, const std::string& jsonl_path,
               const std::string& config_line) {
    if (!csv_path.empty()) {
      csv_file_.open(csv_path);
      if (!csv_file_) throw IoError("cannot create " + csv_path);
      csv_ = &csv_file_;
    } else {
      csv_ = &std::cout;
    }
    *csv_ << "# " << config_line << '\n' << kCsvHeader << std::endl;
    if (!jsonl_path.empty()) {
      jsonl_.open(jsonl_path);
      if (!jsonl_) throw IoError("cannot create " + jsonl_path);
    }
  }

  RecordSink sink() {
    return [this](const ExperimentRecord& record) {
      *csv_ << to_csv_row(record) << std::endl;
      if (jsonl_.is_open()) jsonl_ << to_jsonl_row(record) << std::endl;
    };
  }

 private:
  std::ofstream csv_file_;
  std::ostream* csv_ = nullptr;
  std::ofstream jsonl_;
};

void print_config(const std::string& line) {
  std::cout << line << std::endl;
}

int run(int argc, char** argv) {
  CLI::App app{"Cobweb/4V incremental concept formation over images"};
  app.require_subcommand(1);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Train Cobweb, write a snapshot");
  DataFlags fit_data;
  std::string fit_out = "tree.json";
  std::size_t fit_limit = 0;
  std::uint64_t fit_seed = 0;
  double fit_floor = kDefaultSigmaFloor;
  fit_data.attach(fit_cmd, true, false);
  fit_cmd->add_option("--out", fit_out, "Snapshot output path")
      ->capture_default_str();
  fit_cmd->add_option("--limit", fit_limit,
                      "Train on only the first N shuffled images");
  fit_cmd->add_option("--seed", fit_seed, "Shuffle seed")
      ->envname("C4V_SEED");
  fit_cmd->add_option("--sigma-floor", fit_floor, "Acuity floor")
      ->envname("C4V_SIGMA_FLOOR")
      ->capture_default_str();

  // predict
  auto* predict_cmd =
      app.add_subcommand("predict", "Evaluate a snapshot on labeled images");
  std::string predict_tree;
  std::string predict_images, predict_labels;
  int predict_nmax = kDefaultNmax;
  predict_cmd->add_option("--tree", predict_tree, "Snapshot path")
      ->required();
  predict_cmd->add_option("--images", predict_images, "Images IDX file")
      ->required();
  predict_cmd->add_option("--labels", predict_labels, "Labels IDX file")
      ->required();
  predict_cmd->add_option("--nmax", predict_nmax, "Expansion budget")
      ->envname("C4V_NMAX")
      ->capture_default_str();

  // sweep
  auto* sweep_cmd =
      app.add_subcommand("sweep", "N_max sweep on a fully trained tree");
  DataFlags sweep_data;
  std::string sweep_nmax = "10,50,100,300,600";
  int sweep_seeds = 10;
  std::uint64_t sweep_seed_base = 0;
  std::size_t sweep_limit = 0;
  double sweep_floor = kDefaultSigmaFloor;
  std::string sweep_out, sweep_jsonl;
  sweep_data.attach(sweep_cmd, true, true);
  sweep_cmd->add_option("--nmax", sweep_nmax, "Comma-separated budgets")
      ->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep_seeds, "Number of seeds")
      ->capture_default_str();
  sweep_cmd->add_option("--seed-base", sweep_seed_base, "First seed value");
  sweep_cmd->add_option("--limit", sweep_limit,
                        "Train on only the first N shuffled images");
  sweep_cmd->add_option("--sigma-floor", sweep_floor, "Acuity floor")
      ->envname("C4V_SIGMA_FLOOR");
  sweep_cmd->add_option("--out", sweep_out, "CSV output (default stdout)");
  sweep_cmd->add_option("--jsonl", sweep_jsonl, "JSON-lines output");

  // exp1
  auto* exp1_cmd = app.add_subcommand(
      "exp1", "Data-efficiency experiment: sequential splits of 10");
  DataFlags exp1_data;
  int exp1_seeds = 10;
  std::uint64_t exp1_seed_base = 0;
  std::string exp1_learners = "cobweb,fc";
  std::string exp1_eval_every = "1:100,100:6000";
  int exp1_nmax = kDefaultNmax;
  double exp1_floor = kDefaultSigmaFloor;
  std::size_t exp1_max_splits = 0;
  int exp1_jobs = 1;
  std::string exp1_out, exp1_jsonl;
  exp1_data.attach(exp1_cmd, true, true);
  exp1_cmd->add_option("--seeds", exp1_seeds, "Number of seeds")
      ->capture_default_str();
  exp1_cmd->add_option("--seed-base", exp1_seed_base, "First seed value");
  exp1_cmd->add_option("--learners", exp1_learners, "cobweb,fc")
      ->capture_default_str();
  exp1_cmd
      ->add_option("--eval-every", exp1_eval_every,
                   "stride:until segments for evaluation density")
      ->capture_default_str();
  exp1_cmd->add_option("--nmax", exp1_nmax, "Expansion budget")
      ->envname("C4V_NMAX");
  exp1_cmd->add_option("--sigma-floor", exp1_floor, "Acuity floor")
      ->envname("C4V_SIGMA_FLOOR");
  exp1_cmd->add_option("--max-splits", exp1_max_splits,
                       "Stop after this many splits (0 = all 6000)");
  exp1_cmd->add_option("--jobs", exp1_jobs, "Parallel experiment cells")
      ->envname("C4V_JOBS");
  exp1_cmd->add_option("--out", exp1_out, "CSV output (default stdout)");
  exp1_cmd->add_option("--jsonl", exp1_jsonl, "JSON-lines output");

  // exp2
  auto* exp2_cmd = app.add_subcommand(
      "exp2", "Forgetting experiment: chosen digit concentrated in D1");
  DataFlags exp2_data;
  std::string exp2_digits = "0..9";
  int exp2_seeds = 10;
  std::uint64_t exp2_seed_base = 0;
  std::string exp2_learners = "cobweb,fc,fc-replay";
  int exp2_nmax = kDefaultNmax;
  double exp2_floor = kDefaultSigmaFloor;
  int exp2_jobs = 1;
  std::string exp2_out, exp2_jsonl;
  exp2_data.attach(exp2_cmd, true, true);
  exp2_cmd->add_option("--digits", exp2_digits, "Range 0..9 or comma list")
      ->capture_default_str();
  exp2_cmd->add_option("--seeds", exp2_seeds, "Number of seeds")
      ->capture_default_str();
  exp2_cmd->add_option("--seed-base", exp2_seed_base, "First seed value");
  exp2_cmd->add_option("--learners", exp2_learners, "cobweb,fc,fc-replay")
      ->capture_default_str();
  exp2_cmd->add_option("--nmax", exp2_nmax, "Expansion budget")
      ->envname("C4V_NMAX");
  exp2_cmd->add_option("--sigma-floor", exp2_floor, "Acuity floor")
      ->envname("C4V_SIGMA_FLOOR");
  exp2_cmd->add_option("--jobs", exp2_jobs, "Parallel experiment cells")
      ->envname("C4V_JOBS");
  exp2_cmd->add_option("--out", exp2_out, "CSV output (default stdout)");
  exp2_cmd->add_option("--jsonl", exp2_jsonl, "JSON-lines output");

  // summarize
  auto* summarize_cmd =
      app.add_subcommand("summarize", "Mean / sd / 95% CI per group");
  std::string summarize_in;
  summarize_cmd->add_option("--in", summarize_in, "Records CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors exit 1, --help exits 0
  }

  if (fit_cmd->parsed()) {
    std::ostringstream config;
    config << "config: cmd=fit seed=" << fit_seed
           << " sigma_floor=" << fit_floor << " limit=" << fit_limit
           << " out=" << fit_out;
    print_config(config.str());

    Dataset train = fit_data.load_train();
    Rng rng(fit_seed);
    seeded_shuffle(train.images, rng);
    if (fit_limit > 0 && train.images.size() > fit_limit)
      train.images.resize(fit_limit);

    TreeConfig tree_config;
    tree_config.sigma_floor = fit_floor;
    tree_config.seed = fit_seed;
    Tree tree(train.dim(), tree_config);
    for (const Instance& inst : train.images) ifit(tree, inst);

    std::ofstream out(fit_out);
    if (!out) throw IoError("cannot create " + fit_out);
    tree.save_json(out);
    out.flush();
    if (!out) throw IoError("write failed for " + fit_out);
    std::cout << "trained on " << train.images.size() << " images, "
              << tree.node_count() << " nodes -> " << fit_out << std::endl;
    return 0;
  }

  if (predict_cmd->parsed()) {
    std::ostringstream config;
    config << "config: cmd=predict nmax=" << predict_nmax
           << " tree=" << predict_tree;
    print_config(config.str());

    std::ifstream in(predict_tree);
    if (!in) throw IoError("cannot open " + predict_tree);
    const Tree tree = Tree::load_json(in);

    const Dataset test =
        load_dataset(predict_images, predict_labels, "predict");
    std::size_t hits = 0;
    std::vector<std::vector<std::size_t>> confusion(
        kNumLabels, std::vector<std::size_t>(kNumLabels, 0));
    for (const Instance& inst : test.images) {
      const int predicted = predict_label(tree, inst, predict_nmax);
      if (inst.label) {
        confusion[static_cast<std::size_t>(*inst.label)]
                 [static_cast<std::size_t>(predicted)]++;
        if (predicted == *inst.label) ++hits;
      }
    }
    std::cout << "accuracy "
              << static_cast<double>(hits) /
                     static_cast<double>(test.images.size())
              << '\n';
    std::cout << "confusion (rows = true label, cols = predicted):\n";
    for (int row = 0; row < kNumLabels; ++row) {
      for (int col = 0; col < kNumLabels; ++col)
        std::cout << confusion[static_cast<std::size_t>(row)]
                              [static_cast<std::size_t>(col)]
                  << (col + 1 == kNumLabels ? '\n' : ' ');
    }
    return 0;
  }

  if (sweep_cmd->parsed()) {
    SweepOptions options;
    options.n_max_values = parse_nmax_list(sweep_nmax);
    options.seeds = seed_range(sweep_seeds, sweep_seed_base);
    options.sigma_floor = sweep_floor;
    options.train_limit = sweep_limit;

    std::ostringstream config;
    config << "config: cmd=sweep nmax=" << sweep_nmax
           << " seeds=" << sweep_seeds << " seed_base=" << sweep_seed_base
           << " sigma_floor=" << sweep_floor << " limit=" << sweep_limit;
    print_config(config.str());

    const Dataset train = sweep_data.load_train();
    const Dataset test = sweep_data.load_test();
    RecordWriter writer(sweep_out, sweep_jsonl, config.str());
    run_nmax_sweep(train, test, options, writer.sink());
    return 0;
  }

  if (exp1_cmd->parsed()) {
    Exp1Options options;
    options.seeds = seed_range(exp1_seeds, exp1_seed_base);
    options.learners = split_csv(exp1_learners);
    options.schedule = parse_eval_schedule(exp1_eval_every);
    options.n_max = exp1_nmax;
    options.sigma_floor = exp1_floor;
    options.max_splits = exp1_max_splits;
    options.jobs = exp1_jobs;

    std::ostringstream config;
    config << "config: cmd=exp1 seeds=" << exp1_seeds
           << " seed_base=" << exp1_seed_base << " learners=" << exp1_learners
           << " eval_every=" << exp1_eval_every << " nmax=" << exp1_nmax
           << " sigma_floor=" << exp1_floor << " max_splits=" << exp1_max_splits
           << " jobs=" << exp1_jobs;
    print_config(config.str());

    const Dataset train = exp1_data.load_train();
    const Dataset test = exp1_data.load_test();
    RecordWriter writer(exp1_out, exp1_jsonl, config.str());
    run_exp1(train, test, options, writer.sink());
    return 0;
  }

  if (exp2_cmd->parsed()) {
    Exp2Options options;
    options.digits = parse_digits(exp2_digits);
    options.seeds = seed_range(exp2_seeds, exp2_seed_base);
    options.learners = split_csv(exp2_learners);
    options.n_max = exp2_nmax;
    options.sigma_floor = exp2_floor;
    options.jobs = exp2_jobs;

    std::ostringstream config;
    config << "config: cmd=exp2 digits=" << exp2_digits
           << " seeds=" << exp2_seeds << " seed_base=" << exp2_seed_base
           << " learners=" << exp2_learners << " nmax=" << exp2_nmax
           << " sigma_floor=" << exp2_floor << " jobs=" << exp2_jobs;
    print_config(config.str());

    const Dataset train = exp2_data.load_train();
    const Dataset test = exp2_data.load_test();
    RecordWriter writer(exp2_out, exp2_jsonl, config.str());
    run_exp2(train, test, options, writer.sink());
    return 0;
  }

  if (summarize_cmd->parsed()) {
    std::ifstream in(summarize_in);
    if (!in) throw IoError("cannot open " + summarize_in);
    const auto records = read_records_csv(in);
    const auto rows = summarize(records);
    std::cout << "experiment,learner,split_index,metric,count,mean,sd,ci95\n";
    std::cout.precision(12);
    for (const SummaryRow& row : rows)
      std::cout << row.experiment << ',' << row.learner << ','
                << row.split_index << ',' << row.metric << ',' << row.count
                << ',' << row.mean << ',' << row.sd << ',' << row.ci95
                << '\n';
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const c4v::IoError& e) {
    std::cerr << "I/O error: " << e.what() << std::endl;
    return 2;
  } catch (const c4v::FormatError& e) {
    std::cerr << "data-format error: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
