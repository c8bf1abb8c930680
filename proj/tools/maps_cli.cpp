// maps: demonstration generation, training, evaluation and reports for
// modular multi-task policies.

#include "maps/config.hpp"
#include "maps/envs.hpp"
#include "maps/error.hpp"
#include "maps/eval.hpp"
#include "maps/io.hpp"
#include "maps/report.hpp"
#include "maps/trainer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace maps;

namespace {

std::ofstream open_text(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::io,
          "cannot open " + path.string() + " for writing");
  return out;
}

// Writes to `path`, or to stdout when it is empty.
template <typename Fn>
void emit(const std::string& path, Fn&& write) {
  if (path.empty()) {
    write(std::cout);
    std::cout.flush();
  } else {
    auto out = open_text(path);
    write(out);
  }
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  return fs::path(p.string() + suffix);
}

struct Options {
  std::string config;
  std::string data;
  std::string out;
  std::string suite = "subbehavior";
  std::string method = "maps";
  std::string term;
  std::string history;
  std::vector<std::string> models;
  std::vector<std::string> suites;
  std::vector<std::string> methods;
  std::vector<int> experts;
  std::vector<std::uint64_t> seeds;
  std::uint64_t seed = 0;
  int per_task = 20;
  int starts = 100;
};

void cmd_gen_data(const Options& o) {
  const TaskSuite suite = make_suite(parse_suite(o.suite));
  const DemoDataset data = generate_demos(suite, o.per_task, o.seed);
  save_demos(o.out, data);
  std::cout << "wrote " << data.trajectories.size() << " trajectories ("
            << data.transition_count() << " transitions) to " << o.out << '\n';
}

void cmd_train(const Options& o) {
  const TrainConfig config = load_config(o.config);
  const DemoDataset data = load_demos(o.data);
  const Method method = parse_method(o.method);
  const DatasetSplit parts =
      split(data, config.train_fraction, mix_seed(config.seed, 3));
  const auto trained = train_method(method, config, parts.train, parts.val);

  const fs::path out = o.out;
  if (method == Method::single) {
    const auto& agents = std::get<SingleBcAgents>(trained.model);
    for (int k = 0; k < agents.num_tasks; ++k) {
      const fs::path p = with_suffix(out, ".task" + std::to_string(k));
      save_single_task_checkpoint(p, config, agents, k);
      std::cout << "wrote " << p.string() << '\n';
    }
  } else {
    save_checkpoint(out, config, trained.model);
    std::cout << "wrote " << out.string() << '\n';
  }
  const std::string history =
      o.history.empty() ? with_suffix(out, ".history.csv").string() : o.history;
  emit(history, [&](std::ostream& s) { write_history_csv(s, trained.history); });
  std::cout << "best epoch " << trained.history.best_epoch << ", val BC "
            << format_real(trained.history.final_val_bc()) << '\n';
}

Checkpoint load_models(const Options& o) {
  std::vector<fs::path> paths(o.models.begin(), o.models.end());
  return load_checkpoint(paths);
}

void cmd_eval(const Options& o) {
  const Checkpoint ckpt = load_models(o);
  const TaskSuite suite = make_suite(parse_suite(o.suite));
  const auto rates = success_rate(ckpt.model, suite, o.starts, o.seed);
  emit(o.out, [&](std::ostream& s) {
    write_success_csv(s, suite, method_of(ckpt.model), rates);
  });
}

void cmd_usage(const Options& o) {
  const Checkpoint ckpt = load_models(o);
  const auto* model = std::get_if<MapsModel>(&ckpt.model);
  require(model != nullptr, ErrorKind::invalid_argument,
          "module usage needs a MAPS checkpoint");
  const UsageReport usage = module_usage(*model, load_demos(o.data));
  require(!o.out.empty(), ErrorKind::invalid_argument, "usage needs --out");
  emit(with_suffix(o.out, ".csv").string(),
       [&](std::ostream& s) { write_usage_csv(s, usage); });
  emit(with_suffix(o.out, ".svg").string(),
       [&](std::ostream& s) { write_usage_svg(s, usage, "mean gate per task"); });
}

void cmd_ablate(const Options& o) {
  const TrainConfig config = load_config(o.config);
  const DemoDataset data = load_demos(o.data);
  const TaskSuite suite = make_suite(parse_suite(o.suite));
  const DatasetSplit parts =
      split(data, config.train_fraction, mix_seed(config.seed, 3));
  const auto starts = sample_starts(suite, o.starts, o.seed);
  const AblationResult r =
      ablate(config, parts.train, parts.val, suite, parse_term(o.term), starts);
  emit(o.out, [&](std::ostream& s) { write_ablation_csv(s, r); });
}

void cmd_compare(const Options& o) {
  const TrainConfig config = load_config(o.config);
  CompareOptions opts;
  for (const auto& s : o.suites) opts.suites.push_back(parse_suite(s));
  opts.expert_counts = o.experts;
  opts.seeds = o.seeds;
  if (!o.methods.empty()) {
    opts.methods.clear();
    for (const auto& m : o.methods) opts.methods.push_back(parse_method(m));
  }
  opts.n_starts = o.starts;
  opts.eval_seed = o.seed;
  const ComparisonTable table = compare(config, opts);
  const auto tally = tally_against_single(table);
  require(!o.out.empty(), ErrorKind::invalid_argument, "compare needs --out");
  emit(with_suffix(o.out, ".csv").string(),
       [&](std::ostream& s) { write_comparison_csv(s, table); });
  emit(with_suffix(o.out, ".tally.csv").string(),
       [&](std::ostream& s) { write_tally_csv(s, tally); });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modular multi-task policies from demonstrations"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-data", "Generate expert demonstrations");
  gen->add_option("--suite", o.suite, "scaled|morph|subbehavior")->required();
  gen->add_option("--per-task", o.per_task, "Demonstrations per task")
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", o.seed, "Generator seed");
  gen->add_option("--out", o.out, "Output demo file")->required();

  auto* train = app.add_subcommand("train", "Train a policy");
  train->add_option("--config", o.config)->required()->check(CLI::ExistingFile);
  train->add_option("--data", o.data)->required()->check(CLI::ExistingFile);
  train->add_option("--out", o.out, "Checkpoint path")->required();
  train->add_option("--method", o.method, "maps|single|mt|mtmh");
  train->add_option("--history", o.history, "History CSV (default <out>.history.csv)");

  auto* eval = app.add_subcommand("eval", "Per-task success rates");
  eval->add_option("--model", o.models, "Checkpoint(s)")->required();
  eval->add_option("--suite", o.suite)->required();
  eval->add_option("--starts", o.starts)->check(CLI::PositiveNumber);
  eval->add_option("--seed", o.seed, "Start sampling seed");
  eval->add_option("--out", o.out, "CSV path (default stdout)");

  auto* usage = app.add_subcommand("usage", "Module usage CSV and SVG chart");
  usage->add_option("--model", o.models)->required();
  usage->add_option("--data", o.data)->required()->check(CLI::ExistingFile);
  usage->add_option("--out", o.out, "Output prefix")->required();

  auto* abl = app.add_subcommand("ablate", "Retrain without one selector term");
  abl->add_option("--config", o.config)->required()->check(CLI::ExistingFile);
  abl->add_option("--data", o.data)->required()->check(CLI::ExistingFile);
  abl->add_option("--term", o.term, "share|explore|sparse|smooth")->required();
  abl->add_option("--suite", o.suite)->required();
  abl->add_option("--starts", o.starts)->check(CLI::PositiveNumber);
  abl->add_option("--seed", o.seed, "Start sampling seed");
  abl->add_option("--out", o.out, "CSV path (default stdout)");

  auto* cmp = app.add_subcommand("compare", "MAPS against the BC baselines");
  cmp->add_option("--config", o.config)->required()->check(CLI::ExistingFile);
  cmp->add_option("--suite", o.suites)->required();
  cmp->add_option("--experts", o.experts)->required();
  cmp->add_option("--seeds", o.seeds)->required();
  cmp->add_option("--method", o.methods, "Subset of methods (default all)");
  cmp->add_option("--starts", o.starts)->check(CLI::PositiveNumber);
  cmp->add_option("--seed", o.seed, "Start sampling seed");
  cmp->add_option("--out", o.out, "Output prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: usage: %s\n", e.what());
    return 2;
  }

  try {
    if (*gen) cmd_gen_data(o);
    else if (*train) cmd_train(o);
    else if (*eval) cmd_eval(o);
    else if (*usage) cmd_usage(o);
    else if (*abl) cmd_ablate(o);
    else if (*cmp) cmd_compare(o);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", std::string(to_string(e.kind())).c_str(),
                 e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
