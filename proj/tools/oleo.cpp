// SPDX-License-Identifier: Apache-2.0
//
// oleo: command-line driver for the encode-once news recommendation workflow.
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "oleo/error.hpp"
#include "oleo/pipeline/workflow.hpp"
#include "oleo/util/log.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace oleo;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
  bool quiet = false;
  bool json_stats = false;

  // per-subcommand overrides
  std::optional<std::size_t> min_count;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> lr;
  std::optional<std::string> mode;
  std::optional<std::string> kind;
  std::optional<std::size_t> negatives;
};

json overrides_for(const std::string& command, const Flags& f) {
  json o = json::object();
  if (f.seed) o["seed"] = *f.seed;
  if (!f.out.empty()) o["out"] = fs::absolute(f.out).lexically_normal().string();
  if (command == "build-vocab" && f.min_count) o["vocab"]["min_count"] = *f.min_count;
  const char* section = command == "pretrain" ? "pretrain" : command == "profile" ? "profile" : "train";
  if (f.epochs) o[section]["epochs"] = *f.epochs;
  if (f.batch_size) o[section]["batch_size"] = *f.batch_size;
  if (f.lr) o[section]["lr"] = *f.lr;
  if (f.mode) o["train"]["mode"] = *f.mode;
  if (f.kind) o["train"]["kind"] = *f.kind;
  if (f.negatives) o["train"]["negatives"] = *f.negatives;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Encode-once news recommendation: vocabulary, encoder pretraining, vector cache, downstream "
               "training, evaluation and emission reporting"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "JSON run configuration");
  app.add_option("--seed", f.seed, "Override the run seed");
  app.add_option("--out", f.out, "Override the output directory");
  app.add_flag("--force", f.force, "Rebuild even when the manifest shows an up-to-date artifact");
  app.add_flag("-q,--quiet", f.quiet, "Only print warnings and errors");
  app.add_flag("--json", f.json_stats, "Print the stage statistics as JSON on stdout");

  auto* synth = app.add_subcommand("synth", "Write the bundled synthetic dataset and a matching config.json");
  std::string synth_dir = "synthetic";
  std::uint64_t synth_seed = 7;
  synth->add_option("dir", synth_dir, "Target directory")->capture_default_str();
  synth->add_option("--data-seed", synth_seed, "Generator seed")->capture_default_str();

  auto* vocab = app.add_subcommand("build-vocab", "Build the token vocabulary from the news file");
  vocab->add_option("--min-count", f.min_count, "Minimum token frequency");

  auto* pretrain = app.add_subcommand("pretrain", "Pretrain the multi-field encoder (masked tokens + field alignment)");
  pretrain->add_option("--epochs", f.epochs);
  pretrain->add_option("--batch-size", f.batch_size);
  pretrain->add_option("--lr", f.lr);

  app.add_subcommand("encode", "Encode every article once into the vector cache");

  auto* train = app.add_subcommand("train", "Train a downstream recommender");
  auto* evaluate = app.add_subcommand("evaluate", "Score the test impressions with a trained recommender");
  for (auto* sub : {train, evaluate}) {
    sub->add_option("--mode", f.mode, "News vectors: frozen | id | e2e")
        ->check(CLI::IsMember({"frozen", "id", "e2e"}));
    sub->add_option("--kind", f.kind, "matching | ranking")->check(CLI::IsMember({"matching", "ranking"}));
  }
  train->add_option("--epochs", f.epochs);
  train->add_option("--batch-size", f.batch_size);
  train->add_option("--lr", f.lr);
  train->add_option("--negatives", f.negatives, "Sampled negatives per positive (matching)");

  auto* profile = app.add_subcommand("profile", "Count news-encoder appearances in the training logs");
  profile->add_option("--batch-size", f.batch_size, "Impressions per batch for the per-batch counts");

  app.add_subcommand("report", "Aggregate evaluated runs into metrics, emissions and ApC");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  util::set_log_level(f.quiet ? util::LogLevel::Warn : util::LogLevel::Info);

  const auto* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    if (command == "synth") {
      const auto file = pipeline::write_synthetic_workspace(synth_dir, synth_seed);
      std::cout << file.string() << "\n";
      return 0;
    }
    const auto cfg = pipeline::load_run_config(f.config, overrides_for(command, f));
    const pipeline::StageOptions opt{f.force};
    pipeline::StageResult r;
    if (command == "build-vocab") r = pipeline::run_build_vocab(cfg, opt);
    else if (command == "pretrain") r = pipeline::run_pretrain(cfg, opt);
    else if (command == "encode") r = pipeline::run_encode(cfg, opt);
    else if (command == "train") r = pipeline::run_train(cfg, opt);
    else if (command == "evaluate") r = pipeline::run_evaluate(cfg, opt);
    else if (command == "profile") r = pipeline::run_profile(cfg, opt);
    else r = pipeline::run_report(cfg, opt);
    if (f.json_stats) {
      std::cout << json{{"command", r.command}, {"reused", r.reused}, {"stats", r.stats}}.dump(2) << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "oleo " << command << ": " << e.what() << "\n";
    return pipeline::exit_code_for(e);
  }
}
