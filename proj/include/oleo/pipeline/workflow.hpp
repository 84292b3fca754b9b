// SPDX-License-Identifier: Apache-2.0
//
// Two-stage workflow behind the command-line tool:
//   build-vocab -> pretrain -> encode (once) -> train -> evaluate -> profile -> report
//
// Every stage writes its artifacts under the output directory plus one line in
// <out>/manifest.jsonl. A stage whose config digest and input hashes match a
// successful manifest line, and whose recorded outputs are still on disk with
// the recorded hashes, is skipped.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "oleo/corpus/behaviors.hpp"
#include "oleo/evalgreen/redundancy.hpp"
#include "oleo/mft/pretrain.hpp"
#include "oleo/recsys/trainer.hpp"

namespace oleo::pipeline {

struct DataPaths {
  std::filesystem::path news;
  std::filesystem::path behaviors_train;
  std::filesystem::path behaviors_val;
  std::filesystem::path behaviors_test;
};

struct TrainSection {
  recsys::NewsSourceMode mode = recsys::NewsSourceMode::FrozenCache;
  recsys::DownstreamConfig downstream;
  std::size_t id_dim = 64;
  corpus::BehaviorsOptions behaviors;
};

struct RunConfig {
  nlohmann::json document;  // effective settings after defaults and overrides
  std::filesystem::path out;
  std::uint64_t seed = 0;
  DataPaths paths;
  std::size_t min_count = 1;
  mft::MftConfig mft;  // vocab_size is filled in from the vocabulary at pretrain time
  mft::PretrainConfig pretrain;
  TrainSection train;
  evalgreen::RedundancyConfig profile;
  double power_kw = 0.0;
  double carbon_g_per_kwh = 0.0;
};

// Every recognised key with its default value.
nlohmann::json default_config_document();

// `user` is merge-patched over the defaults; unknown keys and wrong types are
// ConfigErrors. Relative paths resolve against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& user, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& config_file, const nlohmann::json& overrides = {});

// Writes a seeded synthetic dataset and a config.json pointing at it.
std::filesystem::path write_synthetic_workspace(const std::filesystem::path& dir, std::uint64_t seed);

struct StageResult {
  std::string command;
  bool reused = false;
  nlohmann::json stats;                        // stage-specific numbers, also stored in the manifest
  std::vector<std::filesystem::path> outputs;  // relative to the output directory
};

struct StageOptions {
  bool force = false;  // rerun even when a matching manifest line exists
};

StageResult run_build_vocab(const RunConfig& cfg, const StageOptions& opt = {});
StageResult run_pretrain(const RunConfig& cfg, const StageOptions& opt = {});
StageResult run_encode(const RunConfig& cfg, const StageOptions& opt = {});
StageResult run_train(const RunConfig& cfg, const StageOptions& opt = {});
StageResult run_evaluate(const RunConfig& cfg, const StageOptions& opt = {});
StageResult run_profile(const RunConfig& cfg, const StageOptions& opt = {});
StageResult run_report(const RunConfig& cfg, const StageOptions& opt = {});

// "<mode>-<kind>", the directory under <out>/runs holding one downstream run.
std::string run_name(recsys::NewsSourceMode mode, recsys::ModelKind kind);

std::vector<nlohmann::json> read_manifest(const std::filesystem::path& out_dir);

// Maps library errors onto process exit codes: 2 config, 3 stale or missing
// artifact, 4 divergence, 1 anything else.
int exit_code_for(const std::exception& e);

}  // namespace oleo::pipeline
