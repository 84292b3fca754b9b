// SPDX-License-Identifier: Apache-2.0
#include "oleo/pipeline/workflow.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_set>

#include "oleo/compute/checkpoint.hpp"
#include "oleo/corpus/vocabulary.hpp"
#include "oleo/error.hpp"
#include "oleo/evalgreen/energy.hpp"
#include "oleo/pipeline/synthetic.hpp"
#include "oleo/repstore/cache.hpp"
#include "oleo/util/log.hpp"
#include "oleo/util/sha256.hpp"

namespace oleo::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Child seed streams of RunConfig::seed.
enum SeedStream : std::uint64_t { kPretrainStream = 1, kMftInitStream, kModelInitStream, kTrainStream, kIdInitStream };

constexpr const char* kManifest = "manifest.jsonl";
constexpr const char* kVocab = "vocab.txt";
constexpr const char* kMftCheckpoint = "mft.ckpt";
constexpr const char* kMftMeta = "mft.json";
constexpr const char* kPretrainLog = "pretrain_log.jsonl";
constexpr const char* kCache = "cache.bin";
constexpr const char* kRedundancy = "redundancy.json";
constexpr const char* kCdf = "cdf.csv";
constexpr const char* kReport = "report.json";

// ---- config ---------------------------------------------------------------

void check_schema(const json& defaults, const json& user, const std::string& where) {
  if (defaults.is_object()) {
    if (!user.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : user.items()) {
      const auto path = where.empty() ? key : where + "." + key;
      if (!defaults.contains(key)) throw ConfigError("unknown config key '" + path + "'");
      check_schema(defaults.at(key), value, path);
    }
    return;
  }
  const bool ok = (defaults.is_number() && user.is_number()) || (defaults.is_string() && user.is_string()) ||
                  (defaults.is_boolean() && user.is_boolean()) || (defaults.is_array() && user.is_array());
  if (!ok) throw ConfigError(where + ": expected " + std::string(defaults.type_name()) + ", got " + user.type_name());
}

std::size_t get_size(const json& doc, const char* section, const char* key) {
  const auto& v = doc.at(section).at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(std::string(section) + "." + key + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

double get_double(const json& doc, const char* section, const char* key) { return doc.at(section).at(key).get<double>(); }
std::string get_string(const json& doc, const char* section, const char* key) {
  return doc.at(section).at(key).get<std::string>();
}

corpus::UnknownNewsPolicy parse_policy(const std::string& s) {
  if (s == "drop_record") return corpus::UnknownNewsPolicy::DropRecord;
  if (s == "drop_ids") return corpus::UnknownNewsPolicy::DropIds;
  if (s == "fail") return corpus::UnknownNewsPolicy::Fail;
  throw ConfigError("train.unknown_news: expected drop_record, drop_ids or fail, got '" + s + "'");
}

json mft_to_json(const mft::MftConfig& c) {
  return {{"vocab_size", c.vocab_size},     {"d", c.d},
          {"layers", c.layers},             {"heads", c.heads},
          {"title_len", c.limits.title},    {"category_len", c.limits.category},
          {"abstract_len", c.limits.abstract}, {"mask_ratio", c.mask_ratio},
          {"fa_negative_ratio", c.fa_negative_ratio}, {"ln_eps", c.ln_eps}};
}

mft::MftConfig mft_from_json(const json& j) {
  mft::MftConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.d = j.at("d").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.limits = {j.at("title_len").get<std::size_t>(), j.at("category_len").get<std::size_t>(),
              j.at("abstract_len").get<std::size_t>()};
  c.mask_ratio = j.at("mask_ratio").get<double>();
  c.fa_negative_ratio = j.at("fa_negative_ratio").get<double>();
  c.ln_eps = j.at("ln_eps").get<double>();
  return c;
}

json recsys_to_json(const recsys::RecsysConfig& c) {
  return {{"d_model", c.d_model},
          {"heads", c.heads},
          {"attention_hidden", c.attention_hidden},
          {"cross_layers", c.cross_layers},
          {"mlp", c.mlp}};
}

recsys::RecsysConfig recsys_from_json(const json& j) {
  recsys::RecsysConfig c;
  c.d_model = j.at("d_model").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.attention_hidden = j.at("attention_hidden").get<std::size_t>();
  c.cross_layers = j.at("cross_layers").get<std::size_t>();
  c.mlp = j.at("mlp").get<std::vector<std::size_t>>();
  return c;
}

// ---- files ----------------------------------------------------------------

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out.flush()) throw IoError("write failed: " + path.string());
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path, const std::string& producer) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError(path.string() + " not found; run '" + producer + "' first");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string jsonl(const std::vector<json>& lines) {
  std::string s;
  for (const auto& l : lines) s += l.dump() + "\n";
  return s;
}

std::string hash_file(const fs::path& p) { return util::to_hex(util::sha256_file(p)); }

// ---- manifest -------------------------------------------------------------

struct Input {
  fs::path path;
  std::string producer;  // command that creates it; empty for user data named by a config key
  std::string key;       // config key of user data
};

std::string display_path(const RunConfig& cfg, const fs::path& p) {
  const auto rel = p.lexically_relative(cfg.out);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return fs::absolute(p).lexically_normal().generic_string();
}

json hash_inputs(const RunConfig& cfg, const std::vector<Input>& inputs) {
  json j = json::object();
  for (const auto& in : inputs) {
    if (!fs::is_regular_file(in.path)) {
      if (in.producer.empty()) throw ConfigError(in.key + ": file not found: " + in.path.string());
      throw MissingArtifactError(in.path.string() + " not found; run '" + in.producer + "' first");
    }
    j[display_path(cfg, in.path)] = hash_file(in.path);
  }
  return j;
}

std::optional<json> find_reusable(const RunConfig& cfg, const std::string& command, const std::string& digest,
                                  const json& inputs) {
  for (const auto& line : read_manifest(cfg.out)) {
    if (line.value("status", "") != "ok" || line.value("command", "") != command ||
        line.value("config_digest", "") != digest || line.value("inputs", json()) != inputs) {
      continue;
    }
    bool intact = true;
    for (const auto& [rel, hash] : line.at("outputs").items()) {
      const auto p = cfg.out / rel;
      if (!fs::is_regular_file(p) || hash_file(p) != hash.get<std::string>()) {
        intact = false;
        break;
      }
    }
    if (intact) return line;
  }
  return std::nullopt;
}

// A new line supersedes every earlier line that produced one of the same paths,
// so each artifact stays traceable to exactly one line.
void record(const RunConfig& cfg, const json& line) {
  std::set<std::string> produced;
  for (const auto& [rel, _] : line.at("outputs").items()) produced.insert(rel);
  std::vector<json> kept;
  for (auto& old : read_manifest(cfg.out)) {
    bool overlaps = false;
    if (old.contains("outputs"))
      for (const auto& [rel, _] : old.at("outputs").items()) overlaps = overlaps || produced.count(rel) != 0;
    // a failed attempt is superseded by the next attempt of the same command and settings
    const bool same_failed = old.value("status", "") != "ok" && old.value("command", "") == line.value("command", "") &&
                             old.value("config_digest", "") == line.value("config_digest", "");
    if (!overlaps && !same_failed) kept.push_back(std::move(old));
  }
  kept.push_back(line);
  write_text(cfg.out / kManifest, jsonl(kept));
}

using StageBody = std::function<std::vector<fs::path>(json& stats)>;

StageResult run_stage(const RunConfig& cfg, const StageOptions& opt, const std::string& command, const json& settings,
                      const std::vector<Input>& inputs, const StageBody& body) {
  fs::create_directories(cfg.out);
  const auto digest =
      util::to_hex(util::sha256(json{{"command", command}, {"settings", settings}, {"seed", cfg.seed}}.dump()));
  const auto input_hashes = hash_inputs(cfg, inputs);
  if (!opt.force) {
    if (auto line = find_reusable(cfg, command, digest, input_hashes)) {
      util::log_info(command + ": inputs and settings unchanged, reusing artifacts (use --force to rebuild)");
      StageResult r{command, true, line->value("stats", json::object()), {}};
      for (const auto& [rel, _] : line->at("outputs").items()) r.outputs.emplace_back(rel);
      return r;
    }
  }
  const auto started = now_iso();
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  json line = {{"command", command}, {"config_digest", digest}, {"inputs", input_hashes}, {"started_at", started}};
  json stats = json::object();
  std::vector<fs::path> outputs;
  try {
    outputs = body(stats);
  } catch (const std::exception& e) {
    line["outputs"] = json::object();
    line["seconds"] = elapsed();
    line["status"] = "error";
    line["exit_code"] = exit_code_for(e);
    line["error"] = e.what();
    record(cfg, line);
    throw;
  }
  json out_hashes = json::object();
  for (const auto& o : outputs) out_hashes[o.generic_string()] = hash_file(cfg.out / o);
  line["outputs"] = out_hashes;
  line["seconds"] = elapsed();
  line["status"] = "ok";
  line["exit_code"] = 0;
  line["stats"] = stats;
  record(cfg, line);
  return {command, false, stats, outputs};
}

// ---- shared loading -------------------------------------------------------

Input data_input(const fs::path& p, const char* key) { return {p, "", std::string("paths.") + key}; }
Input artifact(const RunConfig& cfg, const fs::path& rel, const char* producer) { return {cfg.out / rel, producer, ""}; }

mft::MftConfig stored_mft_config(const RunConfig& cfg) {
  const auto meta = read_json(cfg.out / kMftMeta, "pretrain");
  const auto vocab_hash = hash_file(cfg.out / kVocab);
  if (meta.at("vocab_hash").get<std::string>() != vocab_hash) {
    throw StaleArtifactError(kMftCheckpoint + std::string(" was trained with a different vocabulary; run 'pretrain --force'"));
  }
  return mft_from_json(meta.at("config"));
}

std::shared_ptr<mft::MftModel> load_pretrained(const RunConfig& cfg) {
  auto model = std::make_shared<mft::MftModel>(stored_mft_config(cfg), 0);
  compute::load_checkpoint(cfg.out / kMftCheckpoint, model->params());
  return model;
}

corpus::FieldLimits corpus_limits(const RunConfig& cfg, recsys::NewsSourceMode mode) {
  if (mode == recsys::NewsSourceMode::IdEmbedding) return cfg.mft.limits;
  return stored_mft_config(cfg).limits;
}

std::vector<Input> source_inputs(const RunConfig& cfg, recsys::NewsSourceMode mode) {
  std::vector<Input> in{data_input(cfg.paths.news, "news"), artifact(cfg, kVocab, "build-vocab")};
  if (mode != recsys::NewsSourceMode::IdEmbedding) {
    in.push_back(artifact(cfg, kMftCheckpoint, "pretrain"));
    in.push_back(artifact(cfg, kMftMeta, "pretrain"));
  }
  if (mode == recsys::NewsSourceMode::FrozenCache) in.push_back(artifact(cfg, kCache, "encode"));
  return in;
}

std::unique_ptr<recsys::NewsSource> make_source(const RunConfig& cfg, recsys::NewsSourceMode mode,
                                                const corpus::NewsCorpus& corpus, std::size_t id_dim) {
  switch (mode) {
    case recsys::NewsSourceMode::FrozenCache: {
      repstore::LoadExpectations expect;
      expect.model_hash = util::sha256_file(cfg.out / kMftCheckpoint);
      expect.vocab_hash = util::sha256_file(cfg.out / kVocab);
      expect.entry_count = corpus.size();
      auto cache = std::make_shared<const repstore::RepresentationCache>(repstore::load_cache(cfg.out / kCache, expect));
      return std::make_unique<recsys::FrozenCacheSource>(cache, corpus);
    }
    case recsys::NewsSourceMode::IdEmbedding:
      return std::make_unique<recsys::IdEmbeddingSource>(corpus.size(), id_dim,
                                                         util::mix_seed(cfg.seed, kIdInitStream));
    case recsys::NewsSourceMode::EndToEndText:
      return std::make_unique<recsys::EndToEndTextSource>(load_pretrained(cfg), corpus);
  }
  throw ConfigError("unknown news source mode");
}

std::vector<recsys::IndexedImpression> load_impressions(const fs::path& path, const corpus::NewsCorpus& corpus,
                                                        const corpus::BehaviorsOptions& opt, const std::string& label) {
  auto loaded = corpus::load_behaviors(path, [&](const std::string& id) { return corpus.contains(id); }, opt);
  if (loaded.dropped_records || loaded.dropped_ids) {
    util::log_warn(label + ": dropped " + std::to_string(loaded.dropped_records) + " records and " +
                   std::to_string(loaded.dropped_ids) + " ids referencing unknown news");
  }
  return recsys::index_impressions(loaded.records, corpus);
}

json train_settings(const RunConfig& cfg) {
  json s = cfg.document.at("train");
  s.erase("validate_each_epoch");  // affects logging only
  return s;
}

fs::path run_dir(const RunConfig& cfg) {
  return fs::path("runs") / run_name(cfg.train.mode, cfg.train.downstream.kind);
}

}  // namespace

// ---- public ---------------------------------------------------------------

json default_config_document() {
  return json::parse(R"({
    "seed": 0,
    "out": "run",
    "paths": {"news": "news.tsv", "behaviors_train": "behaviors_train.tsv",
              "behaviors_val": "behaviors_val.tsv", "behaviors_test": "behaviors_test.tsv"},
    "vocab": {"min_count": 1},
    "mft": {"d": 64, "layers": 3, "heads": 4, "title_len": 20, "category_len": 1, "abstract_len": 40,
            "mask_ratio": 0.15, "fa_negative_ratio": 0.5},
    "pretrain": {"epochs": 3, "batch_size": 64, "lr": 0.001, "validation_fraction": 0.2},
    "train": {"mode": "frozen", "kind": "matching", "negatives": 4, "epochs": 3, "batch_size": 64, "lr": 0.001,
              "id_dim": 64, "max_history": 30, "unknown_news": "drop_record", "validate_each_epoch": true,
              "model": {"d_model": 64, "heads": 4, "attention_hidden": 64, "cross_layers": 2, "mlp": [64, 32]}},
    "profile": {"batch_size": 64},
    "energy": {"power_kw": 0.35, "carbon_g_per_kwh": 722.0}
  })");
}

RunConfig parse_run_config(const json& user, const fs::path& base_dir) {
  const auto defaults = default_config_document();
  check_schema(defaults, user, "");
  RunConfig c;
  c.document = defaults;
  c.document.merge_patch(user);
  const auto& d = c.document;
  try {
    const auto& seed = d.at("seed");
    if (!seed.is_number_integer() || (seed.is_number_integer() && !seed.is_number_unsigned() && seed.get<long long>() < 0)) {
      throw ConfigError("seed: expected an unsigned 64-bit integer");
    }
    c.seed = seed.get<std::uint64_t>();
    auto resolve = [&](const fs::path& p) { return (p.is_absolute() ? p : base_dir / p).lexically_normal(); };
    c.out = resolve(d.at("out").get<std::string>());
    c.paths.news = resolve(get_string(d, "paths", "news"));
    c.paths.behaviors_train = resolve(get_string(d, "paths", "behaviors_train"));
    c.paths.behaviors_val = resolve(get_string(d, "paths", "behaviors_val"));
    c.paths.behaviors_test = resolve(get_string(d, "paths", "behaviors_test"));

    c.min_count = get_size(d, "vocab", "min_count");
    if (c.min_count < 1) throw ConfigError("vocab.min_count must be >= 1");

    c.mft.d = get_size(d, "mft", "d");
    c.mft.layers = get_size(d, "mft", "layers");
    c.mft.heads = get_size(d, "mft", "heads");
    c.mft.limits = {get_size(d, "mft", "title_len"), get_size(d, "mft", "category_len"),
                    get_size(d, "mft", "abstract_len")};
    c.mft.mask_ratio = get_double(d, "mft", "mask_ratio");
    c.mft.fa_negative_ratio = get_double(d, "mft", "fa_negative_ratio");
    auto probe = c.mft;
    probe.vocab_size = corpus::kSpecialCount;
    probe.validate();

    c.pretrain.epochs = get_size(d, "pretrain", "epochs");
    c.pretrain.batch_size = get_size(d, "pretrain", "batch_size");
    c.pretrain.adam.lr = get_double(d, "pretrain", "lr");
    c.pretrain.validation_fraction = get_double(d, "pretrain", "validation_fraction");
    c.pretrain.seed = util::mix_seed(c.seed, kPretrainStream);
    if (c.pretrain.batch_size < 1) throw ConfigError("pretrain.batch_size must be >= 1");
    if (!(c.pretrain.adam.lr > 0)) throw ConfigError("pretrain.lr must be > 0");
    if (!(c.pretrain.validation_fraction >= 0 && c.pretrain.validation_fraction < 1)) {
      throw ConfigError("pretrain.validation_fraction must lie in [0, 1)");
    }

    auto& t = c.train;
    t.mode = recsys::parse_mode(get_string(d, "train", "mode"));
    t.downstream.kind = recsys::parse_kind(get_string(d, "train", "kind"));
    t.downstream.negatives = get_size(d, "train", "negatives");
    t.downstream.epochs = get_size(d, "train", "epochs");
    t.downstream.batch_size = get_size(d, "train", "batch_size");
    t.downstream.adam.lr = get_double(d, "train", "lr");
    t.downstream.validate_each_epoch = d.at("train").at("validate_each_epoch").get<bool>();
    t.downstream.seed = util::mix_seed(c.seed, kTrainStream);
    t.id_dim = get_size(d, "train", "id_dim");
    t.behaviors.max_history = get_size(d, "train", "max_history");
    t.behaviors.unknown_policy = parse_policy(get_string(d, "train", "unknown_news"));
    const auto& m = d.at("train").at("model");
    check_schema(defaults.at("train").at("model"), m, "train.model");
    t.downstream.model = recsys_from_json(m);
    if (t.downstream.negatives < 1) throw ConfigError("train.negatives must be >= 1");
    if (t.downstream.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (t.id_dim < 1) throw ConfigError("train.id_dim must be >= 1");
    if (!(t.downstream.adam.lr > 0)) throw ConfigError("train.lr must be > 0");

    c.profile.batch_size = get_size(d, "profile", "batch_size");
    if (c.profile.batch_size < 1) throw ConfigError("profile.batch_size must be >= 1");
    c.power_kw = get_double(d, "energy", "power_kw");
    c.carbon_g_per_kwh = get_double(d, "energy", "carbon_g_per_kwh");
    if (c.power_kw < 0 || c.carbon_g_per_kwh < 0) throw ConfigError("energy: constants must be non-negative");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const fs::path& config_file, const json& overrides) {
  json user = json::object();
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw ConfigError("config file not found: " + config_file.string());
    try {
      user = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(config_file.string() + ": " + e.what());
    }
  }
  if (!overrides.is_null()) {
    check_schema(default_config_document(), overrides, "");
    user.merge_patch(overrides);
  }
  const auto base = config_file.empty() ? fs::current_path() : fs::absolute(config_file).parent_path();
  return parse_run_config(user, base);
}

fs::path write_synthetic_workspace(const fs::path& dir, std::uint64_t seed) {
  SyntheticConfig sc;
  sc.seed = seed;
  const auto paths = write_synthetic(generate_synthetic(sc), dir);
  // a compact encoder keeps the end-to-end run on the synthetic set to minutes
  json cfg = {{"seed", seed},
              {"out", "run"},
              {"paths",
               {{"news", paths.news.filename().string()},
                {"behaviors_train", paths.behaviors_train.filename().string()},
                {"behaviors_val", paths.behaviors_val.filename().string()},
                {"behaviors_test", paths.behaviors_test.filename().string()}}},
              {"mft", {{"d", 32}, {"layers", 1}, {"heads", 2}, {"title_len", 8}, {"abstract_len", 14}}},
              {"pretrain", {{"epochs", 3}, {"batch_size", 32}}},
              {"train", {{"epochs", 5}, {"batch_size", 32}, {"model", {{"d_model", 32}, {"heads", 2}, {"attention_hidden", 32}, {"mlp", {32, 16}}}}}}};
  const auto file = dir / "config.json";
  write_text(file, cfg.dump(2) + "\n");
  return file;
}

std::string run_name(recsys::NewsSourceMode mode, recsys::ModelKind kind) {
  return std::string(recsys::mode_name(mode)) + "-" + std::string(recsys::kind_name(kind));
}

std::vector<json> read_manifest(const fs::path& out_dir) {
  std::vector<json> lines;
  std::ifstream in(out_dir / kManifest);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      lines.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw FormatError((out_dir / kManifest).string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return lines;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const StaleArtifactError*>(&e) || dynamic_cast<const MissingArtifactError*>(&e)) return 3;
  if (dynamic_cast<const DivergenceError*>(&e)) return 4;
  return 1;
}

// ---- stages ---------------------------------------------------------------

StageResult run_build_vocab(const RunConfig& cfg, const StageOptions& opt) {
  return run_stage(cfg, opt, "build-vocab", cfg.document.at("vocab"), {data_input(cfg.paths.news, "news")},
                   [&](json& stats) {
                     const auto vocab = corpus::build_vocabulary(cfg.paths.news, cfg.min_count);
                     vocab.save(cfg.out / kVocab);
                     stats["vocab_size"] = vocab.size();
                     util::log_info("build-vocab: " + std::to_string(vocab.size()) + " tokens");
                     return std::vector<fs::path>{kVocab};
                   });
}

StageResult run_pretrain(const RunConfig& cfg, const StageOptions& opt) {
  const json settings = {{"mft", cfg.document.at("mft")}, {"pretrain", cfg.document.at("pretrain")}};
  return run_stage(
      cfg, opt, "pretrain", settings, {data_input(cfg.paths.news, "news"), artifact(cfg, kVocab, "build-vocab")},
      [&](json& stats) {
        const auto vocab = corpus::Vocabulary::load(cfg.out / kVocab);
        auto mc = cfg.mft;
        mc.vocab_size = vocab.size();
        const auto corpus = corpus::load_corpus(cfg.paths.news, vocab, mc.limits);
        mft::MftModel model(mc, util::mix_seed(cfg.seed, kMftInitStream));
        std::vector<json> log_lines;
        double seconds = 0;
        auto report = mft::pretrain(model, corpus.articles(), cfg.pretrain, [&](const mft::EpochStats& e) {
          log_lines.push_back({{"epoch", e.epoch},
                               {"train_loss", e.train_loss},
                               {"train_mtp", e.train_mtp},
                               {"train_fa", e.train_fa},
                               {"train_fa_accuracy", e.train_fa_accuracy},
                               {"val_loss", e.val_loss},
                               {"article_visits", e.article_visits},
                               {"steps", e.steps},
                               {"seconds", e.seconds}});
          seconds += e.seconds;
          util::log_info("pretrain: epoch " + std::to_string(e.epoch) + " loss " + std::to_string(e.train_loss) +
                         " val " + std::to_string(e.val_loss));
        });
        compute::save_checkpoint(cfg.out / kMftCheckpoint, model.params());
        write_text(cfg.out / kMftMeta,
                   json{{"config", mft_to_json(mc)}, {"vocab_hash", hash_file(cfg.out / kVocab)}}.dump(2) + "\n");
        write_text(cfg.out / kPretrainLog, jsonl(log_lines));
        stats["train_size"] = report.train_size;
        stats["validation_size"] = report.validation_size;
        stats["train_seconds"] = seconds;
        if (!report.history.empty()) stats["final_loss"] = report.history.back().train_loss;
        return std::vector<fs::path>{kMftCheckpoint, kMftMeta, kPretrainLog};
      });
}

StageResult run_encode(const RunConfig& cfg, const StageOptions& opt) {
  return run_stage(cfg, opt, "encode", json::object(),
                   {data_input(cfg.paths.news, "news"), artifact(cfg, kVocab, "build-vocab"),
                    artifact(cfg, kMftCheckpoint, "pretrain"), artifact(cfg, kMftMeta, "pretrain")},
                   [&](json& stats) {
                     const auto model = load_pretrained(cfg);
                     const auto vocab = corpus::Vocabulary::load(cfg.out / kVocab);
                     const auto corpus = corpus::load_corpus(cfg.paths.news, vocab, model->config().limits);
                     repstore::Provenance prov{util::sha256_file(cfg.out / kMftCheckpoint),
                                               util::sha256_file(cfg.out / kVocab)};
                     repstore::EncoderCallCounter counter;
                     const auto t0 = std::chrono::steady_clock::now();
                     auto built = repstore::build_cache(*model, corpus.articles(), prov, &counter);
                     const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                     repstore::RepresentationCache cache(built.dim(), built.ids(), built.matrix(), prov, now_iso());
                     repstore::save_cache(cache, cfg.out / kCache);
                     stats["entries"] = cache.size();
                     stats["dim"] = cache.dim();
                     stats["cache_build_calls"] = counter.cache_build_calls;
                     stats["build_seconds"] = secs;
                     util::log_info("encode: " + std::to_string(cache.size()) + " vectors in " + std::to_string(secs) +
                                    " s");
                     return std::vector<fs::path>{kCache, std::string(kCache) + ".meta.json"};
                   });
}

StageResult run_train(const RunConfig& cfg, const StageOptions& opt) {
  const auto mode = cfg.train.mode;
  const auto kind = cfg.train.downstream.kind;
  auto inputs = source_inputs(cfg, mode);
  inputs.push_back(data_input(cfg.paths.behaviors_train, "behaviors_train"));
  inputs.push_back(data_input(cfg.paths.behaviors_val, "behaviors_val"));
  const auto dir = run_dir(cfg);
  return run_stage(cfg, opt, "train", train_settings(cfg), inputs, [&](json& stats) {
    const auto vocab = corpus::Vocabulary::load(cfg.out / kVocab);
    const auto corpus = corpus::load_corpus(cfg.paths.news, vocab, corpus_limits(cfg, mode));
    const auto train = load_impressions(cfg.paths.behaviors_train, corpus, cfg.train.behaviors, "behaviors_train");
    const auto val = load_impressions(cfg.paths.behaviors_val, corpus, cfg.train.behaviors, "behaviors_val");
    auto source = make_source(cfg, mode, corpus, cfg.train.id_dim);
    const auto input_dim = source->dim();
    recsys::Recommender rec(kind, std::move(source), cfg.train.downstream.model,
                            util::mix_seed(cfg.seed, kModelInitStream));
    std::vector<json> epochs;
    auto report = rec.train(train, val, cfg.train.downstream, [&](const recsys::DownstreamEpoch& e) {
      json j = {{"epoch", e.epoch},   {"loss", e.loss},   {"samples", e.samples},
                {"steps", e.steps},   {"encoder_calls", e.encoder_calls}, {"seconds", e.seconds}};
      j["val_auc"] = e.val_auc ? json(*e.val_auc) : json(nullptr);
      epochs.push_back(j);
      util::log_info("train " + run_name(mode, kind) + ": epoch " + std::to_string(e.epoch) + " loss " +
                     std::to_string(e.loss) + (e.val_auc ? " val auc " + std::to_string(*e.val_auc) : std::string()));
    });
    compute::save_checkpoint(cfg.out / dir / "model.ckpt", rec.params());
    json meta = {{"mode", recsys::mode_name(mode)},
                 {"kind", recsys::kind_name(kind)},
                 {"input_dim", input_dim},
                 {"news_count", corpus.size()},
                 {"id_dim", cfg.train.id_dim},
                 {"model", recsys_to_json(cfg.train.downstream.model)}};
    write_text(cfg.out / dir / "train.json", meta.dump(2) + "\n");
    write_text(cfg.out / dir / "epochs.jsonl", jsonl(epochs));
    stats["run"] = run_name(mode, kind);
    stats["mode"] = recsys::mode_name(mode);
    stats["kind"] = recsys::kind_name(kind);
    stats["epochs"] = report.epochs.size();
    stats["train_seconds"] = report.train_seconds;
    stats["validation_seconds"] = report.eval_seconds;
    stats["encoder_calls"] = {{"downstream", report.counter.downstream_calls},
                              {"validation", report.eval_encoder_calls}};
    if (!report.epochs.empty()) {
      stats["final_loss"] = report.epochs.back().loss;
      if (report.epochs.back().val_auc) stats["val_auc"] = *report.epochs.back().val_auc;
    }
    return std::vector<fs::path>{dir / "model.ckpt", dir / "train.json", dir / "epochs.jsonl"};
  });
}

StageResult run_evaluate(const RunConfig& cfg, const StageOptions& opt) {
  const auto mode = cfg.train.mode;
  const auto kind = cfg.train.downstream.kind;
  const auto dir = run_dir(cfg);
  auto inputs = source_inputs(cfg, mode);
  inputs.push_back(data_input(cfg.paths.behaviors_test, "behaviors_test"));
  const std::string producer = "train --mode " + std::string(recsys::mode_name(mode)) + " --kind " +
                               std::string(recsys::kind_name(kind));
  inputs.push_back({cfg.out / dir / "model.ckpt", producer, ""});
  inputs.push_back({cfg.out / dir / "train.json", producer, ""});
  json settings = {{"max_history", cfg.train.behaviors.max_history},
                   {"unknown_news", cfg.document.at("train").at("unknown_news")},
                   {"run", run_name(mode, kind)}};
  return run_stage(cfg, opt, "evaluate", settings, inputs, [&](json& stats) {
    const auto meta = read_json(cfg.out / dir / "train.json", producer);
    const auto vocab = corpus::Vocabulary::load(cfg.out / kVocab);
    const auto corpus = corpus::load_corpus(cfg.paths.news, vocab, corpus_limits(cfg, mode));
    if (meta.at("news_count").get<std::size_t>() != corpus.size()) {
      throw StaleArtifactError("news file changed since '" + producer + "'; retrain with --force");
    }
    const auto test = load_impressions(cfg.paths.behaviors_test, corpus, cfg.train.behaviors, "behaviors_test");
    auto source = make_source(cfg, mode, corpus, meta.at("id_dim").get<std::size_t>());
    recsys::Recommender rec(kind, std::move(source), recsys_from_json(meta.at("model")), 0);
    compute::load_checkpoint(cfg.out / dir / "model.ckpt", rec.params());
    const auto calls0 = rec.source().encoder_calls();
    const auto t0 = std::chrono::steady_clock::now();
    const auto metrics = rec.evaluate(test);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json out = {{"run", run_name(mode, kind)}, {"metrics", evalgreen::to_json(metrics)}};
    write_text(cfg.out / dir / "metrics.json", out.dump(2) + "\n");
    stats["run"] = run_name(mode, kind);
    stats["metrics"] = evalgreen::to_json(metrics);
    stats["eval_seconds"] = secs;
    stats["eval_encoder_calls"] = rec.source().encoder_calls() - calls0;
    util::log_info("evaluate " + run_name(mode, kind) + ": auc " + std::to_string(metrics.auc) + " mrr " +
                   std::to_string(metrics.mrr) + " ndcg@5 " + std::to_string(metrics.ndcg5));
    return std::vector<fs::path>{dir / "metrics.json"};
  });
}

StageResult run_profile(const RunConfig& cfg, const StageOptions& opt) {
  json settings = {{"profile", cfg.document.at("profile")},
                   {"max_history", cfg.train.behaviors.max_history},
                   {"unknown_news", cfg.document.at("train").at("unknown_news")}};
  return run_stage(cfg, opt, "profile", settings,
                   {data_input(cfg.paths.news, "news"), data_input(cfg.paths.behaviors_train, "behaviors_train")},
                   [&](json& stats) {
                     std::unordered_set<std::string> known;
                     for (const auto& n : corpus::load_raw_news(cfg.paths.news)) known.insert(n.news_id);
                     const auto loaded = corpus::load_behaviors(
                         cfg.paths.behaviors_train, [&](const std::string& id) { return known.count(id) != 0; },
                         cfg.train.behaviors);
                     const auto r = evalgreen::profile_redundancy(loaded.records, cfg.profile);
                     auto full = evalgreen::to_json(r);
                     full["counts"] = r.epoch_counts;
                     write_text(cfg.out / kRedundancy, full.dump(2) + "\n");
                     write_text(cfg.out / kCdf, evalgreen::cdf_csv(r));
                     stats = evalgreen::to_json(r);
                     util::log_info("profile: mean " + std::to_string(r.mean) + " appearances per news, max " +
                                    std::to_string(r.max_count));
                     return std::vector<fs::path>{kRedundancy, kCdf};
                   });
}

StageResult run_report(const RunConfig& cfg, const StageOptions& opt) {
  // newest successful line per command (and per run for train/evaluate)
  std::map<std::string, json> latest;
  for (const auto& line : read_manifest(cfg.out)) {
    if (line.value("status", "") != "ok") continue;
    const auto cmd = line.at("command").get<std::string>();
    const auto stats = line.value("stats", json::object());
    latest[stats.contains("run") ? cmd + ":" + stats.at("run").get<std::string>() : cmd] = line;
  }
  std::vector<Input> inputs;
  json sources = json::array();
  std::vector<std::string> runs;
  for (const auto& [key, line] : latest) {
    if (line.at("command") != "evaluate") continue;
    const auto run = line.at("stats").at("run").get<std::string>();
    if (!latest.count("train:" + run)) continue;
    runs.push_back(run);
    inputs.push_back({cfg.out / "runs" / run / "metrics.json", "evaluate", ""});
    sources.push_back({{"run", run}, {"train", latest.at("train:" + run).at("config_digest")},
                       {"train_seconds", latest.at("train:" + run).at("stats").at("train_seconds")}});
  }
  if (runs.empty()) throw MissingArtifactError("no evaluated runs in " + (cfg.out / kManifest).string() + "; run 'train' and 'evaluate' first");
  const bool have_encode = latest.count("encode") != 0;
  if (have_encode) sources.push_back({{"encode_seconds", latest.at("encode").at("stats").at("build_seconds")}});
  if (fs::exists(cfg.out / kRedundancy)) inputs.push_back({cfg.out / kRedundancy, "profile", ""});
  const json settings = {{"energy", cfg.document.at("energy")}, {"sources", sources}};

  return run_stage(cfg, opt, "report", settings, inputs, [&](json& stats) {
    json out = {{"energy_constants", {{"p_kw", cfg.power_kw}, {"c_g_per_kwh", cfg.carbon_g_per_kwh}}}};
    json run_rows = json::array();
    std::map<std::string, json> by_run;
    for (const auto& run : runs) {
      const auto& ev = latest.at("evaluate:" + run).at("stats");
      const auto& tr = latest.at("train:" + run).at("stats");
      const auto mode = recsys::parse_mode(tr.at("mode").get<std::string>());
      double seconds = tr.at("train_seconds").get<double>();
      json components = {{"train_seconds", seconds}};
      if (mode == recsys::NewsSourceMode::FrozenCache) {
        if (!have_encode) throw MissingArtifactError("frozen run " + run + " has no 'encode' manifest line");
        const double enc = latest.at("encode").at("stats").at("build_seconds").get<double>();
        components["cache_build_seconds"] = enc;
        seconds += enc;
      }
      const auto auc = ev.at("metrics").at("auc").get<double>();
      const auto energy = evalgreen::energy_report(cfg.power_kw, seconds, cfg.carbon_g_per_kwh,
                                                   seconds > 0 ? std::optional<double>(auc) : std::nullopt);
      json row = {{"run", run},
                  {"mode", tr.at("mode")},
                  {"kind", tr.at("kind")},
                  {"metrics", ev.at("metrics")},
                  {"seconds", components},
                  {"encoder_calls", tr.at("encoder_calls")},
                  {"energy", evalgreen::to_json(energy)}};
      by_run[run] = row;
      run_rows.push_back(row);
    }
    out["runs"] = run_rows;
    json ratios = json::array();
    for (auto kind : {recsys::ModelKind::Matching, recsys::ModelKind::Ranking}) {
      const auto e2e = run_name(recsys::NewsSourceMode::EndToEndText, kind);
      const auto frozen = run_name(recsys::NewsSourceMode::FrozenCache, kind);
      if (!by_run.count(e2e) || !by_run.count(frozen)) continue;
      const auto& a = by_run.at(e2e).at("energy");
      const auto& b = by_run.at(frozen).at("energy");
      const double ca = a.at("co2e_g").get<double>(), cb = b.at("co2e_g").get<double>();
      json r = {{"kind", recsys::kind_name(kind)},
                {"end_to_end_co2e_g", ca},
                {"frozen_co2e_g", cb},
                {"co2e_ratio", cb > 0 ? json(ca / cb) : json(nullptr)},
                {"end_to_end_apc", a.at("apc")},
                {"frozen_apc", b.at("apc")}};
      ratios.push_back(r);
    }
    out["green_ratio"] = ratios;
    if (fs::exists(cfg.out / kRedundancy)) {
      auto red = read_json(cfg.out / kRedundancy, "profile");
      red.erase("counts");
      out["redundancy"] = red;
    }
    write_text(cfg.out / kReport, out.dump(2) + "\n");
    stats["runs"] = runs;
    stats["green_ratio"] = ratios;
    for (const auto& r : ratios) {
      if (r.at("co2e_ratio").is_number()) {
        util::log_info("report: " + r.at("kind").get<std::string>() + " end-to-end / frozen CO2e = " +
                       std::to_string(r.at("co2e_ratio").get<double>()));
      }
    }
    return std::vector<fs::path>{kReport};
  });
}

}  // namespace oleo::pipeline
