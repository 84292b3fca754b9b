// SPDX-License-Identifier: Apache-2.0
#include "oleo/repstore/cache.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>

#include "json.hpp"
#include "oleo/error.hpp"
#include "oleo/util/binary_io.hpp"

namespace oleo::repstore {

namespace {

constexpr char kMagic[4] = {'O', 'L', 'E', 'C'};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::filesystem::path sidecar(const std::filesystem::path& p) { return p.string() + ".meta.json"; }

}  // namespace

RepresentationCache::RepresentationCache(std::size_t dim, std::vector<std::string> ids, std::vector<double> matrix,
                                         Provenance provenance, std::string created_at)
    : dim_(dim), ids_(std::move(ids)), matrix_(std::move(matrix)), provenance_(provenance),
      created_at_(std::move(created_at)) {
  if (dim_ == 0) throw ShapeError("cache: dimension must be positive");
  if (matrix_.size() != ids_.size() * dim_) {
    throw ShapeError("cache: " + std::to_string(matrix_.size()) + " values for " + std::to_string(ids_.size()) +
                     " entries of dimension " + std::to_string(dim_));
  }
  for (std::size_t i = 0; i < matrix_.size(); ++i) {
    if (!std::isfinite(matrix_[i])) throw NonFiniteError("cache: non-finite component in entry " + ids_[i / dim_]);
  }
  std::vector<std::string> dups;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == kPadNewsId) throw ConfigError("cache: id " + kPadNewsId + " is reserved");
    if (!index_.emplace(ids_[i], i).second) dups.push_back(ids_[i]);
  }
  if (!dups.empty()) {
    std::string msg = "cache: duplicate news ids:";
    for (const auto& d : dups) msg += " " + d;
    throw ConfigError(msg);
  }
}

std::size_t RepresentationCache::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw LookupError("cache: unknown news id " + id);
  return it->second;
}

std::span<const double> RepresentationCache::vector(const std::string& id) const {
  return std::span(matrix_).subspan(index_of(id) * dim_, dim_);
}

compute::Tensor RepresentationCache::lookup(std::span<const std::string> ids) const {
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) rows.push_back(id == kPadNewsId ? kPadRow : index_of(id));
  return lookup_rows(rows);
}

compute::Tensor RepresentationCache::lookup_rows(std::span<const std::size_t> rows) const {
  std::vector<double> out(rows.size() * dim_, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] == kPadRow) continue;
    if (rows[i] >= ids_.size()) throw LookupError("cache: row " + std::to_string(rows[i]) + " out of range");
    std::memcpy(out.data() + i * dim_, matrix_.data() + rows[i] * dim_, dim_ * sizeof(double));
  }
  return compute::Tensor::from({rows.size(), dim_}, std::move(out));
}

bool RepresentationCache::operator==(const RepresentationCache& o) const {
  return dim_ == o.dim_ && ids_ == o.ids_ && provenance_.model_hash == o.provenance_.model_hash &&
         provenance_.vocab_hash == o.provenance_.vocab_hash && created_at_ == o.created_at_ &&
         matrix_.size() == o.matrix_.size() &&
         std::memcmp(matrix_.data(), o.matrix_.data(), matrix_.size() * sizeof(double)) == 0;
}

RepresentationCache build_cache(const mft::MftModel& model, std::span<const corpus::NewsArticle> articles,
                                const Provenance& provenance, EncoderCallCounter* counter) {
  std::unordered_map<std::string, std::size_t> seen;
  std::vector<std::string> dups;
  for (const auto& a : articles) {
    if (seen[a.news_id]++ == 1) dups.push_back(a.news_id);
  }
  if (!dups.empty()) {
    std::string msg = "build_cache: duplicate news ids in corpus:";
    for (const auto& d : dups) msg += " " + d;
    throw ConfigError(msg);
  }
  const auto d = model.config().d;
  const auto before = model.forward_calls();
  std::vector<std::string> ids;
  std::vector<double> matrix;
  ids.reserve(articles.size());
  matrix.reserve(articles.size() * d);
  for (const auto& a : articles) {
    const auto seq = mft::assemble(a, model.config(), mft::assemble(a, model.config()).effective_length);
    const auto h = model.encode(seq);
    ids.push_back(a.news_id);
    matrix.insert(matrix.end(), h.begin(), h.end());
  }
  if (counter) counter->cache_build_calls += model.forward_calls() - before;
  return {d, std::move(ids), std::move(matrix), provenance, utc_now()};
}

std::vector<double> encode_at_serve_time(const mft::MftModel& model, const corpus::NewsArticle& article,
                                         EncoderCallCounter& counter) {
  const auto before = model.forward_calls();
  auto h = model.encode(mft::assemble(article, model.config(), mft::assemble(article, model.config()).effective_length));
  counter.serve_calls += model.forward_calls() - before;
  return h;
}

std::vector<std::uint8_t> encode_cache(const RepresentationCache& cache) {
  util::ByteWriter w;
  w.put_raw(std::string_view(kMagic, 4));
  w.put_u32(kCacheVersion);
  w.put_u32(static_cast<std::uint32_t>(cache.dim()));
  w.put_u64(cache.size());
  w.put_bytes(cache.provenance().model_hash);
  w.put_bytes(cache.provenance().vocab_hash);
  const auto d = cache.dim();
  for (std::size_t i = 0; i < cache.size(); ++i) {
    w.put_u32(static_cast<std::uint32_t>(cache.ids()[i].size()));
    w.put_raw(cache.ids()[i]);
    for (std::size_t j = 0; j < d; ++j) w.put_f64(cache.matrix()[i * d + j]);
  }
  return w.bytes();
}

RepresentationCache decode_cache(std::span<const std::uint8_t> bytes, const std::string& context) {
  util::ByteReader r(bytes, context);
  if (r.get_string(4, "magic") != std::string_view(kMagic, 4)) throw FormatError(context + ": bad magic");
  const auto version = r.get_u32("version");
  if (version != kCacheVersion) throw FormatError(context + ": unsupported version " + std::to_string(version));
  const auto d = r.get_u32("dimension");
  const auto count = r.get_u64("entry count");
  Provenance prov;
  auto mh = r.get_bytes(32, "model hash");
  std::copy(mh.begin(), mh.end(), prov.model_hash.begin());
  auto vh = r.get_bytes(32, "vocab hash");
  std::copy(vh.begin(), vh.end(), prov.vocab_hash.begin());
  // each entry needs at least 4 + 8d bytes; reject absurd counts before allocating
  if (count > r.remaining() / (4 + 8ULL * d)) {
    throw FormatError(context + ": truncated, header declares " + std::to_string(count) + " entries");
  }
  std::vector<std::string> ids;
  std::vector<double> matrix;
  ids.reserve(count);
  matrix.reserve(count * d);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = r.get_u32("id length");
    ids.push_back(r.get_string(len, "id"));
    for (std::uint32_t j = 0; j < d; ++j) matrix.push_back(r.get_f64("vector payload"));
  }
  if (r.remaining() != 0) throw FormatError(context + ": " + std::to_string(r.remaining()) + " trailing bytes");
  return {d, std::move(ids), std::move(matrix), prov};
}

void save_cache(const RepresentationCache& cache, const std::filesystem::path& path) {
  util::write_file_bytes(path, encode_cache(cache));
  nlohmann::json meta = {{"created_at", cache.created_at()},
                         {"dim", cache.dim()},
                         {"entries", cache.size()},
                         {"model_hash", util::to_hex(cache.provenance().model_hash)},
                         {"vocab_hash", util::to_hex(cache.provenance().vocab_hash)}};
  const auto text = meta.dump(2) + "\n";
  util::write_file_bytes(sidecar(path), std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

RepresentationCache load_cache(const std::filesystem::path& path, const LoadExpectations& expect) {
  if (!std::filesystem::exists(path)) {
    throw MissingArtifactError("representation cache " + path.string() + " not found; run `encode` first");
  }
  auto cache = decode_cache(util::read_file_bytes(path), path.string());
  const auto& prov = cache.provenance();
  auto check = [&](const std::optional<util::Digest>& want, const util::Digest& have, const char* what) {
    if (want && *want != have) {
      throw StaleArtifactError("representation cache " + path.string() + " was built from " + what + " " +
                               util::to_hex(have) + " but " + util::to_hex(*want) +
                               " is expected; rebuild it with `encode --force`");
    }
  };
  check(expect.model_hash, prov.model_hash, "checkpoint");
  check(expect.vocab_hash, prov.vocab_hash, "vocabulary");
  if (expect.entry_count && *expect.entry_count != cache.size()) {
    throw StaleArtifactError("representation cache " + path.string() + " holds " + std::to_string(cache.size()) +
                             " entries but the corpus has " + std::to_string(*expect.entry_count) +
                             "; rebuild it with `encode --force`");
  }
  std::string created;
  if (std::ifstream in(sidecar(path)); in) {
    try {
      created = nlohmann::json::parse(in).value("created_at", "");
    } catch (const nlohmann::json::exception&) {
      throw FormatError(sidecar(path).string() + ": malformed JSON");
    }
  }
  return {cache.dim(), cache.ids(), cache.matrix(), prov, std::move(created)};
}

}  // namespace oleo::repstore
