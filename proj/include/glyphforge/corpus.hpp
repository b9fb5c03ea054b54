#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "glyphforge/analysis.hpp"

namespace glyphforge {

enum class RecordKind { image, sketch, pictograph };
enum class WritingSystem { hieroglyph, oracle, protocuneiform };

struct CorpusRecord {
  std::filesystem::path path;
  std::string category;
  RecordKind kind = RecordKind::image;
  std::optional<int> sketchability;  // 1 (easy) .. 5 (hard)
  std::optional<WritingSystem> system;
  std::optional<std::string> sign_name;

  /// Identifier used for embeddings: the path as written in the manifest.
  std::string id() const { return path.generic_string(); }
  friend bool operator==(const CorpusRecord&, const CorpusRecord&) = default;
};

const char* to_string(RecordKind kind);
const char* to_string(WritingSystem system);

/// One JSON object per line; blank lines are skipped. Relative paths are kept
/// as written. Unknown fields are reported through `warnings` when given.
std::vector<CorpusRecord> load_manifest(const std::filesystem::path& path,
                                        std::vector<std::string>* warnings = nullptr);
std::vector<CorpusRecord> parse_manifest(std::string_view text, std::vector<std::string>* warnings = nullptr);
std::string format_manifest(const std::vector<CorpusRecord>& records);

struct RecordFilter {
  std::optional<std::set<std::string>> categories;
  std::optional<std::set<RecordKind>> kinds;
  std::optional<std::set<WritingSystem>> systems;
  std::optional<int> min_sketchability;
  /// Records without a sketchability rating are dropped when this is set.
  std::optional<int> max_sketchability;
  /// Sign names starting with any of these are dropped (e.g. catalog "ZATU" entries).
  std::vector<std::string> excluded_sign_prefixes;
  /// Sign names containing any of these characters are dropped (compound signs).
  std::string compound_markers;
  /// Drop numeric signs: names of the form N<digits>...
  bool exclude_numeric = false;
};

/// Stable-order subset of records satisfying every set criterion.
std::vector<CorpusRecord> filter_records(const std::vector<CorpusRecord>& records, const RecordFilter& filter);

struct EmbeddingCache {
  std::string encoder;  // not stored in the binary file; filled by callers
  std::uint32_t dimension = 0;
  std::vector<std::string> ids;
  std::vector<std::vector<float>> vectors;

  friend bool operator==(const EmbeddingCache&, const EmbeddingCache&) = default;
};

/// "EMB1" | count u32 | dim u32 | per record: id_len u32 | id bytes | dim x f32, little endian.
std::string encode_cache(const EmbeddingCache& cache);
/// Throws FormatError on bad magic and LengthError on truncation; never returns a partial cache.
EmbeddingCache decode_cache(std::string_view bytes);

void save_cache(const EmbeddingCache& cache, const std::filesystem::path& path);
EmbeddingCache load_cache(const std::filesystem::path& path);

EmbeddingCache to_cache(const EmbeddingSet& set, const std::string& encoder);
/// Categories are attached from records whose id matches, when given.
EmbeddingSet to_embedding_set(const EmbeddingCache& cache, const std::vector<CorpusRecord>& records = {});

}  // namespace glyphforge
