#include "glyphforge/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "glyphforge/errors.hpp"
#include "glyphforge/io_util.hpp"

namespace glyphforge {
namespace {

using nlohmann::json;

constexpr std::string_view kCacheMagic = "EMB1";

RecordKind parse_kind(const std::string& s, std::size_t line) {
  if (s == "image") return RecordKind::image;
  if (s == "sketch") return RecordKind::sketch;
  if (s == "pictograph") return RecordKind::pictograph;
  throw ManifestError(line, "invalid kind '" + s + "' (expected image, sketch or pictograph)");
}

WritingSystem parse_system(const std::string& s, std::size_t line) {
  if (s == "hieroglyph") return WritingSystem::hieroglyph;
  if (s == "oracle") return WritingSystem::oracle;
  if (s == "protocuneiform") return WritingSystem::protocuneiform;
  throw ManifestError(line, "invalid system '" + s + "' (expected hieroglyph, oracle or protocuneiform)");
}

std::string required_string(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ManifestError(line, std::string("missing field '") + key + "'");
  if (!it->is_string()) throw ManifestError(line, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

bool is_numeric_sign(const std::string& name) {
  return name.size() >= 2 && name[0] == 'N' && std::isdigit(static_cast<unsigned char>(name[1]));
}

}  // namespace

const char* to_string(RecordKind kind) {
  switch (kind) {
    case RecordKind::image: return "image";
    case RecordKind::sketch: return "sketch";
    case RecordKind::pictograph: return "pictograph";
  }
  return "?";
}

const char* to_string(WritingSystem system) {
  switch (system) {
    case WritingSystem::hieroglyph: return "hieroglyph";
    case WritingSystem::oracle: return "oracle";
    case WritingSystem::protocuneiform: return "protocuneiform";
  }
  return "?";
}

std::vector<CorpusRecord> parse_manifest(std::string_view text, std::vector<std::string>* warnings) {
  static const std::set<std::string> known = {"path", "category", "kind", "sketchability", "system", "sign_name"};
  std::vector<CorpusRecord> records;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (std::all_of(raw.begin(), raw.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    json obj;
    try {
      obj = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw ManifestError(line, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ManifestError(line, "expected a JSON object");

    CorpusRecord r;
    r.path = required_string(obj, "path", line);
    r.category = required_string(obj, "category", line);
    if (r.category.empty()) throw ManifestError(line, "category must not be empty");
    r.kind = parse_kind(required_string(obj, "kind", line), line);
    if (auto it = obj.find("sketchability"); it != obj.end() && !it->is_null()) {
      if (!it->is_number_integer()) throw ManifestError(line, "sketchability must be an integer");
      const auto s = it->get<long long>();
      if (s < 1 || s > 5) {
        throw ManifestError(line, "sketchability " + std::to_string(s) + " violates constraint 1 <= sketchability <= 5");
      }
      r.sketchability = static_cast<int>(s);
    }
    if (auto it = obj.find("system"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) throw ManifestError(line, "system must be a string");
      r.system = parse_system(it->get<std::string>(), line);
    }
    if (auto it = obj.find("sign_name"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) throw ManifestError(line, "sign_name must be a string");
      r.sign_name = it->get<std::string>();
    }
    if (r.kind == RecordKind::pictograph && r.system == WritingSystem::protocuneiform && !r.sign_name) {
      throw ManifestError(line, "protocuneiform pictographs require sign_name");
    }
    if (warnings) {
      for (const auto& [key, value] : obj.items()) {
        if (!known.count(key)) warnings->push_back("manifest line " + std::to_string(line) + ": ignoring unknown field '" + key + "'");
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<CorpusRecord> load_manifest(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  return parse_manifest(read_file(path), warnings);
}

std::string format_manifest(const std::vector<CorpusRecord>& records) {
  std::string out;
  for (const CorpusRecord& r : records) {
    json obj = {{"path", r.path.generic_string()}, {"category", r.category}, {"kind", to_string(r.kind)}};
    if (r.sketchability) obj["sketchability"] = *r.sketchability;
    if (r.system) obj["system"] = to_string(*r.system);
    if (r.sign_name) obj["sign_name"] = *r.sign_name;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::vector<CorpusRecord> filter_records(const std::vector<CorpusRecord>& records, const RecordFilter& filter) {
  std::vector<CorpusRecord> out;
  for (const CorpusRecord& r : records) {
    if (filter.categories && !filter.categories->count(r.category)) continue;
    if (filter.kinds && !filter.kinds->count(r.kind)) continue;
    if (filter.systems && (!r.system || !filter.systems->count(*r.system))) continue;
    if (filter.min_sketchability && (!r.sketchability || *r.sketchability < *filter.min_sketchability)) continue;
    if (filter.max_sketchability && (!r.sketchability || *r.sketchability > *filter.max_sketchability)) continue;
    if (r.sign_name) {
      const std::string& name = *r.sign_name;
      const bool prefixed = std::any_of(filter.excluded_sign_prefixes.begin(), filter.excluded_sign_prefixes.end(),
                                        [&](const std::string& p) { return name.rfind(p, 0) == 0; });
      if (prefixed) continue;
      if (!filter.compound_markers.empty() && name.find_first_of(filter.compound_markers) != std::string::npos) continue;
      if (filter.exclude_numeric && is_numeric_sign(name)) continue;
    }
    out.push_back(r);
  }
  return out;
}

std::string encode_cache(const EmbeddingCache& cache) {
  if (cache.ids.size() != cache.vectors.size()) throw ContractError("cache ids and vectors differ in count");
  std::set<std::string> seen;
  ByteWriter w;
  w.raw(kCacheMagic);
  w.u32(static_cast<std::uint32_t>(cache.ids.size()));
  w.u32(cache.dimension);
  for (std::size_t i = 0; i < cache.ids.size(); ++i) {
    if (!seen.insert(cache.ids[i]).second) throw ContractError("duplicate cache id '" + cache.ids[i] + "'");
    if (cache.vectors[i].size() != cache.dimension) throw ContractError("cache vector '" + cache.ids[i] + "' has wrong dimension");
    w.u32(static_cast<std::uint32_t>(cache.ids[i].size()));
    w.raw(cache.ids[i]);
    for (float v : cache.vectors[i]) w.f32(v);
  }
  return w.take();
}

EmbeddingCache decode_cache(std::string_view bytes) {
  ByteReader r(bytes);
  if (bytes.size() < kCacheMagic.size() || r.raw(kCacheMagic.size()) != kCacheMagic) {
    throw FormatError("embedding cache has bad magic");
  }
  EmbeddingCache cache;
  const std::uint32_t count = r.u32();
  cache.dimension = r.u32();
  // Every record needs at least its length prefix and vector.
  const std::size_t min_record = 4 + static_cast<std::size_t>(cache.dimension) * 4;
  if (count > 0 && r.remaining() / min_record < count) {
    throw LengthError("embedding cache declares " + std::to_string(count) + " records but only " +
                      std::to_string(r.remaining()) + " bytes remain");
  }
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string id(r.raw(r.u32()));
    if (!seen.insert(id).second) throw FormatError("embedding cache repeats id '" + id + "'");
    std::vector<float> v(cache.dimension);
    for (float& x : v) x = r.f32();
    cache.ids.push_back(std::move(id));
    cache.vectors.push_back(std::move(v));
  }
  if (!r.done()) throw LengthError("embedding cache has " + std::to_string(r.remaining()) + " trailing bytes");
  return cache;
}

void save_cache(const EmbeddingCache& cache, const std::filesystem::path& path) {
  write_file_atomic(path, encode_cache(cache));
}

EmbeddingCache load_cache(const std::filesystem::path& path) { return decode_cache(read_file(path)); }

EmbeddingCache to_cache(const EmbeddingSet& set, const std::string& encoder) {
  validate(set);
  EmbeddingCache cache;
  cache.encoder = encoder;
  cache.dimension = static_cast<std::uint32_t>(set.dimension());
  for (const Embedding& e : set.items) {
    cache.ids.push_back(e.id);
    cache.vectors.emplace_back(e.values.begin(), e.values.end());
  }
  return cache;
}

EmbeddingSet to_embedding_set(const EmbeddingCache& cache, const std::vector<CorpusRecord>& records) {
  std::map<std::string, std::string> categories;
  for (const CorpusRecord& r : records) categories[r.id()] = r.category;
  EmbeddingSet set;
  for (std::size_t i = 0; i < cache.ids.size(); ++i) {
    Embedding e;
    e.id = cache.ids[i];
    e.values.assign(cache.vectors[i].begin(), cache.vectors[i].end());
    if (auto it = categories.find(e.id); it != categories.end()) e.category = it->second;
    e.degenerate = l2_norm(e.values) == 0.0;
    set.items.push_back(std::move(e));
  }
  return set;
}

}  // namespace glyphforge
