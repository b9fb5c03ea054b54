#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "glyphforge/analysis.hpp"
#include "glyphforge/corpus.hpp"
#include "glyphforge/encoder.hpp"
#include "glyphforge/errors.hpp"
#include "glyphforge/image_io.hpp"
#include "glyphforge/optimizer.hpp"
#include "glyphforge/raster.hpp"
#include "glyphforge/rng.hpp"

namespace glyphforge::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered key/value pairs printed as "# key = value" so a run can be reproduced.
class EffectiveConfig {
 public:
  template <typename T>
  void set(const std::string& key, const T& value) {
    std::ostringstream s;
    s.precision(17);
    s << value;
    entries_.emplace_back(key, s.str());
  }

  std::string header() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += "# " + k + " = " + v + "\n";
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string resolve_encoder_selector(const std::string& selector) {
  if (selector == "bridge") {
    const char* env = std::getenv("GLYPHFORGE_BRIDGE");
    if (env == nullptr || *env == '\0') throw UsageError("--encoder bridge needs GLYPHFORGE_BRIDGE or bridge:<address>");
    return std::string("bridge:") + env;
  }
  if (selector != "builtin-semantic" && selector != "builtin-perceptual" && selector.rfind("bridge:", 0) != 0) {
    throw UsageError("unknown encoder '" + selector + "'");
  }
  return selector;
}

fs::path resolve_path(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

Tensor rdm_tensor(const Rdm& rdm) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(rdm.size()), static_cast<std::uint32_t>(rdm.size())};
  t.values.assign(rdm.values.begin(), rdm.values.end());
  return t;
}

std::map<std::string, CorpusRecord> records_by_id(const std::vector<CorpusRecord>& records) {
  std::map<std::string, CorpusRecord> out;
  for (const auto& r : records) out[r.id()] = r;
  return out;
}

/// "A sketch of a(n) {}" with the article resolved for the class name.
std::string make_prompt(const std::string& tmpl, const std::string& name) {
  std::string out = tmpl;
  const bool vowel = !name.empty() && std::string("aeiouAEIOU").find(name.front()) != std::string::npos;
  if (auto pos = out.find("a(n)"); pos != std::string::npos) out.replace(pos, 4, vowel ? "an" : "a");
  if (auto pos = out.find("{}"); pos != std::string::npos) out.replace(pos, 2, name);
  return out;
}

// ---------------------------------------------------------------------------

struct SketchArgs {
  std::string input;
  int strokes = 16;
  std::size_t iters = 1500;
  std::string encoder = "builtin-semantic";
  std::uint64_t seed = 0;
  std::string out;
  double step_size = 1.0;
  double stroke_width = 3.0;
  std::size_t checkpoint_every = 250;
  double temperature = 0.3;
  double sigma = 5.0;
  double window_frac = 0.10;
  int border_margin = -1;
  std::size_t flatten_samples = 64;
  double aa_halfwidth = 1.0;
  int canvas = 224;
  std::string optimizer = "adam";
};

int cmd_sketch(const SketchArgs& a, std::ostream& out, std::ostream& err) {
  PipelineConfig cfg;
  cfg.spec.n_strokes = a.strokes;
  cfg.spec.canvas = {a.canvas, a.canvas};
  cfg.spec.stroke_width = a.stroke_width;
  cfg.sampler.temperature = a.temperature;
  cfg.sampler.suppression_sigma = a.sigma;
  cfg.sampler.window_frac = a.window_frac;
  if (a.border_margin >= 0) cfg.sampler.border_margin = a.border_margin;
  cfg.raster.flatten_samples = a.flatten_samples;
  cfg.raster.aa_halfwidth = a.aa_halfwidth;
  cfg.optimize.iterations = a.iters;
  cfg.optimize.step_size = a.step_size;
  cfg.optimize.checkpoint_every = a.checkpoint_every;
  cfg.optimize.seed = a.seed;
  if (a.optimizer == "adam") {
    cfg.optimize.rule = UpdateRule::adam;
  } else if (a.optimizer == "gd") {
    cfg.optimize.rule = UpdateRule::gradient_descent;
  } else {
    throw UsageError("--optimizer must be adam or gd");
  }

  const std::string selector = resolve_encoder_selector(a.encoder);
  EffectiveConfig ec;
  ec.set("subcommand", "sketch");
  ec.set("input", a.input);
  ec.set("encoder", selector);
  ec.set("seed", a.seed);
  ec.set("strokes", a.strokes);
  ec.set("k_points", cfg.spec.k_points);
  ec.set("canvas", std::to_string(a.canvas) + "x" + std::to_string(a.canvas));
  ec.set("stroke_width", a.stroke_width);
  ec.set("temperature", a.temperature);
  ec.set("suppression_sigma", a.sigma);
  ec.set("border_margin", resolved_border_margin(cfg.sampler, a.canvas, a.canvas));
  ec.set("window_frac", a.window_frac);
  ec.set("walk_step", cfg.sampler.walk_step);
  ec.set("flatten_samples", a.flatten_samples);
  ec.set("aa_halfwidth", a.aa_halfwidth);
  ec.set("iterations", a.iters);
  ec.set("optimizer", a.optimizer);
  ec.set("step_size", a.step_size);
  ec.set("beta1", cfg.optimize.beta1);
  ec.set("beta2", cfg.optimize.beta2);
  ec.set("epsilon", cfg.optimize.epsilon);
  ec.set("checkpoint_every", a.checkpoint_every);
  ec.set("out", a.out);
  out << ec.header();

  auto encoder = make_encoder(selector);
  const RasterImage image = load_image(a.input);
  const PipelineResult result = full_pipeline(image, *encoder, cfg);
  for (const auto& w : result.trace.warnings) err << "warning: " << w << "\n";

  fs::create_directories(a.out);
  write_pipeline_artifacts(result, cfg.raster, a.out);
  write_file_atomic(fs::path(a.out) / "config.txt", ec.header());
  out << "initial_loss " << fmt(result.trace.losses.front()) << "\n";
  out << "final_loss " << fmt(result.trace.losses.back()) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EmbedArgs {
  std::string manifest;
  std::string out;
  std::string encoder = "builtin-semantic";
  std::string base_dir;
};

int cmd_embed(const EmbedArgs& a, std::ostream& out, std::ostream& err) {
  const std::string selector = resolve_encoder_selector(a.encoder);
  EffectiveConfig ec;
  ec.set("subcommand", "embed");
  ec.set("manifest", a.manifest);
  ec.set("encoder", selector);
  ec.set("out", a.out);
  out << ec.header();

  std::vector<std::string> warnings;
  const auto records = load_manifest(a.manifest, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  const fs::path base = a.base_dir.empty() ? fs::path(a.manifest).parent_path() : fs::path(a.base_dir);

  auto encoder = make_encoder(selector);
  EmbeddingSet set;
  for (const auto& r : records) {
    Embedding e = encoder->embed_image(load_image(resolve_path(base, r.path)));
    e.id = r.id();
    e.category = r.category;
    if (e.degenerate) err << "warning: degenerate embedding for " << e.id << "\n";
    set.items.push_back(std::move(e));
  }
  save_cache(to_cache(set, encoder->descriptor().name), a.out);
  out << "embedded " << set.size() << " records, dim " << encoder->descriptor().embedding_dim << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ClassifyArgs {
  std::string sketches;
  std::string manifest;
  std::string labels;
  std::string prompt = "A sketch of a(n) {}";
  std::string encoder;
  std::string out;
};

int cmd_classify(const ClassifyArgs& a, std::ostream& out, std::ostream&) {
  const auto records = load_manifest(a.manifest);
  const auto by_id = records_by_id(records);
  const EmbeddingSet sketches = to_embedding_set(load_cache(a.sketches), records);

  std::set<std::string> categories;
  for (const auto& r : records) categories.insert(r.category);

  EmbeddingSet labels;
  EffectiveConfig ec;
  ec.set("subcommand", "classify");
  ec.set("sketches", a.sketches);
  ec.set("manifest", a.manifest);
  if (!a.labels.empty()) {
    ec.set("labels", a.labels);
    labels = to_embedding_set(load_cache(a.labels));
  } else {
    if (a.encoder.empty()) throw UsageError("classify needs --labels or a text-capable --encoder");
    const std::string selector = resolve_encoder_selector(a.encoder);
    ec.set("encoder", selector);
    ec.set("prompt", a.prompt);
    auto encoder = make_encoder(selector);
    for (const auto& c : categories) {
      Embedding e = encoder->embed_text(make_prompt(a.prompt, c));
      e.id = c;
      labels.items.push_back(std::move(e));
    }
  }
  out << ec.header();
  const std::size_t k = std::min<std::size_t>(3, labels.size());

  struct Tally {
    std::size_t n = 0, top1 = 0, top3 = 0;
  };
  std::map<std::pair<std::string, int>, Tally> table;
  std::string preds = "id,category,sketchability,rank1,rank2,rank3\n";
  for (const auto& s : sketches.items) {
    const auto it = by_id.find(s.id);
    if (it == by_id.end()) throw std::runtime_error("sketch '" + s.id + "' is not in the manifest");
    const int level = it->second.sketchability.value_or(0);
    const auto ranked = zero_shot_classify(s, labels, k);
    const std::string& truth = it->second.category;
    const bool hit1 = ranked.front().id == truth;
    const bool hit3 = std::any_of(ranked.begin(), ranked.end(), [&](const RankedLabel& l) { return l.id == truth; });
    for (auto key : {std::pair{truth, level}, std::pair{truth, -1}, std::pair{std::string("all"), level},
                     std::pair{std::string("all"), -1}}) {
      Tally& t = table[key];
      ++t.n;
      t.top1 += hit1;
      t.top3 += hit3;
    }
    preds += csv_escape(s.id) + "," + csv_escape(truth) + "," + std::to_string(level);
    for (std::size_t i = 0; i < 3; ++i) preds += "," + (i < ranked.size() ? csv_escape(ranked[i].id) : "");
    preds += "\n";
  }
  std::string csv = "category,sketchability,n,top1,top3\n";
  for (const auto& [key, t] : table) {
    csv += csv_escape(key.first) + "," + (key.second < 0 ? "all" : std::to_string(key.second)) + "," +
           std::to_string(t.n) + "," + fmt(static_cast<double>(t.top1) / t.n) + "," +
           fmt(static_cast<double>(t.top3) / t.n) + "\n";
  }
  fs::create_directories(a.out);
  write_file_atomic(fs::path(a.out) / "classification.csv", csv);
  write_file_atomic(fs::path(a.out) / "predictions.csv", preds);
  out << csv;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct RsaArgs {
  std::string images;
  std::string sketches;
  std::size_t perms = 5000;
  std::uint64_t seed = 0;
  std::string out;
};

/// Pairs two caches by file stem of their ids, in image-cache order.
std::pair<EmbeddingSet, EmbeddingSet> pair_by_stem(const EmbeddingSet& images, const EmbeddingSet& sketches) {
  std::map<std::string, const Embedding*> sketch_by_stem;
  for (const auto& s : sketches.items) {
    const std::string stem = fs::path(s.id).stem().string();
    if (!sketch_by_stem.emplace(stem, &s).second) throw std::runtime_error("duplicate sketch stem '" + stem + "'");
  }
  std::pair<EmbeddingSet, EmbeddingSet> out;
  std::set<std::string> seen;
  for (const auto& img : images.items) {
    const std::string stem = fs::path(img.id).stem().string();
    if (!seen.insert(stem).second) throw std::runtime_error("duplicate image stem '" + stem + "'");
    const auto it = sketch_by_stem.find(stem);
    if (it == sketch_by_stem.end()) throw std::runtime_error("no sketch for image '" + img.id + "'");
    Embedding a = img, b = *it->second;
    a.id = b.id = stem;
    out.first.items.push_back(std::move(a));
    out.second.items.push_back(std::move(b));
  }
  if (out.second.size() != sketches.size()) throw std::runtime_error("some sketches have no matching image");
  return out;
}

int cmd_rsa(const RsaArgs& a, std::ostream& out, std::ostream&) {
  EffectiveConfig ec;
  ec.set("subcommand", "rsa");
  ec.set("images", a.images);
  ec.set("sketches", a.sketches);
  ec.set("perms", a.perms);
  ec.set("seed", a.seed);
  out << ec.header();

  const auto [images, sketches] = pair_by_stem(to_embedding_set(load_cache(a.images)),
                                               to_embedding_set(load_cache(a.sketches)));
  const Rdm image_rdm = build_rdm(images);
  const Rdm sketch_rdm = build_rdm(sketches);
  const Rdm delta = delta_rdm(sketch_rdm, image_rdm);
  const PermutationReport rsa = rsa_permutation(image_rdm, sketch_rdm, a.perms, a.seed);
  const PairedCosineResult paired = mean_paired_cosine(images, sketches, a.perms, a.seed);

  fs::create_directories(a.out);
  write_tensor(rdm_tensor(image_rdm), fs::path(a.out) / "rdm_images.f32t");
  write_tensor(rdm_tensor(sketch_rdm), fs::path(a.out) / "rdm_sketches.f32t");
  write_tensor(rdm_tensor(delta), fs::path(a.out) / "delta_rdm.f32t");
  std::string ids;
  for (const auto& id : image_rdm.ids) ids += id + "\n";
  write_file_atomic(fs::path(a.out) / "rdm_ids.txt", ids);
  const std::string csv = "statistic,value,p_value,permutations,seed\nspearman_rho," + fmt(rsa.observed) + "," +
                          fmt(rsa.p_value) + "," + std::to_string(a.perms) + "," + std::to_string(a.seed) +
                          "\nmean_paired_cosine," + fmt(paired.mean) + "," + fmt(paired.test.p_value) + "," +
                          std::to_string(a.perms) + "," + std::to_string(a.seed) + "\n";
  write_file_atomic(fs::path(a.out) / "rsa.csv", csv);
  out << csv;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct MatchArgs {
  std::string sketches;
  std::string sketch_manifest;
  std::string pictographs;
  std::string pictograph_manifest;
  std::string out;
};

int cmd_match(const MatchArgs& a, std::ostream& out, std::ostream&) {
  EffectiveConfig ec;
  ec.set("subcommand", "match");
  ec.set("sketches", a.sketches);
  ec.set("pictographs", a.pictographs);
  out << ec.header();

  const auto sketch_records = load_manifest(a.sketch_manifest);
  const auto picto_records = load_manifest(a.pictograph_manifest);
  const auto sketch_by_id = records_by_id(sketch_records);
  const auto picto_by_id = records_by_id(picto_records);
  const EmbeddingSet sketches = to_embedding_set(load_cache(a.sketches), sketch_records);
  const EmbeddingSet all_pictos = to_embedding_set(load_cache(a.pictographs), picto_records);

  std::vector<std::string> sketch_cats;
  std::vector<int> levels;
  for (const auto& s : sketches.items) {
    const auto it = sketch_by_id.find(s.id);
    if (it == sketch_by_id.end()) throw std::runtime_error("sketch '" + s.id + "' is not in the manifest");
    sketch_cats.push_back(it->second.category);
    levels.push_back(it->second.sketchability.value_or(0));
  }

  std::map<std::string, EmbeddingSet> by_system;
  for (const auto& p : all_pictos.items) {
    const auto it = picto_by_id.find(p.id);
    if (it == picto_by_id.end()) throw std::runtime_error("pictograph '" + p.id + "' is not in the manifest");
    by_system["all"].items.push_back(p);
    if (it->second.system) by_system[to_string(*it->second.system)].items.push_back(p);
  }

  fs::create_directories(a.out);
  std::string csv = "system,category,sketchability,matches,total,accuracy\n";
  for (const auto& [system, pictos] : by_system) {
    const MatchMatrix m = match_matrix(sketches, pictos);
    std::vector<std::string> picto_cats;
    for (const auto& p : pictos.items) picto_cats.push_back(picto_by_id.at(p.id).category);
    const MatchingAccuracy acc = matching_accuracy(m, sketch_cats, picto_cats, levels);
    const auto row = [&](const std::string& cat, const std::string& level, const AccuracyCell& c) {
      csv += csv_escape(system) + "," + csv_escape(cat) + "," + level + "," + std::to_string(c.matches) + "," +
             std::to_string(c.total) + "," + fmt(c.accuracy()) + "\n";
    };
    row("all", "all", acc.overall);
    for (const auto& [cat, c] : acc.per_category) row(cat, "all", c);
    for (const auto& [level, c] : acc.per_sketchability) row("all", std::to_string(level), c);
    for (const auto& [key, c] : acc.per_category_sketchability) row(key.first, std::to_string(key.second), c);

    Tensor t;
    t.dims = {static_cast<std::uint32_t>(m.row_ids.size()), static_cast<std::uint32_t>(m.column_ids.size())};
    t.values.assign(m.values.begin(), m.values.end());
    write_tensor(t, fs::path(a.out) / ("match_matrix_" + system + ".f32t"));
  }
  write_file_atomic(fs::path(a.out) / "matching_accuracy.csv", csv);
  out << csv;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct RetrieveArgs {
  std::string sketches;
  std::string sketch_manifest;
  std::string signs;
  std::string sign_manifest;
  std::size_t top = kDefaultRetrievalDepth;
  std::vector<std::string> exclude_prefixes;
  std::string compound_markers;
  bool exclude_numeric = false;
  std::string out;
};

int cmd_retrieve(const RetrieveArgs& a, std::ostream& out, std::ostream&) {
  EffectiveConfig ec;
  ec.set("subcommand", "retrieve");
  ec.set("sketches", a.sketches);
  ec.set("signs", a.signs);
  ec.set("top", a.top);
  std::string prefixes;
  for (const auto& p : a.exclude_prefixes) prefixes += (prefixes.empty() ? "" : ",") + p;
  ec.set("exclude_prefixes", prefixes);
  ec.set("compound_markers", a.compound_markers);
  ec.set("exclude_numeric", a.exclude_numeric);
  out << ec.header();

  const auto sketch_records = load_manifest(a.sketch_manifest);
  const EmbeddingSet sketches = to_embedding_set(load_cache(a.sketches), sketch_records);
  EmbeddingSet signs = to_embedding_set(load_cache(a.signs));

  std::map<std::string, std::string> sign_names;
  if (!a.sign_manifest.empty()) {
    RecordFilter filter;
    filter.excluded_sign_prefixes = a.exclude_prefixes;
    filter.compound_markers = a.compound_markers;
    filter.exclude_numeric = a.exclude_numeric;
    const auto kept = filter_records(load_manifest(a.sign_manifest), filter);
    std::set<std::string> keep;
    for (const auto& r : kept) {
      keep.insert(r.id());
      if (r.sign_name) sign_names[r.id()] = *r.sign_name;
    }
    std::erase_if(signs.items, [&](const Embedding& e) { return !keep.count(e.id); });
  }

  std::string csv = "category,rank,sign_id,sign_name,similarity\n";
  for (const CategoryQuery& q : residual_query(sketches)) {
    for (const Retrieved& r : top_k_retrieve(q, signs, a.top)) {
      const auto name = sign_names.find(r.id);
      csv += csv_escape(q.category) + "," + std::to_string(r.rank) + "," + csv_escape(r.id) + "," +
             (name == sign_names.end() ? "" : csv_escape(name->second)) + "," + fmt(r.similarity) + "\n";
    }
  }
  fs::create_directories(a.out);
  write_file_atomic(fs::path(a.out) / "retrieval.csv", csv);
  out << csv;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GradcheckArgs {
  std::string target = "raster";
  std::size_t sketches = 100;
  int max_strokes = 4;
  std::size_t trials = 1;
  std::size_t samples = 200;
  std::string encoder = "builtin-semantic";
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream&) {
  EffectiveConfig ec;
  ec.set("subcommand", "gradcheck");
  ec.set("target", a.target);
  ec.set("seed", a.seed);
  std::string report;
  if (a.target == "raster") {
    ec.set("sketches", a.sketches);
    ec.set("max_strokes", a.max_strokes);
    ec.set("trials", a.trials);
    out << ec.header();
    RasterConfig cfg;
    std::vector<double> rel;
    for (std::size_t i = 0; i < a.sketches; ++i) {
      std::mt19937_64 rng(mix_seed(a.seed, i));
      const int n = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(a.max_strokes)));
      const VectorSketch sketch = random_sketch(rng, n, {224, 224});
      const auto r = gradcheck_rel_errors(sketch, cfg, a.trials, mix_seed(a.seed, 1000000 + i));
      rel.insert(rel.end(), r.begin(), r.end());
    }
    const GradcheckReport g = summarize_rel_errors(rel, GradcheckOptions{}.rel_tolerance);
    report = "checked " + std::to_string(g.checked) + "\npassed " + std::to_string(g.passed) + "\npass_fraction " +
             fmt(g.pass_fraction) + "\nmax_rel_error " + fmt(g.max_rel_error) + "\nmedian_rel_error " +
             fmt(g.median_rel_error) + "\n";
  } else if (a.target == "encoder") {
    const std::string selector = resolve_encoder_selector(a.encoder);
    ec.set("encoder", selector);
    ec.set("samples", a.samples);
    out << ec.header();
    auto encoder = make_encoder(selector);
    std::mt19937_64 rng(a.seed);
    RasterImage image(224, 224, 3);
    for (double& v : image.data) v = uniform(rng, 0.05, 0.95);
    RasterImage other(224, 224, 3);
    for (double& v : other.data) v = uniform(rng, 0.05, 0.95);
    const Embedding target = encoder->embed_image(other);
    const auto g = encoder_gradcheck(*encoder, image, target, a.samples, mix_seed(a.seed, 1));
    report = "sampled " + std::to_string(g.sampled) + "\nchecked " + std::to_string(g.checked) + "\npassed " +
             std::to_string(g.passed) + "\npass_fraction " + fmt(g.pass_fraction) + "\nmax_rel_error " +
             fmt(g.max_rel_error) + "\n";
  } else {
    throw UsageError("--target must be raster or encoder");
  }
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_file_atomic(fs::path(a.out) / ("gradcheck_" + a.target + ".txt"), ec.header() + report);
  }
  out << report;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"glyphforge: semantic sketch synthesis and representational analysis"};
  app.require_subcommand(1);

  SketchArgs sk;
  auto* sketch = app.add_subcommand("sketch", "Generate a vector sketch from an image");
  sketch->add_option("--input", sk.input, "Input image (.png or raw tensor)")->required();
  sketch->add_option("--strokes", sk.strokes, "Number of strokes N")->capture_default_str();
  sketch->add_option("--iters", sk.iters, "Optimization iterations")->capture_default_str();
  sketch->add_option("--encoder", sk.encoder, "builtin-semantic | builtin-perceptual | bridge[:<address>]")
      ->capture_default_str();
  sketch->add_option("--seed", sk.seed, "Random seed")->required();
  sketch->add_option("--out", sk.out, "Output directory")->required();
  sketch->add_option("--step-size", sk.step_size)->capture_default_str();
  sketch->add_option("--stroke-width", sk.stroke_width)->capture_default_str();
  sketch->add_option("--checkpoint-every", sk.checkpoint_every)->capture_default_str();
  sketch->add_option("--temperature", sk.temperature)->capture_default_str();
  sketch->add_option("--sigma", sk.sigma, "Suppression Gaussian sigma (px)")->capture_default_str();
  sketch->add_option("--window-frac", sk.window_frac)->capture_default_str();
  sketch->add_option("--border-margin", sk.border_margin, "Excluded border (px); default 2% of canvas");
  sketch->add_option("--flatten-samples", sk.flatten_samples)->capture_default_str();
  sketch->add_option("--aa-halfwidth", sk.aa_halfwidth)->capture_default_str();
  sketch->add_option("--canvas", sk.canvas, "Square canvas side (px)")->capture_default_str();
  sketch->add_option("--optimizer", sk.optimizer, "adam | gd")->capture_default_str();

  EmbedArgs em;
  auto* embed = app.add_subcommand("embed", "Embed every record of a manifest into a cache");
  embed->add_option("--manifest", em.manifest)->required();
  embed->add_option("--out", em.out, "Cache file")->required();
  embed->add_option("--encoder", em.encoder)->capture_default_str();
  embed->add_option("--base-dir", em.base_dir, "Root for relative paths (default: manifest directory)");

  ClassifyArgs cl;
  auto* classify = app.add_subcommand("classify", "Zero-shot top-1/top-3 tables per category and sketchability");
  classify->add_option("--sketches", cl.sketches, "Sketch embedding cache")->required();
  classify->add_option("--manifest", cl.manifest, "Sketch manifest (categories, sketchability)")->required();
  classify->add_option("--labels", cl.labels, "Label embedding cache with category ids");
  classify->add_option("--encoder", cl.encoder, "Text-capable encoder used when --labels is absent");
  classify->add_option("--prompt", cl.prompt)->capture_default_str();
  classify->add_option("--out", cl.out)->required();

  RsaArgs rs;
  auto* rsa = app.add_subcommand("rsa", "RSA between image and sketch embeddings");
  rsa->add_option("--images", rs.images)->required();
  rsa->add_option("--sketches", rs.sketches)->required();
  rsa->add_option("--perms", rs.perms)->capture_default_str();
  rsa->add_option("--seed", rs.seed)->required();
  rsa->add_option("--out", rs.out)->required();

  MatchArgs ma;
  auto* match = app.add_subcommand("match", "Sketch-to-pictograph matching accuracy");
  match->add_option("--sketches", ma.sketches)->required();
  match->add_option("--sketch-manifest", ma.sketch_manifest)->required();
  match->add_option("--pictographs", ma.pictographs)->required();
  match->add_option("--pictograph-manifest", ma.pictograph_manifest)->required();
  match->add_option("--out", ma.out)->required();

  RetrieveArgs re;
  auto* retrieve = app.add_subcommand("retrieve", "Top-K signs per residualized category query");
  retrieve->add_option("--sketches", re.sketches)->required();
  retrieve->add_option("--sketch-manifest", re.sketch_manifest)->required();
  retrieve->add_option("--signs", re.signs)->required();
  retrieve->add_option("--sign-manifest", re.sign_manifest);
  retrieve->add_option("--top", re.top)->capture_default_str();
  retrieve->add_option("--exclude-prefix", re.exclude_prefixes, "Drop signs whose name starts with this");
  retrieve->add_option("--compound-markers", re.compound_markers, "Drop signs whose name contains any of these");
  retrieve->add_flag("--exclude-numeric", re.exclude_numeric, "Drop N<digits> numeric signs");
  retrieve->add_option("--out", re.out)->required();

  GradcheckArgs gc;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient reports");
  grad->add_option("--target", gc.target, "raster | encoder")->capture_default_str();
  grad->add_option("--sketches", gc.sketches)->capture_default_str();
  grad->add_option("--max-strokes", gc.max_strokes)->capture_default_str();
  grad->add_option("--trials", gc.trials)->capture_default_str();
  grad->add_option("--samples", gc.samples)->capture_default_str();
  grad->add_option("--encoder", gc.encoder)->capture_default_str();
  grad->add_option("--seed", gc.seed)->capture_default_str();
  grad->add_option("--out", gc.out);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sketch) return cmd_sketch(sk, out, err);
    if (*embed) return cmd_embed(em, out, err);
    if (*classify) return cmd_classify(cl, out, err);
    if (*rsa) return cmd_rsa(rs, out, err);
    if (*match) return cmd_match(ma, out, err);
    if (*retrieve) return cmd_retrieve(re, out, err);
    if (*grad) return cmd_gradcheck(gc, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace glyphforge::cli
