#include "glyphforge/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "glyphforge/errors.hpp"
#include "glyphforge/rng.hpp"

namespace glyphforge {
namespace {

void check_same_shape(const Rdm& a, const Rdm& b) {
  if (a.size() != b.size() || a.values.size() != b.values.size()) throw ContractError("RDM shapes differ");
  if (a.ids != b.ids) throw ContractError("RDM id orders differ");
}

std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed, std::uint64_t index) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(mix_seed(seed, index));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

double two_sided_p(std::size_t extreme, std::size_t n_perm) {
  return static_cast<double>(1 + extreme) / static_cast<double>(1 + n_perm);
}

// |stat| >= |observed| with a relative slack for rounding between algebraically equal statistics.
bool at_least_as_extreme(double stat, double observed) {
  return std::abs(stat) >= std::abs(observed) - 1e-12 * std::max(1.0, std::abs(observed));
}

}  // namespace

void validate(const EmbeddingSet& set) {
  std::set<std::string> seen;
  const std::size_t dim = set.dimension();
  for (const Embedding& e : set.items) {
    if (e.values.size() != dim) throw ContractError("embedding '" + e.id + "' has a different dimension");
    if (!seen.insert(e.id).second) throw ContractError("duplicate embedding id '" + e.id + "'");
    for (double v : e.values) {
      if (!std::isfinite(v)) throw ContractError("embedding '" + e.id + "' has a non-finite value");
    }
  }
}

CosineResult cosine(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ContractError("cosine of vectors with different dimensions");
  const double nx = l2_norm(x);
  const double ny = l2_norm(y);
  if (nx == 0.0 || ny == 0.0) return {0.0, true};
  return {dot(x, y) / (nx * ny), false};
}

std::vector<double> l2_normalized(const std::vector<double>& v) {
  const double n = l2_norm(v);
  std::vector<double> out(v);
  if (n > 0.0) {
    for (double& x : out) x /= n;
  }
  return out;
}

Rdm build_rdm(const EmbeddingSet& set) {
  validate(set);
  const std::size_t n = set.size();
  if (n < 2) throw ContractError("an RDM needs at least two items");
  std::vector<std::vector<double>> unit(n);
  Rdm rdm;
  rdm.ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    unit[i] = l2_normalized(set.items[i].values);
    rdm.ids.push_back(set.items[i].id);
  }
  rdm.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::clamp(1.0 - dot(unit[i], unit[j]), 0.0, 2.0);
      rdm.at(i, j) = d;
      rdm.at(j, i) = d;
    }
  }
  return rdm;
}

Rdm delta_rdm(const Rdm& sketch_rdm, const Rdm& image_rdm) {
  check_same_shape(sketch_rdm, image_rdm);
  Rdm out = sketch_rdm;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = sketch_rdm.values[i] - image_rdm.values[i];
  return out;
}

std::vector<double> upper_triangle(const Rdm& rdm) {
  const std::size_t n = rdm.size();
  std::vector<double> out;
  out.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) out.push_back(rdm.at(i, j));
  }
  return out;
}

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw ContractError("pearson needs equal, non-empty samples");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw DegenerateError("correlation undefined for a constant sample");
  return sab / std::sqrt(saa * sbb);
}

double spearman_upper(const Rdm& a, const Rdm& b) {
  if (a.size() != b.size()) throw ContractError("RDM shapes differ");
  if (a.size() < 3) throw ContractError("spearman_upper needs n >= 3");
  const auto ua = upper_triangle(a);
  const auto ub = upper_triangle(b);
  const auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (constant(ua) || constant(ub)) throw DegenerateError("spearman undefined: an RDM upper triangle is constant");
  return pearson(average_ranks(ua), average_ranks(ub));
}

PermutationReport rsa_permutation(const Rdm& a, const Rdm& b, std::size_t n_perm, std::uint64_t seed) {
  if (n_perm < 1) throw DomainError("need at least one permutation");
  PermutationReport report;
  report.observed = spearman_upper(a, b);
  report.permutations = n_perm;
  report.seed = seed;

  const std::size_t n = b.size();
  const auto rank_a = average_ranks(upper_triangle(a));
  std::size_t extreme = 0;
  Rdm permuted = b;
  for (std::size_t k = 0; k < n_perm; ++k) {
    const auto perm = random_permutation(n, seed, k);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) permuted.at(i, j) = b.at(perm[i], perm[j]);
    }
    const double rho = pearson(rank_a, average_ranks(upper_triangle(permuted)));
    if (at_least_as_extreme(rho, report.observed)) ++extreme;
  }
  report.p_value = two_sided_p(extreme, n_perm);
  return report;
}

PairedCosineResult mean_paired_cosine(const EmbeddingSet& images, const EmbeddingSet& sketches,
                                      std::size_t n_perm, std::uint64_t seed) {
  validate(images);
  validate(sketches);
  if (images.size() != sketches.size() || images.size() == 0) {
    throw ContractError("paired sets must be non-empty and of equal size");
  }
  const std::size_t n = images.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (images.items[i].id != sketches.items[i].id) {
      throw ContractError("pair " + std::to_string(i) + " is misaligned: '" + images.items[i].id + "' vs '" +
                          sketches.items[i].id + "'");
    }
  }
  if (n_perm < 1) throw DomainError("need at least one permutation");

  std::vector<double> cos(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cos[i * n + j] = cosine(images.items[i].values, sketches.items[j].values).value;
  }
  PairedCosineResult out;
  for (std::size_t i = 0; i < n; ++i) out.mean += cos[i * n + i];
  out.mean /= static_cast<double>(n);

  std::size_t extreme = 0;
  for (std::size_t k = 0; k < n_perm; ++k) {
    const auto perm = random_permutation(n, seed, k);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += cos[i * n + perm[i]];
    if (at_least_as_extreme(s / static_cast<double>(n), out.mean)) ++extreme;
  }
  out.test = {out.mean, n_perm, two_sided_p(extreme, n_perm), seed};
  return out;
}

std::vector<RankedLabel> zero_shot_classify(const Embedding& sketch, const EmbeddingSet& labels, std::size_t k) {
  validate(labels);
  if (labels.size() == 0) throw ContractError("zero-shot classification needs at least one label");
  if (k > labels.size()) throw ContractError("k exceeds the number of labels");
  if (sketch.values.size() != labels.dimension()) throw ContractError("sketch and label dimensions differ");
  std::vector<RankedLabel> ranked;
  ranked.reserve(labels.size());
  for (const Embedding& label : labels.items) ranked.push_back({label.id, cosine(sketch.values, label.values).value});
  std::sort(ranked.begin(), ranked.end(), [](const RankedLabel& a, const RankedLabel& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  });
  ranked.resize(k);
  return ranked;
}

MatchMatrix match_matrix(const EmbeddingSet& sketches, const EmbeddingSet& pictographs) {
  validate(sketches);
  validate(pictographs);
  if (sketches.size() > 0 && pictographs.size() > 0 && sketches.dimension() != pictographs.dimension()) {
    throw ContractError("sketch and pictograph embeddings have different dimensions");
  }
  MatchMatrix m;
  std::vector<std::vector<double>> cols;
  for (const Embedding& p : pictographs.items) {
    m.column_ids.push_back(p.id);
    cols.push_back(l2_normalized(p.values));
  }
  m.values.reserve(sketches.size() * pictographs.size());
  for (const Embedding& s : sketches.items) {
    m.row_ids.push_back(s.id);
    const auto row = l2_normalized(s.values);
    for (const auto& col : cols) m.values.push_back(dot(row, col));
  }
  return m;
}

MatchingAccuracy matching_accuracy(const MatchMatrix& m, const std::vector<std::string>& sketch_categories,
                                   const std::vector<std::string>& pictograph_categories,
                                   const std::vector<int>& sketch_sketchability) {
  const std::size_t rows = m.row_ids.size();
  const std::size_t cols = m.column_ids.size();
  if (sketch_categories.size() != rows || pictograph_categories.size() != cols) {
    throw ContractError("category labels must cover every sketch and pictograph");
  }
  if (!sketch_sketchability.empty() && sketch_sketchability.size() != rows) {
    throw ContractError("sketchability labels must cover every sketch");
  }
  const auto missing = [](const std::string& s) { return s.empty(); };
  if (std::any_of(sketch_categories.begin(), sketch_categories.end(), missing) ||
      std::any_of(pictograph_categories.begin(), pictograph_categories.end(), missing)) {
    throw ContractError("empty category label");
  }
  if (cols == 0) throw ContractError("no pictographs to match against");

  MatchingAccuracy out;
  out.best_column.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < cols; ++j) {
      if (m.at(i, j) > m.at(i, best)) best = j;
    }
    out.best_column[i] = best;
    const bool match = pictograph_categories[best] == sketch_categories[i];
    const auto bump = [match](AccuracyCell& c) {
      ++c.total;
      if (match) ++c.matches;
    };
    bump(out.overall);
    bump(out.per_category[sketch_categories[i]]);
    if (!sketch_sketchability.empty()) {
      bump(out.per_sketchability[sketch_sketchability[i]]);
      bump(out.per_category_sketchability[{sketch_categories[i], sketch_sketchability[i]}]);
    }
  }
  return out;
}

std::vector<CategoryQuery> residual_query(const EmbeddingSet& sketches) {
  validate(sketches);
  std::map<std::string, std::vector<const Embedding*>> groups;
  for (const Embedding& e : sketches.items) {
    if (!e.category || e.category->empty()) throw ContractError("embedding '" + e.id + "' has no category");
    groups[*e.category].push_back(&e);
  }
  if (groups.size() < 2) throw ContractError("residual queries need at least two categories");

  const std::size_t dim = sketches.dimension();
  std::vector<CategoryQuery> queries;
  std::vector<double> global(dim, 0.0);
  for (const auto& [category, members] : groups) {
    std::vector<double> mean(dim, 0.0);
    for (const Embedding* e : members) {
      if (l2_norm(e->values) == 0.0) throw DegenerateError("embedding '" + e->id + "' is the zero vector");
      const auto z = l2_normalized(e->values);
      for (std::size_t k = 0; k < dim; ++k) mean[k] += z[k];
    }
    for (double& x : mean) x /= static_cast<double>(members.size());
    if (l2_norm(mean) == 0.0) throw DegenerateError("category '" + category + "' has a zero mean embedding");
    CategoryQuery q;
    q.category = category;
    q.mean_direction = l2_normalized(mean);
    for (std::size_t k = 0; k < dim; ++k) global[k] += q.mean_direction[k];
    queries.push_back(std::move(q));
  }
  for (double& x : global) x /= static_cast<double>(queries.size());
  if (l2_norm(global) == 0.0) throw DegenerateError("global mean embedding is zero");
  const auto d_hat = l2_normalized(global);
  for (CategoryQuery& q : queries) {
    const double proj = dot(q.mean_direction, d_hat);
    q.residual.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) q.residual[k] = q.mean_direction[k] - proj * d_hat[k];
    q.global_direction = d_hat;
  }
  return queries;
}

std::vector<Retrieved> top_k_retrieve(const CategoryQuery& query, const EmbeddingSet& signs, std::size_t k) {
  validate(signs);
  if (k > signs.size()) throw ContractError("k exceeds the number of signs");
  if (signs.size() > 0 && signs.dimension() != query.residual.size()) {
    throw ContractError("query and sign dimensions differ");
  }
  if (l2_norm(query.residual) == 0.0) {
    throw DegenerateError("category '" + query.category + "' has a zero residual query");
  }
  const auto r = l2_normalized(query.residual);
  std::vector<Retrieved> ranked;
  ranked.reserve(signs.size());
  for (const Embedding& s : signs.items) ranked.push_back({s.id, dot(r, l2_normalized(s.values)), 0});
  std::sort(ranked.begin(), ranked.end(), [](const Retrieved& a, const Retrieved& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  });
  ranked.resize(k);
  for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i].rank = i + 1;
  return ranked;
}

}  // namespace glyphforge
