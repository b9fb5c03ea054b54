#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "glyphforge/encoder.hpp"

namespace glyphforge {

/// Embeddings of one corpus with unique ids and a common dimension.
struct EmbeddingSet {
  std::vector<Embedding> items;

  std::size_t size() const noexcept { return items.size(); }
  /// 0 for an empty set.
  std::size_t dimension() const noexcept { return items.empty() ? 0 : items.front().values.size(); }
};

/// Throws ContractError on mixed dimensions or duplicate ids.
void validate(const EmbeddingSet& set);

/// Row-major square matrix with item ids.
struct Rdm {
  std::vector<std::string> ids;
  std::vector<double> values;

  std::size_t size() const noexcept { return ids.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * ids.size() + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * ids.size() + j]; }
};

struct MatchMatrix {
  std::vector<std::string> row_ids;     // sketches
  std::vector<std::string> column_ids;  // pictographs
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * column_ids.size() + j]; }
};

struct CategoryQuery {
  std::string category;
  std::vector<double> mean_direction;  // v_c, unit length
  std::vector<double> residual;        // r_c
  std::vector<double> global_direction;  // unit global mean over categories
};

struct PermutationReport {
  double observed = 0.0;
  std::size_t permutations = 0;
  double p_value = 1.0;
  std::uint64_t seed = 0;
};

struct CosineResult {
  double value = 0.0;
  bool degenerate = false;
};

/// x.y / (|x||y|); a zero vector gives 0 with the degenerate flag.
CosineResult cosine(const std::vector<double>& x, const std::vector<double>& y);

std::vector<double> l2_normalized(const std::vector<double>& v);

/// Pairwise 1 - cosine over L2-normalized features. Needs n >= 2.
Rdm build_rdm(const EmbeddingSet& set);

/// Element-wise sketch_rdm - image_rdm.
Rdm delta_rdm(const Rdm& sketch_rdm, const Rdm& image_rdm);

/// Strict upper triangle, row-major.
std::vector<double> upper_triangle(const Rdm& rdm);

/// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(const std::vector<double>& values);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

/// Spearman correlation of the two strict upper triangles. Throws DegenerateError
/// when either side is constant.
double spearman_upper(const Rdm& a, const Rdm& b);

/// Two-sided Monte-Carlo test; each permutation relabels rows and columns of b jointly.
/// p = (1 + #{|rho_perm| >= |rho_obs|}) / (1 + n_perm).
PermutationReport rsa_permutation(const Rdm& a, const Rdm& b, std::size_t n_perm, std::uint64_t seed);

struct PairedCosineResult {
  double mean = 0.0;
  PermutationReport test;
};

/// Mean cosine of aligned (image, sketch) pairs; the null shuffles the sketch assignment.
PairedCosineResult mean_paired_cosine(const EmbeddingSet& images, const EmbeddingSet& sketches,
                                      std::size_t n_perm, std::uint64_t seed);

struct RankedLabel {
  std::string id;
  double similarity = 0.0;
};

/// Labels by descending cosine; ties by id.
std::vector<RankedLabel> zero_shot_classify(const Embedding& sketch, const EmbeddingSet& labels, std::size_t k);

/// Cosine matrix between two sets (both sides L2-normalized row-wise).
MatchMatrix match_matrix(const EmbeddingSet& sketches, const EmbeddingSet& pictographs);

struct AccuracyCell {
  std::size_t matches = 0;
  std::size_t total = 0;
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(matches) / static_cast<double>(total); }
};

struct MatchingAccuracy {
  AccuracyCell overall;
  std::map<std::string, AccuracyCell> per_category;
  std::map<int, AccuracyCell> per_sketchability;
  std::map<std::pair<std::string, int>, AccuracyCell> per_category_sketchability;
  std::vector<std::size_t> best_column;  // argmax per row, lowest column on ties
};

MatchingAccuracy matching_accuracy(const MatchMatrix& m, const std::vector<std::string>& sketch_categories,
                                   const std::vector<std::string>& pictograph_categories,
                                   const std::vector<int>& sketch_sketchability = {});

/// Residualized per-category queries, in category-name order. Every item needs a category.
std::vector<CategoryQuery> residual_query(const EmbeddingSet& sketches);

struct Retrieved {
  std::string id;
  double similarity = 0.0;
  std::size_t rank = 0;  // 1-based
};

inline constexpr std::size_t kDefaultRetrievalDepth = 40;

/// Signs by descending cosine to the query residual; ties by id.
std::vector<Retrieved> top_k_retrieve(const CategoryQuery& query, const EmbeddingSet& signs,
                                      std::size_t k = kDefaultRetrievalDepth);

}  // namespace glyphforge
