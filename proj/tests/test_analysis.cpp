#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "glyphforge/analysis.hpp"
#include "glyphforge/errors.hpp"
#include "glyphforge/rng.hpp"
#include "oracles.hpp"

using namespace glyphforge;

namespace {

EmbeddingSet make_set(const std::vector<std::vector<double>>& rows, const std::string& prefix = "e",
                      const std::vector<std::string>& cats = {}) {
  EmbeddingSet s;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Embedding e;
    e.id = prefix + std::to_string(10 + i);
    e.values = rows[i];
    if (!cats.empty()) e.category = cats[i];
    s.items.push_back(e);
  }
  return s;
}

std::vector<std::vector<double>> as_rows(const Rdm& r) {
  std::vector<std::vector<double>> out(r.size(), std::vector<double>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < r.size(); ++j) out[i][j] = r.at(i, j);
  return out;
}

Rdm random_rdm(std::mt19937_64& rng, std::size_t n, std::size_t d = 12) {
  return build_rdm(make_set(oracle::random_rows(rng, n, d)));
}

}  // namespace

TEST_CASE("cosine") {
  CHECK(cosine({1, 2, 3}, {1, 2, 3}).value == doctest::Approx(1.0));
  CHECK(cosine({1, 0}, {0, 1}).value == 0.0);
  CHECK(cosine({1, 0}, {1, 1}).value == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  const auto z = cosine({0, 0}, {1, 1});
  CHECK(z.degenerate);
  CHECK(z.value == 0.0);
  CHECK_THROWS_AS(cosine({1, 2}, {1, 2, 3}), ContractError);
}

TEST_CASE("embedding set validation") {
  EmbeddingSet s = make_set({{1, 0}, {0, 1}});
  CHECK_NOTHROW(validate(s));
  s.items[1].id = s.items[0].id;
  CHECK_THROWS_AS(validate(s), ContractError);
  s = make_set({{1, 0}, {0, 1, 2}});
  CHECK_THROWS_AS(validate(s), ContractError);
  s = make_set({{1, 0}, {0, std::nan("")}});
  CHECK_THROWS_AS(validate(s), ContractError);
}

TEST_CASE("build_rdm") {
  const Rdm same = build_rdm(make_set({{1, 2}, {2, 4}, {0.5, 1}}));
  for (double v : same.values) CHECK(std::abs(v) <= 1e-15);
  const Rdm anti = build_rdm(make_set({{1, -3}, {-2, 6}}));
  CHECK(anti.at(0, 1) == 2.0);
  CHECK(anti.at(1, 0) == 2.0);
  CHECK(anti.at(0, 0) == 0.0);

  std::mt19937_64 rng(1);
  const auto rows = oracle::random_rows(rng, 6, 8);
  const Rdm r = build_rdm(make_set(rows));
  const auto o = oracle::rdm(rows);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(std::abs(r.at(i, j) - o[i][j]) <= 1e-12);
      CHECK(r.at(i, j) == r.at(j, i));
      CHECK(r.at(i, j) >= 0.0);
      CHECK(r.at(i, j) <= 2.0);
    }
  CHECK_THROWS_AS(build_rdm(make_set({{1, 2}})), ContractError);
  EmbeddingSet dup = make_set(rows);
  dup.items[3].id = dup.items[0].id;
  CHECK_THROWS_AS(build_rdm(dup), ContractError);
}

TEST_CASE("delta_rdm") {
  std::mt19937_64 rng(2);
  const Rdm a = random_rdm(rng, 5);
  const Rdm b = random_rdm(rng, 5);
  for (double v : delta_rdm(a, a).values) CHECK(v == 0.0);
  Rdm zero = b;
  std::fill(zero.values.begin(), zero.values.end(), 0.0);
  CHECK(delta_rdm(a, zero).values == a.values);
  const Rdm d = delta_rdm(a, b);
  for (std::size_t i = 0; i < d.values.size(); ++i) CHECK(d.values[i] == a.values[i] - b.values[i]);
  Rdm shuffled = b;
  std::swap(shuffled.ids[0], shuffled.ids[1]);
  CHECK_THROWS_AS(delta_rdm(a, shuffled), ContractError);
  CHECK_THROWS_AS(delta_rdm(a, random_rdm(rng, 4)), ContractError);
}

TEST_CASE("average ranks") {
  CHECK(average_ranks({3, 1, 2}) == std::vector<double>{3, 1, 2});
  CHECK(average_ranks({5, 5, 1, 5}) == std::vector<double>{3, 3, 1, 3});
  CHECK(average_ranks({2, 2}) == std::vector<double>{1.5, 1.5});
  std::mt19937_64 rng(3);
  std::vector<double> v(50);
  for (double& x : v) x = static_cast<double>(uniform_index(rng, 10));
  CHECK(average_ranks(v) == oracle::ranks(v));
}

TEST_CASE("spearman_upper") {
  std::mt19937_64 rng(4);
  const Rdm a = random_rdm(rng, 10);
  CHECK(spearman_upper(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  Rdm cubed = a;
  for (double& v : cubed.values) v = v * v * v;
  CHECK(spearman_upper(a, cubed) == doctest::Approx(1.0).epsilon(1e-15));
  Rdm flipped = a;
  for (double& v : flipped.values) v = 5.0 - std::exp(v);
  CHECK(spearman_upper(a, flipped) == doctest::Approx(-1.0).epsilon(1e-15));

  const Rdm b = random_rdm(rng, 10);
  CHECK(std::abs(spearman_upper(a, b) - oracle::spearman(as_rows(a), as_rows(b))) <= 1e-12);

  // Ties are averaged.
  Rdm tied = b;
  for (double& v : tied.values) v = std::round(v * 4) / 4;
  CHECK(std::abs(spearman_upper(a, tied) - oracle::spearman(as_rows(a), as_rows(tied))) <= 1e-12);

  Rdm flat = a;
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) flat.at(i, j) = i == j ? 0.0 : 0.5;
  CHECK_THROWS_AS(spearman_upper(a, flat), DegenerateError);
  CHECK_THROWS_AS(spearman_upper(random_rdm(rng, 2), random_rdm(rng, 2)), ContractError);
}

TEST_CASE("rsa permutation test") {
  std::mt19937_64 rng(5);
  const Rdm a = random_rdm(rng, 10);
  const auto self = rsa_permutation(a, a, 5000, 3);
  CHECK(self.p_value <= 0.01);
  CHECK(self.p_value > 0.0);
  CHECK(self.permutations == 5000);
  CHECK(self.seed == 3);
  CHECK(self.observed == doctest::Approx(1.0));

  const Rdm b = random_rdm(rng, 10);
  const auto r1 = rsa_permutation(a, b, 300, 11);
  const auto r2 = rsa_permutation(a, b, 300, 11);
  CHECK(r1.p_value == r2.p_value);
  CHECK(r1.observed == r2.observed);
  CHECK(r1.p_value > 0.0);
  CHECK(r1.p_value <= 1.0);
  // p = (1 + k) / (1 + n) for an integer k.
  const double k = r1.p_value * 301 - 1;
  CHECK(std::abs(k - std::round(k)) <= 1e-9);
  CHECK_THROWS_AS(rsa_permutation(a, b, 0, 1), DomainError);
}

TEST_CASE("rsa permutation matches a direct relabeling oracle") {
  std::mt19937_64 rng(6);
  const Rdm a = random_rdm(rng, 7);
  const Rdm b = random_rdm(rng, 7);
  const std::size_t n_perm = 200;
  const double observed = oracle::spearman(as_rows(a), as_rows(b));
  std::size_t extreme = 0;
  for (std::size_t k = 0; k < n_perm; ++k) {
    std::mt19937_64 prng(mix_seed(21, k));
    std::vector<std::size_t> perm{0, 1, 2, 3, 4, 5, 6};
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(prng, i)]);
    auto rows = as_rows(b);
    auto permuted = rows;
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t j = 0; j < 7; ++j) permuted[i][j] = rows[perm[i]][perm[j]];
    extreme += std::abs(oracle::spearman(as_rows(a), permuted)) >= std::abs(observed) - 1e-12;
  }
  const auto report = rsa_permutation(a, b, n_perm, 21);
  CHECK(report.p_value == doctest::Approx((1.0 + extreme) / (1.0 + n_perm)));
}

TEST_CASE("mean paired cosine") {
  std::mt19937_64 rng(7);
  const auto rows = oracle::random_rows(rng, 12, 6);
  const auto rows2 = oracle::random_rows(rng, 12, 6);
  const auto self = mean_paired_cosine(make_set(rows), make_set(rows), 200, 1);
  CHECK(self.mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(self.test.p_value <= 0.05);

  const auto orth = mean_paired_cosine(make_set({{1, 0}, {0, 1}}), make_set({{0, 1}, {-1, 0}}), 10, 1);
  CHECK(orth.mean == 0.0);

  double want = 0.0;
  for (std::size_t i = 0; i < 12; ++i) want += oracle::cos_sim(rows[i], rows2[i]) / 12;
  CHECK(std::abs(mean_paired_cosine(make_set(rows), make_set(rows2), 50, 2).mean - want) <= 1e-12);

  CHECK_THROWS_AS(mean_paired_cosine(make_set(rows), make_set(rows2, "other"), 10, 1), ContractError);
  CHECK_THROWS_AS(mean_paired_cosine(make_set(rows), make_set({{1, 2}}), 10, 1), ContractError);
}

TEST_CASE("zero-shot classification") {
  std::mt19937_64 rng(8);
  const auto labels_rows = oracle::random_rows(rng, 11, 16);
  const EmbeddingSet labels = make_set(labels_rows, "label");
  Embedding sketch;
  sketch.values = labels_rows[4];
  CHECK(zero_shot_classify(sketch, labels, 1)[0].id == "label14");

  const auto all = zero_shot_classify(sketch, labels, 11);
  CHECK(all.size() == 11);
  std::set<std::string> ids;
  for (const auto& r : all) ids.insert(r.id);
  CHECK(ids.size() == 11);

  std::vector<std::string> names;
  for (const auto& e : labels.items) names.push_back(e.id);
  for (int t = 0; t < 10; ++t) {
    Embedding s;
    s.values = oracle::random_rows(rng, 1, 16)[0];
    const auto top = zero_shot_classify(s, labels, 3);
    const auto order = oracle::full_sort(s.values, labels_rows, names);
    for (int k = 0; k < 3; ++k) CHECK(top[k].id == order[k]);
  }

  // Exact ties go to the lexicographically smaller id.
  const EmbeddingSet twins = make_set({{1, 0}, {1, 0}, {0, 1}}, "t");
  Embedding q;
  q.values = {1, 0};
  const auto tied = zero_shot_classify(q, twins, 2);
  CHECK(tied[0].id == "t10");
  CHECK(tied[1].id == "t11");

  CHECK_THROWS_AS(zero_shot_classify(q, EmbeddingSet{}, 0), ContractError);
  CHECK_THROWS_AS(zero_shot_classify(q, twins, 4), ContractError);
}

TEST_CASE("match matrix and matching accuracy") {
  std::mt19937_64 rng(9);
  const auto s = oracle::random_rows(rng, 5, 7);
  const auto p = oracle::random_rows(rng, 7, 7);
  const MatchMatrix m = match_matrix(make_set(s, "s"), make_set(p, "p"));
  const auto o = oracle::match(s, p);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 7; ++j) CHECK(std::abs(m.at(i, j) - o[i][j]) <= 1e-12);

  auto s_with_p = s;
  s_with_p[2] = p[5];
  const MatchMatrix m2 = match_matrix(make_set(s_with_p, "s"), make_set(p, "p"));
  CHECK(m2.at(2, 5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(matching_accuracy(m2, {"a", "a", "a", "a", "a"}, {"a", "a", "a", "a", "a", "a", "a"}).best_column[2] == 5);

  const MatchMatrix eye = match_matrix(make_set({{1, 0, 0}, {0, 0, 1}}, "s"), make_set({{0, 0, 1}, {1, 0, 0}, {0, 1, 0}}, "p"));
  CHECK(eye.values == std::vector<double>{0, 1, 0, 1, 0, 0});
  CHECK_THROWS_AS(match_matrix(make_set({{1, 0}}, "s"), make_set({{1, 0, 0}}, "p")), ContractError);

  // Block diagonal: every sketch finds its own category.
  MatchMatrix block;
  block.row_ids = {"s1", "s2", "s3", "s4"};
  block.column_ids = {"p1", "p2", "p3"};
  block.values = {0.9, 0.1, 0.0, 0.8, 0.2, 0.1, 0.1, 0.9, 0.3, 0.0, 0.2, 0.7};
  const auto acc = matching_accuracy(block, {"a", "a", "b", "c"}, {"a", "b", "c"}, {1, 2, 2, 3});
  CHECK(acc.overall.accuracy() == 1.0);
  CHECK(acc.per_category.at("a").total == 2);
  CHECK(acc.per_sketchability.at(2).total == 2);
  CHECK(acc.per_category_sketchability.at({"a", 1}).matches == 1);
  const auto wrong = matching_accuracy(block, {"b", "b", "a", "a"}, {"a", "b", "c"});
  CHECK(wrong.overall.accuracy() == 0.0);
  CHECK(wrong.per_sketchability.empty());

  // Ties go to the lowest column; positive row rescaling changes nothing.
  MatchMatrix tie = block;
  tie.values = {0.5, 0.5, 0.1, 0.2, 0.7, 0.7, 0.3, 0.3, 0.3, 0.0, 0.0, 0.0};
  const auto t = matching_accuracy(tie, {"a", "a", "b", "c"}, {"a", "b", "c"});
  CHECK(t.best_column == std::vector<std::size_t>{0, 1, 0, 0});

  for (int trial = 0; trial < 20; ++trial) {
    const auto rs = oracle::random_rows(rng, 6, 5);
    const auto rp = oracle::random_rows(rng, 4, 5);
    const std::vector<std::string> rc{"x", "y", "x", "z", "y", "x"}, pc{"y", "x", "z", "x"};
    MatchMatrix mm = match_matrix(make_set(rs, "s"), make_set(rp, "p"));
    const auto got = matching_accuracy(mm, rc, pc);
    const auto want = oracle::accuracy(oracle::match(rs, rp), rc, pc);
    CHECK(got.overall.matches == std::size_t(want.at("*").first));
    for (const auto& [cat, cell] : got.per_category) CHECK(cell.matches == std::size_t(want.at(cat).first));
    MatchMatrix scaled = mm;
    for (std::size_t i = 0; i < 6; ++i) {
      const double k = uniform(rng, 0.1, 10);
      for (std::size_t j = 0; j < 4; ++j) scaled.values[i * 4 + j] *= k;
    }
    CHECK(matching_accuracy(scaled, rc, pc).best_column == got.best_column);
  }
  CHECK_THROWS_AS(matching_accuracy(block, {"a", "a"}, {"a", "b", "c"}), ContractError);
  CHECK_THROWS_AS(matching_accuracy(block, {"a", "a", "", "c"}, {"a", "b", "c"}), ContractError);
}

TEST_CASE("residual queries") {
  std::mt19937_64 rng(10);
  const auto rows = oracle::random_rows(rng, 12, 6);
  std::vector<std::string> cats;
  for (int i = 0; i < 12; ++i) cats.push_back(i % 3 == 0 ? "sun" : i % 3 == 1 ? "water" : "eye");
  const auto q = residual_query(make_set(rows, "z", cats));
  REQUIRE(q.size() == 3);
  CHECK(q[0].category == "eye");
  CHECK(q[1].category == "sun");
  const auto o = oracle::residuals(rows, cats);
  for (const auto& c : q) {
    CHECK(std::abs(l2_norm(c.mean_direction) - 1.0) <= 1e-9);
    CHECK(std::abs(dot(c.residual, c.global_direction)) <= 1e-12);
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK(std::abs(c.residual[k] - o.r.at(c.category)[k]) <= 1e-12);
      CHECK(std::abs(c.global_direction[k] - o.d_hat[k]) <= 1e-12);
    }
  }

  // Two categories mirrored about the x axis: d points along x, residuals are the y parts.
  const auto mirror = residual_query(make_set({{1, 1}, {1, -1}}, "m", {"up", "down"}));
  for (const auto& c : mirror) CHECK(std::abs(c.residual[0]) <= 1e-15);
  // A category orthogonal to d keeps its full direction.
  const auto orth = residual_query(make_set({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, -1}}, "o", {"a", "b", "c", "d"}));
  // c and d cancel, so d_hat lies in the a-b plane and c is orthogonal to it.
  CHECK(orth[2].residual == std::vector<double>{0, 0, 1});
  // A category parallel to d has no residual.
  const auto parallel = residual_query(make_set({{1, 0}, {1, 0}}, "p", {"a", "b"}));
  for (double v : parallel[0].residual) CHECK(std::abs(v) <= 1e-15);

  CHECK_THROWS_AS(residual_query(make_set({{1, 0}, {0, 1}}, "x", {"a", "a"})), ContractError);
  CHECK_THROWS_AS(residual_query(make_set({{1, 0}, {-1, 0}}, "x", {"a", "b"})), DegenerateError);
  CHECK_THROWS_AS(residual_query(make_set({{1, 0}, {0, 1}})), ContractError);
}

TEST_CASE("top-k retrieval") {
  std::mt19937_64 rng(11);
  const auto rows = oracle::random_rows(rng, 9, 8);
  std::vector<std::string> cats;
  for (int i = 0; i < 9; ++i) cats.push_back(std::string(1, char('a' + i % 3)));
  const auto queries = residual_query(make_set(rows, "z", cats));

  const auto signs = oracle::random_rows(rng, 30, 8);
  const EmbeddingSet sign_set = make_set(signs, "sign");
  std::vector<std::string> ids;
  for (const auto& e : sign_set.items) ids.push_back(e.id);
  for (const auto& q : queries) {
    const auto top = top_k_retrieve(q, sign_set, 5);
    const auto order = oracle::full_sort(q.residual, signs, ids);
    REQUIRE(top.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(top[k].id == order[k]);
      CHECK(top[k].rank == k + 1);
    }
  }

  EmbeddingSet with_query = sign_set;
  Embedding self;
  self.id = "query";
  self.values = queries[0].residual;
  with_query.items.push_back(self);
  CHECK(top_k_retrieve(queries[0], with_query, 1)[0].id == "query");

  CategoryQuery q;
  q.residual = {1, 0};
  const auto near = top_k_retrieve(q, make_set({{0.2, 1}, {1, 0.1}}, "n"), 1);
  CHECK(near[0].id == "n11");
  CHECK(top_k_retrieve(q, make_set(oracle::random_rows(rng, 50, 2), "r")).size() == 40);
  CHECK_THROWS_AS(top_k_retrieve(q, make_set({{1, 0}}, "n"), 2), ContractError);
  q.residual = {0, 0};
  CHECK_THROWS_AS(top_k_retrieve(q, make_set({{1, 0}}, "n"), 1), DegenerateError);
}
