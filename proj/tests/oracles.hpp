// Independent reference implementations used by the tests. These are written
// the slow, obvious way and share no code with the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace oracle {

struct P {
  double x, y;
};

inline P lerp(P a, P b, double t) { return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)}; }

inline P de_casteljau(P p0, P p1, P p2, P p3, double t) {
  const P a = lerp(p0, p1, t), b = lerp(p1, p2, t), c = lerp(p2, p3, t);
  const P d = lerp(a, b, t), e = lerp(b, c, t);
  return lerp(d, e, t);
}

inline double seg_dist(P q, P a, P b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((q.x - a.x) * dx + (q.y - a.y) * dy) / len2 : 0.0;
  t = std::max(0.0, std::min(1.0, t));
  return std::hypot(q.x - (a.x + t * dx), q.y - (a.y + t * dy));
}

/// Fraction of a pixel's 16x16 sub-samples within half the stroke width of segment ab.
inline double supersampled_ink(P a, P b, double width, int row, int col) {
  int inside = 0;
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 16; ++j) {
      const P q{col - 0.5 + (j + 0.5) / 16.0, row - 0.5 + (i + 0.5) / 16.0};
      if (seg_dist(q, a, b) <= width / 2) ++inside;
    }
  }
  return inside / 256.0;
}

inline double cos_sim(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

inline std::vector<std::vector<double>> rdm(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  std::vector<std::vector<double>> out(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) out[i][j] = 1.0 - cos_sim(rows[i], rows[j]);
  return out;
}

/// rank = 1 + #smaller + (#equal - 1) / 2, by counting.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    r[i] = 1 + less + (equal - 1) / 2;
  }
  return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  return num / std::sqrt(da) / std::sqrt(db);
}

inline std::vector<double> upper(const std::vector<std::vector<double>>& m) {
  std::vector<double> out;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j) out.push_back(m[i][j]);
  return out;
}

inline double spearman(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  return pearson(ranks(upper(a)), ranks(upper(b)));
}

inline std::vector<std::vector<double>> match(const std::vector<std::vector<double>>& s,
                                              const std::vector<std::vector<double>>& p) {
  std::vector<std::vector<double>> m(s.size(), std::vector<double>(p.size()));
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) m[i][j] = cos_sim(s[i], p[j]);
  return m;
}

/// Overall and per-category accuracy by exhaustive scan.
inline std::map<std::string, std::pair<int, int>> accuracy(const std::vector<std::vector<double>>& m,
                                                           const std::vector<std::string>& row_cat,
                                                           const std::vector<std::string>& col_cat) {
  std::map<std::string, std::pair<int, int>> out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    double best = -1e300;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < m[i].size(); ++j)
      if (m[i][j] > best) {
        best = m[i][j];
        arg = j;
      }
    const int hit = col_cat[arg] == row_cat[i];
    out[row_cat[i]].first += hit;
    out[row_cat[i]].second += 1;
    out["*"].first += hit;
    out["*"].second += 1;
  }
  return out;
}

inline std::vector<double> unit(std::vector<double> v) {
  double n = 0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

struct Residual {
  std::map<std::string, std::vector<double>> r;
  std::vector<double> d_hat;
};

/// Residuals via an explicit projection matrix (I - d d^T) applied to each v_c.
inline Residual residuals(const std::vector<std::vector<double>>& rows, const std::vector<std::string>& cats) {
  std::map<std::string, std::vector<std::vector<double>>> groups;
  for (std::size_t i = 0; i < rows.size(); ++i) groups[cats[i]].push_back(unit(rows[i]));
  const std::size_t dim = rows.front().size();
  std::map<std::string, std::vector<double>> v;
  std::vector<double> d(dim, 0.0);
  for (auto& [c, zs] : groups) {
    std::vector<double> s(dim, 0.0);
    for (auto& z : zs)
      for (std::size_t k = 0; k < dim; ++k) s[k] += z[k];
    v[c] = unit(s);
    for (std::size_t k = 0; k < dim; ++k) d[k] += v[c][k];
  }
  Residual out;
  out.d_hat = unit(d);
  for (auto& [c, vc] : v) {
    std::vector<double> r(dim, 0.0);
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t b = 0; b < dim; ++b) r[a] += ((a == b ? 1.0 : 0.0) - out.d_hat[a] * out.d_hat[b]) * vc[b];
    out.r[c] = r;
  }
  return out;
}

/// Full sort by (-similarity, id); returns ids.
inline std::vector<std::string> full_sort(const std::vector<double>& q, const std::vector<std::vector<double>>& items,
                                          const std::vector<std::string>& ids) {
  std::vector<std::pair<double, std::string>> all;
  for (std::size_t i = 0; i < items.size(); ++i) all.push_back({-cos_sim(q, items[i]), ids[i]});
  std::sort(all.begin(), all.end());
  std::vector<std::string> out;
  for (auto& [s, id] : all) out.push_back(id);
  return out;
}

inline std::vector<std::vector<double>> random_rows(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> out(n, std::vector<double>(d));
  for (auto& r : out)
    for (double& x : r) x = g(rng);
  return out;
}

}  // namespace oracle
