// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference implementations of the evaluation metrics, written
// straight from their definitions. Shared by the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

namespace moee::oracle {

using Vec = std::vector<double>;
using Labels = std::vector<int>;

inline Vec count_ranks(const Vec& x) {  // rank = #smaller + (#equal + 1) / 2
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, eq = 0;
    for (double y : x) {
      less += y < x[i];
      eq += y == x[i];
    }
    r[i] = less + (eq + 1.0) / 2.0;
  }
  return r;
}

inline double naive_pearson(const Vec& a, const Vec& b) {
  const double n = static_cast<double>(a.size());
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double oracle_spearman(const Vec& a, const Vec& b) { return naive_pearson(count_ranks(a), count_ranks(b)); }

inline double h_of(const Labels& a) {
  std::map<int, double> c;
  for (int v : a) c[v] += 1;
  double h = 0, n = static_cast<double>(a.size());
  for (auto [_, k] : c) h -= k / n * std::log(k / n);
  return h;
}

inline double joint_h(const Labels& a, const Labels& b) {
  std::map<std::pair<int, int>, double> c;
  for (std::size_t i = 0; i < a.size(); ++i) c[{a[i], b[i]}] += 1;
  double h = 0, n = static_cast<double>(a.size());
  for (auto [_, k] : c) h -= k / n * std::log(k / n);
  return h;
}

inline double mi_of(const Labels& a, const Labels& b) { return h_of(a) + h_of(b) - joint_h(a, b); }

inline double oracle_v_measure(const Labels& pred, const Labels& truth) {
  const double hc = h_of(truth), hk = h_of(pred);
  const double hc_k = joint_h(pred, truth) - hk;  // H(C|K)
  const double hk_c = joint_h(pred, truth) - hc;  // H(K|C)
  const double hom = hc == 0 ? 1.0 : 1.0 - hc_k / hc;
  const double com = hk == 0 ? 1.0 : 1.0 - hk_c / hk;
  return hom + com == 0 ? 0.0 : 2 * hom * com / (hom + com);
}

// Expected MI under the permutation model, by enumerating every permutation of b.
inline double oracle_emi(const Labels& a, const Labels& b) {
  std::vector<int> perm(b.size());
  std::iota(perm.begin(), perm.end(), 0);
  double total = 0, count = 0;
  Labels pb(b.size());
  do {
    for (std::size_t i = 0; i < b.size(); ++i) pb[i] = b[perm[i]];
    total += mi_of(a, pb);
    count += 1;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total / count;
}

inline double oracle_jaccard(const Labels& a, const Labels& b) {
  double both = 0, either = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      both += sa && sb;
      either += sa || sb;
    }
  return either == 0 ? 1.0 : both / either;
}

// Best agreement over every injective relabeling of a's clusters onto b's.
inline double oracle_exact_match(const Labels& a, const Labels& b) {
  const int ka = *std::max_element(a.begin(), a.end()) + 1;
  const int kb = *std::max_element(b.begin(), b.end()) + 1;
  const int k = std::max(ka, kb);
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0;
  do {
    double hit = 0;
    for (std::size_t i = 0; i < a.size(); ++i) hit += perm[a[i]] == b[i];
    best = std::max(best, hit);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return 100.0 * best / static_cast<double>(a.size());
}

inline double oracle_ap(const Vec& s, const Labels& y) {
  double sum = 0, pos = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    pos += 1;
    // Rank of i: items scored higher, or equal with a smaller index, come first.
    double rank = 1, hits = 1;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (j == i) continue;
      if (s[j] > s[i] || (s[j] == s[i] && j < i)) {
        rank += 1;
        hits += y[j];
      }
    }
    sum += hits / rank;
  }
  return sum / pos;
}

inline double dcg(const Vec& gains_in_order, int k) {
  double d = 0;
  for (int r = 0; r < std::min<int>(k, gains_in_order.size()); ++r) d += gains_in_order[r] / std::log2(r + 2.0);
  return d;
}

inline double oracle_ndcg(const Vec& s, const Vec& g, int k) {
  std::vector<int> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return s[a] > s[b]; });
  Vec ordered;
  for (int i : idx) ordered.push_back(g[i]);
  // Ideal DCG: best over every ordering.
  std::vector<int> perm(s.size());
  std::iota(perm.begin(), perm.end(), 0);
  double ideal = 0;
  do {
    Vec o;
    for (int i : perm) o.push_back(g[i]);
    ideal = std::max(ideal, dcg(o, k));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return dcg(ordered, k) / ideal;
}

}  // namespace moee::oracle
