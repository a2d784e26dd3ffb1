// SPDX-License-Identifier: Apache-2.0

#include "moee/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "moee/error.hpp"

namespace moee {

AgreementReport cluster_agreement(const Partition& a, const Partition& b) {
  if (a.size() != b.size()) fail(ErrorKind::Shape, "partitions cover different point counts");
  return {ami(a, b), nmi(a, b), jaccard_pairs(a, b), exact_match(a, b)};
}

PromptCorrelation prompt_correlation_matrix(const std::map<int, std::vector<double>>& hs,
                                            const std::map<int, std::vector<double>>& rw) {
  PromptCorrelation out;
  std::vector<const std::vector<double>*> lists;
  std::vector<bool> is_hs;
  for (const auto& [p, s] : hs) {
    out.labels.push_back("HS-" + std::to_string(p));
    lists.push_back(&s);
    is_hs.push_back(true);
  }
  for (const auto& [p, s] : rw) {
    out.labels.push_back("RW-" + std::to_string(p));
    lists.push_back(&s);
    is_hs.push_back(false);
  }
  const std::size_t m = lists.size();
  if (m == 0) fail(ErrorKind::InsufficientData, "no score lists to correlate");
  for (const auto* l : lists) {
    if (l->size() != lists.front()->size()) {
      fail(ErrorKind::Shape, "score lists cover different numbers of pairs");
    }
  }

  out.matrix.assign(m, std::vector<double>(m, 1.0));
  double sums[3] = {0, 0, 0};
  std::size_t counts[3] = {0, 0, 0};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double r = spearman(*lists[i], *lists[j]);
      out.matrix[i][j] = r;
      out.matrix[j][i] = r;
      const int block = is_hs[i] && is_hs[j] ? 0 : (!is_hs[i] && !is_hs[j] ? 1 : 2);
      sums[block] += r;
      ++counts[block];
    }
  }
  auto mean = [&](int b) { return counts[b] ? sums[b] / static_cast<double>(counts[b]) : 0.0; };
  out.hs_hs_mean = mean(0);
  out.rw_rw_mean = mean(1);
  out.hs_rw_mean = mean(2);
  return out;
}

BoxStats box_stats(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::InsufficientData, "box statistics of no values");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  BoxStats s;
  s.count = v.size();
  // Accumulate relative to the minimum so constant inputs give exactly zero spread.
  double shift = 0.0;
  for (double x : v) shift += x - v.front();
  shift /= n;
  s.mean = v.front() + shift;
  double ss = 0.0;
  for (double x : v) ss += (x - v.front() - shift) * (x - v.front() - shift);
  s.variance = ss / n;
  auto quantile = [&](double q) {
    const double pos = q * (n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  s.min = v.front();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  s.max = v.back();
  return s;
}

PromptRobustness prompt_robustness(
    const std::map<std::string, std::map<int, std::map<std::string, double>>>& scores) {
  // dataset -> method -> values across prompts
  std::map<std::string, std::map<std::string, std::vector<double>>> grouped;
  for (const auto& [method, by_prompt] : scores) {
    for (const auto& [prompt, by_dataset] : by_prompt) {
      for (const auto& [dataset, value] : by_dataset) grouped[dataset][method].push_back(value);
    }
  }
  PromptRobustness out;
  for (const auto& [dataset, by_method] : grouped) {
    for (const auto& [method, values] : by_method) {
      if (values.size() < 2) {
        fail(ErrorKind::InsufficientData, "dataset '" + dataset + "', method '" + method +
                                              "' has scores from fewer than two prompts");
      }
      out.entries.push_back({dataset, method, box_stats(values)});
    }
  }
  if (out.entries.empty()) fail(ErrorKind::InsufficientData, "no scores given");
  return out;
}

ComplementarityReport complementarity_errors(std::span<const double> hs_scores,
                                             std::span<const double> rw_scores,
                                             std::span<const double> gold_scores,
                                             double threshold) {
  const std::size_t n = gold_scores.size();
  if (hs_scores.size() != n || rw_scores.size() != n) {
    fail(ErrorKind::Shape, "score lists differ in length");
  }
  if (n < 2) fail(ErrorKind::InsufficientData, "complementarity needs at least two instances");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    fail(ErrorKind::Spec, "failure threshold must lie in (0, 1)");
  }
  if (std::all_of(gold_scores.begin(), gold_scores.end(),
                  [&](double g) { return g == gold_scores.front(); })) {
    fail(ErrorKind::UndefinedRanking, "gold scores are constant; no ranking to compare against");
  }

  const auto gold = average_ranks(gold_scores);
  const auto hs = average_ranks(hs_scores);
  const auto rw = average_ranks(rw_scores);
  const double dn = static_cast<double>(n);

  ComplementarityReport r;
  r.threshold = threshold;
  r.total = n;
  for (std::size_t i = 0; i < n; ++i) {
    const bool hs_fail = std::abs(hs[i] - gold[i]) / dn > threshold;
    const bool rw_fail = std::abs(rw[i] - gold[i]) / dn > threshold;
    if (hs_fail && rw_fail) {
      ++r.both_fail;
    } else if (hs_fail) {
      ++r.hs_fail_rw_ok;
    } else if (rw_fail) {
      ++r.hs_ok_rw_fail;
    }
  }
  if (const auto c = r.conditioned(); c > 0) {
    const double dc = static_cast<double>(c);
    r.p_hs_ok_rw_fail = static_cast<double>(r.hs_ok_rw_fail) / dc;
    r.p_hs_fail_rw_ok = static_cast<double>(r.hs_fail_rw_ok) / dc;
    r.p_both_fail = static_cast<double>(r.both_fail) / dc;
  }
  return r;
}

}  // namespace moee
