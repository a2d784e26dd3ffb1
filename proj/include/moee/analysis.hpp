// SPDX-License-Identifier: Apache-2.0
//
// Comparative analyses of routing-weight and hidden-state embeddings:
// cluster agreement, prompt correlation, prompt robustness and the
// complementarity error breakdown.

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "moee/metrics.hpp"

namespace moee {

struct AgreementReport {
  double ami = 0.0;
  double nmi = 0.0;
  double jaccard = 0.0;
  double exact_match_pct = 0.0;
};

AgreementReport cluster_agreement(const Partition& a, const Partition& b);

struct PromptCorrelation {
  /// "HS-<prompt>" ... then "RW-<prompt>" ...
  std::vector<std::string> labels;
  std::vector<std::vector<double>> matrix;
  /// Off-diagonal means of the three blocks.
  double hs_hs_mean = 0.0;
  double rw_rw_mean = 0.0;
  double hs_rw_mean = 0.0;
};

/// Spearman correlation between the pair-score lists of every (method, prompt)
/// configuration. `hs` and `rw` map prompt id -> scores over the same pairs.
PromptCorrelation prompt_correlation_matrix(const std::map<int, std::vector<double>>& hs,
                                            const std::map<int, std::vector<double>>& rw);

struct BoxStats {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // population
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Quartiles by linear interpolation between order statistics.
BoxStats box_stats(std::span<const double> values);

struct RobustnessEntry {
  std::string dataset;
  std::string method;
  BoxStats stats;
};

struct PromptRobustness {
  std::vector<RobustnessEntry> entries;  // ordered by dataset, then method
};

/// `scores[method][prompt_id][dataset]`; every (dataset, method) needs scores
/// from at least two prompts, else InsufficientData.
PromptRobustness prompt_robustness(
    const std::map<std::string, std::map<int, std::map<std::string, double>>>& scores);

inline constexpr double kDefaultFailureThreshold = 0.1;

struct ComplementarityReport {
  double threshold = kDefaultFailureThreshold;
  std::size_t total = 0;
  std::size_t hs_ok_rw_fail = 0;
  std::size_t hs_fail_rw_ok = 0;
  std::size_t both_fail = 0;
  /// Proportions of the at-least-one-failure set; all zero when it is empty.
  double p_hs_ok_rw_fail = 0.0;
  double p_hs_fail_rw_ok = 0.0;
  double p_both_fail = 0.0;

  std::size_t conditioned() const { return hs_ok_rw_fail + hs_fail_rw_ok + both_fail; }
};

/// An instance fails for a method when |rank_pred - rank_gold| / n > threshold,
/// with average ranks over the instance set.
ComplementarityReport complementarity_errors(std::span<const double> hs_scores,
                                             std::span<const double> rw_scores,
                                             std::span<const double> gold_scores,
                                             double threshold = kDefaultFailureThreshold);

}  // namespace moee
