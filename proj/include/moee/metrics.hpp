// SPDX-License-Identifier: Apache-2.0
//
// Evaluation metrics. All functions are deterministic and single-threaded;
// logs are natural logs.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace moee {

// ---------------------------------------------------------------------------
// Correlation

/// Fractional ranks (1-based); tied values share the average of their ranks.
std::vector<double> average_ranks(std::span<const double> x);

/// Throws UndefinedCorrelation when either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Partitions and clustering

struct Partition {
  std::vector<int> assignments;
  int num_clusters = 0;

  /// Takes arbitrary non-negative labels; num_clusters = max label + 1.
  static Partition from_labels(std::vector<int> labels);
  std::size_t size() const { return assignments.size(); }
};

using Points = std::vector<std::vector<double>>;

struct KMeansResult {
  Partition partition;
  Points centroids;
  double inertia = 0.0;
  int iterations = 0;
};

inline constexpr int kKMeansMaxIterations = 300;

/// k-means++ seeding from Rng(seed), then Lloyd iterations until assignments
/// stop changing or the iteration cap. Ties go to the lower centroid index.
/// A cluster that empties is re-seeded with the point farthest from its
/// centroid, unless every point already sits on its centroid.
KMeansResult kmeans(const Points& points, int k, std::uint64_t seed,
                    int max_iterations = kKMeansMaxIterations);

struct HomogeneityCompleteness {
  double homogeneity = 0.0;
  double completeness = 0.0;
  double v_measure = 0.0;
};

HomogeneityCompleteness homogeneity_completeness(const Partition& predicted,
                                                 const Partition& truth);
double v_measure(const Partition& predicted, const Partition& truth);

double entropy(const Partition& p);
double mutual_information(const Partition& a, const Partition& b);
/// E[MI] under the permutation (hypergeometric) model with fixed marginals.
double expected_mutual_information(const Partition& a, const Partition& b);

/// MI / arithmetic mean of the two entropies.
double nmi(const Partition& a, const Partition& b);
/// (MI - E[MI]) / (mean(H) - E[MI]), arithmetic-mean normalization.
double ami(const Partition& a, const Partition& b);
/// |pairs co-clustered in both| / |pairs co-clustered in either|.
double jaccard_pairs(const Partition& a, const Partition& b);
/// Percentage of points on which the two partitions agree under the best
/// one-to-one matching of their cluster ids.
double exact_match(const Partition& a, const Partition& b);

/// Maximum-weight assignment on a rows x cols matrix; returns, per row, the
/// matched column or -1.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights);

// ---------------------------------------------------------------------------
// Classification

struct LogRegConfig {
  double learning_rate = 0.1;
  int epochs = 1000;
  double l2 = 1e-4;
};

/// Multinomial logistic regression over standardized features.
struct LogisticRegression {
  std::vector<int> classes;       // sorted distinct training labels
  std::vector<double> mean, scale;  // feature standardization
  std::vector<std::vector<double>> weights;  // [classes x features]
  std::vector<double> bias;                  // [classes]
};

/// Zero-initialized full-batch gradient descent on mean cross-entropy plus
/// (l2/2)|W|^2 (bias unregularized). Throws DegenerateTask with fewer than
/// two classes.
LogisticRegression train_logreg(const Points& features, std::span<const int> labels,
                                const LogRegConfig& config = {});
std::vector<int> classify(const LogisticRegression& model, const Points& features);
double accuracy(std::span<const int> predicted, std::span<const int> gold);

// ---------------------------------------------------------------------------
// Ranking

/// Mean over positives of precision at the positive's rank, ranking by
/// descending score with ties broken by original index. Throws
/// UndefinedMetric without positives.
double average_precision(std::span<const double> scores, std::span<const int> labels);

struct RankedQuery {
  std::vector<double> scores;
  std::vector<int> labels;
};

double mean_average_precision(std::span<const RankedQuery> queries);

/// DCG@k / IDCG@k with gain / log2(rank + 1). Throws UndefinedMetric when the
/// ideal DCG is zero.
double ndcg_at_k(std::span<const double> scores, std::span<const double> gains, int k);

}  // namespace moee
