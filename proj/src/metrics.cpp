// SPDX-License-Identifier: Apache-2.0

#include "moee/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "moee/error.hpp"
#include "moee/rng.hpp"

namespace moee {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    fail(ErrorKind::Shape, std::string(what) + ": length mismatch (" + std::to_string(a) +
                               " vs " + std::to_string(b) + ")");
  }
}

void require_finite(std::span<const double> x, const char* what) {
  for (double v : x) {
    if (!std::isfinite(v)) fail(ErrorKind::Numeric, std::string(what) + ": non-finite input");
  }
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

using Counts = std::vector<std::vector<double>>;

Counts contingency(const Partition& a, const Partition& b) {
  require_same_length(a.size(), b.size(), "contingency");
  Counts c(static_cast<std::size_t>(a.num_clusters),
           std::vector<double>(static_cast<std::size_t>(b.num_clusters), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    c[static_cast<std::size_t>(a.assignments[i])][static_cast<std::size_t>(b.assignments[i])] += 1.0;
  }
  return c;
}

std::vector<double> cluster_sizes(const Partition& p) {
  std::vector<double> sizes(static_cast<std::size_t>(p.num_clusters), 0.0);
  for (int id : p.assignments) sizes[static_cast<std::size_t>(id)] += 1.0;
  return sizes;
}

// -sum (c/n) log(c/n), written as (c/n) log(n/c) so that it matches the
// diagonal terms of mutual_information bit-for-bit on identical partitions.
double entropy_of_sizes(const std::vector<double>& sizes, double n) {
  double h = 0.0;
  for (double c : sizes) {
    if (c > 0.0) h += (c / n) * std::log((n * c) / (c * c));
  }
  return h;
}

int count_nonempty(const Partition& p) {
  auto sizes = cluster_sizes(p);
  return static_cast<int>(std::count_if(sizes.begin(), sizes.end(), [](double s) { return s > 0; }));
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

int nearest(const std::vector<double>& p, const Points& centroids, double* dist_out) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = sq_dist(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist_out) *dist_out = best_d;
  return best;
}

Points kmeanspp_seeds(const Points& points, int k, Rng& rng) {
  const std::size_t n = points.size();
  Points centers;
  std::vector<bool> chosen(n, false);
  std::vector<double> mindist(n, std::numeric_limits<double>::infinity());

  std::size_t pick = static_cast<std::size_t>(rng.below(n));
  for (int c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (double d : mindist) total += d;
      if (total > 0.0) {
        const double target = rng.uniform() * total;
        double cum = 0.0;
        pick = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (mindist[i] <= 0.0) continue;
          cum += mindist[i];
          if (cum > target) {
            pick = i;
            break;
          }
        }
        if (pick == n) {
          // Rounding left target at the very end of the cumulative sum.
          for (std::size_t i = n; i-- > 0;) {
            if (mindist[i] > 0.0) {
              pick = i;
              break;
            }
          }
        }
      } else {
        // Every point coincides with a chosen center.
        pick = 0;
        while (pick < n && chosen[pick]) ++pick;
        if (pick == n) pick = 0;
      }
    }
    chosen[pick] = true;
    centers.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      mindist[i] = std::min(mindist[i], sq_dist(points[i], centers.back()));
    }
  }
  return centers;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size(), "pearson");
  if (x.size() < 2) fail(ErrorKind::Size, "correlation needs at least two points");
  require_finite(x, "pearson");
  require_finite(y, "pearson");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    fail(ErrorKind::UndefinedCorrelation, "correlation of a constant vector is undefined");
  }
  return std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size(), "spearman");
  if (x.size() < 2) fail(ErrorKind::Size, "correlation needs at least two points");
  require_finite(x, "spearman");
  require_finite(y, "spearman");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

// ---------------------------------------------------------------------------

Partition Partition::from_labels(std::vector<int> labels) {
  int k = 0;
  for (int id : labels) {
    if (id < 0) fail(ErrorKind::Shape, "cluster ids must be non-negative");
    k = std::max(k, id + 1);
  }
  return Partition{std::move(labels), k};
}

KMeansResult kmeans(const Points& points, int k, std::uint64_t seed, int max_iterations) {
  const std::size_t n = points.size();
  if (n == 0) fail(ErrorKind::EmptyInput, "k-means over zero points");
  if (k < 1) fail(ErrorKind::Size, "k must be positive");
  if (static_cast<std::size_t>(k) > n) {
    fail(ErrorKind::Size, "k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " points");
  }
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) fail(ErrorKind::Shape, "k-means points have differing dimensions");
    require_finite(p, "kmeans");
  }

  Rng rng(seed);
  KMeansResult result;
  result.centroids = kmeanspp_seeds(points, k, rng);
  std::vector<int> labels(n);
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = nearest(points[i], result.centroids, &dist[i]);

  const auto kk = static_cast<std::size_t>(k);
  int iter = 0;
  while (iter < max_iterations) {
    ++iter;
    Points sums(kk, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(kk, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto c = static_cast<std::size_t>(labels[i]);
      ++counts[c];
      for (std::size_t j = 0; j < dim; ++j) sums[c][j] += points[i][j];
    }
    for (std::size_t c = 0; c < kk; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < dim; ++j) {
        result.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = sq_dist(points[i], result.centroids[static_cast<std::size_t>(labels[i])]);
    }
    for (std::size_t c = 0; c < kk; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (dist[i] > dist[far]) far = i;
      }
      if (!(dist[far] > 0.0)) break;
      --counts[static_cast<std::size_t>(labels[far])];
      labels[far] = static_cast<int>(c);
      counts[c] = 1;
      result.centroids[c] = points[far];
      dist[far] = 0.0;
    }

    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int l = nearest(points[i], result.centroids, &dist[i]);
      if (l != labels[i]) {
        labels[i] = l;
        changed = true;
      }
    }
    if (!changed) break;
  }

  result.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    result.inertia += sq_dist(points[i], result.centroids[static_cast<std::size_t>(labels[i])]);
  }
  result.iterations = iter;
  result.partition = Partition{std::move(labels), k};
  return result;
}

// ---------------------------------------------------------------------------

double entropy(const Partition& p) {
  if (p.size() == 0) return 0.0;
  return entropy_of_sizes(cluster_sizes(p), static_cast<double>(p.size()));
}

double mutual_information(const Partition& a, const Partition& b) {
  const auto c = contingency(a, b);
  const auto sa = cluster_sizes(a);
  const auto sb = cluster_sizes(b);
  const double n = static_cast<double>(a.size());
  double mi = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < c[i].size(); ++j) {
      const double nij = c[i][j];
      if (nij > 0.0) mi += (nij / n) * std::log((n * nij) / (sa[i] * sb[j]));
    }
  }
  return std::max(mi, 0.0);
}

HomogeneityCompleteness homogeneity_completeness(const Partition& predicted,
                                                 const Partition& truth) {
  require_same_length(predicted.size(), truth.size(), "v_measure");
  HomogeneityCompleteness r{1.0, 1.0, 1.0};
  if (truth.size() == 0) return r;
  const auto c = contingency(truth, predicted);  // [class x cluster]
  const auto s_class = cluster_sizes(truth);
  const auto s_cluster = cluster_sizes(predicted);
  const double n = static_cast<double>(truth.size());

  const double h_class = entropy_of_sizes(s_class, n);
  const double h_cluster = entropy_of_sizes(s_cluster, n);
  double h_class_given_cluster = 0.0;
  double h_cluster_given_class = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < c[i].size(); ++j) {
      const double nij = c[i][j];
      if (nij <= 0.0) continue;
      h_class_given_cluster += (nij / n) * std::log((s_cluster[j] * nij) / (nij * nij));
      h_cluster_given_class += (nij / n) * std::log((s_class[i] * nij) / (nij * nij));
    }
  }
  r.homogeneity = h_class == 0.0 ? 1.0 : 1.0 - h_class_given_cluster / h_class;
  r.completeness = h_cluster == 0.0 ? 1.0 : 1.0 - h_cluster_given_class / h_cluster;
  r.homogeneity = std::clamp(r.homogeneity, 0.0, 1.0);
  r.completeness = std::clamp(r.completeness, 0.0, 1.0);
  const double s = r.homogeneity + r.completeness;
  r.v_measure = s == 0.0 ? 0.0 : 2.0 * r.homogeneity * r.completeness / s;
  return r;
}

double v_measure(const Partition& predicted, const Partition& truth) {
  return homogeneity_completeness(predicted, truth).v_measure;
}

double expected_mutual_information(const Partition& a, const Partition& b) {
  require_same_length(a.size(), b.size(), "expected_mutual_information");
  const auto sa = cluster_sizes(a);
  const auto sb = cluster_sizes(b);
  const double n = static_cast<double>(a.size());
  const double lg_n = std::lgamma(n + 1.0);
  double emi = 0.0;
  for (double ai : sa) {
    if (ai <= 0.0) continue;
    for (double bj : sb) {
      if (bj <= 0.0) continue;
      const double lo = std::max(1.0, ai + bj - n);
      const double hi = std::min(ai, bj);
      const double log_const = std::lgamma(ai + 1.0) + std::lgamma(bj + 1.0) +
                               std::lgamma(n - ai + 1.0) + std::lgamma(n - bj + 1.0) - lg_n;
      for (double nij = lo; nij <= hi; nij += 1.0) {
        const double log_p = log_const - std::lgamma(nij + 1.0) - std::lgamma(ai - nij + 1.0) -
                             std::lgamma(bj - nij + 1.0) - std::lgamma(n - ai - bj + nij + 1.0);
        emi += (nij / n) * std::log((n * nij) / (ai * bj)) * std::exp(log_p);
      }
    }
  }
  return emi;
}

double nmi(const Partition& a, const Partition& b) {
  require_same_length(a.size(), b.size(), "nmi");
  const double ha = entropy(a);
  const double hb = entropy(b);
  if (ha == 0.0 && hb == 0.0) return 1.0;
  const double mean_h = 0.5 * (ha + hb);
  return std::clamp(mutual_information(a, b) / mean_h, 0.0, 1.0);
}

double ami(const Partition& a, const Partition& b) {
  require_same_length(a.size(), b.size(), "ami");
  const int ka = count_nonempty(a);
  const int kb = count_nonempty(b);
  if ((ka == 1 && kb == 1) || (ka == 0 && kb == 0)) return 1.0;
  const double mi = mutual_information(a, b);
  const double emi = expected_mutual_information(a, b);
  const double mean_h = 0.5 * (entropy(a) + entropy(b));
  double denom = mean_h - emi;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  denom = denom < 0.0 ? std::min(denom, -eps) : std::max(denom, eps);
  return (mi - emi) / denom;
}

double jaccard_pairs(const Partition& a, const Partition& b) {
  const auto c = contingency(a, b);
  auto pairs = [](double m) { return m * (m - 1.0) / 2.0; };
  double both = 0.0, in_a = 0.0, in_b = 0.0;
  for (const auto& row : c) {
    for (double v : row) both += pairs(v);
  }
  for (double s : cluster_sizes(a)) in_a += pairs(s);
  for (double s : cluster_sizes(b)) in_b += pairs(s);
  const double either = in_a + in_b - both;
  return either == 0.0 ? 1.0 : both / either;
}

std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights) {
  const std::size_t rows = weights.size();
  const std::size_t cols = rows == 0 ? 0 : weights.front().size();
  const std::size_t m = std::max(rows, cols);
  std::vector<int> result(rows, -1);
  if (m == 0) return result;

  double wmax = 0.0;
  for (const auto& r : weights) {
    for (double w : r) wmax = std::max(wmax, w);
  }
  auto cost = [&](std::size_t i, std::size_t j) {
    const double w = (i < rows && j < cols) ? weights[i][j] : 0.0;
    return wmax - w;
  };

  // Hungarian algorithm (potentials form), 1-based internally.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(m + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<bool> used(m + 1);
  for (std::size_t i = 1; i <= m; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= m; ++j) {
    const std::size_t i = p[j];
    if (i >= 1 && i - 1 < rows && j - 1 < cols) result[i - 1] = static_cast<int>(j - 1);
  }
  return result;
}

double exact_match(const Partition& a, const Partition& b) {
  const auto c = contingency(a, b);
  if (a.size() == 0) return 100.0;
  const auto match = max_weight_assignment(c);
  double agreed = 0.0;
  for (std::size_t i = 0; i < match.size(); ++i) {
    if (match[i] >= 0) agreed += c[i][static_cast<std::size_t>(match[i])];
  }
  return 100.0 * agreed / static_cast<double>(a.size());
}

// ---------------------------------------------------------------------------

LogisticRegression train_logreg(const Points& features, std::span<const int> labels,
                                const LogRegConfig& config) {
  require_same_length(features.size(), labels.size(), "train_logreg");
  if (features.empty()) fail(ErrorKind::EmptyInput, "no training rows");
  const std::size_t n = features.size();
  const std::size_t f = features.front().size();
  for (const auto& x : features) {
    if (x.size() != f) fail(ErrorKind::Shape, "training rows have differing dimensions");
    require_finite(x, "train_logreg");
  }

  LogisticRegression model;
  model.classes.assign(labels.begin(), labels.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
  if (model.classes.size() < 2) {
    fail(ErrorKind::DegenerateTask, "classification needs at least two classes in training");
  }
  const std::size_t k = model.classes.size();

  model.mean.assign(f, 0.0);
  model.scale.assign(f, 0.0);
  for (const auto& x : features) {
    for (std::size_t j = 0; j < f; ++j) model.mean[j] += x[j];
  }
  for (double& m : model.mean) m /= static_cast<double>(n);
  for (const auto& x : features) {
    for (std::size_t j = 0; j < f; ++j) {
      const double d = x[j] - model.mean[j];
      model.scale[j] += d * d;
    }
  }
  for (double& s : model.scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 0.0)) s = 1.0;
  }

  Points z(n, std::vector<double>(f));
  std::vector<std::size_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < f; ++j) z[i][j] = (features[i][j] - model.mean[j]) / model.scale[j];
    y[i] = static_cast<std::size_t>(
        std::lower_bound(model.classes.begin(), model.classes.end(), labels[i]) -
        model.classes.begin());
  }

  model.weights.assign(k, std::vector<double>(f, 0.0));
  model.bias.assign(k, 0.0);
  Points grad_w(k, std::vector<double>(f));
  std::vector<double> grad_b(k), logits(k);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (auto& g : grad_w) std::fill(g.begin(), g.end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        double s = model.bias[c];
        for (std::size_t j = 0; j < f; ++j) s += model.weights[c][j] * z[i][j];
        logits[c] = s;
        mx = std::max(mx, s);
      }
      double denom = 0.0;
      for (double& s : logits) {
        s = std::exp(s - mx);
        denom += s;
      }
      for (std::size_t c = 0; c < k; ++c) {
        const double err = logits[c] / denom - (y[i] == c ? 1.0 : 0.0);
        grad_b[c] += err;
        for (std::size_t j = 0; j < f; ++j) grad_w[c][j] += err * z[i][j];
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      model.bias[c] -= config.learning_rate * grad_b[c] * inv_n;
      for (std::size_t j = 0; j < f; ++j) {
        model.weights[c][j] -=
            config.learning_rate * (grad_w[c][j] * inv_n + config.l2 * model.weights[c][j]);
      }
    }
  }
  return model;
}

std::vector<int> classify(const LogisticRegression& model, const Points& features) {
  const std::size_t f = model.mean.size();
  std::vector<int> out;
  out.reserve(features.size());
  for (const auto& x : features) {
    if (x.size() != f) fail(ErrorKind::Shape, "feature dimension differs from training");
    std::size_t best = 0;
    double best_s = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < model.classes.size(); ++c) {
      double s = model.bias[c];
      for (std::size_t j = 0; j < f; ++j) s += model.weights[c][j] * (x[j] - model.mean[j]) / model.scale[j];
      if (s > best_s) {
        best_s = s;
        best = c;
      }
    }
    out.push_back(model.classes[best]);
  }
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> gold) {
  require_same_length(predicted.size(), gold.size(), "accuracy");
  if (gold.empty()) fail(ErrorKind::EmptyInput, "accuracy over zero items");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hit += predicted[i] == gold[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(gold.size());
}

// ---------------------------------------------------------------------------

double average_precision(std::span<const double> scores, std::span<const int> labels) {
  require_same_length(scores.size(), labels.size(), "average_precision");
  require_finite(scores, "average_precision");
  for (int l : labels) {
    if (l != 0 && l != 1) fail(ErrorKind::UndefinedMetric, "average precision needs 0/1 labels");
  }
  const auto order = descending_order(scores);
  double hits = 0.0, sum = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (labels[order[r]] == 1) {
      hits += 1.0;
      sum += hits / static_cast<double>(r + 1);
    }
  }
  if (hits == 0.0) fail(ErrorKind::UndefinedMetric, "average precision with no positives");
  return sum / hits;
}

double mean_average_precision(std::span<const RankedQuery> queries) {
  if (queries.empty()) fail(ErrorKind::EmptyInput, "mean average precision over zero queries");
  double sum = 0.0;
  for (const auto& q : queries) sum += average_precision(q.scores, q.labels);
  return sum / static_cast<double>(queries.size());
}

double ndcg_at_k(std::span<const double> scores, std::span<const double> gains, int k) {
  require_same_length(scores.size(), gains.size(), "ndcg_at_k");
  if (k < 1) fail(ErrorKind::Size, "nDCG cutoff k must be at least 1");
  require_finite(scores, "ndcg_at_k");
  require_finite(gains, "ndcg_at_k");
  const auto order = descending_order(scores);
  std::vector<double> ideal(gains.begin(), gains.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const std::size_t cut = std::min(order.size(), static_cast<std::size_t>(k));
  double dcg = 0.0, idcg = 0.0;
  for (std::size_t r = 0; r < cut; ++r) {
    const double discount = std::log2(static_cast<double>(r) + 2.0);
    dcg += gains[order[r]] / discount;
    idcg += ideal[r] / discount;
  }
  if (!(idcg > 0.0)) fail(ErrorKind::UndefinedMetric, "nDCG with zero ideal gain");
  return dcg / idcg;
}

}  // namespace moee
