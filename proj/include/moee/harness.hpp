// SPDX-License-Identifier: Apache-2.0
//
// Task datasets (line-delimited JSON) and per-task evaluation pipelines.
//
// Schemas, one object per line:
//   sts / summarization  {"id", "s1", "s2", "score"}
//   classification       {"id", "text", "label", "split": "train"|"test"}
//   clustering           {"id", "text", "label"}
//   pair_classification  {"id", "s1", "s2", "label": 0|1}
//   rerank               {"query_id", "query", "candidates": [{"text", "relevant"}]}
// Labels may be integers or strings.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "moee/embedder.hpp"
#include "moee/simkit.hpp"
#include "moee/store.hpp"

namespace moee {

enum class TaskKind { Sts, Classification, Clustering, PairClassification, Rerank, Summarization };

std::string to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);
/// spearman, accuracy, v_measure, ap, map.
std::string metric_name(TaskKind kind);

struct ScoredPair {
  std::string id;
  std::string s1, s2;
  double score = 0.0;
};

struct LabeledText {
  std::string id;
  std::string text;
  int label = 0;
  bool train = false;  // classification only
};

struct BinaryPair {
  std::string id;
  std::string s1, s2;
  int label = 0;
};

struct RerankCandidate {
  std::string text;
  bool relevant = false;
};

struct RerankQuery {
  std::string query_id;
  std::string query;
  std::vector<RerankCandidate> candidates;
};

struct TaskDataset {
  TaskKind kind = TaskKind::Sts;
  std::string name;
  std::vector<ScoredPair> scored_pairs;  // sts, summarization
  std::vector<LabeledText> texts;        // classification, clustering
  std::vector<BinaryPair> pairs;         // pair_classification
  std::vector<RerankQuery> queries;      // rerank
  /// Original string labels, indexed by integer label, when labels were strings.
  std::vector<std::string> label_names;

  std::size_t rows() const;
  /// Every distinct text the dataset needs embedded, in first-seen order.
  std::vector<std::string> all_texts() const;
};

/// Throws Parse with the 1-based line number on any schema violation.
TaskDataset parse_dataset(std::string_view content, TaskKind kind, std::string name = "");
TaskDataset load_dataset(const std::filesystem::path& path, TaskKind kind);

/// Which embedding(s) a run compares, and how.
struct MethodConfig {
  SimilaritySpec spec;
  HsStrategy hs;
  TokenPool rw_pool = TokenPool::LastToken;
  bool concat_normalize = true;

  /// hs:*:*, rw:*, concat, concat:raw, or "sum" (weighted sum of the default
  /// HS and RW embeddings, using `alpha`).
  static MethodConfig parse(std::string_view strategy, double alpha = 1.0);
  std::string label() const;
};

/// Bundles addressable by (text, prompt id).
class BundleIndex {
 public:
  void add(const ActivationBundle& bundle);
  void add_container(const BundleContainer& container);
  const ActivationBundle* find(const std::string& text, std::optional<int> prompt_id) const;
  std::size_t size() const { return bundles_.size(); }

 private:
  std::map<std::pair<std::string, int>, ActivationBundle> bundles_;
};

/// Embeddings of one text for similarity use under `method`.
SimilarityInput embed_for_similarity(const ActivationBundle& bundle, const MethodConfig& method);
/// Single feature vector for classification / clustering. Weighted sum maps to
/// [e_HS/|e_HS|; sqrt(alpha) e_RW/|e_RW|], whose inner products reproduce the
/// alpha-weighted cosine sum.
std::vector<double> embed_features(const ActivationBundle& bundle, const MethodConfig& method);

struct RunConfig {
  MethodConfig method;
  std::optional<int> prompt_id;  // nullopt = unprompted bundles (prompt id null)
  std::uint64_t seed = 0;
  int k = 0;         // clustering: 0 = number of gold classes
  int restarts = 1;  // clustering: V-measure averaged over seeds seed..seed+restarts-1
};

struct TaskScore {
  TaskKind task = TaskKind::Sts;
  std::string dataset;
  std::string metric;
  double value = 0.0;
  std::string strategy;
  std::optional<int> prompt_id;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  /// Set when the run failed; value is then NaN.
  std::optional<std::string> error;
};

TaskScore run_sts(const TaskDataset& dataset, const BundleIndex& bundles, const RunConfig& config);
TaskScore run_classification(const TaskDataset& dataset, const BundleIndex& bundles,
                             const RunConfig& config);
TaskScore run_clustering(const TaskDataset& dataset, const BundleIndex& bundles,
                         const RunConfig& config);
TaskScore run_pair_classification(const TaskDataset& dataset, const BundleIndex& bundles,
                                  const RunConfig& config);
TaskScore run_rerank(const TaskDataset& dataset, const BundleIndex& bundles,
                     const RunConfig& config);
/// Dispatches on dataset.kind.
TaskScore run_task(const TaskDataset& dataset, const BundleIndex& bundles, const RunConfig& config);

/// Per-pair similarity scores used by run_sts (exposed for analyses).
std::vector<double> pair_scores(const std::vector<ScoredPair>& pairs, const BundleIndex& bundles,
                                const MethodConfig& method, std::optional<int> prompt_id);

struct SweepGrid {
  std::vector<std::string> strategies;
  std::vector<std::optional<int>> prompts;
  std::vector<double> alphas;
  std::uint64_t seed = 0;
  int restarts = 1;
};

/// Cells ordered by dataset, then strategy, prompt, alpha. A failing cell is
/// recorded with its error and the sweep continues. `jobs` only changes how
/// many cells run concurrently.
std::vector<TaskScore> sweep(std::span<const TaskDataset> datasets, const BundleIndex& bundles,
                             const SweepGrid& grid, int jobs = 1);

std::string score_to_jsonl(const TaskScore& score);
/// Aligned table: task, dataset, strategy, prompt, alpha, metric, value.
std::string format_score_table(std::span<const TaskScore> scores);

}  // namespace moee
