// SPDX-License-Identifier: Apache-2.0

#include "moee/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "moee/error.hpp"
#include "moee/metrics.hpp"

namespace moee {

namespace {

using nlohmann::json;

constexpr int kNoPrompt = -1;

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  fail(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what);
}

std::string require_string(const json& row, const char* key, std::size_t line) {
  if (!row.contains(key) || !row.at(key).is_string()) {
    parse_fail(line, std::string("field '") + key + "' must be a string");
  }
  return row.at(key).get<std::string>();
}

std::string id_string(const json& row, const char* key, std::size_t line) {
  if (!row.contains(key)) parse_fail(line, std::string("missing field '") + key + "'");
  const auto& v = row.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  parse_fail(line, std::string("field '") + key + "' must be a string or integer");
}

// Maps raw labels (all ints or all strings) to ints; string labels are
// numbered in sorted order.
class LabelMapper {
 public:
  void add(const json& raw, std::size_t line) {
    if (raw.is_number_integer()) {
      if (saw_string_) parse_fail(line, "labels mix integers and strings");
      saw_int_ = true;
    } else if (raw.is_string()) {
      if (saw_int_) parse_fail(line, "labels mix integers and strings");
      saw_string_ = true;
      names_.insert(raw.get<std::string>());
    } else {
      parse_fail(line, "field 'label' must be an integer or string");
    }
    raw_.push_back(raw);
  }

  std::vector<int> finish(std::vector<std::string>& names_out) const {
    std::vector<int> out;
    std::vector<std::string> names(names_.begin(), names_.end());
    for (const auto& raw : raw_) {
      if (raw.is_string()) {
        auto it = std::lower_bound(names.begin(), names.end(), raw.get<std::string>());
        out.push_back(static_cast<int>(it - names.begin()));
      } else {
        out.push_back(raw.get<int>());
      }
    }
    if (saw_string_) names_out = std::move(names);
    return out;
  }

 private:
  bool saw_int_ = false;
  bool saw_string_ = false;
  std::set<std::string> names_;
  std::vector<json> raw_;
};

std::string format_double(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string prompt_label(std::optional<int> p) { return p ? std::to_string(*p) : "-"; }

int prompt_key(std::optional<int> p) { return p ? *p : kNoPrompt; }

// Resolves every text to its bundle, or throws Coverage listing what is missing.
std::vector<const ActivationBundle*> resolve(const std::vector<std::string>& texts,
                                             const BundleIndex& bundles,
                                             std::optional<int> prompt_id) {
  std::vector<const ActivationBundle*> out;
  std::vector<std::string> missing;
  for (const auto& t : texts) {
    const auto* b = bundles.find(t, prompt_id);
    if (!b) missing.push_back(t);
    out.push_back(b);
  }
  if (!missing.empty()) {
    std::ostringstream os;
    os << missing.size() << " text(s) have no bundle for prompt " << prompt_label(prompt_id)
       << ":";
    for (std::size_t i = 0; i < missing.size() && i < 5; ++i) os << " \"" << missing[i] << "\"";
    if (missing.size() > 5) os << " ...";
    fail(ErrorKind::Coverage, os.str());
  }
  return out;
}

// Similarity inputs computed once per distinct text.
class SimilarityCache {
 public:
  SimilarityCache(const BundleIndex& bundles, const MethodConfig& method,
                  std::optional<int> prompt_id)
      : bundles_(bundles), method_(method), prompt_id_(prompt_id) {}

  void prepare(const std::vector<std::string>& texts) {
    auto resolved = resolve(texts, bundles_, prompt_id_);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (!cache_.contains(texts[i])) {
        cache_.emplace(texts[i], embed_for_similarity(*resolved[i], method_));
      }
    }
  }

  double score(const std::string& a, const std::string& b) const {
    return similarity(cache_.at(a), cache_.at(b), method_.spec);
  }

 private:
  const BundleIndex& bundles_;
  const MethodConfig& method_;
  std::optional<int> prompt_id_;
  std::map<std::string, SimilarityInput> cache_;
};

TaskScore make_score(const TaskDataset& dataset, const RunConfig& config) {
  TaskScore s;
  s.task = dataset.kind;
  s.dataset = dataset.name;
  s.metric = metric_name(dataset.kind);
  s.strategy = config.method.label();
  s.prompt_id = config.prompt_id;
  s.alpha = config.method.spec.alpha;
  s.seed = config.seed;
  return s;
}

void require_kind(const TaskDataset& d, std::initializer_list<TaskKind> kinds) {
  for (auto k : kinds) {
    if (d.kind == k) return;
  }
  fail(ErrorKind::Spec, "dataset '" + d.name + "' has kind " + to_string(d.kind) +
                            ", not valid for this runner");
}

Points features_for(const std::vector<LabeledText>& rows, const BundleIndex& bundles,
                    const RunConfig& config) {
  std::vector<std::string> texts;
  for (const auto& r : rows) texts.push_back(r.text);
  auto resolved = resolve(texts, bundles, config.prompt_id);
  Points out;
  out.reserve(rows.size());
  for (const auto* b : resolved) out.push_back(embed_features(*b, config.method));
  return out;
}

}  // namespace

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Sts: return "sts";
    case TaskKind::Classification: return "classification";
    case TaskKind::Clustering: return "clustering";
    case TaskKind::PairClassification: return "pair_classification";
    case TaskKind::Rerank: return "rerank";
    case TaskKind::Summarization: return "summarization";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "sts") return TaskKind::Sts;
  if (name == "classification") return TaskKind::Classification;
  if (name == "clustering") return TaskKind::Clustering;
  if (name == "pair_classification" || name == "pairs") return TaskKind::PairClassification;
  if (name == "rerank") return TaskKind::Rerank;
  if (name == "summarization") return TaskKind::Summarization;
  fail(ErrorKind::Parse, "unknown task kind '" + std::string(name) + "'");
}

std::string metric_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::Sts:
    case TaskKind::Summarization: return "spearman";
    case TaskKind::Classification: return "accuracy";
    case TaskKind::Clustering: return "v_measure";
    case TaskKind::PairClassification: return "ap";
    case TaskKind::Rerank: return "map";
  }
  return "?";
}

std::size_t TaskDataset::rows() const {
  return scored_pairs.size() + texts.size() + pairs.size() + queries.size();
}

std::vector<std::string> TaskDataset::all_texts() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto add = [&](const std::string& t) {
    if (seen.insert(t).second) out.push_back(t);
  };
  for (const auto& p : scored_pairs) {
    add(p.s1);
    add(p.s2);
  }
  for (const auto& t : texts) add(t.text);
  for (const auto& p : pairs) {
    add(p.s1);
    add(p.s2);
  }
  for (const auto& q : queries) {
    add(q.query);
    for (const auto& c : q.candidates) add(c.text);
  }
  return out;
}

TaskDataset parse_dataset(std::string_view content, TaskKind kind, std::string name) {
  TaskDataset ds;
  ds.kind = kind;
  ds.name = std::move(name);
  LabelMapper labels;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == content.size()) break;
      continue;
    }

    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      parse_fail(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!row.is_object()) parse_fail(line_no, "row must be a JSON object");

    switch (kind) {
      case TaskKind::Sts:
      case TaskKind::Summarization: {
        ScoredPair p{id_string(row, "id", line_no), require_string(row, "s1", line_no),
                     require_string(row, "s2", line_no), 0.0};
        if (!row.contains("score") || !row.at("score").is_number()) {
          parse_fail(line_no, "field 'score' must be a number");
        }
        p.score = row.at("score").get<double>();
        if (!std::isfinite(p.score)) parse_fail(line_no, "score must be finite");
        ds.scored_pairs.push_back(std::move(p));
        break;
      }
      case TaskKind::Classification:
      case TaskKind::Clustering: {
        LabeledText t{id_string(row, "id", line_no), require_string(row, "text", line_no), 0,
                      false};
        if (!row.contains("label")) parse_fail(line_no, "missing field 'label'");
        labels.add(row.at("label"), line_no);
        if (kind == TaskKind::Classification) {
          const auto split = require_string(row, "split", line_no);
          if (split != "train" && split != "test") {
            parse_fail(line_no, "split must be 'train' or 'test'");
          }
          t.train = split == "train";
        }
        ds.texts.push_back(std::move(t));
        break;
      }
      case TaskKind::PairClassification: {
        BinaryPair p{id_string(row, "id", line_no), require_string(row, "s1", line_no),
                     require_string(row, "s2", line_no), 0};
        const auto& l = row.contains("label") ? row.at("label") : json();
        if (!l.is_number_integer() || (l.get<long long>() != 0 && l.get<long long>() != 1)) {
          parse_fail(line_no, "pair label must be 0 or 1");
        }
        p.label = l.get<int>();
        ds.pairs.push_back(std::move(p));
        break;
      }
      case TaskKind::Rerank: {
        RerankQuery q{id_string(row, "query_id", line_no), require_string(row, "query", line_no),
                      {}};
        if (!row.contains("candidates") || !row.at("candidates").is_array()) {
          parse_fail(line_no, "field 'candidates' must be an array");
        }
        for (const auto& c : row.at("candidates")) {
          if (!c.is_object() || !c.contains("text") || !c.at("text").is_string()) {
            parse_fail(line_no, "candidate needs a string 'text'");
          }
          const auto& rel = c.contains("relevant") ? c.at("relevant") : json();
          bool relevant = false;
          if (rel.is_boolean()) {
            relevant = rel.get<bool>();
          } else if (rel.is_number_integer() &&
                     (rel.get<long long>() == 0 || rel.get<long long>() == 1)) {
            relevant = rel.get<long long>() == 1;
          } else {
            parse_fail(line_no, "candidate 'relevant' must be a boolean or 0/1");
          }
          q.candidates.push_back({c.at("text").get<std::string>(), relevant});
        }
        if (q.candidates.empty()) parse_fail(line_no, "query has no candidates");
        ds.queries.push_back(std::move(q));
        break;
      }
    }
  }

  if (kind == TaskKind::Classification || kind == TaskKind::Clustering) {
    auto mapped = labels.finish(ds.label_names);
    for (std::size_t i = 0; i < mapped.size(); ++i) {
      if (mapped[i] < 0) fail(ErrorKind::Parse, "labels must be non-negative");
      ds.texts[i].label = mapped[i];
    }
  }
  if (ds.rows() == 0) fail(ErrorKind::Parse, "dataset '" + ds.name + "' is empty");
  return ds;
}

TaskDataset load_dataset(const std::filesystem::path& path, TaskKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_dataset(buf.str(), kind, path.stem().string());
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

MethodConfig MethodConfig::parse(std::string_view strategy, double alpha) {
  MethodConfig m;
  if (strategy == "sum") {
    m.spec = SimilaritySpec::weighted_sum(alpha);
    return m;
  }
  auto s = parse_strategy(strategy);
  m.hs = s.hs;
  m.rw_pool = s.rw_pool;
  m.concat_normalize = s.normalize;
  switch (s.kind) {
    case EmbeddingKind::Hs: m.spec = SimilaritySpec::hs_only(); break;
    case EmbeddingKind::Rw: m.spec = SimilaritySpec::rw_only(); break;
    case EmbeddingKind::Concat: m.spec = SimilaritySpec::concat_cosine(); break;
  }
  m.spec.alpha = alpha;
  return m;
}

std::string MethodConfig::label() const {
  EmbeddingStrategy s;
  s.hs = hs;
  s.rw_pool = rw_pool;
  s.normalize = concat_normalize;
  switch (spec.mode) {
    case SimilarityMode::HsOnly: s.kind = EmbeddingKind::Hs; break;
    case SimilarityMode::RwOnly: s.kind = EmbeddingKind::Rw; break;
    case SimilarityMode::ConcatCosine: s.kind = EmbeddingKind::Concat; break;
    case SimilarityMode::WeightedSum: return "sum";
  }
  return strategy_name(s);
}

void BundleIndex::add(const ActivationBundle& bundle) {
  bundles_.emplace(std::make_pair(bundle.text, prompt_key(bundle.prompt_id)), bundle);
}

void BundleIndex::add_container(const BundleContainer& container) {
  for (std::size_t i = 0; i < container.size(); ++i) add(container.record(i));
}

const ActivationBundle* BundleIndex::find(const std::string& text,
                                          std::optional<int> prompt_id) const {
  auto it = bundles_.find({text, prompt_key(prompt_id)});
  return it == bundles_.end() ? nullptr : &it->second;
}

SimilarityInput embed_for_similarity(const ActivationBundle& bundle, const MethodConfig& method) {
  SimilarityInput in;
  switch (method.spec.mode) {
    case SimilarityMode::HsOnly:
      in.hs = extract_hs(bundle, method.hs);
      break;
    case SimilarityMode::RwOnly:
      in.rw = extract_rw(bundle, method.rw_pool);
      break;
    case SimilarityMode::ConcatCosine:
      in.concat = moee_concat(extract_hs(bundle, method.hs), extract_rw(bundle, method.rw_pool),
                              method.concat_normalize);
      break;
    case SimilarityMode::WeightedSum:
      in.hs = extract_hs(bundle, method.hs);
      in.rw = extract_rw(bundle, method.rw_pool);
      break;
  }
  return in;
}

std::vector<double> embed_features(const ActivationBundle& bundle, const MethodConfig& method) {
  switch (method.spec.mode) {
    case SimilarityMode::HsOnly:
      return extract_hs(bundle, method.hs).values;
    case SimilarityMode::RwOnly:
      return extract_rw(bundle, method.rw_pool).values;
    case SimilarityMode::ConcatCosine:
      return moee_concat(extract_hs(bundle, method.hs), extract_rw(bundle, method.rw_pool),
                         method.concat_normalize)
          .values;
    case SimilarityMode::WeightedSum:
      return moee_concat(extract_hs(bundle, method.hs), extract_rw(bundle, method.rw_pool), true,
                         std::sqrt(method.spec.alpha))
          .values;
  }
  fail(ErrorKind::Spec, "unhandled similarity mode");
}

// ---------------------------------------------------------------------------

std::vector<double> pair_scores(const std::vector<ScoredPair>& pairs, const BundleIndex& bundles,
                                const MethodConfig& method, std::optional<int> prompt_id) {
  std::vector<std::string> texts;
  for (const auto& p : pairs) {
    texts.push_back(p.s1);
    texts.push_back(p.s2);
  }
  SimilarityCache cache(bundles, method, prompt_id);
  cache.prepare(texts);
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(cache.score(p.s1, p.s2));
  return out;
}

TaskScore run_sts(const TaskDataset& dataset, const BundleIndex& bundles, const RunConfig& config) {
  require_kind(dataset, {TaskKind::Sts, TaskKind::Summarization});
  auto score = make_score(dataset, config);
  const auto predicted = pair_scores(dataset.scored_pairs, bundles, config.method, config.prompt_id);
  std::vector<double> gold;
  for (const auto& p : dataset.scored_pairs) gold.push_back(p.score);
  score.value = spearman(predicted, gold);
  return score;
}

TaskScore run_classification(const TaskDataset& dataset, const BundleIndex& bundles,
                             const RunConfig& config) {
  require_kind(dataset, {TaskKind::Classification});
  auto score = make_score(dataset, config);
  std::vector<LabeledText> train, test;
  for (const auto& t : dataset.texts) (t.train ? train : test).push_back(t);
  if (test.empty()) fail(ErrorKind::DegenerateTask, "dataset '" + dataset.name + "' has no test rows");
  std::vector<int> train_labels, test_labels;
  for (const auto& t : train) train_labels.push_back(t.label);
  for (const auto& t : test) test_labels.push_back(t.label);

  auto model = train_logreg(features_for(train, bundles, config), train_labels);
  score.value = accuracy(classify(model, features_for(test, bundles, config)), test_labels);
  return score;
}

TaskScore run_clustering(const TaskDataset& dataset, const BundleIndex& bundles,
                         const RunConfig& config) {
  require_kind(dataset, {TaskKind::Clustering});
  auto score = make_score(dataset, config);
  std::vector<int> gold;
  std::set<int> classes;
  for (const auto& t : dataset.texts) {
    gold.push_back(t.label);
    classes.insert(t.label);
  }
  const int k = config.k > 0 ? config.k : static_cast<int>(classes.size());
  const auto truth = Partition::from_labels(gold);
  const auto points = features_for(dataset.texts, bundles, config);
  const int restarts = std::max(1, config.restarts);
  double total = 0.0;
  for (int r = 0; r < restarts; ++r) {
    auto result = kmeans(points, k, config.seed + static_cast<std::uint64_t>(r));
    total += v_measure(result.partition, truth);
  }
  score.value = total / restarts;
  return score;
}

TaskScore run_pair_classification(const TaskDataset& dataset, const BundleIndex& bundles,
                                  const RunConfig& config) {
  require_kind(dataset, {TaskKind::PairClassification});
  auto score = make_score(dataset, config);
  std::vector<std::string> texts;
  for (const auto& p : dataset.pairs) {
    texts.push_back(p.s1);
    texts.push_back(p.s2);
  }
  SimilarityCache cache(bundles, config.method, config.prompt_id);
  cache.prepare(texts);
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& p : dataset.pairs) {
    scores.push_back(cache.score(p.s1, p.s2));
    labels.push_back(p.label);
  }
  score.value = average_precision(scores, labels);
  return score;
}

TaskScore run_rerank(const TaskDataset& dataset, const BundleIndex& bundles,
                     const RunConfig& config) {
  require_kind(dataset, {TaskKind::Rerank});
  auto score = make_score(dataset, config);
  SimilarityCache cache(bundles, config.method, config.prompt_id);
  cache.prepare(dataset.all_texts());
  std::vector<RankedQuery> ranked;
  for (const auto& q : dataset.queries) {
    RankedQuery r;
    for (const auto& c : q.candidates) {
      r.scores.push_back(cache.score(q.query, c.text));
      r.labels.push_back(c.relevant ? 1 : 0);
    }
    if (std::find(r.labels.begin(), r.labels.end(), 1) == r.labels.end()) {
      fail(ErrorKind::UndefinedMetric, "query '" + q.query_id + "' has no relevant candidates");
    }
    ranked.push_back(std::move(r));
  }
  score.value = mean_average_precision(ranked);
  return score;
}

TaskScore run_task(const TaskDataset& dataset, const BundleIndex& bundles, const RunConfig& config) {
  switch (dataset.kind) {
    case TaskKind::Sts:
    case TaskKind::Summarization: return run_sts(dataset, bundles, config);
    case TaskKind::Classification: return run_classification(dataset, bundles, config);
    case TaskKind::Clustering: return run_clustering(dataset, bundles, config);
    case TaskKind::PairClassification: return run_pair_classification(dataset, bundles, config);
    case TaskKind::Rerank: return run_rerank(dataset, bundles, config);
  }
  fail(ErrorKind::Spec, "unhandled task kind");
}

std::vector<TaskScore> sweep(std::span<const TaskDataset> datasets, const BundleIndex& bundles,
                             const SweepGrid& grid, int jobs) {
  struct Cell {
    const TaskDataset* dataset;
    std::string strategy;
    std::optional<int> prompt;
    double alpha;
  };
  std::vector<Cell> cells;
  for (const auto& d : datasets) {
    for (const auto& s : grid.strategies) {
      for (const auto& p : grid.prompts) {
        for (double a : grid.alphas) cells.push_back({&d, s, p, a});
      }
    }
  }

  std::vector<TaskScore> results(cells.size());
  auto run_cell = [&](std::size_t i) {
    const auto& c = cells[i];
    try {
      RunConfig config;
      config.method = MethodConfig::parse(c.strategy, c.alpha);
      config.prompt_id = c.prompt;
      config.seed = grid.seed;
      config.restarts = grid.restarts;
      results[i] = run_task(*c.dataset, bundles, config);
      results[i].alpha = c.alpha;
    } catch (const std::exception& e) {
      TaskScore s;
      s.task = c.dataset->kind;
      s.dataset = c.dataset->name;
      s.metric = metric_name(c.dataset->kind);
      s.value = std::numeric_limits<double>::quiet_NaN();
      s.strategy = c.strategy;
      s.prompt_id = c.prompt;
      s.alpha = c.alpha;
      s.seed = grid.seed;
      s.error = e.what();
      results[i] = std::move(s);
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), cells.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
    });
  }
  pool.clear();
  return results;
}

std::string score_to_jsonl(const TaskScore& s) {
  json j = {{"task", to_string(s.task)},
            {"dataset", s.dataset},
            {"strategy", s.strategy},
            {"prompt", s.prompt_id ? json(*s.prompt_id) : json(nullptr)},
            {"alpha", s.alpha},
            {"metric", s.metric},
            {"value", std::isfinite(s.value) ? json(s.value) : json(nullptr)},
            {"seed", s.seed}};
  if (s.error) j["error"] = *s.error;
  return j.dump();
}

std::string format_score_table(std::span<const TaskScore> scores) {
  std::vector<std::array<std::string, 7>> rows;
  rows.push_back({"task", "dataset", "strategy", "prompt", "alpha", "metric", "value"});
  for (const auto& s : scores) {
    rows.push_back({to_string(s.task), s.dataset, s.strategy, prompt_label(s.prompt_id),
                    format_double(s.alpha, "%g"), s.metric,
                    s.error ? "ERROR: " + *s.error : format_double(s.value, "%.6f")});
  }
  std::array<std::size_t, 7> width{};
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < 6; ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::string out;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < 7; ++c) {
      out += r[c];
      if (c + 1 < 7) out += std::string(width[c] - r[c].size() + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

}  // namespace moee
