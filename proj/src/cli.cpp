// SPDX-License-Identifier: Apache-2.0

#include "moee/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "moee/analysis.hpp"
#include "moee/embedder.hpp"
#include "moee/engine.hpp"
#include "moee/error.hpp"
#include "moee/harness.hpp"
#include "moee/store.hpp"

namespace moee::cli {

namespace {

using nlohmann::ordered_json;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::optional<int> normalize_prompt(std::optional<int> p) {
  if (p && *p == kPromptNone) return std::nullopt;
  if (p) prompt_template(*p);  // validates the id
  return p;
}

ordered_json prompt_json(std::optional<int> p) { return p ? ordered_json(*p) : ordered_json(nullptr); }

std::string file_name(const std::string& path) { return std::filesystem::path(path).filename().string(); }

ordered_json file_names(const std::vector<std::string>& paths) {
  ordered_json out = ordered_json::array();
  for (const auto& p : paths) out.push_back(file_name(p));
  return out;
}

/// The audit header every output starts with.
std::string config_line(const ordered_json& config) { return "# moee " + config.dump(); }

void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::Io, "cannot open " + path + " for writing");
  f << content;
  if (!f) fail(ErrorKind::Io, "write failed: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Io, "cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

BundleIndex load_bundles(const std::vector<std::string>& containers) {
  BundleIndex index;
  for (const auto& path : containers) index.add_container(read_container(path));
  return index;
}

std::pair<TaskKind, std::string> parse_task_path(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    fail(ErrorKind::Parse, "expected KIND:PATH, got '" + spec + "'");
  }
  return {parse_task_kind(spec.substr(0, colon)), spec.substr(colon + 1)};
}

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------

struct GenModelOptions {
  int layers = 2;
  int dim = 8;
  int ffn = 0;
  int heads = 1;
  std::string experts = "4";
  int topk = 2;
  int vocab = kByteVocabSize;
  int max_seq = 512;
  std::uint64_t seed = 0;
  std::string output;
};

int cmd_gen_model(const GenModelOptions& o, std::ostream& out) {
  MoEConfig c;
  c.num_layers = o.layers;
  c.hidden_dim = o.dim;
  c.ffn_dim = o.ffn > 0 ? o.ffn : 2 * o.dim;
  c.num_heads = o.heads;
  c.top_k = o.topk;
  c.vocab_size = o.vocab;
  c.max_seq_len = o.max_seq;
  c.rng_seed = o.seed;
  c.experts_per_layer.clear();
  for (const auto& e : split(o.experts, ',')) {
    try {
      c.experts_per_layer.push_back(std::stoi(e));
    } catch (const std::exception&) {
      fail(ErrorKind::Config, "--experts must be integers, got '" + e + "'");
    }
  }
  if (c.experts_per_layer.size() == 1 && c.num_layers > 1) {
    c.experts_per_layer.assign(static_cast<std::size_t>(c.num_layers), c.experts_per_layer[0]);
  }
  const auto model = gen_toy_model(c);
  save_model(model, o.output);

  ordered_json cfg = {{"command", "gen-model"},   {"layers", c.num_layers},
                      {"dim", c.hidden_dim},      {"ffn", c.ffn_dim},
                      {"heads", c.num_heads},     {"experts", c.experts_per_layer},
                      {"topk", c.top_k},          {"vocab", c.vocab_size},
                      {"max_seq", c.max_seq_len}, {"seed", c.rng_seed}};
  out << config_line(cfg) << "\n";
  out << "wrote " << o.output << ": " << c.num_layers << " layers, " << c.total_experts()
      << " gate outputs\n";
  return kExitOk;
}

struct RunOptions {
  std::string model;
  std::vector<std::string> texts;
  std::vector<std::string> datasets;
  std::optional<int> prompt;
  std::string tokens = "last";
  std::string name;
  int jobs = 1;
  std::string output;
};

int cmd_run(const RunOptions& o, std::ostream& out) {
  const auto model = load_model(o.model);
  const auto mode = parse_token_mode(o.tokens);
  const auto prompt = normalize_prompt(o.prompt);
  const auto& tmpl = prompt_template(prompt.value_or(kPromptNone));

  std::vector<std::string> texts;
  std::set<std::string> seen;
  auto add = [&](const std::string& t) {
    if (seen.insert(t).second) texts.push_back(t);
  };
  for (const auto& path : o.texts) {
    std::istringstream in(read_text(path));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) add(line);
    }
  }
  for (const auto& spec : o.datasets) {
    auto [kind, path] = parse_task_path(spec);
    for (const auto& t : load_dataset(path, kind).all_texts()) add(t);
  }
  if (texts.empty()) fail(ErrorKind::EmptyInput, "no input texts (use --texts or --dataset)");

  std::vector<ActivationBundle> bundles(texts.size());
  parallel_for(texts.size(), o.jobs, [&](std::size_t i) {
    char id[32];
    std::snprintf(id, sizeof id, "t%06zu", i);
    const auto trace = forward(model, tokenize(apply_prompt(tmpl, texts[i])));
    bundles[i] = make_bundle(trace, id, texts[i], prompt, mode);
  });

  const std::string name =
      o.name.empty() ? std::filesystem::path(o.model).stem().string() : o.name;
  auto fp = fingerprint_of(model, name);
  fp.attributes["model_seed"] = std::to_string(model.config.rng_seed);
  const auto bytes = write_container(fp, bundles, o.output);

  ordered_json cfg = {{"command", "run"},
                      {"model", file_name(o.model)},
                      {"texts", file_names(o.texts)},
                      {"datasets", o.datasets},
                      {"prompt", prompt_json(prompt)},
                      {"tokens", to_string(mode)}};
  out << config_line(cfg) << "\n";
  out << "wrote " << o.output << ": " << bundles.size() << " records, " << bytes << " bytes\n";
  return kExitOk;
}

struct EmbedOptions {
  std::vector<std::string> containers;
  std::string strategy = "concat";
  std::string output;
};

int cmd_embed(const EmbedOptions& o, std::ostream& out) {
  const auto strategy = parse_strategy(o.strategy);
  ordered_json cfg = {{"command", "embed"},
                      {"containers", file_names(o.containers)},
                      {"strategy", strategy_name(strategy)}};
  std::ostringstream body;
  body << ordered_json{{"config", cfg}}.dump() << "\n";
  for (const auto& path : o.containers) {
    const auto container = read_container(path);
    for (std::size_t i = 0; i < container.size(); ++i) {
      const auto b = container.record(i);
      const auto e = embed(b, strategy);
      ordered_json row = {{"id", b.record_id},
                          {"text", b.text},
                          {"prompt", prompt_json(b.prompt_id)},
                          {"strategy", strategy_name(e.strategy)},
                          {"dim", e.dim()},
                          {"values", e.values}};
      body << row.dump() << "\n";
    }
  }
  if (o.output.empty()) {
    out << body.str();
  } else {
    write_text(o.output, body.str());
    out << config_line(cfg) << "\n";
  }
  return kExitOk;
}

struct EvalOptions {
  std::string task;
  std::string dataset;
  std::vector<std::string> containers;
  std::string strategy = "sum";
  std::string mode;
  double alpha = 1.0;
  std::optional<int> prompt;
  std::uint64_t seed = 0;
  int k = 0;
  int restarts = 1;
  std::string output;
};

std::string strategy_for_mode(const std::string& mode) {
  if (mode == "hs") return "hs:last:last";
  if (mode == "rw") return "rw:last";
  if (mode == "concat") return "concat";
  if (mode == "sum") return "sum";
  fail(ErrorKind::Strategy, "--mode must be hs, rw, concat or sum");
}

void emit_scores(const ordered_json& cfg, const std::vector<TaskScore>& scores,
                 const std::string& output, std::ostream& out) {
  out << config_line(cfg) << "\n" << format_score_table(scores);
  if (!output.empty()) {
    std::string body = ordered_json{{"config", cfg}}.dump() + "\n";
    for (const auto& s : scores) body += score_to_jsonl(s) + "\n";
    write_text(output, body);
  }
}

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  const auto kind = parse_task_kind(o.task);
  const auto dataset = load_dataset(o.dataset, kind);
  const auto bundles = load_bundles(o.containers);
  RunConfig rc;
  rc.method = MethodConfig::parse(o.mode.empty() ? o.strategy : strategy_for_mode(o.mode), o.alpha);
  rc.prompt_id = normalize_prompt(o.prompt);
  rc.seed = o.seed;
  rc.k = o.k;
  rc.restarts = o.restarts;
  auto score = run_task(dataset, bundles, rc);
  score.alpha = o.alpha;

  ordered_json cfg = {{"command", "eval"},
                      {"task", to_string(kind)},
                      {"dataset", file_name(o.dataset)},
                      {"containers", file_names(o.containers)},
                      {"strategy", rc.method.label()},
                      {"prompt", prompt_json(rc.prompt_id)},
                      {"alpha", o.alpha},
                      {"seed", o.seed},
                      {"k", o.k},
                      {"restarts", o.restarts}};
  emit_scores(cfg, {score}, o.output, out);
  return kExitOk;
}

struct SweepOptions {
  std::vector<std::string> tasks;
  std::vector<std::string> containers;
  std::string strategies = "hs:last:last,rw:last,concat,sum";
  std::string prompts = "none";
  std::string alphas = "1";
  std::uint64_t seed = 0;
  int restarts = 1;
  int jobs = 1;
  std::string output;
};

int cmd_sweep(const SweepOptions& o, std::ostream& out) {
  std::vector<TaskDataset> datasets;
  for (const auto& spec : o.tasks) {
    auto [kind, path] = parse_task_path(spec);
    datasets.push_back(load_dataset(path, kind));
  }
  const auto bundles = load_bundles(o.containers);

  SweepGrid grid;
  grid.strategies = split(o.strategies, ',');
  for (const auto& s : grid.strategies) {
    if (s != "sum") parse_strategy(s);
  }
  for (const auto& p : split(o.prompts, ',')) {
    if (p == "none" || p == "-") {
      grid.prompts.push_back(std::nullopt);
    } else {
      try {
        grid.prompts.push_back(normalize_prompt(std::stoi(p)));
      } catch (const std::invalid_argument&) {
        fail(ErrorKind::Parse, "bad prompt id '" + p + "'");
      }
    }
  }
  for (const auto& a : split(o.alphas, ',')) {
    try {
      grid.alphas.push_back(std::stod(a));
    } catch (const std::invalid_argument&) {
      fail(ErrorKind::Parse, "bad alpha '" + a + "'");
    }
  }
  if (grid.strategies.empty() || grid.prompts.empty() || grid.alphas.empty()) {
    fail(ErrorKind::Parse, "sweep grid has an empty axis");
  }
  grid.seed = o.seed;
  grid.restarts = o.restarts;
  const auto scores = sweep(datasets, bundles, grid, o.jobs);

  ordered_json prompts = ordered_json::array();
  for (const auto& p : grid.prompts) prompts.push_back(prompt_json(p));
  ordered_json cfg = {{"command", "sweep"},
                      {"tasks", o.tasks.size()},
                      {"datasets", ordered_json::array()},
                      {"containers", file_names(o.containers)},
                      {"strategies", grid.strategies},
                      {"prompts", prompts},
                      {"alphas", grid.alphas},
                      {"seed", o.seed},
                      {"restarts", o.restarts}};
  for (const auto& spec : o.tasks) {
    auto [kind, path] = parse_task_path(spec);
    cfg["datasets"].push_back(to_string(kind) + ":" + file_name(path));
  }
  emit_scores(cfg, scores, o.output, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct AnalyzeOptions {
  std::vector<std::string> containers;
  std::string dataset;
  std::optional<int> prompt;
  std::string prompts;
  std::string hs = "hs:last:last";
  std::string rw = "rw:last";
  int k = 3;
  std::uint64_t seed = 0;
  double tau = kDefaultFailureThreshold;
  std::vector<std::string> results;
  std::string output;
};

MethodConfig single_method(const std::string& name, EmbeddingKind expected) {
  const auto s = parse_strategy(name);
  if (s.kind != expected) {
    fail(ErrorKind::Strategy, "'" + name + "' is not a " +
                                  (expected == EmbeddingKind::Hs ? "hs:*" : "rw:*") + " strategy");
  }
  return MethodConfig::parse(name);
}

int cmd_agreement(const AnalyzeOptions& o, std::ostream& out) {
  const auto hs = parse_strategy(o.hs);
  const auto rw = parse_strategy(o.rw);
  if (hs.kind != EmbeddingKind::Hs || rw.kind != EmbeddingKind::Rw) {
    fail(ErrorKind::Strategy, "--hs must be an hs:* strategy and --rw an rw:* strategy");
  }
  const auto prompt = normalize_prompt(o.prompt);
  Points hs_points, rw_points;
  for (const auto& path : o.containers) {
    const auto container = read_container(path);
    for (std::size_t i = 0; i < container.size(); ++i) {
      const auto b = container.record(i);
      if (b.prompt_id != prompt) continue;
      hs_points.push_back(embed(b, hs).values);
      rw_points.push_back(embed(b, rw).values);
    }
  }
  if (hs_points.empty()) fail(ErrorKind::EmptyInput, "no records match the requested prompt");
  const auto a = kmeans(hs_points, o.k, o.seed).partition;
  const auto b = kmeans(rw_points, o.k, o.seed).partition;
  const auto r = cluster_agreement(a, b);

  ordered_json cfg = {{"command", "analyze agreement"}, {"containers", file_names(o.containers)},
                      {"prompt", prompt_json(prompt)},   {"hs", o.hs},
                      {"rw", o.rw},                      {"k", o.k},
                      {"seed", o.seed}};
  ordered_json report = {{"config", cfg},
                         {"points", hs_points.size()},
                         {"ami", r.ami},
                         {"nmi", r.nmi},
                         {"jaccard", r.jaccard},
                         {"exact_match_pct", r.exact_match_pct}};
  out << config_line(cfg) << "\n" << report.dump(2) << "\n";
  if (!o.output.empty()) write_text(o.output, report.dump(2) + "\n");
  return kExitOk;
}

int cmd_prompts(const AnalyzeOptions& o, std::ostream& out) {
  std::map<std::string, std::map<int, std::map<std::string, double>>> scores;
  for (const auto& path : o.results) {
    std::istringstream in(read_text(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      nlohmann::json row;
      try {
        row = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Parse, path + ": line " + std::to_string(line_no) + ": " + e.what());
      }
      if (row.contains("config") || row.value("value", nlohmann::json()).is_null()) continue;
      std::string method = row.at("strategy").get<std::string>();
      if (method == "sum") {
        char buf[48];
        std::snprintf(buf, sizeof buf, "sum(alpha=%g)", row.at("alpha").get<double>());
        method = buf;
      }
      const int prompt = row.at("prompt").is_null() ? kPromptNone : row.at("prompt").get<int>();
      const std::string dataset =
          row.at("task").get<std::string>() + "/" + row.at("dataset").get<std::string>();
      scores[method][prompt][dataset] = row.at("value").get<double>();
    }
  }
  const auto r = prompt_robustness(scores);

  ordered_json cfg = {{"command", "analyze prompts"}, {"results", file_names(o.results)}};
  ordered_json entries = ordered_json::array();
  std::ostringstream table;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-32s %-20s %3s %10s %10s %10s %10s %10s %10s %10s\n",
                "dataset", "method", "n", "mean", "variance", "min", "q1", "median", "q3", "max");
  table << buf;
  for (const auto& e : r.entries) {
    const auto& s = e.stats;
    entries.push_back({{"dataset", e.dataset}, {"method", e.method}, {"count", s.count},
                       {"mean", s.mean},       {"variance", s.variance},
                       {"min", s.min},         {"q1", s.q1},
                       {"median", s.median},   {"q3", s.q3},
                       {"max", s.max}});
    std::snprintf(buf, sizeof buf, "%-32s %-20s %3zu %10.6f %10.6f %10.6f %10.6f %10.6f %10.6f %10.6f\n",
                  e.dataset.c_str(), e.method.c_str(), s.count, s.mean, s.variance, s.min, s.q1,
                  s.median, s.q3, s.max);
    table << buf;
  }
  out << config_line(cfg) << "\n" << table.str();
  if (!o.output.empty()) {
    write_text(o.output, ordered_json{{"config", cfg}, {"entries", entries}}.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_prompt_corr(const AnalyzeOptions& o, std::ostream& out) {
  const auto dataset = load_dataset(o.dataset, TaskKind::Sts);
  const auto bundles = load_bundles(o.containers);
  const auto hs = single_method(o.hs, EmbeddingKind::Hs);
  const auto rw = single_method(o.rw, EmbeddingKind::Rw);
  std::map<int, std::vector<double>> hs_scores, rw_scores;
  ordered_json prompts = ordered_json::array();
  for (const auto& p : split(o.prompts, ',')) {
    const int id = p == "none" ? kPromptNone : std::stoi(p);
    const auto prompt = normalize_prompt(id);
    hs_scores[id] = pair_scores(dataset.scored_pairs, bundles, hs, prompt);
    rw_scores[id] = pair_scores(dataset.scored_pairs, bundles, rw, prompt);
    prompts.push_back(id);
  }
  const auto r = prompt_correlation_matrix(hs_scores, rw_scores);

  std::ostringstream csv;
  csv << "config";
  for (const auto& l : r.labels) csv << "," << l;
  csv << "\n";
  char buf[32];
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    csv << r.labels[i];
    for (double v : r.matrix[i]) {
      std::snprintf(buf, sizeof buf, ",%.6f", v);
      csv << buf;
    }
    csv << "\n";
  }
  ordered_json cfg = {{"command", "analyze prompt-corr"}, {"dataset", file_name(o.dataset)},
                      {"containers", file_names(o.containers)}, {"prompts", prompts},
                      {"hs", o.hs}, {"rw", o.rw}};
  ordered_json report = {{"config", cfg},
                         {"hs_hs_mean", r.hs_hs_mean},
                         {"rw_rw_mean", r.rw_rw_mean},
                         {"hs_rw_mean", r.hs_rw_mean}};
  out << config_line(cfg) << "\n";
  if (o.output.empty()) {
    out << csv.str();
  } else {
    write_text(o.output, config_line(cfg) + "\n" + csv.str());
  }
  out << report.dump(2) << "\n";
  return kExitOk;
}

int cmd_errors(const AnalyzeOptions& o, std::ostream& out) {
  const auto dataset = load_dataset(o.dataset, TaskKind::Sts);
  const auto bundles = load_bundles(o.containers);
  const auto prompt = normalize_prompt(o.prompt);
  const auto hs = pair_scores(dataset.scored_pairs, bundles, single_method(o.hs, EmbeddingKind::Hs), prompt);
  const auto rw = pair_scores(dataset.scored_pairs, bundles, single_method(o.rw, EmbeddingKind::Rw), prompt);
  std::vector<double> gold;
  for (const auto& p : dataset.scored_pairs) gold.push_back(p.score);
  const auto r = complementarity_errors(hs, rw, gold, o.tau);

  ordered_json cfg = {{"command", "analyze errors"}, {"dataset", file_name(o.dataset)},
                      {"containers", file_names(o.containers)}, {"prompt", prompt_json(prompt)},
                      {"hs", o.hs}, {"rw", o.rw}, {"tau", o.tau}};
  ordered_json report = {{"config", cfg},
                         {"threshold", r.threshold},
                         {"total", r.total},
                         {"conditioned", r.conditioned()},
                         {"hs_ok_rw_fail", {{"count", r.hs_ok_rw_fail}, {"proportion", r.p_hs_ok_rw_fail}}},
                         {"hs_fail_rw_ok", {{"count", r.hs_fail_rw_ok}, {"proportion", r.p_hs_fail_rw_ok}}},
                         {"both_fail", {{"count", r.both_fail}, {"proportion", r.p_both_fail}}}};
  out << config_line(cfg) << "\n" << report.dump(2) << "\n";
  if (!o.output.empty()) write_text(o.output, report.dump(2) + "\n");
  return kExitOk;
}

struct ValidateOptions {
  std::vector<std::string> paths;
  bool json = false;
};

int cmd_validate(const ValidateOptions& o, std::ostream& out) {
  bool all_ok = true;
  ordered_json reports = ordered_json::array();
  for (const auto& path : o.paths) {
    const auto r = validate_container(path);
    all_ok = all_ok && r.passed();
    if (o.json) {
      ordered_json entries = ordered_json::array();
      for (const auto& e : r.entries) {
        entries.push_back({{"record", e.record_id}, {"ok", e.ok}, {"reason", e.reason}});
      }
      reports.push_back({{"path", path},
                         {"file_error", r.file_error ? ordered_json(*r.file_error) : ordered_json(nullptr)},
                         {"records", r.entries.size()},
                         {"failures", r.failures()},
                         {"entries", entries}});
      continue;
    }
    out << path << ": ";
    if (r.file_error) {
      out << "FAIL " << *r.file_error << "\n";
      continue;
    }
    out << r.entries.size() << " records, " << r.failures() << " failures\n";
    for (const auto& e : r.entries) {
      if (!e.ok) out << "  FAIL " << e.record_id << ": " << e.reason << "\n";
    }
  }
  if (o.json) out << reports.dump(2) << "\n";
  return all_ok ? kExitOk : kExitDomainError;
}

void add_seed(CLI::App* app, std::uint64_t& seed) {
  app->add_option("--seed", seed, "Random seed")->envname("MOEE_SEED");
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"moee: routing-weight embeddings from mixture-of-experts models", "moee"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  GenModelOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-model", "Generate a seeded toy MoE model (MOEM file)");
  gen_cmd->add_option("--layers", gen.layers, "Number of layers")->capture_default_str();
  gen_cmd->add_option("--dim", gen.dim, "Hidden dimension")->capture_default_str();
  gen_cmd->add_option("--ffn", gen.ffn, "Expert inner dimension (default 2*dim)");
  gen_cmd->add_option("--heads", gen.heads, "Attention heads")->capture_default_str();
  gen_cmd->add_option("--experts", gen.experts, "Experts per layer: N or N1,N2,...")->capture_default_str();
  gen_cmd->add_option("--topk", gen.topk, "Experts mixed per token")->capture_default_str();
  gen_cmd->add_option("--vocab", gen.vocab, "Vocabulary size")->capture_default_str();
  gen_cmd->add_option("--max-seq", gen.max_seq, "Maximum sequence length")->capture_default_str();
  add_seed(gen_cmd, gen.seed);
  gen_cmd->add_option("-o,--output", gen.output, "Output model path")->required();

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run texts through a model into an MOEA container");
  run_cmd->add_option("-m,--model", run.model, "MOEM model file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--texts", run.texts, "Text file, one input per line");
  run_cmd->add_option("--dataset", run.datasets, "KIND:PATH dataset whose texts to run");
  run_cmd->add_option("--prompt", run.prompt, "Prompt template id (0 none, 1-9, 10 PromptEOL)");
  run_cmd->add_option("--tokens", run.tokens, "Stored token positions")
      ->check(CLI::IsMember({"all", "last"}))
      ->capture_default_str();
  run_cmd->add_option("--name", run.name, "Model name recorded in the fingerprint");
  run_cmd->add_option("--jobs", run.jobs, "Parallel forward passes")->capture_default_str();
  run_cmd->add_option("-o,--output", run.output, "Output container path")->required();

  EmbedOptions emb;
  auto* emb_cmd = app.add_subcommand("embed", "Write embeddings of container records as JSONL");
  emb_cmd->add_option("-c,--container", emb.containers, "MOEA container")->required();
  emb_cmd->add_option("--strategy", emb.strategy,
                      "hs:last:last|hs:last:all|hs:mean:last|hs:mean:all|rw:last|rw:mean|concat|concat:raw")
      ->capture_default_str();
  emb_cmd->add_option("-o,--output", emb.output, "Output JSONL (default stdout)");

  EvalOptions ev;
  auto* ev_cmd = app.add_subcommand("eval", "Evaluate one task");
  ev_cmd->add_option("task", ev.task,
                     "sts|summarization|classification|clustering|pair_classification|rerank")
      ->required();
  ev_cmd->add_option("--dataset", ev.dataset, "JSONL dataset")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("-c,--container", ev.containers, "MOEA container(s)")->required();
  ev_cmd->add_option("--strategy", ev.strategy, "Embedding strategy or 'sum'")->capture_default_str();
  ev_cmd->add_option("--mode", ev.mode, "Shorthand: hs|rw|concat|sum")
      ->check(CLI::IsMember({"hs", "rw", "concat", "sum"}));
  ev_cmd->add_option("--alpha", ev.alpha, "Weight of the RW similarity in 'sum'")->capture_default_str();
  ev_cmd->add_option("--prompt", ev.prompt, "Prompt id the bundles were run with");
  add_seed(ev_cmd, ev.seed);
  ev_cmd->add_option("--k", ev.k, "Clusters (default: number of gold classes)");
  ev_cmd->add_option("--restarts", ev.restarts, "k-means runs averaged")->capture_default_str();
  ev_cmd->add_option("-o,--output", ev.output, "Results JSONL");

  SweepOptions sw;
  auto* sw_cmd = app.add_subcommand("sweep", "Evaluate tasks over strategies x prompts x alphas");
  sw_cmd->add_option("--task", sw.tasks, "KIND:PATH dataset (repeatable)")->required();
  sw_cmd->add_option("-c,--container", sw.containers, "MOEA container(s)")->required();
  sw_cmd->add_option("--strategies", sw.strategies, "Comma-separated strategies")->capture_default_str();
  sw_cmd->add_option("--prompts", sw.prompts, "Comma-separated prompt ids ('none' for unprompted)")
      ->capture_default_str();
  sw_cmd->add_option("--alphas", sw.alphas, "Comma-separated alpha grid")->capture_default_str();
  add_seed(sw_cmd, sw.seed);
  sw_cmd->add_option("--restarts", sw.restarts, "k-means runs averaged")->capture_default_str();
  sw_cmd->add_option("--jobs", sw.jobs, "Cells evaluated concurrently")->capture_default_str();
  sw_cmd->add_option("-o,--output", sw.output, "Results JSONL");

  AnalyzeOptions an;
  auto* an_cmd = app.add_subcommand("analyze", "RW vs HS analyses");
  an_cmd->require_subcommand(1);
  auto* agree_cmd = an_cmd->add_subcommand("agreement", "Agreement of k-means clusters on HS and RW");
  agree_cmd->add_option("-c,--container", an.containers, "MOEA container(s)")->required();
  agree_cmd->add_option("--prompt", an.prompt, "Prompt id of the records to cluster");
  agree_cmd->add_option("--hs", an.hs, "HS strategy")->capture_default_str();
  agree_cmd->add_option("--rw", an.rw, "RW strategy")->capture_default_str();
  agree_cmd->add_option("--k", an.k, "Clusters")->capture_default_str();
  add_seed(agree_cmd, an.seed);
  agree_cmd->add_option("-o,--output", an.output, "Report JSON");

  auto* prompts_cmd = an_cmd->add_subcommand("prompts", "Prompt-robustness statistics from results");
  prompts_cmd->add_option("--results", an.results, "Results JSONL from sweep/eval")->required();
  prompts_cmd->add_option("-o,--output", an.output, "Report JSON");

  auto* corr_cmd = an_cmd->add_subcommand("prompt-corr", "Spearman matrix over HS/RW x prompts");
  corr_cmd->add_option("--dataset", an.dataset, "STS JSONL")->required()->check(CLI::ExistingFile);
  corr_cmd->add_option("-c,--container", an.containers, "MOEA container(s)")->required();
  corr_cmd->add_option("--prompts", an.prompts, "Comma-separated prompt ids")->required();
  corr_cmd->add_option("--hs", an.hs, "HS strategy")->capture_default_str();
  corr_cmd->add_option("--rw", an.rw, "RW strategy")->capture_default_str();
  corr_cmd->add_option("-o,--output", an.output, "Matrix CSV (default stdout)");

  auto* err_cmd = an_cmd->add_subcommand("errors", "Complementarity of HS and RW ranking failures");
  err_cmd->add_option("--dataset", an.dataset, "STS JSONL")->required()->check(CLI::ExistingFile);
  err_cmd->add_option("-c,--container", an.containers, "MOEA container(s)")->required();
  err_cmd->add_option("--prompt", an.prompt, "Prompt id");
  err_cmd->add_option("--hs", an.hs, "HS strategy")->capture_default_str();
  err_cmd->add_option("--rw", an.rw, "RW strategy")->capture_default_str();
  err_cmd->add_option("--tau", an.tau, "Normalized rank deviation counted as failure")->capture_default_str();
  err_cmd->add_option("-o,--output", an.output, "Report JSON");

  ValidateOptions val;
  auto* val_cmd = app.add_subcommand("validate", "Check MOEA containers record by record");
  val_cmd->add_option("paths", val.paths, "Container path(s)")->required();
  val_cmd->add_flag("--json", val.json, "Emit the report as JSON");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_model(gen, out);
    if (*run_cmd) return cmd_run(run, out);
    if (*emb_cmd) return cmd_embed(emb, out);
    if (*ev_cmd) return cmd_eval(ev, out);
    if (*sw_cmd) return cmd_sweep(sw, out);
    if (*agree_cmd) return cmd_agreement(an, out);
    if (*prompts_cmd) return cmd_prompts(an, out);
    if (*corr_cmd) return cmd_prompt_corr(an, out);
    if (*err_cmd) return cmd_errors(an, out);
    if (*val_cmd) return cmd_validate(val, out);
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return kExitDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }
  return kExitUsage;
}

}  // namespace moee::cli
