// SPDX-License-Identifier: Apache-2.0
//
// Python bindings. Matrices cross the boundary as float32 numpy arrays
// (copied); vectors of doubles as lists or 1-d float64 arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "moee/analysis.hpp"
#include "moee/embedder.hpp"
#include "moee/engine.hpp"
#include "moee/error.hpp"
#include "moee/metrics.hpp"
#include "moee/simkit.hpp"
#include "moee/store.hpp"

namespace py = pybind11;
using namespace moee;

namespace {

PyObject* g_error_type = nullptr;

py::array_t<float> to_numpy(const Matrix& m) {
  py::array_t<float> a({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), a.mutable_data());
  return a;
}

Matrix from_numpy(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) fail(ErrorKind::Shape, "expected a 2-d array");
  Matrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data.begin());
  return m;
}

py::list matrices(const std::vector<Matrix>& ms) {
  py::list out;
  for (const auto& m : ms) out.append(to_numpy(m));
  return out;
}

std::vector<Matrix> matrices_from(const py::list& l) {
  std::vector<Matrix> out;
  for (auto h : l) out.push_back(from_numpy(h.cast<py::array_t<float, py::array::c_style | py::array::forcecast>>()));
  return out;
}

}  // namespace

PYBIND11_MODULE(_moee, m) {
  m.doc() = "MoE activation embeddings: toy engine, containers, embeddings and metrics";

  g_error_type = PyErr_NewException("moee._moee.MoeeError", PyExc_RuntimeError, nullptr);
  m.attr("MoeeError") = py::handle(g_error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(g_error_type)(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(g_error_type, exc.ptr());
    }
  });

  // --- engine -------------------------------------------------------------------
  py::class_<MoEConfig>(m, "MoEConfig")
      .def(py::init<>())
      .def_readwrite("num_layers", &MoEConfig::num_layers)
      .def_readwrite("hidden_dim", &MoEConfig::hidden_dim)
      .def_readwrite("ffn_dim", &MoEConfig::ffn_dim)
      .def_readwrite("num_heads", &MoEConfig::num_heads)
      .def_readwrite("experts_per_layer", &MoEConfig::experts_per_layer)
      .def_readwrite("top_k", &MoEConfig::top_k)
      .def_readwrite("max_seq_len", &MoEConfig::max_seq_len)
      .def_readwrite("rng_seed", &MoEConfig::rng_seed)
      .def("validate", &MoEConfig::validate)
      .def("total_experts", &MoEConfig::total_experts);

  py::class_<MoEModel>(m, "MoEModel")
      .def_readonly("config", &MoEModel::config)
      .def("gate", [](const MoEModel& mm, int layer) { return to_numpy(mm.layers.at(layer).gate); })
      .def("save", [](const MoEModel& mm, const std::filesystem::path& p) { save_model(mm, p); });

  py::class_<ForwardTrace>(m, "ForwardTrace")
      .def_readonly("token_ids", &ForwardTrace::token_ids)
      .def_property_readonly("hidden_states", [](const ForwardTrace& t) { return matrices(t.hidden_states); })
      .def_property_readonly("routing_weights", [](const ForwardTrace& t) { return matrices(t.routing_weights); });

  m.def("gen_toy_model", &gen_toy_model, py::arg("config"));
  m.def("load_model", &load_model, py::arg("path"));
  m.def("gate_softmax", [](const std::vector<double>& z) { return gate_softmax(z); }, py::arg("logits"));
  m.def("tokenize", &tokenize, py::arg("text"));
  m.def("detokenize", [](const std::vector<int>& ids) { return py::bytes(detokenize(ids)); }, py::arg("ids"));
  m.def("forward", [](const MoEModel& mm, const std::vector<int>& ids) { return forward(mm, ids); },
        py::arg("model"), py::arg("token_ids"));

  // --- activation store ---------------------------------------------------------
  py::enum_<TokenMode>(m, "TokenMode").value("ALL", TokenMode::All).value("LAST", TokenMode::Last);

  py::class_<ModelFingerprint>(m, "ModelFingerprint")
      .def_readonly("name", &ModelFingerprint::name)
      .def_readonly("num_layers", &ModelFingerprint::num_layers)
      .def_readonly("hidden_dim", &ModelFingerprint::hidden_dim)
      .def_readonly("experts_per_layer", &ModelFingerprint::experts_per_layer)
      .def_readonly("attributes", &ModelFingerprint::attributes);

  py::class_<ActivationBundle>(m, "ActivationBundle")
      .def(py::init([](std::string id, std::string text, const py::list& hs, const py::list& rw,
                       std::optional<int> prompt, TokenMode mode) {
             ActivationBundle b;
             b.record_id = std::move(id);
             b.text = std::move(text);
             b.prompt_id = prompt;
             b.token_mode = mode;
             b.hidden_states = matrices_from(hs);
             b.routing_weights = matrices_from(rw);
             b.num_layers = static_cast<int>(b.hidden_states.size());
             if (!b.hidden_states.empty()) {
               b.tokens_stored = static_cast<int>(b.hidden_states[0].rows);
               b.hidden_dim = static_cast<int>(b.hidden_states[0].cols);
             }
             for (const auto& g : b.routing_weights) b.experts_per_layer.push_back(static_cast<int>(g.cols));
             return b;
           }),
           py::arg("record_id"), py::arg("text"), py::arg("hidden_states"), py::arg("routing_weights"),
           py::arg("prompt_id") = py::none(), py::arg("token_mode") = TokenMode::Last)
      .def_readonly("record_id", &ActivationBundle::record_id)
      .def_readonly("text", &ActivationBundle::text)
      .def_readonly("prompt_id", &ActivationBundle::prompt_id)
      .def_readonly("token_mode", &ActivationBundle::token_mode)
      .def_readonly("experts_per_layer", &ActivationBundle::experts_per_layer)
      .def_property_readonly("hidden_states", [](const ActivationBundle& b) { return matrices(b.hidden_states); })
      .def_property_readonly("routing_weights",
                             [](const ActivationBundle& b) { return matrices(b.routing_weights); })
      .def("check", &check_bundle);

  m.def("make_bundle", &make_bundle, py::arg("trace"), py::arg("record_id"), py::arg("text"),
        py::arg("prompt_id") = py::none(), py::arg("token_mode") = TokenMode::Last);
  m.def("fingerprint_of", &fingerprint_of, py::arg("model"), py::arg("name"));
  m.def("write_container",
        [](const ModelFingerprint& fp, const std::vector<ActivationBundle>& recs, const std::filesystem::path& p) {
          return write_container(fp, recs, p);
        },
        py::arg("fingerprint"), py::arg("records"), py::arg("path"));
  m.def("read_container", [](const std::filesystem::path& p) {
    auto c = read_container(p);
    return py::make_tuple(c.fingerprint(), c.records());
  }, py::arg("path"), "Returns (fingerprint, records).");
  m.def("validate_container", [](const std::filesystem::path& p) {
    const auto r = validate_container(p);
    py::dict out;
    out["passed"] = r.passed();
    out["failures"] = r.failures();
    out["file_error"] = r.file_error;
    py::list entries;
    for (const auto& e : r.entries) entries.append(py::make_tuple(e.record_id, e.ok, e.reason));
    out["entries"] = entries;
    return out;
  }, py::arg("path"));

  // --- embedder -----------------------------------------------------------------
  m.def("embed", [](const ActivationBundle& b, std::string_view strategy) {
    return embed(b, parse_strategy(strategy)).values;
  }, py::arg("bundle"), py::arg("strategy") = "concat");
  m.def("apply_prompt", [](int id, std::string_view text) { return apply_prompt(prompt_template(id), text); },
        py::arg("prompt_id"), py::arg("text"));
  m.def("prompt_text", [](int id) { return prompt_template(id).text; }, py::arg("prompt_id"));

  // --- similarity -----------------------------------------------------------------
  m.def("cosine", [](const std::vector<double>& a, const std::vector<double>& b) { return cosine(a, b); });
  m.def("moee_sum_similarity",
        [](const std::vector<double>& ha, const std::vector<double>& hb, const std::vector<double>& ra,
           const std::vector<double>& rb, double alpha) { return moee_sum_similarity(ha, hb, ra, rb, alpha); },
        py::arg("hs_a"), py::arg("hs_b"), py::arg("rw_a"), py::arg("rw_b"), py::arg("alpha") = 1.0);

  // --- metrics --------------------------------------------------------------------
  auto part = [](const std::vector<int>& l) { return Partition::from_labels(l); };
  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); });
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return pearson(x, y); });
  m.def("kmeans", [](const Points& pts, int k, std::uint64_t seed) { return kmeans(pts, k, seed).partition.assignments; },
        py::arg("points"), py::arg("k"), py::arg("seed") = 0);
  m.def("v_measure", [part](const std::vector<int>& p, const std::vector<int>& t) { return v_measure(part(p), part(t)); });
  m.def("nmi", [part](const std::vector<int>& a, const std::vector<int>& b) { return nmi(part(a), part(b)); });
  m.def("ami", [part](const std::vector<int>& a, const std::vector<int>& b) { return ami(part(a), part(b)); });
  m.def("jaccard", [part](const std::vector<int>& a, const std::vector<int>& b) { return jaccard_pairs(part(a), part(b)); });
  m.def("exact_match", [part](const std::vector<int>& a, const std::vector<int>& b) { return exact_match(part(a), part(b)); });
  m.def("average_precision",
        [](const std::vector<double>& s, const std::vector<int>& l) { return average_precision(s, l); });
  m.def("ndcg_at_k", [](const std::vector<double>& s, const std::vector<double>& g, int k) { return ndcg_at_k(s, g, k); },
        py::arg("scores"), py::arg("gains"), py::arg("k"));

  // --- analysis -------------------------------------------------------------------
  m.def("complementarity_errors",
        [](const std::vector<double>& hs, const std::vector<double>& rw, const std::vector<double>& gold, double tau) {
          const auto r = complementarity_errors(hs, rw, gold, tau);
          py::dict out;
          out["total"] = r.total;
          out["hs_ok_rw_fail"] = r.hs_ok_rw_fail;
          out["hs_fail_rw_ok"] = r.hs_fail_rw_ok;
          out["both_fail"] = r.both_fail;
          out["p_hs_ok_rw_fail"] = r.p_hs_ok_rw_fail;
          out["p_hs_fail_rw_ok"] = r.p_hs_fail_rw_ok;
          out["p_both_fail"] = r.p_both_fail;
          return out;
        },
        py::arg("hs_scores"), py::arg("rw_scores"), py::arg("gold_scores"), py::arg("threshold") = kDefaultFailureThreshold);
}
