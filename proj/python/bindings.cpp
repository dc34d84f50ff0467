#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "polyacp/checkpoint.hpp"
#include "polyacp/config.hpp"
#include "polyacp/error.hpp"
#include "polyacp/evaluation.hpp"
#include "polyacp/inference.hpp"
#include "polyacp/labels.hpp"
#include "polyacp/synthetic.hpp"
#include "polyacp/tensor.hpp"

namespace py = pybind11;
using namespace polyacp;

namespace {

std::string to_text(const py::handle& value) {
  if (py::isinstance<py::bool_>(value)) return value.cast<bool>() ? "true" : "false";
  return py::str(value).cast<std::string>();
}

Hyperparams make_hyper(const py::kwargs& kwargs) {
  Hyperparams hyper;
  KeyValues values;
  for (const auto& [key, value] : kwargs) values[key.cast<std::string>()] = to_text(value);
  const auto rest = apply_hyperparams(hyper, values);
  if (!rest.empty()) throw ConfigError("unknown hyperparameter '" + rest.begin()->first + "'");
  hyper.validate();
  return hyper;
}

ObservedTensor tensor_from_array(const std::vector<std::size_t>& cardinalities,
                                 py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> cells,
                                 std::optional<std::vector<std::string>> names) {
  if (cells.ndim() != 2 || static_cast<std::size_t>(cells.shape(1)) != cardinalities.size()) {
    throw Error("cells must be an (n, K) array with K = len(cardinalities)");
  }
  if (names && names->size() != cardinalities.size()) throw Error("one name per mode is required");
  TensorScheme scheme;
  for (std::size_t k = 0; k < cardinalities.size(); ++k) {
    scheme.modes.push_back({names ? (*names)[k] : "mode" + std::to_string(k), ModeKind::categorical});
    EntityMap map;
    for (std::size_t i = 0; i < cardinalities[k]; ++i) map.intern(std::to_string(i));
    scheme.entities.push_back(std::move(map));
  }
  ObservedTensor tensor(std::move(scheme));
  const auto view = cells.unchecked<2>();
  std::vector<EntityIndex> cell(cardinalities.size());
  for (py::ssize_t i = 0; i < view.shape(0); ++i) {
    for (std::size_t k = 0; k < cardinalities.size(); ++k) {
      const auto v = view(i, static_cast<py::ssize_t>(k));
      if (v < 0 || static_cast<std::size_t>(v) >= cardinalities[k]) {
        throw Error("cell " + std::to_string(i) + " is out of range in mode " + std::to_string(k));
      }
      cell[k] = static_cast<EntityIndex>(v);
    }
    tensor.insert(cell);
  }
  return tensor;
}

py::array_t<std::uint32_t> cells_array(const ObservedTensor& tensor) {
  const auto k = static_cast<py::ssize_t>(tensor.mode_count());
  py::array_t<std::uint32_t> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(tensor.size()), k});
  std::copy(tensor.flat_cells().begin(), tensor.flat_cells().end(), out.mutable_data());
  return out;
}

template <class T>
py::array_t<T> to_array(const std::vector<T>& values) {
  py::array_t<T> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(values.size())});
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["auc"] = m.auc;
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["f1"] = m.f1;
  d["threshold"] = m.threshold;
  d["true_positive"] = m.true_positive;
  d["false_positive"] = m.false_positive;
  d["true_negative"] = m.true_negative;
  d["false_negative"] = m.false_negative;
  d["precision_undefined"] = m.precision_undefined;
  return d;
}

std::vector<int> truth_vector(py::array_t<int, py::array::forcecast> truth) {
  const auto view = truth.unchecked<1>();
  std::vector<int> out(static_cast<std::size_t>(view.shape(0)));
  for (py::ssize_t i = 0; i < view.shape(0); ++i) out[static_cast<std::size_t>(i)] = view(i);
  return out;
}

std::vector<double> score_vector(py::array_t<double, py::array::forcecast> scores) {
  const auto view = scores.unchecked<1>();
  return {view.data(0), view.data(0) + view.shape(0)};
}

}  // namespace

PYBIND11_MODULE(_polyacp, m) {
  m.doc() = "Semi-supervised logistic CP decomposition of binary tensors";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<IngestError>(m, "IngestError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<CheckpointError>(m, "CheckpointError", error.ptr());

  py::class_<Hyperparams>(m, "Hyperparams")
      .def(py::init(&make_hyper))
      .def_readwrite("rank", &Hyperparams::rank)
      .def_readwrite("a_c", &Hyperparams::a_c)
      .def_readwrite("b1", &Hyperparams::b1)
      .def_readwrite("b2", &Hyperparams::b2)
      .def_readwrite("tau_p", &Hyperparams::tau_p)
      .def_readwrite("theta", &Hyperparams::theta)
      .def_readwrite("batch_size", &Hyperparams::batch_size)
      .def_readwrite("neg_ratio", &Hyperparams::neg_ratio)
      .def_readwrite("scale_batch", &Hyperparams::scale_batch)
      .def_readwrite("max_iters", &Hyperparams::max_iters)
      .def_readwrite("seed", &Hyperparams::seed)
      .def_readwrite("init_scale", &Hyperparams::init_scale)
      .def_readwrite("init_positive", &Hyperparams::init_positive)
      .def_readwrite("workers", &Hyperparams::workers)
      .def_readwrite("monitor_every", &Hyperparams::monitor_every)
      .def_readwrite("eval_every", &Hyperparams::eval_every)
      .def_readwrite("patience", &Hyperparams::patience)
      .def_readwrite("min_delta", &Hyperparams::min_delta)
      .def_property(
          "optimizer", [](const Hyperparams& h) { return std::string(to_string(h.optimizer)); },
          [](Hyperparams& h, const std::string& v) { h.optimizer = parse_optimizer(v); })
      .def_property(
          "label_mode", [](const Hyperparams& h) { return std::string(to_string(h.label_mode)); },
          [](Hyperparams& h, const std::string& v) { h.label_mode = parse_label_mode(v); })
      .def("as_dict", [](const Hyperparams& h) { return describe(h); })
      .def("__repr__", [](const Hyperparams& h) {
        std::string out = "Hyperparams(";
        bool first = true;
        for (const auto& [k, v] : describe(h)) {
          out += (first ? "" : ", ") + k + "=" + v;
          first = false;
        }
        return out + ")";
      });

  py::class_<ObservedTensor>(m, "Tensor")
      .def(py::init(&tensor_from_array), py::arg("cardinalities"), py::arg("cells"),
           py::arg("names") = py::none())
      .def("__len__", &ObservedTensor::size)
      .def_property_readonly("mode_count", &ObservedTensor::mode_count)
      .def_property_readonly("cardinalities", [](const ObservedTensor& t) { return t.scheme().cardinalities(); })
      .def_property_readonly("mode_names",
                             [](const ObservedTensor& t) {
                               std::vector<std::string> names;
                               for (const auto& decl : t.scheme().modes) names.push_back(decl.name);
                               return names;
                             })
      .def("mode_index",
           [](const ObservedTensor& t, const std::string& name) {
             const auto k = t.scheme().mode_index(name);
             if (!k) throw Error("unknown mode '" + name + "'");
             return *k;
           })
      .def("entity_ids", [](const ObservedTensor& t, std::size_t mode) { return t.scheme().entities.at(mode).ids(); })
      .def("cells", &cells_array)
      .def("contains", [](const ObservedTensor& t, const std::vector<EntityIndex>& cell) { return t.contains(cell); })
      .def("density", &ObservedTensor::density);

  m.def(
      "load_tuples",
      [](const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& modes,
         std::int64_t epoch_origin) {
        IngestOptions options;
        for (const auto& [name, kind] : modes) options.modes.push_back({name, parse_mode_kind(kind)});
        options.epoch_origin = epoch_origin;
        return std::move(ingest_tuples(path, options).tensor);
      },
      py::arg("path"), py::arg("modes") = std::vector<std::pair<std::string, std::string>>{},
      py::arg("epoch_origin") = 0,
      "Reads a tuple file. `modes` lists (name, kind) pairs; kind is categorical, rating or time.");

  py::class_<LabelSet>(m, "LabelSet")
      .def(py::init<std::size_t, std::size_t, std::vector<std::string>>(), py::arg("mode"),
           py::arg("entity_count"), py::arg("tasks"))
      .def("set", &LabelSet::set, py::arg("entity"), py::arg("task"), py::arg("z"))
      .def("label", &LabelSet::label)
      .def("labeled", [](const LabelSet& s, std::size_t task) {
        const auto span = s.labeled(task);
        return std::vector<EntityIndex>(span.begin(), span.end());
      })
      .def_property_readonly("mode", &LabelSet::mode)
      .def_property_readonly("entity_count", &LabelSet::entity_count)
      .def_property_readonly("tasks", &LabelSet::task_names)
      .def("task_index", &LabelSet::task_index);

  m.def(
      "read_labels",
      [](const std::filesystem::path& path, const ObservedTensor& tensor) {
        return read_labels(path, tensor.scheme()).sets;
      },
      py::arg("path"), py::arg("tensor"));

  py::class_<ModelState>(m, "ModelState")
      .def_readonly("lam", &ModelState::lambda)
      .def_readonly("delta", &ModelState::delta)
      .def_readonly("tau", &ModelState::tau)
      .def_readonly("t", &ModelState::t)
      .def_property_readonly("rank", &ModelState::rank)
      .def_property_readonly("mode_count", &ModelState::mode_count)
      .def("factors", [](const ModelState& s, std::size_t mode) -> RowMatrix { return s.factors.at(mode); })
      .def("factor_vars", [](const ModelState& s, std::size_t mode) -> RowMatrix { return s.factor_vars.at(mode); })
      .def("beta",
           [](const ModelState& s, std::size_t mode, std::size_t task) -> Vector {
             const auto* head = s.head_for_mode(mode);
             if (head == nullptr) throw Error("mode " + std::to_string(mode) + " has no head");
             return head->tasks.at(task).beta;
           })
      .def("shrunk_components", [](const ModelState& s) { return shrunk_components(s.lambda); });

  py::class_<IterationRecord>(m, "IterationRecord")
      .def_readonly("t", &IterationRecord::t)
      .def_readonly("gamma", &IterationRecord::gamma)
      .def_readonly("objective", &IterationRecord::objective)
      .def_readonly("validation_auc", &IterationRecord::validation_auc)
      .def_readonly("shrunk", &IterationRecord::shrunk)
      .def_readonly("seconds", &IterationRecord::seconds);

  py::class_<FitReport>(m, "FitReport")
      .def_readonly("iterations", &FitReport::iterations)
      .def_readonly("state", &FitReport::state)
      .def_readonly("stopped_early", &FitReport::stopped_early)
      .def_readonly("negatives_skipped", &FitReport::negatives_skipped);

  m.def(
      "fit",
      [](const ObservedTensor& tensor, const std::vector<LabelSet>& labels, const Hyperparams& hyper,
         const std::vector<LabelSet>& validation, std::optional<ModelState> resume) {
        FitOptions options;
        options.validation = validation;
        py::gil_scoped_release release;
        return fit(tensor, labels, hyper, options, std::move(resume));
      },
      py::arg("tensor"), py::arg("labels") = std::vector<LabelSet>{}, py::arg("hyper") = Hyperparams{},
      py::arg("validation") = std::vector<LabelSet>{}, py::arg("resume") = py::none());

  m.def(
      "score_entities",
      [](const ModelState& s, std::size_t mode, std::size_t task) { return to_array(score_entities(s, mode, task)); },
      py::arg("state"), py::arg("mode"), py::arg("task"));
  m.def(
      "lambda_weighted_norms",
      [](const ModelState& s, std::size_t mode) { return to_array(lambda_weighted_norms(s, mode)); },
      py::arg("state"), py::arg("mode"));
  m.def(
      "roc_auc",
      [](py::array_t<double, py::array::forcecast> scores, py::array_t<int, py::array::forcecast> truth) {
        const auto s = score_vector(scores);
        const auto t = truth_vector(truth);
        if (s.size() != t.size()) throw Error("scores and truth differ in length");
        return roc_auc(s, t);
      },
      py::arg("scores"), py::arg("truth"));
  m.def(
      "classification_metrics",
      [](py::array_t<double, py::array::forcecast> scores, py::array_t<int, py::array::forcecast> truth,
         double threshold) {
        const auto s = score_vector(scores);
        const auto t = truth_vector(truth);
        if (s.size() != t.size()) throw Error("scores and truth differ in length");
        return metrics_dict(classification_metrics(s, t, threshold));
      },
      py::arg("scores"), py::arg("truth"), py::arg("threshold") = 0.5);
  m.def(
      "dispersion",
      [](py::array_t<double, py::array::forcecast> samples) {
        const auto d = dispersion_report(score_vector(samples));
        py::dict out;
        out["min"] = d.min;
        out["q1"] = d.q1;
        out["median"] = d.median;
        out["q3"] = d.q3;
        out["max"] = d.max;
        return out;
      },
      py::arg("samples"));

  py::class_<SyntheticDataset>(m, "Dataset")
      .def_readonly("tensor", &SyntheticDataset::tensor)
      .def_readonly("labels", &SyntheticDataset::labels)
      .def_property_readonly("truth",
                             [](const SyntheticDataset& d) {
                               std::vector<py::array_t<std::int32_t>> out;
                               for (const auto& task : d.truth) {
                                 out.push_back(to_array(std::vector<std::int32_t>(task.begin(), task.end())));
                               }
                               return out;
                             })
      .def("heldout", [](const SyntheticDataset& d) { return heldout_entities(d); })
      .def("write", [](const SyntheticDataset& d, const std::filesystem::path& dir) { write_dataset(d, dir); });

  m.def(
      "simulate",
      [](std::uint64_t seed, const py::kwargs& kwargs) {
        PlantedCoreScenario s;
        for (const auto& [key, value] : kwargs) {
          const auto name = key.cast<std::string>();
          if (name == "core_density") s.core_density = value.cast<double>();
          else if (name == "label_fraction") s.label_fraction = value.cast<double>();
          else if (name == "task_overlap") s.task_overlap = value.cast<double>();
          else if (name == "epoch_origin") s.epoch_origin = value.cast<std::int64_t>();
          else if (name == "reviewers") s.reviewers = value.cast<std::size_t>();
          else if (name == "products") s.products = value.cast<std::size_t>();
          else if (name == "ratings") s.ratings = value.cast<std::size_t>();
          else if (name == "weeks") s.weeks = value.cast<std::size_t>();
          else if (name == "background_tuples") s.background_tuples = value.cast<std::size_t>();
          else if (name == "cores") s.cores = value.cast<std::size_t>();
          else if (name == "core_reviewers") s.core_reviewers = value.cast<std::size_t>();
          else if (name == "core_products") s.core_products = value.cast<std::size_t>();
          else if (name == "core_ratings") s.core_ratings = value.cast<std::size_t>();
          else if (name == "core_weeks") s.core_weeks = value.cast<std::size_t>();
          else throw ConfigError("unknown scenario key '" + name + "'");
        }
        auto rng = make_rng(seed, Stream::synthetic);
        return generate(planted_core_config(s), rng);
      },
      py::arg("seed") = 0,
      "Planted-core reviewer x product x rating x week dataset. Keyword arguments override the scenario.");

  py::class_<Checkpoint>(m, "Checkpoint")
      .def_readonly("hyper", &Checkpoint::hyper)
      .def_readonly("state", &Checkpoint::state)
      .def_readonly("iterations_run", &Checkpoint::iterations_run)
      .def_property_readonly("mode_names", [](const Checkpoint& c) {
        std::vector<std::string> names;
        for (const auto& decl : c.scheme.modes) names.push_back(decl.name);
        return names;
      });

  m.def(
      "save_checkpoint",
      [](const std::filesystem::path& path, const FitReport& report, const ObservedTensor& tensor,
         const Hyperparams& hyper) {
        save_checkpoint(Checkpoint{hyper, report.state, tensor.scheme(), report.state.t}, path);
      },
      py::arg("path"), py::arg("report"), py::arg("tensor"), py::arg("hyper"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
}
