#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "sead/evolution.hpp"
#include "sead/experiment.hpp"
#include "sead/rule_table.hpp"
#include "sead/tasks.hpp"
#include "sead/trainer.hpp"

namespace py = pybind11;
using namespace sead;

namespace {

const TaskSpec& spec_for(const std::string& name) {
  const auto id = parse_task(name);
  if (!id) throw py::value_error("unknown task '" + name + "'");
  return task(*id);
}

TaskInput make_input(const TaskSpec& spec, const std::vector<int>& a,
                     const std::vector<int>& b) {
  TaskInput input;
  input.a.assign(a.begin(), a.end());
  input.b.assign(b.begin(), b.end());
  if (spec.id == TaskId::addition && input.b.empty())
    throw py::value_error("addition needs two operands");
  return input;
}

std::vector<int> to_ints(const std::vector<std::uint8_t>& v) {
  return {v.begin(), v.end()};
}

Lattice lattice_from_cells(const TaskSpec& spec, const std::vector<int>& cells) {
  std::vector<Symbol> sym;
  sym.reserve(cells.size());
  for (int c : cells) {
    if (c < 0 || c >= spec.alphabet->size)
      throw py::value_error("cell symbol out of range");
    sym.push_back(static_cast<Symbol>(c));
  }
  return Lattice(std::move(sym), spec.alphabet);
}

struct PyTable {
  RuleTable table;
  double min_margin = 0.0;

  std::vector<int> step(const std::string& task_name,
                        const std::vector<int>& cells) const {
    const TaskSpec& spec = spec_for(task_name.empty() ? table.task : task_name);
    const Lattice next = step_table(table, lattice_from_cells(spec, cells));
    return {next.cells.begin(), next.cells.end()};
  }

  bool verify() const {
    const TaskSpec& spec = spec_for(table.task);
    return verify_table(table, spec.oracle).empty();
  }
};

struct PyModel {
  std::string task_name;
  KernelParams params;

  const TaskSpec& spec() const { return spec_for(task_name); }

  double exhaustive_accuracy() const {
    return exhaustive_rule_accuracy(params, spec());
  }

  std::vector<int> step(const std::vector<int>& cells) const {
    const TaskSpec& s = spec();
    const Lattice next = step_neural(params, lattice_from_cells(s, cells));
    return {next.cells.begin(), next.cells.end()};
  }

  py::dict evolve(const std::vector<int>& a, const std::vector<int>& b,
                  const std::string& engine, std::size_t max_steps) const {
    const TaskSpec& s = spec();
    if (!s.has_fixed_point)
      throw py::value_error("task '" + s.name +
                            "' has no fixed point; use rollout()");
    const auto eng = parse_engine(engine);
    if (!eng) throw py::value_error("unknown engine '" + engine + "'");
    const TaskInput input = make_input(s, a, b);
    const Lattice start = encode_input(s, input);
    EvolutionConfig cfg;
    cfg.max_steps = max_steps;

    std::optional<Extraction> ex;
    if (*eng != EngineId::neural) {
      ex = extract_rule_table(params, s.name);
      if (!verify_table(ex->table, s.oracle).empty())
        throw Error("extracted table does not match the task rule");
    }
    const EvolutionResult res = [&] {
      switch (*eng) {
        case EngineId::table: {
          const Symbol q = s.alphabet->quiescent;
          const RuleTable& t = ex->table;
          StepFn fn = [&t, q](std::span<const Symbol> in,
                              std::span<Symbol> out) {
            step_table_buf(t, in, out, q);
          };
          return evolve_to_fixed_point(fn, start, cfg);
        }
        case EngineId::frontier:
          return evolve_frontier(ex->table, start, cfg);
        case EngineId::neural:
        default: {
          NeuralStepper stepper(params, s.alphabet->quiescent);
          StepFn fn = [&stepper](std::span<const Symbol> in,
                                 std::span<Symbol> out) { stepper(in, out); };
          return evolve_to_fixed_point(fn, start, cfg);
        }
      }
    }();

    py::dict out;
    out["steps"] = res.steps;
    out["converged"] = res.converged;
    out["cells"] = to_ints(res.final_lattice.cells);
    if (res.converged)
      out["output"] = to_ints(decode_output(s, res.final_lattice));
    return out;
  }

  std::vector<std::vector<int>> rollout(const std::vector<int>& bits,
                                        std::size_t horizon) const {
    const TaskSpec& s = spec();
    TaskInput input;
    input.a.assign(bits.begin(), bits.end());
    const Lattice start = encode_input(s, input);
    NeuralStepper stepper(params, s.alphabet->quiescent);
    StepFn fn = [&stepper](std::span<const Symbol> in, std::span<Symbol> out) {
      stepper(in, out);
    };
    const SpacetimeTrace trace = evolve_fixed_horizon(fn, start, horizon);
    std::vector<std::vector<int>> rows;
    rows.reserve(trace.rows.size());
    for (const auto& r : trace.rows) rows.emplace_back(r.begin(), r.end());
    return rows;
  }

  PyTable extract_table() const {
    Extraction ex = extract_rule_table(params, task_name);
    return PyTable{std::move(ex.table), ex.min_margin};
  }

  void save(const std::string& path) const {
    save_checkpoint(params, task_name, path);
  }
};

}  // namespace

PYBIND11_MODULE(_sead, m) {
  m.doc() = "Neural cellular automata for exact algorithmic tasks: chaos "
            "training, relax-and-project inference, rule-table compilation.";

  py::register_exception<ContractViolation>(m, "ContractViolation",
                                            PyExc_ValueError);
  py::register_exception<NotConverged>(m, "NotConvergedError",
                                       PyExc_RuntimeError);
  py::register_exception<Error>(m, "SeadError", PyExc_RuntimeError);

  m.def("tasks", [] {
    return std::vector<std::string>{"parity", "addition", "rule110"};
  });

  py::class_<PyTable>(m, "RuleTable")
      .def_property_readonly("task",
                             [](const PyTable& t) { return t.table.task; })
      .def_property_readonly(
          "alphabet_size",
          [](const PyTable& t) { return t.table.alphabet_size; })
      .def_property_readonly("radius",
                             [](const PyTable& t) { return t.table.radius; })
      .def_property_readonly("min_margin",
                             [](const PyTable& t) { return t.min_margin; })
      .def_property_readonly(
          "entries",
          [](const PyTable& t) { return to_ints(t.table.entries); })
      .def("step", &PyTable::step, py::arg("cells"),
           py::arg("task") = std::string())
      .def("verify", &PyTable::verify)
      .def("save", [](const PyTable& t, const std::string& path) {
        serialize_table(t.table, path);
      });

  m.def("load_table", [](const std::string& path) {
    return PyTable{load_table(path), 0.0};
  });

  py::class_<PyModel>(m, "Model")
      .def_property_readonly("task",
                             [](const PyModel& m_) { return m_.task_name; })
      .def_property_readonly(
          "param_count",
          [](const PyModel& m_) { return m_.params.values.size(); })
      .def("exhaustive_accuracy", &PyModel::exhaustive_accuracy)
      .def("step", &PyModel::step, py::arg("cells"))
      .def("evolve", &PyModel::evolve, py::arg("a"),
           py::arg("b") = std::vector<int>{}, py::arg("engine") = "neural",
           py::arg("max_steps") = 0)
      .def("rollout", &PyModel::rollout, py::arg("bits"), py::arg("horizon"))
      .def("extract_table", &PyModel::extract_table)
      .def("save", &PyModel::save, py::arg("path"));

  m.def(
      "train",
      [](const std::string& task_name, std::uint64_t seed,
         std::size_t total_steps, std::size_t batch_size, double lr,
         double rho, std::size_t train_length, std::size_t eval_every) {
        const TaskSpec& spec = spec_for(task_name);
        TrainConfig cfg = default_train_config(spec.id);
        cfg.seed = seed;
        if (total_steps) cfg.total_steps = total_steps;
        if (batch_size) cfg.batch_size = batch_size;
        if (lr > 0) cfg.learning_rate = lr;
        if (rho >= 0) cfg.rho = rho;
        if (train_length) cfg.train_length = train_length;
        if (eval_every) cfg.eval_every = eval_every;
        KernelParams p0 =
            init_params(default_arch(spec.id), mix_seed(seed, 0x5EAD));
        auto [params, report] = train(std::move(p0), spec, cfg);
        py::dict rep;
        rep["steps_run"] = report.steps_run;
        rep["final_accuracy"] = report.final_accuracy;
        rep["first_perfect_step"] = report.first_perfect_step;
        rep["param_count"] = report.param_count;
        rep["wall_seconds"] = report.wall_seconds;
        return py::make_tuple(PyModel{task_name, std::move(params)}, rep);
      },
      py::arg("task"), py::arg("seed") = 1, py::arg("total_steps") = 0,
      py::arg("batch_size") = 0, py::arg("lr") = -1.0, py::arg("rho") = -1.0,
      py::arg("train_length") = 0, py::arg("eval_every") = 0);

  m.def("load", [](const std::string& path) {
    Checkpoint ck = load_checkpoint(path);
    return PyModel{ck.task, std::move(ck.params)};
  });

  m.def(
      "gen_input",
      [](const std::string& task_name, std::size_t length,
         const std::string& mode, std::uint64_t seed) {
        const TaskSpec& spec = spec_for(task_name);
        const auto m_ = parse_gen_mode(mode);
        if (!m_) throw py::value_error("unknown mode '" + mode + "'");
        const TaskInput input = gen_input(spec, length, *m_, seed);
        return py::make_tuple(to_ints(input.a), to_ints(input.b));
      },
      py::arg("task"), py::arg("length"), py::arg("mode") = "random",
      py::arg("seed") = 1);

  m.def(
      "global_oracle",
      [](const std::string& task_name, const std::vector<int>& a,
         const std::vector<int>& b) {
        const TaskSpec& spec = spec_for(task_name);
        return to_ints(global_oracle(spec, make_input(spec, a, b)));
      },
      py::arg("task"), py::arg("a"), py::arg("b") = std::vector<int>{});

  m.def(
      "oracle_steps",
      [](const std::string& task_name, const std::vector<int>& a,
         const std::vector<int>& b) {
        const TaskSpec& spec = spec_for(task_name);
        return oracle_convergence_steps(spec, make_input(spec, a, b));
      },
      py::arg("task"), py::arg("a"), py::arg("b") = std::vector<int>{});

  m.def(
      "oracle_rollout",
      [](const std::string& task_name, const std::vector<int>& bits,
         std::size_t horizon) {
        const TaskSpec& spec = spec_for(task_name);
        TaskInput input;
        input.a.assign(bits.begin(), bits.end());
        const Lattice start = encode_input(spec, input);
        const Symbol q = spec.alphabet->quiescent;
        StepFn fn = [&spec, q](std::span<const Symbol> in,
                               std::span<Symbol> out) {
          apply_local_rule_buf(in, out, spec.radius, q, spec.oracle);
        };
        const SpacetimeTrace trace = evolve_fixed_horizon(fn, start, horizon);
        std::vector<std::vector<int>> rows;
        rows.reserve(trace.rows.size());
        for (const auto& r : trace.rows) rows.emplace_back(r.begin(), r.end());
        return rows;
      },
      py::arg("task"), py::arg("bits"), py::arg("horizon"));

  m.def(
      "encode",
      [](const std::string& task_name, const std::vector<int>& a,
         const std::vector<int>& b) {
        const TaskSpec& spec = spec_for(task_name);
        return to_ints(encode_input(spec, make_input(spec, a, b)).cells);
      },
      py::arg("task"), py::arg("a"), py::arg("b") = std::vector<int>{});

  m.def(
      "decode",
      [](const std::string& task_name, const std::vector<int>& cells) {
        const TaskSpec& spec = spec_for(task_name);
        return to_ints(decode_output(spec, lattice_from_cells(spec, cells)));
      },
      py::arg("task"), py::arg("cells"));

  m.attr("__version__") = kVersion;
}
