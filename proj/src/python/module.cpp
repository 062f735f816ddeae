#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fogconf/bench.hpp"
#include "fogconf/crdt.hpp"
#include "fogconf/registry.hpp"
#include "fogconf/wire.hpp"

namespace py = pybind11;
using namespace fogconf;

namespace {

py::bytes opt_bytes(const std::optional<Bytes>& value) {
  if (!value) throw py::value_error("element is not a member");
  return py::bytes(reinterpret_cast<const char*>(value->data()),
                   value->size());
}

Bytes from_py(const py::bytes& value) {
  std::string s = value;
  return to_bytes(s);
}

void raise_if_error(const Status& status) {
  if (!status.ok()) {
    throw std::runtime_error(std::string(to_string(status.error().code)) +
                             ": " + status.error().message);
  }
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Eventually consistent configuration service: CRDT registry, "
            "scenario runner and summaries";

  py::class_<Timestamp>(m, "Timestamp")
      .def(py::init<std::int64_t, std::int64_t, std::string>(),
           py::arg("time_ms"), py::arg("seq"), py::arg("replica_id"))
      .def_readonly("time_ms", &Timestamp::time_ms)
      .def_readonly("seq", &Timestamp::seq)
      .def_readonly("replica_id", &Timestamp::replica_id)
      .def(py::self < py::self)
      .def(py::self == py::self)
      .def("__repr__", [](const Timestamp& ts) {
        return "Timestamp(" + std::to_string(ts.time_ms) + ", " +
               std::to_string(ts.seq) + ", '" + ts.replica_id + "')";
      });

  py::class_<ReplicaClock>(m, "ReplicaClock")
      .def(py::init<std::string>(), py::arg("replica_id"))
      .def("next", &ReplicaClock::next, py::arg("now_ms"))
      .def("observe", &ReplicaClock::observe, py::arg("seen"))
      .def_property_readonly("replica_id", &ReplicaClock::replica_id);

  py::class_<LwwElementSet>(m, "LwwElementSet")
      .def(py::init<>())
      .def("add",
           [](LwwElementSet& set, const std::string& id,
              const py::bytes& payload, const Timestamp& stamp) {
             set.add(id, from_py(payload), stamp);
           },
           py::arg("id"), py::arg("payload"), py::arg("stamp"))
      .def("remove", &LwwElementSet::remove, py::arg("id"), py::arg("stamp"))
      .def("is_member", &LwwElementSet::is_member, py::arg("id"))
      .def("lookup",
           [](const LwwElementSet& set, const std::string& id) -> py::object {
             auto payload = set.lookup(id);
             if (!payload) return py::none();
             return opt_bytes(payload);
           },
           py::arg("id"))
      .def("members",
           [](const LwwElementSet& set) {
             py::dict out;
             for (const auto& [id, payload] : set.members()) {
               out[py::bytes(id)] = py::bytes(
                   reinterpret_cast<const char*>(payload.data()),
                   payload.size());
             }
             return out;
           })
      .def("live_count", &LwwElementSet::live_count)
      .def("merge", &LwwElementSet::merge, py::arg("other"))
      .def_static("merged", &LwwElementSet::merged, py::arg("a"), py::arg("b"))
      .def(py::self == py::self);

  py::enum_<Action>(m, "Action")
      .value("Read", Action::Read)
      .value("Update", Action::Update)
      .value("Delete", Action::Delete)
      .value("Configure", Action::Configure);

  py::class_<NodeInfo>(m, "NodeInfo")
      .def_readonly("node_id", &NodeInfo::node_id)
      .def_readonly("address", &NodeInfo::address);

  py::class_<Registry>(m, "Registry")
      .def(py::init<std::string>(), py::arg("replica_id"))
      .def_property_readonly("replica_id", &Registry::replica_id)
      .def("register_node",
           [](Registry& r, const std::string& node_id,
              const std::string& address, std::int64_t now_ms) {
             raise_if_error(r.register_node(node_id, address, now_ms));
           },
           py::arg("node_id"), py::arg("address"), py::arg("now_ms"))
      .def("create_keygroup",
           [](Registry& r, const std::string& keygroup_id,
              const std::string& creator, bool mutable_, std::int64_t expiry_s,
              std::int64_t now_ms) {
             raise_if_error(r.create_keygroup(
                 keygroup_id, KeygroupConfig{mutable_, expiry_s}, creator,
                 now_ms));
           },
           py::arg("keygroup_id"), py::arg("creator"),
           py::arg("mutable") = true, py::arg("expiry_s") = 0,
           py::arg("now_ms") = 0)
      .def("delete_keygroup",
           [](Registry& r, const std::string& keygroup_id,
              std::int64_t now_ms) {
             raise_if_error(r.delete_keygroup(keygroup_id, now_ms));
           },
           py::arg("keygroup_id"), py::arg("now_ms") = 0)
      .def("join_keygroup",
           [](Registry& r, const std::string& keygroup_id,
              const std::string& node_id, std::int64_t now_ms) {
             raise_if_error(r.join_keygroup(keygroup_id, node_id, now_ms));
           },
           py::arg("keygroup_id"), py::arg("node_id"), py::arg("now_ms") = 0)
      .def("leave_keygroup",
           [](Registry& r, const std::string& keygroup_id,
              const std::string& node_id, std::int64_t now_ms) {
             raise_if_error(r.leave_keygroup(keygroup_id, node_id, now_ms));
           },
           py::arg("keygroup_id"), py::arg("node_id"), py::arg("now_ms") = 0)
      .def("set_permission",
           [](Registry& r, const std::string& user_id,
              const std::string& keygroup_id, const std::set<Action>& actions,
              std::int64_t now_ms) {
             raise_if_error(
                 r.set_permission(user_id, keygroup_id, actions, now_ms));
           },
           py::arg("user_id"), py::arg("keygroup_id"), py::arg("actions"),
           py::arg("now_ms") = 0)
      .def("revoke_permission",
           [](Registry& r, const std::string& user_id,
              const std::string& keygroup_id, std::int64_t now_ms) {
             raise_if_error(r.revoke_permission(user_id, keygroup_id, now_ms));
           },
           py::arg("user_id"), py::arg("keygroup_id"), py::arg("now_ms") = 0)
      .def("check_permission", &Registry::check_permission, py::arg("user_id"),
           py::arg("keygroup_id"), py::arg("action"))
      .def("get_replicas",
           [](const Registry& r, const std::string& keygroup_id) {
             auto replicas = r.get_replicas(keygroup_id);
             if (!replicas) {
               throw std::runtime_error(replicas.error().message);
             }
             return replicas.value();
           },
           py::arg("keygroup_id"))
      .def("keygroup_count", &Registry::keygroup_count)
      .def("keygroup_live", &Registry::keygroup_live, py::arg("keygroup_id"))
      .def("merge", &Registry::merge, py::arg("remote"))
      .def("state_hash", &Registry::state_hash)
      .def("state_json",
           [](const Registry& r) { return canonical_dump(r.state_json()); })
      .def("snapshot_json",
           [](const Registry& r) { return canonical_dump(r.snapshot_json()); });

  m.def("builtin_scenarios", [] {
    py::dict out;
    for (const auto& [name, scenario] : builtin_scenarios()) {
      out[py::str(name)] = canonical_dump(scenario_to_json(scenario));
    }
    return out;
  });

  m.def(
      "run_scenario",
      [](const std::string& scenario_json, bool paper_zeros) {
        auto parsed = parse_json(scenario_json);
        if (!parsed) throw py::value_error(parsed.error().message);
        auto scenario = scenario_from_json(parsed.value());
        if (!scenario) throw py::value_error(scenario.error().message);
        auto result = run_scenario(scenario.value(), paper_zeros);
        if (!result) throw std::runtime_error(result.error().message);
        return py::make_tuple(result.value().latency_csv,
                              result.value().convergence_csv);
      },
      py::arg("scenario_json"), py::arg("paper_zeros") = false,
      "Run a scenario; returns (latency_csv, convergence_csv)");

  m.def(
      "summarize_latency_csv",
      [](const std::string& csv_text) {
        auto summary = summarize_latency_csv(csv_text);
        if (!summary) throw py::value_error(summary.error().message);
        return canonical_dump(summary.value());
      },
      py::arg("csv_text"), "Summarize a latency CSV; returns a JSON string");
}
