/* Copyright 2026 The hshard Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "hshard/specialize.hpp"

#include <algorithm>
#include <set>

namespace hshard {

const char* exec_phase_name(ExecPhase p) {
  switch (p) {
    case ExecPhase::Prologue: return "prologue";
    case ExecPhase::Body: return "body";
    case ExecPhase::Epilogue: return "epilogue";
  }
  return "?";
}

std::map<int, ExecPhase> node_phases(const CompGraph& graph, int strategy) {
  (void)strategy;
  std::map<int, ExecPhase> phases;
  for (int id : graph.topo_order()) {
    const auto& node = graph.node(id);
    if (graph.parameter_path(id)) {
      phases[id] = ExecPhase::Prologue;
      continue;
    }
    if (node.kind == OpKind::CommOp && graph.comm_once(id)) {
      phases[id] = ExecPhase::Epilogue;
      continue;
    }
    bool downstream_of_epilogue = false;
    for (int in : node.inputs) {
      int producer = graph.tensor(in).producer;
      if (producer >= 0 && phases.at(producer) == ExecPhase::Epilogue)
        downstream_of_epilogue = true;
    }
    phases[id] = downstream_of_epilogue ? ExecPhase::Epilogue : ExecPhase::Body;
  }
  return phases;
}

namespace {

std::shared_ptr<const CommPlan> resolve_comm(const CompGraph& graph, int strategy,
                                             const OpNode& node,
                                             const std::map<std::string, int64_t>& bindings,
                                             const Bandwidth& bandwidth) {
  const auto& in = graph.tensor(node.inputs[0]);
  const auto& out = graph.tensor(node.outputs[0]);
  const auto& src = in.slots.at(strategy);
  const auto& dst = out.slots.at(strategy);
  if (!src || !dst)
    fail(Errc::UndeducedStrategy,
         "CommOp " + std::to_string(node.id) + " not deduced for strategy " +
             std::to_string(strategy));
  Shape shape = bind_shape(in.shape, bindings);
  try {
    return std::make_shared<CommPlan>(classify(*src, *dst, shape, in.dtype, bandwidth));
  } catch (const Error& e) {
    throw Error(e.code(), "CommOp " + std::to_string(node.id) + ": " + e.what());
  }
}

bool device_in(const std::optional<HetAnnotation>& anno, DeviceId d) {
  return anno && anno->contains(d);
}

}  // namespace

ExecGraph instantiate(const CompGraph& graph, int strategy, DeviceId device,
                      const std::map<std::string, int64_t>& bindings,
                      const Bandwidth& bandwidth) {
  if (!graph.deduced(strategy))
    fail(Errc::UndeducedStrategy,
         "strategy " + std::to_string(strategy) + " not deduced");
  auto phases = node_phases(graph, strategy);
  ExecGraph out;
  out.device = device;
  out.strategy = strategy;
  for (int id : graph.topo_order()) {
    const auto& node = graph.node(id);
    if (node.kind == OpKind::CommOp) {
      // The comm node lands on every device of the source or destination
      // union; top-tier steps then appear uniformly, bottom-tier steps per
      // subgroup.
      const auto& src = graph.tensor(node.inputs[0]).slots.at(strategy);
      const auto& dst = graph.tensor(node.outputs[0]).slots.at(strategy);
      if (!device_in(src, device) && !device_in(dst, device)) continue;
      ExecNode en;
      en.is_comm = true;
      en.node_id = id;
      en.phase = phases.at(id);
      en.plan = resolve_comm(graph, strategy, node, bindings, bandwidth);
      out.nodes.push_back(std::move(en));
      continue;
    }
    bool local = false;
    for (int t : node.outputs)
      if (device_in(graph.tensor(t).slots.at(strategy), device)) local = true;
    for (int t : node.inputs)
      if (device_in(graph.tensor(t).slots.at(strategy), device)) local = true;
    if (!local) continue;
    ExecNode en;
    en.node_id = id;
    en.phase = phases.at(id);
    out.nodes.push_back(std::move(en));
  }
  return out;
}

std::vector<ExecGraph> instantiate_all(const CompGraph& graph, int strategy,
                                       const std::map<std::string, int64_t>& bindings,
                                       const Bandwidth& bandwidth) {
  std::vector<ExecGraph> out;
  for (DeviceId d : graph.participating_devices(strategy))
    out.push_back(instantiate(graph, strategy, d, bindings, bandwidth));
  return out;
}

bool Pipeline::contains(DeviceId d) const {
  for (const auto& s : stages)
    if (std::find(s.begin(), s.end(), d) != s.end()) return true;
  return false;
}

std::vector<DeviceId> Pipeline::devices() const {
  std::vector<DeviceId> out;
  for (const auto& s : stages) out.insert(out.end(), s.begin(), s.end());
  return out;
}

namespace {

// Union-find over devices carrying a per-device stage offset relative to the
// component root.
class StageForest {
 public:
  void ensure(DeviceId d) {
    if (!parent_.count(d)) {
      parent_[d] = d;
      offset_[d] = 0;
    }
  }

  std::pair<DeviceId, int64_t> find(DeviceId d) {
    if (parent_[d] == d) return {d, 0};
    auto [root, off] = find(parent_[d]);
    parent_[d] = root;
    offset_[d] += off;
    return {root, offset_[d]};
  }

  // Require stage(b) == stage(a) + delta.
  void relate(DeviceId a, DeviceId b, int64_t delta) {
    ensure(a);
    ensure(b);
    auto [ra, oa] = find(a);
    auto [rb, ob] = find(b);
    if (ra == rb) {
      if (ob - oa != delta)
        fail(Errc::ConflictingStageOrder,
             "devices " + std::to_string(a) + " and " + std::to_string(b) +
                 " would need two relative stage positions");
      return;
    }
    parent_[rb] = ra;
    offset_[rb] = oa + delta - ob;
  }

  std::map<DeviceId, std::pair<DeviceId, int64_t>> snapshot() {
    std::map<DeviceId, std::pair<DeviceId, int64_t>> out;
    for (const auto& [d, p] : parent_) out[d] = find(d);
    return out;
  }

 private:
  std::map<DeviceId, DeviceId> parent_;
  std::map<DeviceId, int64_t> offset_;
};

void relate_step(StageForest& forest, const CommStep& step) {
  if (step.kind == StepKind::Identity) return;
  if (is_collective(step.kind)) {
    std::vector<std::vector<DeviceId>> groups = step.groups;
    for (const auto& sc : step.slices) groups.push_back(sc.group());
    for (const auto& g : groups)
      for (size_t i = 1; i < g.size(); ++i) forest.relate(g[0], g[i], 0);
    return;
  }
  // P2P: SendRecv pairs or BSR transfers. When a device both sends and
  // receives this is an in-place reshard, not a stage boundary.
  std::set<DeviceId> senders, receivers;
  std::vector<std::pair<DeviceId, DeviceId>> pairs = step.pairs;
  if (step.bsr)
    for (const auto& t : step.bsr->transfers) pairs.push_back({t.sender, t.receiver});
  for (const auto& [s, r] : pairs) {
    senders.insert(s);
    receivers.insert(r);
  }
  if (pairs.empty()) return;
  bool overlap = false;
  for (DeviceId s : senders)
    if (receivers.count(s)) overlap = true;
  if (overlap) {
    std::vector<DeviceId> all(senders.begin(), senders.end());
    all.insert(all.end(), receivers.begin(), receivers.end());
    for (size_t i = 1; i < all.size(); ++i) forest.relate(all[0], all[i], 0);
    return;
  }
  for (DeviceId s : senders)
    if (s != *senders.begin()) forest.relate(*senders.begin(), s, 0);
  for (DeviceId r : receivers)
    if (r != *receivers.begin()) forest.relate(*receivers.begin(), r, 0);
  forest.relate(*senders.begin(), *receivers.begin(), 1);
}

}  // namespace

std::vector<Pipeline> construct_pipelines(const CompGraph& graph, int strategy,
                                          const std::map<std::string, int64_t>& bindings,
                                          const Bandwidth& bandwidth) {
  if (!graph.deduced(strategy))
    fail(Errc::UndeducedStrategy,
         "strategy " + std::to_string(strategy) + " not deduced");
  StageForest forest;
  for (DeviceId d : graph.participating_devices(strategy)) forest.ensure(d);
  for (int id : graph.topo_order()) {
    const auto& node = graph.node(id);
    if (node.kind != OpKind::CommOp) continue;
    if (graph.comm_once(id)) continue;  // executes once per step, not scheduled
    auto plan = resolve_comm(graph, strategy, node, bindings, bandwidth);
    try {
      for (const auto& step : plan->bottom_phase) relate_step(forest, step);
      for (const auto& step : plan->top_phase) relate_step(forest, step);
    } catch (const Error& e) {
      throw Error(e.code(), "CommOp " + std::to_string(id) + ": " + e.what());
    }
  }
  // Components -> pipelines; offsets -> stages.
  auto snap = forest.snapshot();
  std::map<DeviceId, std::map<int64_t, std::vector<DeviceId>>> components;
  for (const auto& [d, ro] : snap) components[ro.first][ro.second].push_back(d);
  std::vector<Pipeline> pipelines;
  for (auto& [root, stages] : components) {
    Pipeline p;
    for (auto& [off, devs] : stages) {
      std::sort(devs.begin(), devs.end());
      p.stages.push_back(devs);
    }
    pipelines.push_back(std::move(p));
  }
  std::sort(pipelines.begin(), pipelines.end(), [](const Pipeline& a, const Pipeline& b) {
    return a.stages.front().front() < b.stages.front().front();
  });
  return pipelines;
}

std::vector<MicroBatch> RunSchedule::order() const {
  std::vector<MicroBatch> out;
  for (size_t p = 0; p < pipelines.size(); ++p)
    for (size_t m = 0; m < mb_sizes[p].size(); ++m)
      out.push_back({static_cast<int>(p), static_cast<int>(m), mb_sizes[p][m]});
  return out;
}

RunSchedule assign_schedule(const std::vector<Pipeline>& pipelines,
                            const std::vector<std::vector<int64_t>>& mb_sizes,
                            const std::string& mb_symbol) {
  if (mb_sizes.size() != pipelines.size())
    fail(Errc::SymbolBindingError, "need one micro-batch list per pipeline");
  for (size_t p = 0; p < mb_sizes.size(); ++p) {
    if (mb_sizes[p].empty())
      fail(Errc::SymbolBindingError,
           "pipeline " + std::to_string(p) + " has zero micro-batches");
    for (int64_t s : mb_sizes[p])
      if (s < 1)
        fail(Errc::SymbolBindingError,
             "pipeline " + std::to_string(p) + " has a non-positive micro-batch size");
  }
  RunSchedule sched;
  sched.pipelines = pipelines;
  sched.mb_sizes = mb_sizes;
  sched.mb_symbol = mb_symbol;
  return sched;
}

}  // namespace hshard
