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
#pragma once

#include <set>

#include "hshard/specialize.hpp"
#include "hshard/tensor.hpp"

namespace hshard {

// Deterministic virtual cluster. Bandwidth influences BSR sender choice only,
// never results.
struct VirtualCluster {
  std::vector<DeviceId> devices;
  std::map<DeviceId, int> node_of;
  Bandwidth bandwidth;
  std::map<DType, int> widths;

  int width(DType t) const;
  bool has_device(DeviceId d) const { return node_of.count(d) > 0; }

  static VirtualCluster single_node(int n_devices, double bw = 1.0);
  static VirtualCluster two_tier(const std::vector<std::vector<DeviceId>>& nodes,
                                 double intra, double inter);
};

std::map<DeviceId, VolumeEntry> volume_report(const BsrPlan& plan,
                                              const VirtualCluster& cluster);

struct TrafficLog {
  std::map<std::pair<DeviceId, DeviceId>, int64_t> bytes;

  void add(DeviceId sender, DeviceId receiver, int64_t n);
  int64_t total() const;
  int64_t sent_by(DeviceId d) const;
};

struct DeviceState {
  // tensor id -> (region, payload). Regions match placement() of the
  // tensor's current annotation.
  std::map<int, std::pair<SliceRegion, Tensor>> store;
};

struct SimState {
  std::map<DeviceId, DeviceState> devices;
  TrafficLog traffic;
};

// Single-device reference semantics: ground truth for every soundness check.
std::map<int, Tensor> oracle_run(const CompGraph& graph,
                                 const std::map<std::string, Tensor>& inputs,
                                 const std::map<std::string, int64_t>& bindings);

// Inverse of placement: concatenate Splits, sum Partials, assert Duplicate
// replicas equal (within replica_tol, for cross-route float divergence).
Tensor reassemble(const HetAnnotation& anno, const std::map<DeviceId, Tensor>& shards,
                  const Shape& shape, double replica_tol = 0.0);

// Deterministic forward decomposition: Split slices, Duplicate copies, and
// the full value on partial ordinal 0 (zeros on the rest).
std::map<DeviceId, Tensor> scatter(const HetAnnotation& anno, const Tensor& logical);

// Execute a CommPlan over per-device shards in logical coordinates.
std::map<DeviceId, Tensor> execute_plan(const CommPlan& plan,
                                        const std::map<DeviceId, Tensor>& src_shards,
                                        TrafficLog* traffic = nullptr);

struct RunResult {
  SimState state;
  // Logical values of producer-only tensors: micro-batch outputs stitched
  // along the batch window, once-per-step tensors reassembled globally.
  std::map<int, Tensor> outputs;
};

RunResult run(const VirtualCluster& cluster, const CompGraph& graph, int strategy,
              const std::vector<ExecGraph>& exec_graphs, const RunSchedule& schedule,
              const std::map<std::string, Tensor>& inputs,
              const std::map<std::string, int64_t>& bindings);

}  // namespace hshard
