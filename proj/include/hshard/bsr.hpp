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

#include "hshard/annotation.hpp"
#include "hshard/common.hpp"

namespace hshard {

// Symmetric link bandwidth in abstract units. Influences sender choice only,
// never results.
struct Bandwidth {
  double default_bw = 1.0;
  std::map<std::pair<DeviceId, DeviceId>, double> links;

  double get(DeviceId a, DeviceId b) const;
  void set(DeviceId a, DeviceId b, double bw);

  static Bandwidth uniform(double bw = 1.0);
  // Documented default: intra-node high, inter-node low.
  static Bandwidth two_tier(const std::map<DeviceId, int>& node_of, double intra,
                            double inter);
};

struct BsrRow {
  int tensor_id = 0;
  SliceRegion region;
  std::vector<DeviceId> owners;
  std::vector<DeviceId> requesters;
  int64_t bytes = 0;
};

// Finest-grained slice ownership/demand map for one tensor transition.
struct BsrTable {
  std::vector<BsrRow> rows;
};

BsrTable build_table(const HetAnnotation& src, const HetAnnotation& dst,
                     const Shape& shape, int tensor_id, int elem_bytes = 4);

// Internal variant used by the resolver for per-subgroup fallback: restrict
// the grid to `scope` and the participant set to `devices`.
BsrTable build_table_scoped(const HetAnnotation& src, const HetAnnotation& dst,
                            const Shape& shape, int tensor_id, int elem_bytes,
                            const SliceRegion& scope,
                            const std::vector<DeviceId>& devices);

struct Transfer {
  int tensor_id = 0;
  SliceRegion region;
  DeviceId sender = -1;
  DeviceId receiver = -1;
  int64_t bytes = 0;
};

struct LocalCopy {
  DeviceId device = -1;
  int tensor_id = 0;
  SliceRegion region;
};

struct FusionGroup {
  DeviceId sender = -1;
  DeviceId receiver = -1;
  std::vector<int> transfer_indices;  // into BsrPlan::transfers, canonical order
};

struct BsrPlan {
  std::vector<LocalCopy> local_copies;
  std::vector<Transfer> transfers;
  std::vector<FusionGroup> fusion_groups;

  int64_t total_bytes() const;
  std::map<DeviceId, int64_t> send_load() const;
};

// Scan rows in table order, requesters ascending; heuristics in priority
// order: local copy, highest bandwidth to the receiver, lowest cumulative
// send load, then lowest sender id.
BsrPlan make_plan(const BsrTable& table, const Bandwidth& bandwidth);

// Consolidate tables (tensor-id order, then region order) and plan globally;
// transfers between the same device pair form one fusion group.
BsrPlan fuse(const std::vector<BsrTable>& tables, const Bandwidth& bandwidth);

// Baseline without heuristics II/III: every transfer comes from the
// lowest-id owner. Used as the balance reference.
BsrPlan make_plan_naive(const BsrTable& table);

struct VolumeEntry {
  int64_t intra_bytes = 0;
  int64_t inter_bytes = 0;
};

std::map<DeviceId, VolumeEntry> volume_report(const BsrPlan& plan,
                                              const std::map<DeviceId, int>& node_of);

}  // namespace hshard
