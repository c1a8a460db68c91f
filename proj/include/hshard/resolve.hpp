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

#include <optional>

#include "hshard/annotation.hpp"
#include "hshard/bsr.hpp"

namespace hshard {

enum class StepKind {
  Identity,
  SendRecv,
  AllReduce,
  ReduceScatter,
  AllGather,
  SplitAllReduce,
  SplitReduceScatter,
  SplitAllGather,
  Bsr,
};
const char* step_kind_name(StepKind k);
StepKind step_kind_from_name(const std::string& name);
bool is_collective(StepKind k);

// One finest-grained slice of a Split-collective: contributors send (one
// representative per subgroup and partial piece), receivers take the result.
struct SliceCollective {
  SliceRegion region;
  std::vector<DeviceId> contributors;
  std::vector<DeviceId> receivers;
  std::vector<DeviceId> group() const;  // sorted union
};

struct CommStep {
  StepKind kind = StepKind::Identity;
  int subgroup = -1;  // bottom-tier steps; -1 for top-tier/global
  // AllReduce/ReduceScatter/AllGather: one or more collective groups, members
  // ordered by their changing digit (scatter/gather order).
  std::vector<std::vector<DeviceId>> groups;
  // SendRecv: positional pairs.
  std::vector<std::pair<DeviceId, DeviceId>> pairs;
  // Split-collectives.
  std::vector<SliceCollective> slices;
  // Bsr.
  std::optional<BsrPlan> bsr;

  std::vector<DeviceId> participants() const;
  bool touches(DeviceId d) const;
};

// Ordered execution: bottom_phase aligns per-subgroup states (src -> mid),
// top_phase realigns the top tier (mid -> dst). Either phase may be empty.
struct CommPlan {
  HetAnnotation src;
  HetAnnotation dst;
  std::optional<HetAnnotation> mid;
  Shape shape;
  DType dtype = DType::F64;
  std::vector<CommStep> bottom_phase;
  std::vector<CommStep> top_phase;

  const HetAnnotation& bottom_target() const { return mid ? *mid : dst; }
  std::vector<DeviceId> participants() const;
};

// Fig-style bottom-tier table: the step kind for one subgroup transition.
// The returned step carries groups/pairs; a Bsr result is a kind marker whose
// plan classify() fills in with slice context.
CommStep bottom_resolve(const ShardSpec& src_ds, const ShardSpec& dst_ds,
                        const DeviceGroup& src_dg, const DeviceGroup& dst_dg);

// Split-collective resolution for an HDim-only transition. Preconditions:
// equal hsize, identical DG unions, element-wise equal DS unions, and an
// hdim transition in {-2 -> -1, -2 -> d>=0, d>=0 -> -1}.
CommStep top_resolve(const HetAnnotation& src, const HetAnnotation& dst,
                     const Shape& shape);

// The classification pipeline: lower a (src, dst) annotation pair into an
// executable CommPlan. Bandwidth feeds embedded BSR sender choices; the
// default is a uniform matrix.
CommPlan classify(const HetAnnotation& src, const HetAnnotation& dst,
                  const Shape& shape, DType dtype = DType::F64,
                  const Bandwidth& bandwidth = Bandwidth::uniform());

}  // namespace hshard
