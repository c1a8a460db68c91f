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

#include <memory>

#include "hshard/deduction.hpp"
#include "hshard/resolve.hpp"

namespace hshard {

// Prologue runs once before micro-batches (parameter-path nodes), epilogue
// once after (once-CommOps such as gradient sync, and their downstream).
enum class ExecPhase { Prologue, Body, Epilogue };
const char* exec_phase_name(ExecPhase p);

std::map<int, ExecPhase> node_phases(const CompGraph& graph, int strategy);

struct ExecNode {
  bool is_comm = false;
  int node_id = -1;
  ExecPhase phase = ExecPhase::Body;
  // Comm nodes: the plan resolved at the reference binding. Regions are
  // re-derived per micro-batch at execution time; kinds and groups are
  // shape-independent.
  std::shared_ptr<const CommPlan> plan;
};

struct ExecGraph {
  DeviceId device = -1;
  int strategy = 0;
  std::vector<ExecNode> nodes;
};

// Device-specific executable graph: non-local nodes pruned, CommOps replaced
// by resolved communication. `bindings` supplies the reference shapes.
ExecGraph instantiate(const CompGraph& graph, int strategy, DeviceId device,
                      const std::map<std::string, int64_t>& bindings,
                      const Bandwidth& bandwidth = Bandwidth::uniform());

std::vector<ExecGraph> instantiate_all(const CompGraph& graph, int strategy,
                                       const std::map<std::string, int64_t>& bindings,
                                       const Bandwidth& bandwidth = Bandwidth::uniform());

struct Pipeline {
  std::vector<std::vector<DeviceId>> stages;

  bool contains(DeviceId d) const;
  std::vector<DeviceId> devices() const;
};

// Merge collective participants into one stage, append P2P receivers as the
// next stage; once-per-step CommOps are excluded from the analysis.
std::vector<Pipeline> construct_pipelines(const CompGraph& graph, int strategy,
                                          const std::map<std::string, int64_t>& bindings,
                                          const Bandwidth& bandwidth = Bandwidth::uniform());

struct MicroBatch {
  int pipeline = 0;
  int index = 0;
  int64_t size = 0;
};

// In-order (GPipe-style) functional schedule: per pipeline all micro-batches
// run stage-by-stage; once-per-step communication runs before/after the loop.
struct RunSchedule {
  std::vector<Pipeline> pipelines;
  std::string mb_symbol;                       // empty: no micro-batching
  std::vector<std::vector<int64_t>> mb_sizes;  // per pipeline
  std::vector<MicroBatch> order() const;
};

RunSchedule assign_schedule(const std::vector<Pipeline>& pipelines,
                            const std::vector<std::vector<int64_t>>& mb_sizes,
                            const std::string& mb_symbol);

}  // namespace hshard
