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

#include "hshard/graph.hpp"

namespace hshard {

// Convert all annotations to the largest hsize and require identical device
// group unions afterwards. Failure means an explicit CommOp is needed.
std::vector<HetAnnotation> unify_inputs(const std::vector<HetAnnotation>& annos);

// Per-op sharding rules. `input_annos` must already be unified.
std::vector<HetAnnotation> deduce_op(const CompGraph& graph, const OpNode& node,
                                     const std::vector<HetAnnotation>& input_annos);

// Fill every tensor's annotation slot for `strategy` from the leaf/CommOp
// annotations. Only CommOps may change (DG Union, HSize) along the way.
void deduce_graph(CompGraph& graph, int strategy);

}  // namespace hshard
