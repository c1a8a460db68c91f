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
#include <string>

#include "hshard/annotation.hpp"
#include "hshard/common.hpp"

namespace hshard {

// A symbolic dimension: literal, or a symbol scaled by an exact rational
// (B, B/2, 3*B/4). Division exactness is checked when symbols are bound.
struct SymDim {
  std::string symbol;  // empty => literal
  Rational coeff{1, 1};

  static SymDim lit(int64_t v) {
    SymDim d;
    d.coeff = Rational(v);
    return d;
  }
  static SymDim sym(std::string name, Rational scale = Rational(1)) {
    SymDim d;
    d.symbol = std::move(name);
    d.coeff = scale;
    return d;
  }

  bool is_literal() const { return symbol.empty(); }
  bool mentions(const std::string& name) const { return symbol == name; }
  int64_t bind(const std::map<std::string, int64_t>& bindings) const;
  std::string str() const;
  static SymDim parse(const std::string& text);
  bool operator==(const SymDim&) const = default;
};

using SymShape = std::vector<SymDim>;

Shape bind_shape(const SymShape& shape, const std::map<std::string, int64_t>& bindings);
std::string sym_shape_str(const SymShape& shape);

enum class OpKind { Placeholder, Parameter, Elementwise, Dot, Sum, Reshape, CommOp };
const char* op_kind_name(OpKind k);
OpKind op_kind_from_name(const std::string& name);

enum class EwFunc { Identity, Relu, Gelu };
const char* ew_func_name(EwFunc f);
EwFunc ew_func_from_name(const std::string& name);
double apply_ew(EwFunc f, double x);

struct TensorRef {
  int id = -1;
  std::string name;
  SymShape shape;
  DType dtype = DType::F64;
  // One slot per registered strategy; deduction fills the empty ones.
  std::vector<std::optional<HetAnnotation>> slots;
  int producer = -1;
  std::vector<int> consumers;
};

struct OpNode {
  int id = -1;
  OpKind kind = OpKind::Placeholder;
  std::vector<int> inputs;   // tensor ids
  std::vector<int> outputs;  // tensor ids
  EwFunc func = EwFunc::Identity;  // Elementwise
  int axis = -1;                   // Sum
  SymShape target;                 // Reshape
  // Leaf ops and CommOps carry explicit per-strategy output annotations.
  std::vector<std::optional<HetAnnotation>> annotations;
  // CommOp scheduling override: run once per step instead of per micro-batch.
  // Unset => derived structurally (all transitive leaf inputs are Parameters).
  std::optional<bool> once;

  bool is_leaf() const { return kind == OpKind::Placeholder || kind == OpKind::Parameter; }
};

class CompGraph {
 public:
  CompGraph() = default;

  // Builders.
  int placeholder(const std::string& name, SymShape shape, DType dtype = DType::F64);
  int parameter(const std::string& name, SymShape shape, DType dtype = DType::F64);
  int elementwise(EwFunc func, int input);
  int dot(int lhs, int rhs);
  int sum(int input, int axis);
  int reshape(int input, SymShape target);
  int comm(int input, std::optional<bool> once = std::nullopt);

  int add_strategy();
  int strategy_count() const { return strategy_count_; }

  void set_annotation(int node_id, int strategy, HetAnnotation anno);
  const OpNode& node(int id) const { return nodes_.at(id); }
  OpNode& node(int id) { return nodes_.at(id); }
  const TensorRef& tensor(int id) const { return tensors_.at(id); }
  TensorRef& tensor(int id) { return tensors_.at(id); }
  const std::vector<OpNode>& nodes() const { return nodes_; }
  const std::vector<TensorRef>& tensors() const { return tensors_; }
  int tensor_by_name(const std::string& name) const;  // -1 if absent

  std::vector<int> topo_order() const;
  std::map<int, Shape> bind_symbols(const std::map<std::string, int64_t>& bindings) const;
  std::vector<std::string> symbols() const;

  // True when every transitive leaf ancestor of `node_id` is a Parameter.
  bool parameter_path(int node_id) const;
  // CommOps scheduled once per step rather than once per micro-batch.
  bool comm_once(int node_id) const;

  bool deduced(int strategy) const;
  void mark_deduced(int strategy) { deduced_.at(strategy) = true; }
  // Tensors consumed by no node (graph results).
  std::vector<int> output_tensors() const;
  std::vector<DeviceId> participating_devices(int strategy) const;

 private:
  int new_tensor(const std::string& name, SymShape shape, DType dtype, int producer);
  int new_node(OpNode node);

  std::vector<OpNode> nodes_;
  std::vector<TensorRef> tensors_;
  int strategy_count_ = 1;
  std::vector<bool> deduced_{false};
};

}  // namespace hshard
