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
#include "hshard/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace hshard {

int64_t SymDim::bind(const std::map<std::string, int64_t>& bindings) const {
  Rational value = coeff;
  if (!symbol.empty()) {
    auto it = bindings.find(symbol);
    if (it == bindings.end()) fail(Errc::MissingSymbol, "symbol '" + symbol + "' unbound");
    value = value * Rational(it->second);
  }
  if (!value.is_integer())
    fail(Errc::InexactDivision, "dim " + str() + " does not bind to an integer");
  if (value.num <= 0)
    fail(Errc::NonPositive, "dim " + str() + " binds to " + std::to_string(value.num));
  return value.num;
}

std::string SymDim::str() const {
  if (is_literal()) return std::to_string(coeff.num);
  std::string out;
  if (coeff.num != 1) out += std::to_string(coeff.num) + "*";
  out += symbol;
  if (coeff.den != 1) out += "/" + std::to_string(coeff.den);
  return out;
}

SymDim SymDim::parse(const std::string& text) {
  // Forms: "8", "B", "B/2", "3*B", "3*B/2".
  if (text.empty()) fail(Errc::ParseError, "empty dimension");
  bool numeric = text.find_first_not_of("0123456789") == std::string::npos;
  if (numeric) return SymDim::lit(std::stoll(text));
  int64_t num = 1, den = 1;
  std::string body = text;
  auto star = body.find('*');
  if (star != std::string::npos) {
    num = std::stoll(body.substr(0, star));
    body = body.substr(star + 1);
  }
  auto slash = body.find('/');
  if (slash != std::string::npos) {
    den = std::stoll(body.substr(slash + 1));
    body = body.substr(0, slash);
  }
  if (body.empty() || body.find_first_of("*/") != std::string::npos)
    fail(Errc::ParseError, "bad dimension '" + text + "'");
  return SymDim::sym(body, Rational(num, den));
}

Shape bind_shape(const SymShape& shape, const std::map<std::string, int64_t>& bindings) {
  Shape out;
  out.reserve(shape.size());
  for (const auto& d : shape) out.push_back(d.bind(bindings));
  return out;
}

std::string sym_shape_str(const SymShape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i].str();
  }
  os << "]";
  return os.str();
}

const char* op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::Placeholder: return "Placeholder";
    case OpKind::Parameter: return "Parameter";
    case OpKind::Elementwise: return "Elementwise";
    case OpKind::Dot: return "Dot";
    case OpKind::Sum: return "Sum";
    case OpKind::Reshape: return "Reshape";
    case OpKind::CommOp: return "CommOp";
  }
  return "?";
}

OpKind op_kind_from_name(const std::string& name) {
  for (OpKind k : {OpKind::Placeholder, OpKind::Parameter, OpKind::Elementwise,
                   OpKind::Dot, OpKind::Sum, OpKind::Reshape, OpKind::CommOp})
    if (name == op_kind_name(k)) return k;
  fail(Errc::ParseError, "unknown op kind '" + name + "'");
}

const char* ew_func_name(EwFunc f) {
  switch (f) {
    case EwFunc::Identity: return "identity";
    case EwFunc::Relu: return "relu";
    case EwFunc::Gelu: return "gelu";
  }
  return "?";
}

EwFunc ew_func_from_name(const std::string& name) {
  for (EwFunc f : {EwFunc::Identity, EwFunc::Relu, EwFunc::Gelu})
    if (name == ew_func_name(f)) return f;
  fail(Errc::ParseError, "unknown elementwise func '" + name + "'");
}

double apply_ew(EwFunc f, double x) {
  switch (f) {
    case EwFunc::Identity: return x;
    case EwFunc::Relu: return x > 0 ? x : 0.0;
    case EwFunc::Gelu: return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
  }
  return x;
}

int CompGraph::new_tensor(const std::string& name, SymShape shape, DType dtype,
                          int producer) {
  TensorRef t;
  t.id = static_cast<int>(tensors_.size());
  t.name = name;
  t.shape = std::move(shape);
  t.dtype = dtype;
  t.producer = producer;
  t.slots.resize(strategy_count_);
  tensors_.push_back(std::move(t));
  return tensors_.back().id;
}

int CompGraph::new_node(OpNode node) {
  node.id = static_cast<int>(nodes_.size());
  for (int in : node.inputs) tensors_.at(in).consumers.push_back(node.id);
  nodes_.push_back(std::move(node));
  return nodes_.back().id;
}

int CompGraph::placeholder(const std::string& name, SymShape shape, DType dtype) {
  OpNode n;
  n.kind = OpKind::Placeholder;
  n.annotations.resize(strategy_count_);
  int id = new_node(std::move(n));
  int t = new_tensor(name, std::move(shape), dtype, id);
  nodes_[id].outputs = {t};
  return id;
}

int CompGraph::parameter(const std::string& name, SymShape shape, DType dtype) {
  OpNode n;
  n.kind = OpKind::Parameter;
  n.annotations.resize(strategy_count_);
  int id = new_node(std::move(n));
  int t = new_tensor(name, std::move(shape), dtype, id);
  nodes_[id].outputs = {t};
  return id;
}

int CompGraph::elementwise(EwFunc func, int input) {
  OpNode n;
  n.kind = OpKind::Elementwise;
  n.func = func;
  n.inputs = {input};
  int id = new_node(std::move(n));
  const auto& in = tensors_.at(input);
  int t = new_tensor("", in.shape, in.dtype, id);
  nodes_[id].outputs = {t};
  return id;
}

int CompGraph::dot(int lhs, int rhs) {
  const auto& x = tensors_.at(lhs);
  const auto& w = tensors_.at(rhs);
  if (w.shape.size() != 2)
    fail(Errc::ShapeMismatch, "Dot rhs must be 2-d, got " + sym_shape_str(w.shape));
  if (x.shape.empty())
    fail(Errc::ShapeMismatch, "Dot lhs must have rank >= 1");
  if (!(x.shape.back() == w.shape[0]))
    fail(Errc::ShapeMismatch, "Dot contraction dims differ: " +
                                  x.shape.back().str() + " vs " + w.shape[0].str());
  OpNode n;
  n.kind = OpKind::Dot;
  n.inputs = {lhs, rhs};
  int id = new_node(std::move(n));
  SymShape out(x.shape.begin(), x.shape.end() - 1);
  out.push_back(w.shape[1]);
  int t = new_tensor("", std::move(out), x.dtype, id);
  nodes_[id].outputs = {t};
  return id;
}

int CompGraph::sum(int input, int axis) {
  const auto& in = tensors_.at(input);
  if (axis < 0 || axis >= static_cast<int>(in.shape.size()))
    fail(Errc::ShapeMismatch, "Sum axis " + std::to_string(axis) + " out of range");
  OpNode n;
  n.kind = OpKind::Sum;
  n.axis = axis;
  n.inputs = {input};
  int id = new_node(std::move(n));
  SymShape out;
  for (int d = 0; d < static_cast<int>(in.shape.size()); ++d)
    if (d != axis) out.push_back(in.shape[d]);
  int t = new_tensor("", std::move(out), in.dtype, id);
  nodes_[id].outputs = {t};
  return id;
}

int CompGraph::reshape(int input, SymShape target) {
  const auto& in = tensors_.at(input);
  OpNode n;
  n.kind = OpKind::Reshape;
  n.target = target;
  n.inputs = {input};
  int id = new_node(std::move(n));
  int t = new_tensor("", std::move(target), in.dtype, id);
  nodes_[id].outputs = {t};
  return id;
}

int CompGraph::comm(int input, std::optional<bool> once) {
  const auto& in = tensors_.at(input);
  OpNode n;
  n.kind = OpKind::CommOp;
  n.inputs = {input};
  n.once = once;
  n.annotations.resize(strategy_count_);
  int id = new_node(std::move(n));
  int t = new_tensor("", in.shape, in.dtype, id);
  nodes_[id].outputs = {t};
  return id;
}

int CompGraph::add_strategy() {
  ++strategy_count_;
  deduced_.push_back(false);
  for (auto& n : nodes_)
    if (n.is_leaf() || n.kind == OpKind::CommOp) n.annotations.emplace_back();
  for (auto& t : tensors_) t.slots.emplace_back();
  return strategy_count_ - 1;
}

void CompGraph::set_annotation(int node_id, int strategy, HetAnnotation anno) {
  auto& n = nodes_.at(node_id);
  if (!n.is_leaf() && n.kind != OpKind::CommOp)
    fail(Errc::UndeducedStrategy,
         "only leaf ops and CommOps carry explicit annotations (node " +
             std::to_string(node_id) + ")");
  n.annotations.at(strategy) = std::move(anno);
}

int CompGraph::tensor_by_name(const std::string& name) const {
  for (const auto& t : tensors_)
    if (!t.name.empty() && t.name == name) return t.id;
  return -1;
}

std::vector<int> CompGraph::topo_order() const {
  // Kahn's algorithm; stable by node id.
  std::vector<int> indeg(nodes_.size(), 0);
  for (const auto& n : nodes_)
    for (int in : n.inputs)
      if (tensors_.at(in).producer >= 0) ++indeg[n.id];
  std::set<int> ready;
  for (const auto& n : nodes_)
    if (indeg[n.id] == 0) ready.insert(n.id);
  std::vector<int> order;
  while (!ready.empty()) {
    int id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (int out : nodes_[id].outputs)
      for (int consumer : tensors_.at(out).consumers)
        if (--indeg[consumer] == 0) ready.insert(consumer);
  }
  if (order.size() != nodes_.size())
    fail(Errc::CycleDetected, "graph has a cycle");
  return order;
}

std::map<int, Shape> CompGraph::bind_symbols(
    const std::map<std::string, int64_t>& bindings) const {
  std::map<int, Shape> out;
  for (const auto& t : tensors_) out[t.id] = bind_shape(t.shape, bindings);
  return out;
}

std::vector<std::string> CompGraph::symbols() const {
  std::set<std::string> names;
  for (const auto& t : tensors_)
    for (const auto& d : t.shape)
      if (!d.is_literal()) names.insert(d.symbol);
  return {names.begin(), names.end()};
}

bool CompGraph::parameter_path(int node_id) const {
  const auto& n = nodes_.at(node_id);
  if (n.kind == OpKind::Parameter) return true;
  if (n.kind == OpKind::Placeholder) return false;
  if (n.inputs.empty()) return false;
  for (int in : n.inputs) {
    int producer = tensors_.at(in).producer;
    if (producer < 0 || !parameter_path(producer)) return false;
  }
  return true;
}

bool CompGraph::comm_once(int node_id) const {
  const auto& n = nodes_.at(node_id);
  if (n.kind != OpKind::CommOp) return false;
  if (n.once.has_value()) return *n.once;
  return parameter_path(node_id);
}

bool CompGraph::deduced(int strategy) const { return deduced_.at(strategy); }

std::vector<int> CompGraph::output_tensors() const {
  std::vector<int> out;
  for (const auto& t : tensors_)
    if (t.consumers.empty()) out.push_back(t.id);
  return out;
}

std::vector<DeviceId> CompGraph::participating_devices(int strategy) const {
  std::set<DeviceId> devs;
  for (const auto& t : tensors_) {
    const auto& slot = t.slots.at(strategy);
    if (!slot) continue;
    for (DeviceId d : slot->all_devices()) devs.insert(d);
  }
  return {devs.begin(), devs.end()};
}

}  // namespace hshard
