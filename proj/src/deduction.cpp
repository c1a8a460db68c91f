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
#include "hshard/deduction.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace hshard {

namespace {

// Assemble a DS from deduced (key, count) positions. Adjacent same-key runs
// merge; repeated Duplicate/Partial keys fold into their first occurrence
// (ordinal identity is irrelevant for those). A repeated split key cannot be
// expressed and is rejected.
ShardSpec build_spec(const std::vector<std::pair<int, int>>& positions) {
  ShardSpec out;
  for (const auto& [key, count] : positions) {
    if (count == 1) continue;
    if (!out.entries.empty() && out.entries.back().key == key) {
      out.entries.back().count *= count;
      continue;
    }
    bool folded = false;
    if (key < 0) {
      for (auto& e : out.entries)
        if (e.key == key) {
          e.count *= count;
          folded = true;
          break;
        }
    } else {
      for (const auto& e : out.entries)
        if (e.key == key)
          fail(Errc::UnderivableSharding,
               "split dim " + std::to_string(key) + " deduced twice");
    }
    if (!folded) out.entries.push_back({key, count});
  }
  return out;
}

// Key-pair rule for Dot(x: [..., m], w: [m, k]) -> y: [..., k].
// Returns the y key for one aligned device factor, or nullopt when the pair
// is not locally computable.
std::optional<int> dot_pair(int kx, int kw, int x_ndim) {
  const int x_contract = x_ndim - 1;
  if (kx == kDuplicate && kw == kDuplicate) return kDuplicate;
  if (kx == kPartial && kw == kDuplicate) return kPartial;
  if (kx == kDuplicate && kw == kPartial) return kPartial;
  if (kx >= 0 && kx < x_contract && kw == kDuplicate) return kx;
  if (kx == x_contract && kw == 0) return kPartial;
  if (kx == kDuplicate && kw == 1) return x_ndim - 1;  // y's last dim
  return std::nullopt;
}

HetAnnotation deduce_dot(const HetAnnotation& x, const HetAnnotation& w, int x_ndim) {
  if ((x.ds_union.size() != w.ds_union.size()))
    fail(Errc::DgUnionMismatch, "Dot inputs not unified");
  HetAnnotation out;
  out.hsize = x.hsize;
  out.dg_union = x.dg_union;
  for (int g = 0; g < x.hsize; ++g) {
    if (x.ds_union[g].count_of(kPartial) > 1 && w.ds_union[g].count_of(kPartial) > 1)
      fail(Errc::UnderivableSharding, "both Dot operands are Partial in subgroup " +
                                          std::to_string(g));
    auto aligned = align_shard_specs(x.ds_union[g], w.ds_union[g]);
    if (!aligned)
      fail(Errc::UnderivableSharding,
           "Dot operand shardings do not factor-align in subgroup " +
               std::to_string(g) + ": " + x.ds_union[g].str() + " vs " +
               w.ds_union[g].str() + "; insert a CommOp");
    std::vector<std::pair<int, int>> positions;
    for (const auto& f : *aligned) {
      auto y = dot_pair(f.key_a, f.key_b, x_ndim);
      if (!y)
        fail(Errc::UnderivableSharding,
             "Dot cannot combine key " + std::to_string(f.key_a) + " with key " +
                 std::to_string(f.key_b) + " in subgroup " + std::to_string(g) +
                 "; insert a CommOp");
      positions.push_back({*y, f.count});
    }
    out.ds_union.push_back(build_spec(positions));
  }
  // Top tier: the same rule applied to (HDim, HSize) as a 1-entry sharding.
  int hx = x.effective_hdim();
  int hw = w.effective_hdim();
  if (hx == kPartial && hw == kPartial)
    fail(Errc::UnderivableSharding, "both Dot operands are top-tier Partial");
  auto hy = dot_pair(hx, hw, x_ndim);
  if (!hy)
    fail(Errc::UnderivableSharding,
         "Dot cannot combine HDim " + std::to_string(hx) + " with HDim " +
             std::to_string(hw) + "; insert a CommOp");
  out.hdim = *hy;
  if (hx == x_ndim - 1 && hw == 0) {
    // Contraction split across subgroups: both operands' slice boundaries on
    // the contraction dim must coincide.
    if (x.effective_ratios() != w.effective_ratios())
      fail(Errc::UnderivableSharding, "top-tier contraction ratios differ");
  }
  if (out.hdim >= 0) {
    out.hsplit_ratios = (hw == 1) ? w.hsplit_ratios : x.hsplit_ratios;
  }
  return out;
}

int sum_remap(int key, int axis) {
  if (key == kDuplicate || key == kPartial) return key;
  if (key == axis) return kPartial;
  if (key > axis) return key - 1;
  return key;
}

HetAnnotation deduce_sum(const HetAnnotation& in, int axis) {
  HetAnnotation out;
  out.hsize = in.hsize;
  out.dg_union = in.dg_union;
  for (const auto& ds : in.ds_union) {
    std::vector<std::pair<int, int>> positions;
    for (const auto& e : ds.entries) positions.push_back({sum_remap(e.key, axis), e.count});
    out.ds_union.push_back(build_spec(positions));
  }
  int hd = in.effective_hdim();
  out.hdim = sum_remap(hd, axis);
  if (out.hdim >= 0) out.hsplit_ratios = in.hsplit_ratios;
  return out;
}

// Symbolic product of dims: an exact rational times a bag of symbols.
struct SymProduct {
  Rational coeff{1, 1};
  std::multiset<std::string> syms;

  void mul(const SymDim& d) {
    coeff = coeff * d.coeff;
    if (!d.is_literal()) syms.insert(d.symbol);
  }
  bool operator==(const SymProduct& o) const {
    return coeff == o.coeff && syms == o.syms;
  }
};

struct Segment {
  int in_lo, in_hi;   // [in_lo, in_hi)
  int out_lo, out_hi;
};

// Partition both shapes into minimal contiguous groups with equal products.
std::optional<std::vector<Segment>> reshape_segments(const SymShape& in,
                                                     const SymShape& out) {
  std::vector<Segment> segs;
  size_t i = 0, o = 0;
  while (i < in.size() || o < out.size()) {
    size_t i0 = i, o0 = o;
    SymProduct pi, po;
    if (i < in.size()) pi.mul(in[i++]);
    if (o < out.size()) po.mul(out[o++]);
    while (!(pi == po)) {
      bool in_subset = std::includes(po.syms.begin(), po.syms.end(),
                                     pi.syms.begin(), pi.syms.end());
      bool out_subset = std::includes(pi.syms.begin(), pi.syms.end(),
                                      po.syms.begin(), po.syms.end());
      bool advance_in;
      if (pi.syms == po.syms)
        advance_in = pi.coeff < po.coeff;
      else if (in_subset)
        advance_in = true;
      else if (out_subset)
        advance_in = false;
      else
        return std::nullopt;
      if (advance_in) {
        if (i >= in.size()) return std::nullopt;
        pi.mul(in[i++]);
      } else {
        if (o >= out.size()) return std::nullopt;
        po.mul(out[o++]);
      }
    }
    segs.push_back({static_cast<int>(i0), static_cast<int>(i),
                    static_cast<int>(o0), static_cast<int>(o)});
  }
  return segs;
}

HetAnnotation deduce_reshape(const HetAnnotation& in_anno, const SymShape& in_shape,
                             const SymShape& out_shape) {
  auto segs = reshape_segments(in_shape, out_shape);
  if (!segs)
    fail(Errc::UnderivableSharding,
         "reshape " + sym_shape_str(in_shape) + " -> " + sym_shape_str(out_shape) +
             " has no factor correspondence; insert a CommOp");
  // A split survives when its dim is preserved (1:1 segment) or is the
  // contiguous major factor of its segment; it then lands on the segment's
  // first output dim.
  auto remap = [&](int key) -> std::optional<int> {
    if (key < 0) return key;
    for (const auto& s : *segs) {
      if (key < s.in_lo || key >= s.in_hi) continue;
      if (s.in_hi - s.in_lo == 1 && s.out_hi - s.out_lo == 1) return s.out_lo;
      if (key == s.in_lo) return s.out_lo;
      return std::nullopt;
    }
    return std::nullopt;
  };
  HetAnnotation out;
  out.hsize = in_anno.hsize;
  out.dg_union = in_anno.dg_union;
  for (const auto& ds : in_anno.ds_union) {
    std::vector<std::pair<int, int>> positions;
    for (const auto& e : ds.entries) {
      auto key = remap(e.key);
      if (!key)
        fail(Errc::UnderivableSharding,
             "split on dim " + std::to_string(e.key) +
                 " does not survive the reshape; insert a CommOp");
      positions.push_back({*key, e.count});
    }
    out.ds_union.push_back(build_spec(positions));
  }
  int hd = in_anno.effective_hdim();
  if (hd >= 0) {
    // Top-tier boundaries round against the concrete extent, so an HDim only
    // survives onto a dimension preserved one-to-one.
    bool preserved = false;
    for (const auto& s : *segs)
      if (s.in_lo == hd && s.in_hi == hd + 1 && s.out_hi - s.out_lo == 1)
        preserved = true;
    if (!preserved)
      fail(Errc::UnderivableSharding,
           "HDim " + std::to_string(hd) + " does not survive the reshape");
    auto key = remap(hd);
    out.hdim = *key;
    out.hsplit_ratios = in_anno.hsplit_ratios;
  } else {
    out.hdim = hd;
  }
  return out;
}

void check_static(const HetAnnotation& anno, const TensorRef& tensor) {
  auto issues = validate_structure(anno);
  if (!issues.empty()) throw Error(issues[0].code, issues[0].detail);
  const int ndim = static_cast<int>(tensor.shape.size());
  if (anno.effective_hdim() >= ndim)
    fail(Errc::BadSplitDim, "hdim " + std::to_string(anno.hdim) +
                                " out of range for tensor " + std::to_string(tensor.id));
  for (const auto& ds : anno.ds_union)
    for (const auto& e : ds.entries)
      if (e.key >= ndim)
        fail(Errc::BadSplitDim, "split dim " + std::to_string(e.key) +
                                    " out of range for tensor " +
                                    std::to_string(tensor.id));
}

}  // namespace

std::vector<HetAnnotation> unify_inputs(const std::vector<HetAnnotation>& annos) {
  if (annos.empty()) fail(Errc::DgUnionMismatch, "no input annotations");
  int max_h = 0;
  for (const auto& a : annos) max_h = std::max(max_h, a.hsize);
  std::vector<HetAnnotation> out;
  out.reserve(annos.size());
  for (const auto& a : annos) {
    try {
      out.push_back(convert_hsize(a, max_h));
    } catch (const Error& e) {
      if (e.code() == Errc::NotRefinable)
        fail(Errc::DgUnionMismatch,
             std::string("cannot unify to hsize ") + std::to_string(max_h) + ": " +
                 e.what() + "; insert a CommOp");
      throw;
    }
  }
  for (size_t i = 1; i < out.size(); ++i) {
    if (out[i].dg_union != out[0].dg_union)
      fail(Errc::DgUnionMismatch,
           "device group unions differ after conversion: " + out[0].str() + " vs " +
               out[i].str() + "; insert a CommOp");
  }
  return out;
}

std::vector<HetAnnotation> deduce_op(const CompGraph& graph, const OpNode& node,
                                     const std::vector<HetAnnotation>& input_annos) {
  switch (node.kind) {
    case OpKind::Elementwise:
      return {input_annos.at(0)};
    case OpKind::Dot: {
      int x_ndim = static_cast<int>(graph.tensor(node.inputs[0]).shape.size());
      return {deduce_dot(input_annos.at(0), input_annos.at(1), x_ndim)};
    }
    case OpKind::Sum:
      return {deduce_sum(input_annos.at(0), node.axis)};
    case OpKind::Reshape:
      return {deduce_reshape(input_annos.at(0), graph.tensor(node.inputs[0]).shape,
                             node.target)};
    default:
      fail(Errc::UnsupportedOp,
           std::string("no deduction rule for ") + op_kind_name(node.kind));
  }
}

void deduce_graph(CompGraph& graph, int strategy) {
  auto order = graph.topo_order();
  for (int id : order) {
    auto& node = graph.node(id);
    try {
      if (node.is_leaf() || node.kind == OpKind::CommOp) {
        const auto& slot = node.annotations.at(strategy);
        if (!slot)
          fail(Errc::UndeducedStrategy,
               std::string(op_kind_name(node.kind)) + " has no annotation for strategy " +
                   std::to_string(strategy));
        if (node.kind == OpKind::CommOp &&
            !graph.tensor(node.inputs[0]).slots.at(strategy))
          fail(Errc::UndeducedStrategy, "CommOp input not deduced");
        check_static(*slot, graph.tensor(node.outputs[0]));
        graph.tensor(node.outputs[0]).slots.at(strategy) = *slot;
        continue;
      }
      std::vector<HetAnnotation> inputs;
      for (int in : node.inputs) {
        const auto& slot = graph.tensor(in).slots.at(strategy);
        if (!slot) fail(Errc::UndeducedStrategy, "input tensor not deduced");
        inputs.push_back(*slot);
      }
      auto unified = unify_inputs(inputs);
      auto outputs = deduce_op(graph, node, unified);
      for (size_t i = 0; i < node.outputs.size(); ++i) {
        check_static(outputs.at(i), graph.tensor(node.outputs[i]));
        graph.tensor(node.outputs[i]).slots.at(strategy) = outputs.at(i);
      }
    } catch (const Error& e) {
      throw Error(e.code(), "node " + std::to_string(id) + ": " + e.what());
    }
  }
  graph.mark_deduced(strategy);
}

}  // namespace hshard
