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
#include "hshard/resolve.hpp"

#include <algorithm>
#include <set>

namespace hshard {

const char* step_kind_name(StepKind k) {
  switch (k) {
    case StepKind::Identity: return "Identity";
    case StepKind::SendRecv: return "SendRecv";
    case StepKind::AllReduce: return "AllReduce";
    case StepKind::ReduceScatter: return "ReduceScatter";
    case StepKind::AllGather: return "AllGather";
    case StepKind::SplitAllReduce: return "SplitAllReduce";
    case StepKind::SplitReduceScatter: return "SplitReduceScatter";
    case StepKind::SplitAllGather: return "SplitAllGather";
    case StepKind::Bsr: return "Bsr";
  }
  return "?";
}

StepKind step_kind_from_name(const std::string& name) {
  for (StepKind k : {StepKind::Identity, StepKind::SendRecv, StepKind::AllReduce,
                     StepKind::ReduceScatter, StepKind::AllGather,
                     StepKind::SplitAllReduce, StepKind::SplitReduceScatter,
                     StepKind::SplitAllGather, StepKind::Bsr})
    if (name == step_kind_name(k)) return k;
  fail(Errc::ParseError, "unknown step kind '" + name + "'");
}

bool is_collective(StepKind k) {
  switch (k) {
    case StepKind::AllReduce:
    case StepKind::ReduceScatter:
    case StepKind::AllGather:
    case StepKind::SplitAllReduce:
    case StepKind::SplitReduceScatter:
    case StepKind::SplitAllGather:
      return true;
    default:
      return false;
  }
}

std::vector<DeviceId> SliceCollective::group() const {
  std::set<DeviceId> s(contributors.begin(), contributors.end());
  s.insert(receivers.begin(), receivers.end());
  return {s.begin(), s.end()};
}

std::vector<DeviceId> CommStep::participants() const {
  std::set<DeviceId> s;
  for (const auto& g : groups) s.insert(g.begin(), g.end());
  for (const auto& [a, b] : pairs) {
    s.insert(a);
    s.insert(b);
  }
  for (const auto& sc : slices) {
    s.insert(sc.contributors.begin(), sc.contributors.end());
    s.insert(sc.receivers.begin(), sc.receivers.end());
  }
  if (bsr) {
    for (const auto& t : bsr->transfers) {
      s.insert(t.sender);
      s.insert(t.receiver);
    }
    for (const auto& c : bsr->local_copies) s.insert(c.device);
  }
  return {s.begin(), s.end()};
}

bool CommStep::touches(DeviceId d) const {
  auto p = participants();
  return std::binary_search(p.begin(), p.end(), d);
}

std::vector<DeviceId> CommPlan::participants() const {
  std::set<DeviceId> s;
  for (DeviceId d : src.all_devices()) s.insert(d);
  for (DeviceId d : dst.all_devices()) s.insert(d);
  return {s.begin(), s.end()};
}

namespace {

// Devices of `dg` bucketed by the digits of the entries flagged `keep`,
// ordered within each bucket by the remaining (changing) digits.
std::vector<std::vector<DeviceId>> bucket_devices(const DeviceGroup& dg,
                                                  const std::vector<int>& counts,
                                                  const std::vector<bool>& keep) {
  std::map<std::vector<int>, std::vector<std::pair<int64_t, DeviceId>>> buckets;
  for (int i = 0; i < dg.size(); ++i) {
    int64_t rem = i;
    std::vector<int> digits(counts.size());
    for (int j = static_cast<int>(counts.size()) - 1; j >= 0; --j) {
      digits[j] = static_cast<int>(rem % counts[j]);
      rem /= counts[j];
    }
    std::vector<int> fixed;
    int64_t changing = 0;
    for (size_t j = 0; j < counts.size(); ++j) {
      if (keep[j])
        fixed.push_back(digits[j]);
      else
        changing = changing * counts[j] + digits[j];
    }
    buckets[fixed].push_back({changing, dg.devices[i]});
  }
  std::vector<std::vector<DeviceId>> out;
  for (auto& [fixed, members] : buckets) {
    std::sort(members.begin(), members.end());
    std::vector<DeviceId> ids;
    for (const auto& [ord, d] : members) ids.push_back(d);
    out.push_back(std::move(ids));
  }
  return out;
}

}  // namespace

CommStep bottom_resolve(const ShardSpec& src_ds, const ShardSpec& dst_ds,
                        const DeviceGroup& src_dg, const DeviceGroup& dst_dg) {
  CommStep step;
  if (src_ds.same_states(dst_ds)) {
    if (src_dg == dst_dg) {
      step.kind = StepKind::Identity;
      return step;
    }
    if (src_dg.size() != dst_dg.size())
      fail(Errc::ShapeMismatch, "equal states over groups of different size");
    step.kind = StepKind::SendRecv;
    for (int i = 0; i < src_dg.size(); ++i)
      step.pairs.push_back({src_dg.devices[i], dst_dg.devices[i]});
    return step;
  }
  if (src_dg == dst_dg) {
    auto aligned = align_shard_specs(src_ds, dst_ds);
    if (aligned) {
      bool ar = true, rs = true, ag = true;
      std::vector<int> counts;
      std::vector<bool> keep;
      bool any_change = false;
      for (const auto& f : *aligned) {
        counts.push_back(f.count);
        bool changed = f.key_a != f.key_b;
        keep.push_back(!changed);
        if (!changed) continue;
        any_change = true;
        if (!(f.key_a == kPartial && f.key_b == kDuplicate)) ar = false;
        if (!(f.key_a == kPartial && f.key_b >= 0)) rs = false;
        if (!(f.key_a >= 0 && f.key_b == kDuplicate)) ag = false;
      }
      if (any_change && (ar || rs || ag)) {
        step.kind = ar ? StepKind::AllReduce
                       : (rs ? StepKind::ReduceScatter : StepKind::AllGather);
        step.groups = bucket_devices(src_dg, counts, keep);
        return step;
      }
    }
  }
  step.kind = StepKind::Bsr;
  return step;
}

CommStep top_resolve(const HetAnnotation& src, const HetAnnotation& dst,
                     const Shape& shape) {
  validate_or_throw(src, shape);
  validate_or_throw(dst, shape);
  if (src.hsize != dst.hsize || src.dg_union != dst.dg_union)
    fail(Errc::UnsupportedHdimTransition,
         "top-tier resolution requires equal hsize and identical DG unions");
  for (int g = 0; g < src.hsize; ++g)
    if (!src.ds_union[g].same_states(dst.ds_union[g]))
      fail(Errc::UnsupportedHdimTransition,
           "top-tier resolution requires element-wise equal DS unions");

  int hs = src.effective_hdim();
  int hd = dst.effective_hdim();
  CommStep step;
  if (hs == kPartial && hd == kDuplicate)
    step.kind = StepKind::SplitAllReduce;
  else if (hs == kPartial && hd >= 0)
    step.kind = StepKind::SplitReduceScatter;
  else if (hs >= 0 && hd == kDuplicate)
    step.kind = StepKind::SplitAllGather;
  else
    fail(Errc::UnsupportedHdimTransition,
         "no split-collective for HDim " + std::to_string(hs) + " -> " +
             std::to_string(hd));

  // Superpose every device's src and dst boundaries into the finest grid.
  std::map<DeviceId, SliceRegion> src_reg, dst_reg;
  std::vector<SliceRegion> all;
  for (DeviceId d : src.all_devices()) {
    src_reg.emplace(d, placement(src, shape, d));
    dst_reg.emplace(d, placement(dst, shape, d));
    all.push_back(src_reg.at(d));
    all.push_back(dst_reg.at(d));
  }
  std::vector<std::set<int64_t>> cuts(shape.size());
  for (size_t dim = 0; dim < shape.size(); ++dim) {
    cuts[dim].insert(0);
    cuts[dim].insert(shape[dim]);
    for (const auto& r : all) {
      cuts[dim].insert(r.bounds[dim][0]);
      cuts[dim].insert(r.bounds[dim][1]);
    }
  }
  std::vector<std::vector<int64_t>> bounds;
  for (auto& c : cuts) bounds.emplace_back(c.begin(), c.end());

  std::vector<size_t> pos(shape.size(), 0);
  bool done = shape.empty();
  while (!done) {
    SliceCollective sc;
    for (size_t dim = 0; dim < shape.size(); ++dim)
      sc.region.bounds.push_back({bounds[dim][pos[dim]], bounds[dim][pos[dim] + 1]});

    // Contributors: per subgroup (AG: the one owning the slice) and per
    // bottom partial piece, the lowest-id covering device.
    for (int g = 0; g < src.hsize; ++g) {
      bool src_side = true;
      if (step.kind == StepKind::SplitAllGather) {
        SliceRegion top = subgroup_region(src, shape, g);
        src_side = top.covers(sc.region);
      }
      if (!src_side) continue;
      std::map<int, DeviceId> reps;  // partial ordinal -> representative
      for (DeviceId d : src.dg_union[g].devices) {
        const auto& r = src_reg.at(d);
        if (!r.covers(sc.region)) continue;
        auto it = reps.find(r.partial_index);
        if (it == reps.end() || d < it->second) reps[r.partial_index] = d;
      }
      for (const auto& [ord, d] : reps) sc.contributors.push_back(d);
    }
    for (const auto& [d, r] : dst_reg)
      if (r.covers(sc.region)) sc.receivers.push_back(d);
    std::sort(sc.receivers.begin(), sc.receivers.end());
    step.slices.push_back(std::move(sc));

    size_t dim = shape.size();
    while (dim > 0) {
      --dim;
      if (++pos[dim] + 1 < bounds[dim].size()) break;
      pos[dim] = 0;
      if (dim == 0) done = true;
    }
  }
  return step;
}

namespace {

bool ratios_match(const HetAnnotation& a, const HetAnnotation& b) {
  if (a.effective_hdim() < 0) return true;
  return a.effective_ratios() == b.effective_ratios();
}

void reject_partial_pair(const HetAnnotation& src, const HetAnnotation& dst) {
  if (src.has_partial() || dst.has_partial())
    fail(Errc::PartialUnderBsr,
         "batched send-receive cannot move Partial values (src " + src.str() +
             ", dst " + dst.str() + ")");
}

CommStep global_bsr_step(const HetAnnotation& src, const HetAnnotation& dst,
                         const Shape& shape, DType dtype, const Bandwidth& bw) {
  reject_partial_pair(src, dst);
  CommStep step;
  step.kind = StepKind::Bsr;
  auto table = build_table(src, dst, shape, /*tensor_id=*/0, dtype_width(dtype));
  step.bsr = make_plan(table, bw);
  return step;
}

bool top_transition_supported(int hs, int hd) {
  if (hs == kPartial && hd == kDuplicate) return true;
  if (hs == kPartial && hd >= 0) return true;
  if (hs >= 0 && hd == kDuplicate) return true;
  return false;
}

}  // namespace

CommPlan classify(const HetAnnotation& src, const HetAnnotation& dst,
                  const Shape& shape, DType dtype, const Bandwidth& bandwidth) {
  validate_or_throw(src, shape);
  validate_or_throw(dst, shape);

  CommPlan plan;
  plan.src = src;
  plan.dst = dst;
  plan.shape = shape;
  plan.dtype = dtype;

  const int hs = src.effective_hdim();
  const int hd = dst.effective_hdim();

  // (a) Top tier unchanged: every subgroup aligns independently.
  if (src.hsize == dst.hsize && hs == hd && ratios_match(src, dst)) {
    for (int g = 0; g < src.hsize; ++g) {
      CommStep step = bottom_resolve(src.ds_union[g], dst.ds_union[g],
                                     src.dg_union[g], dst.dg_union[g]);
      step.subgroup = g;
      if (step.kind == StepKind::Bsr) {
        HetAnnotation sub_src = src;
        HetAnnotation sub_dst = dst;
        if (sub_src.ds_union[g].count_of(kPartial) > 1 ||
            sub_dst.ds_union[g].count_of(kPartial) > 1)
          fail(Errc::PartialUnderBsr,
               "subgroup " + std::to_string(g) +
                   " transition falls through to batched send-receive with Partial");
        SliceRegion scope = subgroup_region(src, shape, g);
        std::set<DeviceId> devs(src.dg_union[g].devices.begin(),
                                src.dg_union[g].devices.end());
        devs.insert(dst.dg_union[g].devices.begin(), dst.dg_union[g].devices.end());
        auto table = build_table_scoped(sub_src, sub_dst, shape, 0,
                                        dtype_width(dtype), scope,
                                        {devs.begin(), devs.end()});
        step.bsr = make_plan(table, bandwidth);
      }
      plan.bottom_phase.push_back(std::move(step));
    }
    return plan;
  }

  // (b) HDim-only change over identical DG unions: split-collectives,
  //     preceded by per-subgroup alignment to the destination DS when needed.
  if (src.hsize == dst.hsize && hs != hd && src.dg_union == dst.dg_union &&
      top_transition_supported(hs, hd)) {
    bool ds_equal = true;
    for (int g = 0; g < src.hsize; ++g)
      if (!src.ds_union[g].same_states(dst.ds_union[g])) ds_equal = false;
    HetAnnotation mid = src;
    if (!ds_equal) {
      mid.ds_union = dst.ds_union;
      for (int g = 0; g < src.hsize; ++g) {
        CommStep step = bottom_resolve(src.ds_union[g], mid.ds_union[g],
                                       src.dg_union[g], mid.dg_union[g]);
        step.subgroup = g;
        if (step.kind == StepKind::Bsr) {
          if (src.ds_union[g].count_of(kPartial) > 1 ||
              mid.ds_union[g].count_of(kPartial) > 1)
            fail(Errc::PartialUnderBsr,
                 "subgroup " + std::to_string(g) +
                     " alignment falls through to batched send-receive with Partial");
          SliceRegion scope = subgroup_region(src, shape, g);
          auto table = build_table_scoped(src, mid, shape, 0, dtype_width(dtype),
                                          scope, src.dg_union[g].devices);
          step.bsr = make_plan(table, bandwidth);
        }
        plan.bottom_phase.push_back(std::move(step));
      }
      plan.mid = mid;
    }
    plan.top_phase.push_back(top_resolve(plan.mid ? *plan.mid : src, dst, shape));
    return plan;
  }

  // (c) Everything else: one global batched send-receive.
  plan.bottom_phase.push_back(global_bsr_step(src, dst, shape, dtype, bandwidth));
  return plan;
}

}  // namespace hshard
