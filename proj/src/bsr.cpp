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
#include "hshard/bsr.hpp"

#include <algorithm>
#include <set>

namespace hshard {

double Bandwidth::get(DeviceId a, DeviceId b) const {
  auto it = links.find({std::min(a, b), std::max(a, b)});
  return it == links.end() ? default_bw : it->second;
}

void Bandwidth::set(DeviceId a, DeviceId b, double bw) {
  links[{std::min(a, b), std::max(a, b)}] = bw;
}

Bandwidth Bandwidth::uniform(double bw) {
  Bandwidth b;
  b.default_bw = bw;
  return b;
}

Bandwidth Bandwidth::two_tier(const std::map<DeviceId, int>& node_of, double intra,
                              double inter) {
  Bandwidth b;
  b.default_bw = inter;
  for (const auto& [d1, n1] : node_of)
    for (const auto& [d2, n2] : node_of)
      if (d1 < d2 && n1 == n2) b.set(d1, d2, intra);
  return b;
}

namespace {

void reject_partial(const HetAnnotation& anno, const char* side) {
  if (anno.has_partial())
    fail(Errc::PartialUnderBsr,
         std::string("batched send-receive cannot move Partial values (") + side +
             " " + anno.str() + ")");
}

std::vector<std::vector<int64_t>> grid_boundaries(
    const std::vector<SliceRegion>& regions, const SliceRegion& scope) {
  size_t ndim = scope.bounds.size();
  std::vector<std::set<int64_t>> cuts(ndim);
  for (size_t d = 0; d < ndim; ++d) {
    cuts[d].insert(scope.bounds[d][0]);
    cuts[d].insert(scope.bounds[d][1]);
  }
  for (const auto& r : regions)
    for (size_t d = 0; d < ndim; ++d) {
      for (int64_t v : {r.bounds[d][0], r.bounds[d][1]})
        if (v > scope.bounds[d][0] && v < scope.bounds[d][1]) cuts[d].insert(v);
    }
  std::vector<std::vector<int64_t>> out(ndim);
  for (size_t d = 0; d < ndim; ++d) out[d].assign(cuts[d].begin(), cuts[d].end());
  return out;
}

void enumerate_cells(const std::vector<std::vector<int64_t>>& boundaries,
                     const std::function<void(const SliceRegion&)>& fn) {
  size_t ndim = boundaries.size();
  std::vector<size_t> pos(ndim, 0);
  while (true) {
    SliceRegion cell;
    for (size_t d = 0; d < ndim; ++d)
      cell.bounds.push_back({boundaries[d][pos[d]], boundaries[d][pos[d] + 1]});
    fn(cell);
    size_t d = ndim;
    while (d > 0) {
      --d;
      if (++pos[d] + 1 < boundaries[d].size()) break;
      pos[d] = 0;
      if (d == 0) return;
    }
  }
}

}  // namespace

BsrTable build_table_scoped(const HetAnnotation& src, const HetAnnotation& dst,
                            const Shape& shape, int tensor_id, int elem_bytes,
                            const SliceRegion& scope,
                            const std::vector<DeviceId>& devices) {
  validate_or_throw(src, shape);
  validate_or_throw(dst, shape);

  // Scoped tables move one subgroup's own data, so only bottom-tier Partial
  // on an involved device is fatal here; build_table rejects the rest.
  std::map<DeviceId, SliceRegion> src_regions, dst_regions;
  std::vector<SliceRegion> all;
  for (DeviceId d : devices) {
    if (src.contains(d)) {
      src_regions.emplace(d, placement(src, shape, d));
      all.push_back(src_regions.at(d));
    }
    if (dst.contains(d)) {
      dst_regions.emplace(d, placement(dst, shape, d));
      all.push_back(dst_regions.at(d));
    }
  }
  for (const auto& r : all)
    if (r.partial_count > 1)
      fail(Errc::PartialUnderBsr,
           "batched send-receive cannot move Partial values");

  BsrTable table;
  auto boundaries = grid_boundaries(all, scope);
  enumerate_cells(boundaries, [&](const SliceRegion& cell) {
    BsrRow row;
    row.tensor_id = tensor_id;
    row.region = cell;
    row.bytes = cell.cells() * elem_bytes;
    for (const auto& [d, r] : src_regions)
      if (r.covers(cell)) row.owners.push_back(d);
    for (const auto& [d, r] : dst_regions)
      if (r.covers(cell)) row.requesters.push_back(d);
    table.rows.push_back(std::move(row));
  });
  return table;
}

BsrTable build_table(const HetAnnotation& src, const HetAnnotation& dst,
                     const Shape& shape, int tensor_id, int elem_bytes) {
  reject_partial(src, "src");
  reject_partial(dst, "dst");
  std::set<DeviceId> devices;
  for (DeviceId d : src.all_devices()) devices.insert(d);
  for (DeviceId d : dst.all_devices()) devices.insert(d);
  return build_table_scoped(src, dst, shape, tensor_id, elem_bytes,
                            SliceRegion::whole(shape),
                            {devices.begin(), devices.end()});
}

int64_t BsrPlan::total_bytes() const {
  int64_t sum = 0;
  for (const auto& t : transfers) sum += t.bytes;
  return sum;
}

std::map<DeviceId, int64_t> BsrPlan::send_load() const {
  std::map<DeviceId, int64_t> load;
  for (const auto& t : transfers) load[t.sender] += t.bytes;
  return load;
}

namespace {

void group_by_pair(BsrPlan& plan) {
  std::map<std::pair<DeviceId, DeviceId>, std::vector<int>> groups;
  for (size_t i = 0; i < plan.transfers.size(); ++i)
    groups[{plan.transfers[i].sender, plan.transfers[i].receiver}].push_back(
        static_cast<int>(i));
  for (auto& [pair, indices] : groups)
    plan.fusion_groups.push_back({pair.first, pair.second, std::move(indices)});
}

BsrPlan scan_rows(const std::vector<const BsrRow*>& rows, const Bandwidth* bandwidth,
                  bool naive) {
  BsrPlan plan;
  std::map<DeviceId, int64_t> load;
  for (const BsrRow* row : rows) {
    if (row->owners.empty() && !row->requesters.empty())
      fail(Errc::NoOwner, "slice " + row->region.str() + " of tensor " +
                              std::to_string(row->tensor_id) + " has no owner");
    auto owners = row->owners;
    std::sort(owners.begin(), owners.end());
    auto requesters = row->requesters;
    std::sort(requesters.begin(), requesters.end());
    for (DeviceId r : requesters) {
      if (std::binary_search(owners.begin(), owners.end(), r)) {
        plan.local_copies.push_back({r, row->tensor_id, row->region});
        continue;
      }
      // Owners scan ascending, so ties keep the lowest sender id.
      DeviceId best = owners.front();
      if (!naive) {
        for (DeviceId o : owners) {
          double bw_o = bandwidth->get(o, r), bw_b = bandwidth->get(best, r);
          if (bw_o > bw_b || (bw_o == bw_b && load[o] < load[best])) best = o;
        }
      }
      plan.transfers.push_back({row->tensor_id, row->region, best, r, row->bytes});
      load[best] += row->bytes;
    }
  }
  group_by_pair(plan);
  return plan;
}

std::vector<const BsrRow*> sorted_rows(const std::vector<BsrTable>& tables) {
  std::vector<const BsrRow*> rows;
  for (const auto& t : tables)
    for (const auto& r : t.rows) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const BsrRow* a, const BsrRow* b) {
    if (a->tensor_id != b->tensor_id) return a->tensor_id < b->tensor_id;
    return a->region.bounds < b->region.bounds;
  });
  return rows;
}

}  // namespace

BsrPlan make_plan(const BsrTable& table, const Bandwidth& bandwidth) {
  std::vector<const BsrRow*> rows;
  for (const auto& r : table.rows) rows.push_back(&r);
  return scan_rows(rows, &bandwidth, false);
}

BsrPlan make_plan_naive(const BsrTable& table) {
  std::vector<const BsrRow*> rows;
  for (const auto& r : table.rows) rows.push_back(&r);
  return scan_rows(rows, nullptr, true);
}

BsrPlan fuse(const std::vector<BsrTable>& tables, const Bandwidth& bandwidth) {
  std::set<int> ids;
  size_t per_table_sum = 0;
  for (const auto& t : tables) {
    std::set<int> local;
    for (const auto& r : t.rows) local.insert(r.tensor_id);
    per_table_sum += local.size();
    ids.insert(local.begin(), local.end());
  }
  if (per_table_sum != ids.size())
    fail(Errc::ParseError, "fused tables must cover disjoint tensor ids");
  return scan_rows(sorted_rows(tables), &bandwidth, false);
}

std::map<DeviceId, VolumeEntry> volume_report(const BsrPlan& plan,
                                              const std::map<DeviceId, int>& node_of) {
  std::map<DeviceId, VolumeEntry> report;
  for (const auto& [d, n] : node_of) report[d];  // all devices present, zeroed
  for (const auto& t : plan.transfers) {
    auto s = node_of.find(t.sender);
    auto r = node_of.find(t.receiver);
    if (s == node_of.end())
      fail(Errc::UnknownDevice, "sender " + std::to_string(t.sender) + " not in cluster");
    if (r == node_of.end())
      fail(Errc::UnknownDevice, "receiver " + std::to_string(t.receiver) + " not in cluster");
    if (s->second == r->second)
      report[t.sender].intra_bytes += t.bytes;
    else
      report[t.sender].inter_bytes += t.bytes;
  }
  return report;
}

}  // namespace hshard
