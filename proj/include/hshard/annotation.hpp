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

#include <array>
#include <optional>
#include <vector>

#include "hshard/common.hpp"

namespace hshard {

// Sharding keys. d >= 0 splits physical dim d, kDuplicate replicates,
// kPartial stores additive partial values.
inline constexpr int kDuplicate = -1;
inline constexpr int kPartial = -2;

struct DeviceGroup {
  std::vector<DeviceId> devices;

  DeviceGroup() = default;
  DeviceGroup(std::vector<DeviceId> d) : devices(std::move(d)) {}

  int size() const { return static_cast<int>(devices.size()); }
  bool contains(DeviceId d) const;
  // Position of d within the group, -1 if absent.
  int index_of(DeviceId d) const;
  bool operator==(const DeviceGroup&) const = default;
};

struct ShardEntry {
  int key = kDuplicate;
  int count = 1;
  bool operator==(const ShardEntry&) const = default;
};

// One DS: an ordered map from sharding key to shard count. Entry order fixes
// the row-major device decomposition, so it is semantically significant.
struct ShardSpec {
  std::vector<ShardEntry> entries;

  ShardSpec() = default;
  ShardSpec(std::initializer_list<ShardEntry> e) : entries(e) {}

  int64_t total() const;
  // Product of counts for `key` (unique in a valid spec); 1 if absent.
  int count_of(int key) const;
  bool has_key(int key) const { return count_of(key) > 1; }
  ShardSpec without_units() const;
  // Equality after eliding unit-count entries.
  bool same_states(const ShardSpec& o) const;
  std::string str() const;
};

// Half-open per-dimension interval box plus the bottom-tier duplicate/partial
// ordinals of the device holding it.
struct SliceRegion {
  std::vector<std::array<int64_t, 2>> bounds;
  int partial_index = 0;
  int partial_count = 1;
  int replica_index = 0;
  int replica_count = 1;

  int64_t cells() const;
  Shape extents() const;
  bool covers(const SliceRegion& inner) const;
  bool same_bounds(const SliceRegion& o) const { return bounds == o.bounds; }
  std::string str() const;

  static SliceRegion whole(const Shape& shape);
};

// Spatial intersection of two boxes; nullopt when empty.
std::optional<SliceRegion> intersect(const SliceRegion& a, const SliceRegion& b);

struct HetAnnotation {
  std::vector<DeviceGroup> dg_union;
  std::vector<ShardSpec> ds_union;
  int hdim = kDuplicate;
  int hsize = 1;
  // Empty means uniform. Present only for hdim >= 0.
  std::vector<Rational> hsplit_ratios;

  HetAnnotation() = default;
  // hsize-1 annotation: the top tier is vacuous.
  static HetAnnotation single(DeviceGroup group, ShardSpec ds);
  static HetAnnotation make(std::vector<DeviceGroup> groups,
                            std::vector<ShardSpec> specs, int hdim,
                            std::vector<Rational> ratios = {});

  // hsize == 1 annotations behave as hdim == -1 regardless of the stored
  // value (the declared hdim still directs convert_hsize).
  int effective_hdim() const { return hsize == 1 ? kDuplicate : hdim; }
  std::vector<Rational> effective_ratios() const;
  std::vector<DeviceId> all_devices() const;
  int subgroup_of(DeviceId d) const;  // -1 if absent
  bool contains(DeviceId d) const { return subgroup_of(d) >= 0; }
  bool has_partial() const;
  std::string str() const;
};

struct Issue {
  Errc code;
  std::string detail;
};

// Shape-independent invariants (group/spec cardinality, disjointness, ratios).
std::vector<Issue> validate_structure(const HetAnnotation& anno);
std::vector<Issue> validate(const HetAnnotation& anno, const Shape& shape);
void validate_or_throw(const HetAnnotation& anno, const Shape& shape);

// Top-tier slice of subgroup g (whole tensor when hdim is -1/-2).
SliceRegion subgroup_region(const HetAnnotation& anno, const Shape& shape, int g);
// Bottom-tier refinement: decompose `index` row-major over the DS entries and
// slice `base` accordingly. Duplicate/Partial digits land in the ordinals.
SliceRegion refine_region(const ShardSpec& ds, int index, SliceRegion base);
SliceRegion placement(const HetAnnotation& anno, const Shape& shape, DeviceId device);

HetAnnotation convert_hsize(const HetAnnotation& anno, int target);
bool annotations_equal(const HetAnnotation& a, const HetAnnotation& b);

// Common refinement of two DS entry lists over the same group size: both
// count sequences are cut at the union of their prefix products. Fails when
// the factorizations do not interleave integrally.
struct AlignedFactor {
  int key_a;
  int key_b;
  int count;
};
std::optional<std::vector<AlignedFactor>> align_shard_specs(const ShardSpec& a,
                                                            const ShardSpec& b);

}  // namespace hshard
