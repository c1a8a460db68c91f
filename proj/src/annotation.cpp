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
#include "hshard/annotation.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace hshard {

bool DeviceGroup::contains(DeviceId d) const {
  return std::find(devices.begin(), devices.end(), d) != devices.end();
}

int DeviceGroup::index_of(DeviceId d) const {
  auto it = std::find(devices.begin(), devices.end(), d);
  if (it == devices.end()) return -1;
  return static_cast<int>(it - devices.begin());
}

int64_t ShardSpec::total() const {
  int64_t p = 1;
  for (const auto& e : entries) p *= e.count;
  return p;
}

int ShardSpec::count_of(int key) const {
  int c = 1;
  for (const auto& e : entries)
    if (e.key == key) c *= e.count;
  return c;
}

ShardSpec ShardSpec::without_units() const {
  ShardSpec out;
  for (const auto& e : entries)
    if (e.count != 1) out.entries.push_back(e);
  return out;
}

bool ShardSpec::same_states(const ShardSpec& o) const {
  return without_units().entries == o.without_units().entries;
}

std::string ShardSpec::str() const {
  std::ostringstream os;
  os << "{";
  for (size_t i = 0; i < entries.size(); ++i) {
    if (i) os << ",";
    os << entries[i].key << ":" << entries[i].count;
  }
  os << "}";
  return os.str();
}

int64_t SliceRegion::cells() const {
  int64_t c = 1;
  for (const auto& b : bounds) c *= (b[1] - b[0]);
  return c;
}

Shape SliceRegion::extents() const {
  Shape s;
  for (const auto& b : bounds) s.push_back(b[1] - b[0]);
  return s;
}

bool SliceRegion::covers(const SliceRegion& inner) const {
  if (bounds.size() != inner.bounds.size()) return false;
  for (size_t i = 0; i < bounds.size(); ++i)
    if (inner.bounds[i][0] < bounds[i][0] || inner.bounds[i][1] > bounds[i][1])
      return false;
  return true;
}

std::string SliceRegion::str() const {
  std::ostringstream os;
  for (size_t i = 0; i < bounds.size(); ++i) {
    if (i) os << "x";
    os << "[" << bounds[i][0] << "," << bounds[i][1] << ")";
  }
  if (partial_count > 1) os << " partial " << partial_index << "/" << partial_count;
  if (replica_count > 1) os << " replica " << replica_index << "/" << replica_count;
  return os.str();
}

SliceRegion SliceRegion::whole(const Shape& shape) {
  SliceRegion r;
  for (int64_t s : shape) r.bounds.push_back({0, s});
  return r;
}

std::optional<SliceRegion> intersect(const SliceRegion& a, const SliceRegion& b) {
  if (a.bounds.size() != b.bounds.size()) return std::nullopt;
  SliceRegion out;
  for (size_t i = 0; i < a.bounds.size(); ++i) {
    int64_t lo = std::max(a.bounds[i][0], b.bounds[i][0]);
    int64_t hi = std::min(a.bounds[i][1], b.bounds[i][1]);
    if (lo >= hi) return std::nullopt;
    out.bounds.push_back({lo, hi});
  }
  return out;
}

HetAnnotation HetAnnotation::single(DeviceGroup group, ShardSpec ds) {
  HetAnnotation a;
  a.dg_union = {std::move(group)};
  a.ds_union = {std::move(ds)};
  a.hdim = kDuplicate;
  a.hsize = 1;
  return a;
}

HetAnnotation HetAnnotation::make(std::vector<DeviceGroup> groups,
                                  std::vector<ShardSpec> specs, int hdim,
                                  std::vector<Rational> ratios) {
  HetAnnotation a;
  a.hsize = static_cast<int>(groups.size());
  a.dg_union = std::move(groups);
  a.ds_union = std::move(specs);
  a.hdim = hdim;
  a.hsplit_ratios = std::move(ratios);
  return a;
}

std::vector<Rational> HetAnnotation::effective_ratios() const {
  if (!hsplit_ratios.empty()) return hsplit_ratios;
  std::vector<Rational> r(hsize, Rational(1, hsize));
  return r;
}

std::vector<DeviceId> HetAnnotation::all_devices() const {
  std::vector<DeviceId> out;
  for (const auto& g : dg_union)
    out.insert(out.end(), g.devices.begin(), g.devices.end());
  return out;
}

int HetAnnotation::subgroup_of(DeviceId d) const {
  for (size_t g = 0; g < dg_union.size(); ++g)
    if (dg_union[g].contains(d)) return static_cast<int>(g);
  return -1;
}

bool HetAnnotation::has_partial() const {
  if (effective_hdim() == kPartial) return true;
  for (const auto& ds : ds_union)
    if (ds.count_of(kPartial) > 1) return true;
  return false;
}

std::string HetAnnotation::str() const {
  std::ostringstream os;
  os << "hsize=" << hsize << " hdim=" << hdim << " [";
  for (int g = 0; g < hsize; ++g) {
    if (g) os << "; ";
    os << "(";
    for (size_t i = 0; i < dg_union[g].devices.size(); ++i) {
      if (i) os << ",";
      os << dg_union[g].devices[i];
    }
    os << ")" << ds_union[g].str();
  }
  os << "]";
  if (!hsplit_ratios.empty()) {
    os << " ratios=";
    for (size_t i = 0; i < hsplit_ratios.size(); ++i) {
      if (i) os << ",";
      os << hsplit_ratios[i].str();
    }
  }
  return os.str();
}

namespace {

void check_structure(const HetAnnotation& a, std::vector<Issue>& issues) {
  if (a.hsize < 1 || a.hsize != static_cast<int>(a.dg_union.size()) ||
      a.hsize != static_cast<int>(a.ds_union.size())) {
    issues.push_back({Errc::CardinalityMismatch,
                      "hsize must equal |dg_union| and |ds_union|"});
    return;
  }
  std::set<DeviceId> seen;
  for (int g = 0; g < a.hsize; ++g) {
    const auto& dg = a.dg_union[g];
    if (dg.devices.empty())
      issues.push_back({Errc::CardinalityMismatch,
                        "subgroup " + std::to_string(g) + " is empty"});
    std::set<DeviceId> local;
    for (DeviceId d : dg.devices) {
      if (d < 0)
        issues.push_back({Errc::CardinalityMismatch,
                          "negative device id " + std::to_string(d)});
      if (!local.insert(d).second)
        issues.push_back({Errc::CardinalityMismatch,
                          "duplicate device " + std::to_string(d) +
                              " in subgroup " + std::to_string(g)});
      if (!seen.insert(d).second)
        issues.push_back({Errc::OverlappingSubgroups,
                          "device " + std::to_string(d) +
                              " appears in multiple subgroups"});
    }
    const auto& ds = a.ds_union[g];
    std::set<int> keys;
    for (const auto& e : ds.entries) {
      if (e.count < 1)
        issues.push_back({Errc::CardinalityMismatch,
                          "non-positive shard count in subgroup " +
                              std::to_string(g)});
      if (e.key < kPartial)
        issues.push_back({Errc::BadSplitDim,
                          "unknown sharding key " + std::to_string(e.key)});
      if (!keys.insert(e.key).second)
        issues.push_back({Errc::BadSplitDim,
                          "key " + std::to_string(e.key) +
                              " repeated in subgroup " + std::to_string(g)});
    }
    if (ds.total() != dg.size())
      issues.push_back({Errc::CardinalityMismatch,
                        "subgroup " + std::to_string(g) + ": shard product " +
                            std::to_string(ds.total()) + " != group size " +
                            std::to_string(dg.size())});
  }
  if (!a.hsplit_ratios.empty()) {
    if (a.hdim < 0) {
      issues.push_back({Errc::BadRatios, "ratios given but hdim < 0"});
    } else if (static_cast<int>(a.hsplit_ratios.size()) != a.hsize) {
      issues.push_back({Errc::BadRatios, "ratio count != hsize"});
    } else {
      Rational sum(0);
      bool pos = true;
      for (const auto& r : a.hsplit_ratios) {
        if (!r.positive()) pos = false;
        sum = sum + r;
      }
      if (!pos) issues.push_back({Errc::BadRatios, "ratios must be positive"});
      if (!(sum == Rational(1)))
        issues.push_back({Errc::BadRatios, "ratios must sum to 1"});
    }
  }
}

}  // namespace

std::vector<Issue> validate_structure(const HetAnnotation& a) {
  std::vector<Issue> issues;
  check_structure(a, issues);
  return issues;
}

std::vector<Issue> validate(const HetAnnotation& a, const Shape& shape) {
  std::vector<Issue> issues = validate_structure(a);
  if (!issues.empty()) return issues;

  const int ndim = static_cast<int>(shape.size());
  if (a.effective_hdim() >= ndim)
    issues.push_back({Errc::BadSplitDim,
                      "hdim " + std::to_string(a.hdim) + " out of range for " +
                          std::to_string(ndim) + "-d tensor"});
  for (int g = 0; g < a.hsize; ++g) {
    for (const auto& e : a.ds_union[g].entries) {
      if (e.key >= ndim)
        issues.push_back({Errc::BadSplitDim,
                          "split dim " + std::to_string(e.key) +
                              " out of range in subgroup " + std::to_string(g)});
    }
  }
  if (!issues.empty()) return issues;

  for (int g = 0; g < a.hsize; ++g) {
    SliceRegion base = subgroup_region(a, shape, g);
    for (const auto& e : a.ds_union[g].entries) {
      if (e.key < 0) continue;
      int64_t extent = base.bounds[e.key][1] - base.bounds[e.key][0];
      if (extent % e.count != 0)
        issues.push_back({Errc::IndivisibleSplit,
                          "subgroup " + std::to_string(g) + ": dim " +
                              std::to_string(e.key) + " extent " +
                              std::to_string(extent) + " not divisible by " +
                              std::to_string(e.count)});
    }
  }
  return issues;
}

void validate_or_throw(const HetAnnotation& a, const Shape& shape) {
  auto issues = validate(a, shape);
  if (!issues.empty()) throw Error(issues[0].code, issues[0].detail + " (" + a.str() + ")");
}

SliceRegion subgroup_region(const HetAnnotation& a, const Shape& shape, int g) {
  SliceRegion r = SliceRegion::whole(shape);
  int hd = a.effective_hdim();
  if (hd < 0) return r;
  int64_t extent = shape[hd];
  auto ratios = a.effective_ratios();
  // Boundaries round down; the last subgroup absorbs the remainder.
  Rational lo_cum(0);
  for (int i = 0; i < g; ++i) lo_cum = lo_cum + ratios[i];
  Rational hi_cum = lo_cum + ratios[g];
  int64_t lo = lo_cum.floor_mul(extent);
  int64_t hi = (g == a.hsize - 1) ? extent : hi_cum.floor_mul(extent);
  r.bounds[hd] = {lo, hi};
  return r;
}

SliceRegion refine_region(const ShardSpec& ds, int index, SliceRegion base) {
  // Row-major decomposition: the first entry is the most significant digit.
  int64_t rem = index;
  std::vector<int> digits(ds.entries.size());
  for (int i = static_cast<int>(ds.entries.size()) - 1; i >= 0; --i) {
    digits[i] = static_cast<int>(rem % ds.entries[i].count);
    rem /= ds.entries[i].count;
  }
  for (size_t i = 0; i < ds.entries.size(); ++i) {
    const auto& e = ds.entries[i];
    if (e.key >= 0) {
      int64_t lo = base.bounds[e.key][0];
      int64_t extent = base.bounds[e.key][1] - lo;
      int64_t step = extent / e.count;
      base.bounds[e.key] = {lo + step * digits[i], lo + step * (digits[i] + 1)};
    } else if (e.key == kDuplicate) {
      base.replica_index = base.replica_index * e.count + digits[i];
      base.replica_count *= e.count;
    } else {
      base.partial_index = base.partial_index * e.count + digits[i];
      base.partial_count *= e.count;
    }
  }
  return base;
}

SliceRegion placement(const HetAnnotation& a, const Shape& shape, DeviceId device) {
  validate_or_throw(a, shape);
  int g = a.subgroup_of(device);
  if (g < 0)
    fail(Errc::DeviceNotInAnnotation,
         "device " + std::to_string(device) + " not in " + a.str());
  SliceRegion base = subgroup_region(a, shape, g);
  return refine_region(a.ds_union[g], a.dg_union[g].index_of(device), base);
}

HetAnnotation convert_hsize(const HetAnnotation& a, int target) {
  if (target == a.hsize) return a;
  if (target < a.hsize || target % a.hsize != 0)
    fail(Errc::NotRefinable,
         "target hsize " + std::to_string(target) + " is not a multiple of " +
             std::to_string(a.hsize));
  int k = target / a.hsize;
  auto issues = validate_structure(a);
  if (!issues.empty()) throw Error(issues[0].code, issues[0].detail);
  // Peel the bottom-tier key matching the declared hdim into the top tier.
  int key = a.hdim;
  HetAnnotation out;
  out.hsize = target;
  out.hdim = a.hdim;
  for (int g = 0; g < a.hsize; ++g) {
    const auto& ds = a.ds_union[g];
    const auto& dg = a.dg_union[g];
    int c = ds.count_of(key);
    if (c % k != 0)
      fail(Errc::NotRefinable, "subgroup " + std::to_string(g) + ": key " +
                                   std::to_string(key) + " count " +
                                   std::to_string(c) + " not divisible by " +
                                   std::to_string(k));
    // Sub-shard by the major factor of the matching entry's digit.
    int minor = c / k;
    std::vector<DeviceGroup> parts(k);
    size_t entry_pos = ds.entries.size();
    for (size_t i = 0; i < ds.entries.size(); ++i)
      if (ds.entries[i].key == key) entry_pos = i;
    for (int i = 0; i < dg.size(); ++i) {
      int64_t rem = i;
      int digit = 0;
      for (int j = static_cast<int>(ds.entries.size()) - 1; j >= 0; --j) {
        int d = static_cast<int>(rem % ds.entries[j].count);
        rem /= ds.entries[j].count;
        if (static_cast<size_t>(j) == entry_pos) digit = d;
      }
      parts[digit / minor].devices.push_back(dg.devices[i]);
    }
    ShardSpec sub;
    for (size_t i = 0; i < ds.entries.size(); ++i) {
      int count = ds.entries[i].count;
      if (i == entry_pos) count = minor;
      if (count != 1) sub.entries.push_back({ds.entries[i].key, count});
    }
    for (int t = 0; t < k; ++t) {
      out.dg_union.push_back(parts[t]);
      out.ds_union.push_back(sub);
    }
  }
  if (a.hdim >= 0) {
    auto ratios = a.effective_ratios();
    bool uniform = a.hsplit_ratios.empty();
    if (!uniform) {
      for (const auto& r : ratios)
        for (int t = 0; t < k; ++t)
          out.hsplit_ratios.push_back(r / Rational(k));
    }
  }
  return out;
}

bool annotations_equal(const HetAnnotation& a, const HetAnnotation& b) {
  if (a.hsize != b.hsize) return false;
  if (a.effective_hdim() != b.effective_hdim()) return false;
  if (a.dg_union.size() != b.dg_union.size()) return false;
  for (size_t g = 0; g < a.dg_union.size(); ++g) {
    if (!(a.dg_union[g] == b.dg_union[g])) return false;
    if (!a.ds_union[g].same_states(b.ds_union[g])) return false;
  }
  if (a.effective_hdim() >= 0 && a.effective_ratios() != b.effective_ratios())
    return false;
  return true;
}

std::optional<std::vector<AlignedFactor>> align_shard_specs(const ShardSpec& a,
                                                            const ShardSpec& b) {
  ShardSpec na = a.without_units();
  ShardSpec nb = b.without_units();
  if (na.total() != nb.total()) return std::nullopt;
  // Prefix products of both count sequences, merged.
  std::set<int64_t> cuts;
  int64_t p = 1;
  cuts.insert(1);
  for (const auto& e : na.entries) cuts.insert(p *= e.count);
  p = 1;
  for (const auto& e : nb.entries) cuts.insert(p *= e.count);

  auto segment_keys = [](const ShardSpec& s, const std::set<int64_t>& cuts,
                         std::vector<int>& keys_out) -> bool {
    int64_t start = 1;
    for (const auto& e : s.entries) {
      int64_t end = start * e.count;
      int64_t prev = start;
      for (auto it = cuts.upper_bound(start); it != cuts.end() && *it <= end; ++it) {
        if (*it % prev != 0) return false;
        keys_out.push_back(e.key);
        prev = *it;
      }
      if (prev != end) return false;
      start = end;
    }
    return true;
  };

  std::vector<int> keys_a, keys_b;
  if (!segment_keys(na, cuts, keys_a)) return std::nullopt;
  if (!segment_keys(nb, cuts, keys_b)) return std::nullopt;
  std::vector<AlignedFactor> out;
  int64_t prev = 1;
  size_t i = 0;
  for (auto it = std::next(cuts.begin()); it != cuts.end(); ++it, ++i) {
    out.push_back({keys_a[i], keys_b[i], static_cast<int>(*it / prev)});
    prev = *it;
  }
  return out;
}

}  // namespace hshard
