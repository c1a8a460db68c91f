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
#include "hshard/tensor.hpp"

#include <cmath>
#include <sstream>

namespace hshard {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

Tensor::Tensor(Shape s, DType t) : shape(std::move(s)), dtype(t) {
  data.assign(shape_numel(shape), 0.0);
}

Tensor Tensor::zeros(Shape s, DType t) { return Tensor(std::move(s), t); }

Tensor Tensor::filled(Shape s, double v, DType t) {
  Tensor out(std::move(s), t);
  std::fill(out.data.begin(), out.data.end(), v);
  return out;
}

int64_t Tensor::numel() const { return static_cast<int64_t>(data.size()); }

int64_t Tensor::offset_of(const std::vector<int64_t>& idx) const {
  int64_t off = 0;
  for (size_t i = 0; i < shape.size(); ++i) off = off * shape[i] + idx[i];
  return off;
}

namespace {

void check_region(const Tensor& t, const SliceRegion& region) {
  if (static_cast<int>(region.bounds.size()) != t.ndim())
    fail(Errc::ShapeMismatch, "region rank " + std::to_string(region.bounds.size()) +
                                  " vs tensor rank " + std::to_string(t.ndim()));
  for (size_t i = 0; i < region.bounds.size(); ++i) {
    if (region.bounds[i][0] < 0 || region.bounds[i][1] > t.shape[i] ||
        region.bounds[i][0] >= region.bounds[i][1])
      fail(Errc::ShapeMismatch, "region " + region.str() + " out of bounds");
  }
}

}  // namespace

void for_each_cell(const SliceRegion& region,
                   const std::function<void(const std::vector<int64_t>&)>& fn) {
  const size_t n = region.bounds.size();
  std::vector<int64_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = region.bounds[i][0];
  if (n == 0) {
    fn(idx);
    return;
  }
  while (true) {
    fn(idx);
    size_t d = n;
    while (d > 0) {
      --d;
      if (++idx[d] < region.bounds[d][1]) break;
      idx[d] = region.bounds[d][0];
      if (d == 0) return;
    }
  }
}

Tensor Tensor::slice(const SliceRegion& region) const {
  check_region(*this, region);
  Tensor out(region.extents(), dtype);
  int64_t pos = 0;
  for_each_cell(region, [&](const std::vector<int64_t>& idx) {
    out.data[pos++] = data[offset_of(idx)];
  });
  return out;
}

void Tensor::write_slice(const SliceRegion& region, const Tensor& value) {
  check_region(*this, region);
  if (value.shape != region.extents())
    fail(Errc::ShapeMismatch,
         "payload shape [" + join_ints(value.shape) + "] vs region " + region.str());
  int64_t pos = 0;
  for_each_cell(region, [&](const std::vector<int64_t>& idx) {
    data[offset_of(idx)] = value.data[pos++];
  });
}

void Tensor::add_slice(const SliceRegion& region, const Tensor& value) {
  check_region(*this, region);
  if (value.shape != region.extents())
    fail(Errc::ShapeMismatch,
         "payload shape [" + join_ints(value.shape) + "] vs region " + region.str());
  int64_t pos = 0;
  for_each_cell(region, [&](const std::vector<int64_t>& idx) {
    data[offset_of(idx)] += value.data[pos++];
  });
}

bool Tensor::bit_equal(const Tensor& o) const {
  return shape == o.shape && data == o.data;
}

double Tensor::max_abs_diff(const Tensor& o) const {
  if (shape != o.shape) fail(Errc::ShapeMismatch, "max_abs_diff on mismatched shapes");
  double m = 0;
  for (size_t i = 0; i < data.size(); ++i)
    m = std::max(m, std::fabs(data[i] - o.data[i]));
  return m;
}

double Tensor::max_rel_diff(const Tensor& o) const {
  if (shape != o.shape) fail(Errc::ShapeMismatch, "max_rel_diff on mismatched shapes");
  double m = 0;
  for (size_t i = 0; i < data.size(); ++i) {
    double denom = std::max({std::fabs(data[i]), std::fabs(o.data[i]), 1.0});
    m = std::max(m, std::fabs(data[i] - o.data[i]) / denom);
  }
  return m;
}

Tensor& Tensor::operator+=(const Tensor& o) {
  if (shape != o.shape) fail(Errc::ShapeMismatch, "accumulate on mismatched shapes");
  for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
  return *this;
}

std::string Tensor::str() const {
  std::ostringstream os;
  os << dtype_name(dtype) << "[" << join_ints(shape) << "]{";
  for (size_t i = 0; i < data.size() && i < 16; ++i) {
    if (i) os << ",";
    os << data[i];
  }
  if (data.size() > 16) os << ",...";
  os << "}";
  return os.str();
}

}  // namespace hshard
