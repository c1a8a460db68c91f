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

#include <functional>

#include "hshard/annotation.hpp"
#include "hshard/common.hpp"

namespace hshard {

// Dense row-major tensor. Values are held as doubles regardless of the dtype
// tag; integer dtypes stay exact at the magnitudes the simulator handles.
struct Tensor {
  Shape shape;
  DType dtype = DType::F64;
  std::vector<double> data;

  Tensor() = default;
  Tensor(Shape s, DType t);

  static Tensor zeros(Shape s, DType t = DType::F64);
  static Tensor filled(Shape s, double v, DType t = DType::F64);

  int64_t numel() const;
  int ndim() const { return static_cast<int>(shape.size()); }
  int64_t offset_of(const std::vector<int64_t>& idx) const;

  Tensor slice(const SliceRegion& region) const;
  void write_slice(const SliceRegion& region, const Tensor& value);
  void add_slice(const SliceRegion& region, const Tensor& value);

  bool bit_equal(const Tensor& o) const;
  double max_abs_diff(const Tensor& o) const;
  double max_rel_diff(const Tensor& o) const;

  Tensor& operator+=(const Tensor& o);
  std::string str() const;
};

// Enumerate all index tuples of a region in row-major order.
void for_each_cell(const SliceRegion& region,
                   const std::function<void(const std::vector<int64_t>&)>& fn);

int64_t shape_numel(const Shape& s);

}  // namespace hshard
