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

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace hshard {

using DeviceId = int;
using Shape = std::vector<int64_t>;

enum class DType { F32, F64, I32, I64 };

int dtype_width(DType dtype);
const char* dtype_name(DType dtype);
DType dtype_from_name(const std::string& name);

enum class Errc {
  // annotation
  OverlappingSubgroups,
  CardinalityMismatch,
  BadSplitDim,
  IndivisibleSplit,
  BadRatios,
  DeviceNotInAnnotation,
  NotRefinable,
  // graph
  InexactDivision,
  MissingSymbol,
  NonPositive,
  CycleDetected,
  // deduction
  DgUnionMismatch,
  UnderivableSharding,
  // resolve
  PartialUnderBsr,
  UnsupportedHdimTransition,
  // bsr
  NoOwner,
  UnknownDevice,
  // specialize
  ConflictingStageOrder,
  SymbolBindingError,
  // sim
  ShapeMismatch,
  DeadlockDetected,
  ReplicaDivergence,
  MissingShard,
  UnsupportedOp,
  // switch
  UndeducedStrategy,
  // i/o
  ParseError,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

// Exact rational arithmetic for split ratios and symbolic dim scaling.
struct Rational {
  int64_t num = 0;
  int64_t den = 1;

  Rational() = default;
  Rational(int64_t n) : num(n), den(1) {}
  Rational(int64_t n, int64_t d);

  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  Rational operator*(const Rational& o) const;
  Rational operator/(const Rational& o) const;
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
  bool operator!=(const Rational& o) const { return !(*this == o); }
  bool operator<(const Rational& o) const;

  bool is_integer() const { return den == 1; }
  bool positive() const { return num > 0; }
  // floor(this * x), exact in integer arithmetic
  int64_t floor_mul(int64_t x) const;
  std::string str() const;
  static Rational parse(const std::string& text);
};

std::string join_ints(const std::vector<int64_t>& v, const std::string& sep = ",");

}  // namespace hshard
