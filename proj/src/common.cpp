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
#include "hshard/common.hpp"

#include <numeric>
#include <sstream>

namespace hshard {

int dtype_width(DType dtype) {
  switch (dtype) {
    case DType::F32: return 4;
    case DType::F64: return 8;
    case DType::I32: return 4;
    case DType::I64: return 8;
  }
  return 4;
}

const char* dtype_name(DType dtype) {
  switch (dtype) {
    case DType::F32: return "f32";
    case DType::F64: return "f64";
    case DType::I32: return "i32";
    case DType::I64: return "i64";
  }
  return "f32";
}

DType dtype_from_name(const std::string& name) {
  if (name == "f32") return DType::F32;
  if (name == "f64") return DType::F64;
  if (name == "i32") return DType::I32;
  if (name == "i64") return DType::I64;
  fail(Errc::ParseError, "unknown dtype '" + name + "'");
}

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::OverlappingSubgroups: return "OverlappingSubgroups";
    case Errc::CardinalityMismatch: return "CardinalityMismatch";
    case Errc::BadSplitDim: return "BadSplitDim";
    case Errc::IndivisibleSplit: return "IndivisibleSplit";
    case Errc::BadRatios: return "BadRatios";
    case Errc::DeviceNotInAnnotation: return "DeviceNotInAnnotation";
    case Errc::NotRefinable: return "NotRefinable";
    case Errc::InexactDivision: return "InexactDivision";
    case Errc::MissingSymbol: return "MissingSymbol";
    case Errc::NonPositive: return "NonPositive";
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::DgUnionMismatch: return "DgUnionMismatch";
    case Errc::UnderivableSharding: return "UnderivableSharding";
    case Errc::PartialUnderBsr: return "PartialUnderBsr";
    case Errc::UnsupportedHdimTransition: return "UnsupportedHdimTransition";
    case Errc::NoOwner: return "NoOwner";
    case Errc::UnknownDevice: return "UnknownDevice";
    case Errc::ConflictingStageOrder: return "ConflictingStageOrder";
    case Errc::SymbolBindingError: return "SymbolBindingError";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::DeadlockDetected: return "DeadlockDetected";
    case Errc::ReplicaDivergence: return "ReplicaDivergence";
    case Errc::MissingShard: return "MissingShard";
    case Errc::UnsupportedOp: return "UnsupportedOp";
    case Errc::UndeducedStrategy: return "UndeducedStrategy";
    case Errc::ParseError: return "ParseError";
  }
  return "UnknownError";
}

Rational::Rational(int64_t n, int64_t d) : num(n), den(d) {
  if (den == 0) fail(Errc::ParseError, "rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  int64_t g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

Rational Rational::operator+(const Rational& o) const {
  return Rational(num * o.den + o.num * den, den * o.den);
}

Rational Rational::operator-(const Rational& o) const {
  return Rational(num * o.den - o.num * den, den * o.den);
}

Rational Rational::operator*(const Rational& o) const {
  return Rational(num * o.num, den * o.den);
}

Rational Rational::operator/(const Rational& o) const {
  if (o.num == 0) fail(Errc::ParseError, "rational division by zero");
  return Rational(num * o.den, den * o.num);
}

bool Rational::operator<(const Rational& o) const {
  return num * o.den < o.num * den;
}

int64_t Rational::floor_mul(int64_t x) const {
  int64_t p = num * x;
  int64_t q = p / den;
  if (p % den != 0 && ((p < 0) != (den < 0))) --q;
  return q;
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

Rational Rational::parse(const std::string& text) {
  auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return Rational(std::stoll(text));
    return Rational(std::stoll(text.substr(0, slash)),
                    std::stoll(text.substr(slash + 1)));
  } catch (const std::exception&) {
    fail(Errc::ParseError, "bad rational '" + text + "'");
  }
}

std::string join_ints(const std::vector<int64_t>& v, const std::string& sep) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) os << sep;
    os << v[i];
  }
  return os.str();
}

}  // namespace hshard
