#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynext/expr.hpp"

namespace dynext {

// 128-bit binary float used for all numeric decisions.
using F = boost::multiprecision::cpp_bin_float_quad;

// Relative tolerance separating exact zeros from generic nonzeros.
inline const F kZeroTol = F("1e-20");

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what, std::string subexpr_ = "")
      : std::runtime_error(what), subexpr(std::move(subexpr_)) {}
  std::string subexpr;
};

struct UnknownSymbolError : std::runtime_error {
  explicit UnknownSymbolError(const std::string& symbol)
      : std::runtime_error("unknown symbol: " + symbol), name(symbol) {}
  std::string name;
};

struct SamplingExhausted : std::runtime_error {
  explicit SamplingExhausted(const std::string& what) : std::runtime_error(what) {}
};

struct GenericityError : std::runtime_error {
  explicit GenericityError(const std::string& what) : std::runtime_error(what) {}
};

// Assignment of exact rational values to symbols.
using SamplePoint = std::map<std::string, Q>;

struct EvalResult {
  F value;
  F magnitude;  // cancellation scale: max absolute value over monomial subterms
};

EvalResult evaluate_scaled(const Expr& e, const SamplePoint& p);
F evaluate(const Expr& e, const SamplePoint& p);

// Deterministic stream of rational sample points. The value assigned to a
// symbol depends only on (seed, symbol name, point index, retry index), so
// every decision is reproducible regardless of call order or thread count.
struct Sampler {
  uint64_t seed = 20260810;
  int n_points = 8;
  int retry_limit = 32;
  long long denom_max = 64;
  long long range = 3;  // values drawn from [-range, range]

  Q coordinate(const std::string& name, int point, int retry) const;

  template <class Names>
  SamplePoint point(const Names& names, int point_index, int retry) const {
    SamplePoint p;
    for (const auto& n : names) p[n] = coordinate(n, point_index, retry);
    return p;
  }
};

// True iff |e| < tol * scale at every valid sample point. Points where
// evaluation hits a pole are resampled up to the retry limit; if no point
// at all can be evaluated, SamplingExhausted is thrown.
bool is_zero_generic(const Expr& e, const Sampler& s);

}  // namespace dynext
