#include "dynext/eval.hpp"

#include <unordered_map>

namespace dynext {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t fnv64(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

F q_to_f(const Q& q) {
  return F(boost::multiprecision::numerator(q).convert_to<boost::multiprecision::cpp_int>()) /
         F(boost::multiprecision::denominator(q).convert_to<boost::multiprecision::cpp_int>());
}

using boost::multiprecision::abs;
using boost::multiprecision::cos;
using boost::multiprecision::exp;
using boost::multiprecision::log;
using boost::multiprecision::pow;
using boost::multiprecision::sin;

EvalResult eval_rec(const Expr& e, const SamplePoint& p,
                    std::unordered_map<const ExprNode*, EvalResult>& memo) {
  auto it = memo.find(e.get());
  if (it != memo.end()) return it->second;
  EvalResult r;
  switch (e->kind) {
    case ExprKind::Rational:
      r.value = q_to_f(e->value);
      r.magnitude = abs(r.value);
      break;
    case ExprKind::Var: {
      auto pit = p.find(e->var);
      if (pit == p.end()) throw UnknownSymbolError(e->var);
      r.value = q_to_f(pit->second);
      r.magnitude = abs(r.value);
      break;
    }
    case ExprKind::Sum: {
      r.value = 0;
      r.magnitude = 0;
      for (const Expr& k : e->kids) {
        EvalResult kr = eval_rec(k, p, memo);
        r.value += kr.value;
        if (kr.magnitude > r.magnitude) r.magnitude = kr.magnitude;
      }
      if (abs(r.value) > r.magnitude) r.magnitude = abs(r.value);
      break;
    }
    case ExprKind::Product: {
      r.value = 1;
      r.magnitude = 1;
      for (const Expr& k : e->kids) {
        EvalResult kr = eval_rec(k, p, memo);
        r.value *= kr.value;
        r.magnitude *= kr.magnitude;
      }
      if (abs(r.value) > r.magnitude) r.magnitude = abs(r.value);
      break;
    }
    case ExprKind::Power: {
      EvalResult b = eval_rec(e->kids[0], p, memo);
      if (e->exponent < 0 && b.value == 0)
        throw DomainError("division by zero", to_string(e));
      r.value = pow(b.value, int(e->exponent));
      if (e->exponent >= 0)
        r.magnitude = pow(b.magnitude, int(e->exponent));
      else
        r.magnitude = abs(r.value);
      if (abs(r.value) > r.magnitude) r.magnitude = abs(r.value);
      break;
    }
    case ExprKind::Apply: {
      EvalResult a = eval_rec(e->kids[0], p, memo);
      switch (e->func) {
        case FuncKind::Sin:
          r.value = sin(a.value);
          r.magnitude = 1;
          break;
        case FuncKind::Cos:
          r.value = cos(a.value);
          r.magnitude = 1;
          break;
        case FuncKind::Tan: {
          F c = cos(a.value);
          if (c == 0) throw DomainError("tan pole", to_string(e));
          r.value = sin(a.value) / c;
          r.magnitude = abs(r.value);
          break;
        }
        case FuncKind::Cot: {
          F s = sin(a.value);
          if (s == 0) throw DomainError("cot pole", to_string(e));
          r.value = cos(a.value) / s;
          r.magnitude = abs(r.value);
          break;
        }
        case FuncKind::Exp:
          r.value = exp(a.value);
          r.magnitude = r.value;
          break;
        case FuncKind::Ln:
          if (a.value <= 0) throw DomainError("ln domain", to_string(e));
          r.value = log(a.value);
          r.magnitude = abs(r.value);
          break;
      }
      if (r.magnitude < 1) r.magnitude = 1;
      if (abs(r.value) > r.magnitude) r.magnitude = abs(r.value);
      break;
    }
  }
  memo.emplace(e.get(), r);
  return r;
}

}  // namespace

EvalResult evaluate_scaled(const Expr& e, const SamplePoint& p) {
  std::unordered_map<const ExprNode*, EvalResult> memo;
  return eval_rec(e, p, memo);
}

F evaluate(const Expr& e, const SamplePoint& p) { return evaluate_scaled(e, p).value; }

Q Sampler::coordinate(const std::string& name, int point, int retry) const {
  uint64_t key = splitmix64(seed ^ fnv64(name));
  key = splitmix64(key ^ (uint64_t(point) * 1000003ULL + uint64_t(retry)));
  uint64_t k2 = splitmix64(key ^ 0x5bf03635ea5ad51bULL);
  long long d = 1 + (long long)(key % (uint64_t)denom_max);
  long long span = 2 * range * d + 1;
  long long num = (long long)(k2 % (uint64_t)span) - range * d;
  return Q(num, d);
}

bool is_zero_generic(const Expr& e, const Sampler& s) {
  auto symbols = free_symbols(e);
  int valid = 0;
  for (int i = 0; i < s.n_points; ++i) {
    for (int r = 0; r < s.retry_limit; ++r) {
      SamplePoint p = s.point(symbols, i, r);
      try {
        EvalResult res = evaluate_scaled(e, p);
        ++valid;
        F scale = res.magnitude < 1 ? F(1) : res.magnitude;
        if (abs(res.value) > kZeroTol * scale) return false;
      } catch (const DomainError&) {
        continue;
      }
      break;
    }
  }
  if (valid == 0) throw SamplingExhausted("no sample point in the domain of: " + to_string(e));
  return true;
}

}  // namespace dynext
