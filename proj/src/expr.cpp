#include "dynext/expr.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace dynext {

const char* func_name(FuncKind f) {
  switch (f) {
    case FuncKind::Sin: return "sin";
    case FuncKind::Cos: return "cos";
    case FuncKind::Tan: return "tan";
    case FuncKind::Cot: return "cot";
    case FuncKind::Exp: return "exp";
    case FuncKind::Ln: return "ln";
  }
  return "?";
}

namespace {

uint64_t mix(uint64_t h, uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}

uint64_t fnv64(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

uint32_t sat_add(uint32_t a, uint32_t b) {
  uint64_t s = uint64_t(a) + uint64_t(b);
  return s > 0xffffffffULL ? 0xffffffffU : uint32_t(s);
}

Expr finish(std::shared_ptr<ExprNode> n) {
  uint64_t h = mix(0, uint64_t(n->kind));
  uint32_t sz = 1;
  switch (n->kind) {
    case ExprKind::Rational: {
      std::ostringstream os;
      os << n->value;
      h = mix(h, fnv64(os.str()));
      break;
    }
    case ExprKind::Var:
      h = mix(h, fnv64(n->var));
      break;
    case ExprKind::Apply:
      h = mix(h, uint64_t(n->func));
      break;
    case ExprKind::Power:
      h = mix(h, uint64_t(n->exponent));
      break;
    default:
      break;
  }
  for (const Expr& k : n->kids) {
    h = mix(h, k->hash);
    sz = sat_add(sz, k->size);
  }
  n->hash = h;
  n->size = sz;
  return n;
}

int kind_rank(ExprKind k) {
  switch (k) {
    case ExprKind::Rational: return 0;
    case ExprKind::Var: return 1;
    case ExprKind::Apply: return 2;
    case ExprKind::Power: return 3;
    case ExprKind::Product: return 4;
    case ExprKind::Sum: return 5;
  }
  return 6;
}

// Splits a normalized term into (rational coefficient, remaining core).
// The core is null for a pure constant.
std::pair<Q, Expr> split_coeff(const Expr& t) {
  if (t->kind == ExprKind::Rational) return {t->value, nullptr};
  if (t->kind == ExprKind::Product && t->kids[0]->kind == ExprKind::Rational) {
    std::vector<Expr> rest(t->kids.begin() + 1, t->kids.end());
    if (rest.size() == 1) return {t->kids[0]->value, rest[0]};
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Product;
    n->kids = std::move(rest);
    return {t->kids[0]->value, finish(std::move(n))};
  }
  return {Q(1), t};
}

std::pair<Expr, long long> split_power(const Expr& f) {
  if (f->kind == ExprKind::Power) return {f->kids[0], f->exponent};
  return {f, 1};
}

Q rational_pow(const Q& base, long long e) {
  using boost::multiprecision::cpp_int;
  if (e == 0) return Q(1);
  bool invert = e < 0;
  unsigned long long n = invert ? -(unsigned long long)e : (unsigned long long)e;
  cpp_int num = boost::multiprecision::pow(boost::multiprecision::numerator(base), unsigned(n));
  cpp_int den = boost::multiprecision::pow(boost::multiprecision::denominator(base), unsigned(n));
  if (invert) {
    if (num == 0) throw std::domain_error("division by zero in rational power");
    return Q(den, num);
  }
  return Q(num, den);
}

}  // namespace

int compare_expr(const Expr& a, const Expr& b) {
  if (a.get() == b.get()) return 0;
  int ra = kind_rank(a->kind), rb = kind_rank(b->kind);
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (a->kind) {
    case ExprKind::Rational:
      if (a->value == b->value) return 0;
      return a->value < b->value ? -1 : 1;
    case ExprKind::Var:
      return a->var.compare(b->var) < 0 ? -1 : (a->var == b->var ? 0 : 1);
    case ExprKind::Apply:
      if (a->func != b->func) return a->func < b->func ? -1 : 1;
      return compare_expr(a->kids[0], b->kids[0]);
    case ExprKind::Power: {
      int c = compare_expr(a->kids[0], b->kids[0]);
      if (c != 0) return c;
      if (a->exponent == b->exponent) return 0;
      return a->exponent < b->exponent ? -1 : 1;
    }
    case ExprKind::Product:
    case ExprKind::Sum: {
      if (a->kids.size() != b->kids.size())
        return a->kids.size() < b->kids.size() ? -1 : 1;
      for (size_t i = 0; i < a->kids.size(); ++i) {
        int c = compare_expr(a->kids[i], b->kids[i]);
        if (c != 0) return c;
      }
      return 0;
    }
  }
  return 0;
}

bool equal_expr(const Expr& a, const Expr& b) {
  if (a.get() == b.get()) return true;
  if (a->hash != b->hash) return false;
  return compare_expr(a, b) == 0;
}

Expr rat(Q v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Rational;
  n->value = std::move(v);
  return finish(std::move(n));
}

Expr rat(long long p, long long q) { return rat(Q(p, q)); }

Expr var(std::string name) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Var;
  n->var = std::move(name);
  return finish(std::move(n));
}

bool is_zero_expr(const Expr& e) {
  return e->kind == ExprKind::Rational && e->value == 0;
}

bool is_one_expr(const Expr& e) {
  return e->kind == ExprKind::Rational && e->value == 1;
}

Expr sum(std::vector<Expr> terms) {
  std::vector<Expr> flat;
  flat.reserve(terms.size());
  for (auto& t : terms) {
    if (t->kind == ExprKind::Sum)
      flat.insert(flat.end(), t->kids.begin(), t->kids.end());
    else
      flat.push_back(std::move(t));
  }
  Q constant(0);
  std::vector<std::pair<Expr, Q>> parts;  // (core, coefficient)
  parts.reserve(flat.size());
  for (auto& t : flat) {
    auto [coef, core] = split_coeff(t);
    if (!core)
      constant += coef;
    else
      parts.emplace_back(std::move(core), std::move(coef));
  }
  std::sort(parts.begin(), parts.end(),
            [](const auto& x, const auto& y) { return compare_expr(x.first, y.first) < 0; });
  std::vector<Expr> out;
  out.reserve(parts.size() + 1);
  size_t i = 0;
  while (i < parts.size()) {
    Q c = parts[i].second;
    size_t j = i + 1;
    while (j < parts.size() && equal_expr(parts[j].first, parts[i].first)) {
      c += parts[j].second;
      ++j;
    }
    if (c != 0) {
      if (c == 1)
        out.push_back(parts[i].first);
      else
        out.push_back(product({rat(c), parts[i].first}));
    }
    i = j;
  }
  if (constant != 0) out.push_back(rat(constant));
  if (out.empty()) return rat(0);
  if (out.size() == 1) return out[0];
  std::sort(out.begin(), out.end(),
            [](const Expr& x, const Expr& y) { return compare_expr(x, y) < 0; });
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Sum;
  n->kids = std::move(out);
  return finish(std::move(n));
}

Expr product(std::vector<Expr> factors) {
  std::vector<Expr> flat;
  flat.reserve(factors.size());
  for (auto& f : factors) {
    if (f->kind == ExprKind::Product)
      flat.insert(flat.end(), f->kids.begin(), f->kids.end());
    else
      flat.push_back(std::move(f));
  }
  Q constant(1);
  std::vector<std::pair<Expr, long long>> parts;  // (base, exponent)
  parts.reserve(flat.size());
  for (auto& f : flat) {
    if (f->kind == ExprKind::Rational) {
      if (f->value == 0) return rat(0);
      constant *= f->value;
    } else {
      auto [b, e] = split_power(f);
      parts.emplace_back(std::move(b), e);
    }
  }
  std::sort(parts.begin(), parts.end(),
            [](const auto& x, const auto& y) { return compare_expr(x.first, y.first) < 0; });
  std::vector<Expr> out;
  out.reserve(parts.size() + 1);
  size_t i = 0;
  while (i < parts.size()) {
    long long e = parts[i].second;
    size_t j = i + 1;
    while (j < parts.size() && equal_expr(parts[j].first, parts[i].first)) {
      e += parts[j].second;
      ++j;
    }
    if (e != 0) out.push_back(power(parts[i].first, e));
    i = j;
  }
  // power() may fold a rational base back into a constant
  std::vector<Expr> cleaned;
  cleaned.reserve(out.size() + 1);
  for (auto& f : out) {
    if (f->kind == ExprKind::Rational) {
      if (f->value == 0) return rat(0);
      constant *= f->value;
    } else {
      cleaned.push_back(std::move(f));
    }
  }
  if (cleaned.empty()) return rat(constant);
  if (constant == 0) return rat(0);
  if (constant != 1) cleaned.push_back(rat(constant));
  if (cleaned.size() == 1) return cleaned[0];
  std::sort(cleaned.begin(), cleaned.end(),
            [](const Expr& x, const Expr& y) { return compare_expr(x, y) < 0; });
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Product;
  n->kids = std::move(cleaned);
  return finish(std::move(n));
}

Expr power(const Expr& base, long long exponent) {
  if (exponent == 0) return rat(1);
  if (exponent == 1) return base;
  if (base->kind == ExprKind::Rational) return rat(rational_pow(base->value, exponent));
  if (base->kind == ExprKind::Power) return power(base->kids[0], base->exponent * exponent);
  if (base->kind == ExprKind::Product) {
    std::vector<Expr> pk;
    pk.reserve(base->kids.size());
    for (const Expr& k : base->kids) pk.push_back(power(k, exponent));
    return product(std::move(pk));
  }
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Power;
  n->exponent = exponent;
  n->kids = {base};
  return finish(std::move(n));
}

Expr apply_func(FuncKind f, const Expr& arg) {
  if (arg->kind == ExprKind::Rational && arg->value == 0) {
    switch (f) {
      case FuncKind::Sin:
      case FuncKind::Tan: return rat(0);
      case FuncKind::Cos:
      case FuncKind::Exp: return rat(1);
      default: break;  // cot(0), ln(0) kept; evaluation reports the pole
    }
  }
  if (f == FuncKind::Ln && is_one_expr(arg)) return rat(0);
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Apply;
  n->func = f;
  n->kids = {arg};
  return finish(std::move(n));
}

Expr add(const Expr& a, const Expr& b) { return sum({a, b}); }
Expr sub(const Expr& a, const Expr& b) { return sum({a, product({rat(-1), b})}); }
Expr mul(const Expr& a, const Expr& b) { return product({a, b}); }
Expr div(const Expr& a, const Expr& b) { return product({a, power(b, -1)}); }
Expr neg(const Expr& a) { return product({rat(-1), a}); }

Expr normalize(const Expr& e) {
  switch (e->kind) {
    case ExprKind::Rational:
    case ExprKind::Var:
      return e;
    case ExprKind::Apply:
      return apply_func(e->func, normalize(e->kids[0]));
    case ExprKind::Power:
      return power(normalize(e->kids[0]), e->exponent);
    case ExprKind::Product: {
      std::vector<Expr> ks;
      ks.reserve(e->kids.size());
      for (const Expr& k : e->kids) ks.push_back(normalize(k));
      return product(std::move(ks));
    }
    case ExprKind::Sum: {
      std::vector<Expr> ks;
      ks.reserve(e->kids.size());
      for (const Expr& k : e->kids) ks.push_back(normalize(k));
      return sum(std::move(ks));
    }
  }
  return e;
}

namespace {

Expr diff_rec(const Expr& e, const std::string& v,
              std::unordered_map<const ExprNode*, Expr>& memo) {
  auto it = memo.find(e.get());
  if (it != memo.end()) return it->second;
  Expr r;
  switch (e->kind) {
    case ExprKind::Rational:
      r = rat(0);
      break;
    case ExprKind::Var:
      r = e->var == v ? rat(1) : rat(0);
      break;
    case ExprKind::Sum: {
      std::vector<Expr> ts;
      ts.reserve(e->kids.size());
      for (const Expr& k : e->kids) ts.push_back(diff_rec(k, v, memo));
      r = sum(std::move(ts));
      break;
    }
    case ExprKind::Product: {
      std::vector<Expr> ts;
      for (size_t i = 0; i < e->kids.size(); ++i) {
        Expr di = diff_rec(e->kids[i], v, memo);
        if (is_zero_expr(di)) continue;
        std::vector<Expr> fs;
        fs.reserve(e->kids.size());
        for (size_t j = 0; j < e->kids.size(); ++j) fs.push_back(i == j ? di : e->kids[j]);
        ts.push_back(product(std::move(fs)));
      }
      r = sum(std::move(ts));
      break;
    }
    case ExprKind::Power: {
      Expr db = diff_rec(e->kids[0], v, memo);
      if (is_zero_expr(db))
        r = rat(0);
      else
        r = product({rat(e->exponent), power(e->kids[0], e->exponent - 1), db});
      break;
    }
    case ExprKind::Apply: {
      const Expr& a = e->kids[0];
      Expr da = diff_rec(a, v, memo);
      if (is_zero_expr(da)) {
        r = rat(0);
        break;
      }
      Expr outer;
      switch (e->func) {
        case FuncKind::Sin: outer = apply_func(FuncKind::Cos, a); break;
        case FuncKind::Cos: outer = neg(apply_func(FuncKind::Sin, a)); break;
        case FuncKind::Tan:
          outer = add(rat(1), power(apply_func(FuncKind::Tan, a), 2));
          break;
        case FuncKind::Cot:
          outer = neg(add(rat(1), power(apply_func(FuncKind::Cot, a), 2)));
          break;
        case FuncKind::Exp: outer = e; break;
        case FuncKind::Ln: outer = power(a, -1); break;
      }
      r = mul(outer, da);
      break;
    }
  }
  memo.emplace(e.get(), r);
  return r;
}

}  // namespace

Expr differentiate(const Expr& e, const std::string& v) {
  std::unordered_map<const ExprNode*, Expr> memo;
  return diff_rec(e, v, memo);
}

namespace {

Expr subst_rec(const Expr& e, const std::string& v, const Expr& repl,
               std::unordered_map<const ExprNode*, Expr>& memo) {
  auto it = memo.find(e.get());
  if (it != memo.end()) return it->second;
  Expr r;
  switch (e->kind) {
    case ExprKind::Rational:
      r = e;
      break;
    case ExprKind::Var:
      r = e->var == v ? repl : e;
      break;
    case ExprKind::Apply:
      r = apply_func(e->func, subst_rec(e->kids[0], v, repl, memo));
      break;
    case ExprKind::Power:
      r = power(subst_rec(e->kids[0], v, repl, memo), e->exponent);
      break;
    case ExprKind::Product:
    case ExprKind::Sum: {
      std::vector<Expr> ks;
      ks.reserve(e->kids.size());
      for (const Expr& k : e->kids) ks.push_back(subst_rec(k, v, repl, memo));
      r = e->kind == ExprKind::Product ? product(std::move(ks)) : sum(std::move(ks));
      break;
    }
  }
  memo.emplace(e.get(), r);
  return r;
}

void collect_symbols(const Expr& e, std::set<std::string>& out,
                     std::set<const ExprNode*>& seen) {
  if (!seen.insert(e.get()).second) return;
  if (e->kind == ExprKind::Var) {
    out.insert(e->var);
    return;
  }
  for (const Expr& k : e->kids) collect_symbols(k, out, seen);
}

}  // namespace

Expr substitute(const Expr& e, const std::string& v, const Expr& replacement) {
  std::unordered_map<const ExprNode*, Expr> memo;
  return subst_rec(e, v, replacement, memo);
}

std::set<std::string> free_symbols(const Expr& e) {
  std::set<std::string> out;
  std::set<const ExprNode*> seen;
  collect_symbols(e, out, seen);
  return out;
}

bool depends_on(const Expr& e, const std::string& v) {
  if (e->kind == ExprKind::Var) return e->var == v;
  for (const Expr& k : e->kids)
    if (depends_on(k, v)) return true;
  return false;
}

namespace {

// Printing follows the CLI expression grammar so that reports re-parse.
void print_rec(std::ostringstream& os, const Expr& e, bool need_parens);

void print_product(std::ostringstream& os, const Expr& e, bool need_parens) {
  // Separate numerator and denominator factors for readability.
  Q coef(1);
  std::vector<Expr> num, den;
  auto classify = [&](const Expr& f) {
    if (f->kind == ExprKind::Rational) {
      coef *= f->value;
    } else if (f->kind == ExprKind::Power && f->exponent < 0) {
      den.push_back(power(f->kids[0], -f->exponent));
    } else {
      num.push_back(f);
    }
  };
  if (e->kind == ExprKind::Product)
    for (const Expr& f : e->kids) classify(f);
  else
    classify(e);

  bool neg_coef = coef < 0;
  if (neg_coef) coef = -coef;
  std::ostringstream body;
  bool first = true;
  if (coef != 1 || num.empty()) {
    body << coef;
    first = false;
  }
  for (const Expr& f : num) {
    if (!first) body << "*";
    std::ostringstream part;
    print_rec(part, f, true);
    body << part.str();
    first = false;
  }
  if (!den.empty()) {
    body << "/";
    if (den.size() > 1) body << "(";
    bool dfirst = true;
    for (const Expr& f : den) {
      if (!dfirst) body << "*";
      std::ostringstream part;
      print_rec(part, f, true);
      body << part.str();
      dfirst = false;
    }
    if (den.size() > 1) body << ")";
  }
  std::string s = body.str();
  bool wrap = need_parens && (neg_coef);
  if (wrap) os << "(";
  if (neg_coef) os << "-";
  os << s;
  if (wrap) os << ")";
}

void print_rec(std::ostringstream& os, const Expr& e, bool need_parens) {
  switch (e->kind) {
    case ExprKind::Rational: {
      bool wrap = need_parens && e->value < 0;
      if (wrap) os << "(";
      os << e->value;
      if (wrap) os << ")";
      break;
    }
    case ExprKind::Var:
      os << e->var;
      break;
    case ExprKind::Apply: {
      std::ostringstream arg;
      print_rec(arg, e->kids[0], false);
      os << func_name(e->func) << "(" << arg.str() << ")";
      break;
    }
    case ExprKind::Power: {
      std::ostringstream base;
      bool base_parens = e->kids[0]->kind != ExprKind::Var && e->kids[0]->kind != ExprKind::Apply;
      print_rec(base, e->kids[0], false);
      if (base_parens)
        os << "(" << base.str() << ")";
      else
        os << base.str();
      os << "^";
      if (e->exponent < 0)
        os << "(" << e->exponent << ")";
      else
        os << e->exponent;
      break;
    }
    case ExprKind::Product:
      print_product(os, e, need_parens);
      break;
    case ExprKind::Sum: {
      std::ostringstream body;
      bool first = true;
      for (const Expr& t : e->kids) {
        auto [coef, core] = split_coeff(t);
        bool negative = coef < 0;
        if (first) {
          print_rec(body, t, false);
        } else if (negative) {
          body << " - ";
          Expr positive = core ? (coef == -1 ? core : product({rat(-coef), core})) : rat(-coef);
          print_rec(body, positive, false);
        } else {
          body << " + ";
          print_rec(body, t, false);
        }
        first = false;
      }
      if (need_parens)
        os << "(" << body.str() << ")";
      else
        os << body.str();
      break;
    }
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream os;
  print_rec(os, e, false);
  return os.str();
}

}  // namespace dynext
