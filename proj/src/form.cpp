#include "dynext/form.hpp"

#include <algorithm>
#include <sstream>

#include "dynext/eval.hpp"

namespace dynext {

int Chart::index_of(const std::string& name) const {
  for (size_t i = 0; i < coords.size(); ++i)
    if (coords[i] == name) return int(i);
  return -1;
}

int Chart::require_index(const std::string& name) const {
  int i = index_of(name);
  if (i < 0) throw UnknownSymbolError(name);
  return i;
}

std::vector<std::string> Chart::input_names() const {
  return {coords.begin() + input_begin(), coords.begin() + input_end()};
}

std::vector<std::string> Chart::state_names() const {
  return {coords.begin() + state_begin(), coords.begin() + state_end()};
}

std::string Chart::fingerprint() const {
  std::string s;
  for (size_t i = 0; i < coords.size(); ++i) {
    if (i) s += ",";
    s += coords[i];
    if (int(i) == 0) s += ":t";
    else if (is_input(int(i))) s += ":u";
    else s += ":x";
  }
  return s;
}

ChartPtr make_chart(const std::vector<std::string>& inputs,
                    const std::vector<std::string>& states) {
  auto c = std::make_shared<Chart>();
  c->coords.push_back("t");
  c->coords.insert(c->coords.end(), inputs.begin(), inputs.end());
  c->coords.insert(c->coords.end(), states.begin(), states.end());
  c->n_inputs = int(inputs.size());
  c->n_states = int(states.size());
  for (size_t i = 0; i < c->coords.size(); ++i)
    for (size_t j = i + 1; j < c->coords.size(); ++j)
      if (c->coords[i] == c->coords[j])
        throw std::invalid_argument("duplicate coordinate: " + c->coords[i]);
  return c;
}

namespace {

void check_same_chart(const ChartPtr& a, const ChartPtr& b) {
  if (a.get() == b.get()) return;
  if (!a || !b || a->fingerprint() != b->fingerprint())
    throw ChartMismatch("operands live on different charts");
}

void accumulate(std::map<IndexTuple, Expr>& terms, const IndexTuple& idx, const Expr& c) {
  if (is_zero_expr(c)) return;
  auto it = terms.find(idx);
  if (it == terms.end()) {
    terms.emplace(idx, c);
  } else {
    Expr s = add(it->second, c);
    if (is_zero_expr(s))
      terms.erase(it);
    else
      it->second = s;
  }
}

// Merges two strictly increasing tuples; returns parity sign or 0 on a
// repeated index.
int merge_tuples(const IndexTuple& a, const IndexTuple& b, IndexTuple& out) {
  out.clear();
  out.reserve(a.size() + b.size());
  size_t i = 0, j = 0;
  int inversions = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return 0;
    if (a[i] < b[j]) {
      out.push_back(a[i++]);
    } else {
      inversions += int(a.size() - i);
      out.push_back(b[j++]);
    }
  }
  while (i < a.size()) out.push_back(a[i++]);
  while (j < b.size()) out.push_back(b[j++]);
  return inversions % 2 == 0 ? 1 : -1;
}

}  // namespace

Expr KForm::coefficient(const IndexTuple& idx) const {
  auto it = terms.find(idx);
  return it == terms.end() ? zero() : it->second;
}

Expr KForm::scalar() const {
  if (degree != 0) throw DegreeError("scalar() on a form of positive degree");
  return coefficient({});
}

KForm zero_form(ChartPtr chart, int degree) {
  KForm f;
  f.chart = std::move(chart);
  f.degree = degree;
  return f;
}

KForm scalar_form(ChartPtr chart, Expr value) {
  KForm f = zero_form(std::move(chart), 0);
  if (!is_zero_expr(value)) f.terms.emplace(IndexTuple{}, std::move(value));
  return f;
}

KForm coordinate_differential(ChartPtr chart, int coord_index) {
  KForm f = zero_form(std::move(chart), 1);
  f.terms.emplace(IndexTuple{uint8_t(coord_index)}, one());
  return f;
}

KForm coordinate_differential(ChartPtr chart, const std::string& name) {
  int i = chart->require_index(name);
  return coordinate_differential(std::move(chart), i);
}

KForm one_form(ChartPtr chart, const std::vector<std::pair<std::string, Expr>>& coeffs) {
  KForm f = zero_form(chart, 1);
  for (const auto& [name, c] : coeffs) {
    int i = chart->require_index(name);
    accumulate(f.terms, IndexTuple{uint8_t(i)}, c);
  }
  return f;
}

KForm form_add(const KForm& a, const KForm& b) {
  check_same_chart(a.chart, b.chart);
  if (a.degree != b.degree) throw DegreeError("adding forms of different degree");
  KForm out = a;
  for (const auto& [idx, c] : b.terms) accumulate(out.terms, idx, c);
  return out;
}

KForm form_sub(const KForm& a, const KForm& b) { return form_add(a, form_scale(b, rat(-1))); }

KForm form_scale(const KForm& a, const Expr& s) {
  KForm out = zero_form(a.chart, a.degree);
  if (is_zero_expr(s)) return out;
  for (const auto& [idx, c] : a.terms) {
    Expr m = mul(c, s);
    if (!is_zero_expr(m)) out.terms.emplace(idx, m);
  }
  return out;
}

KForm wedge(const KForm& a, const KForm& b) {
  check_same_chart(a.chart, b.chart);
  KForm out = zero_form(a.chart, a.degree + b.degree);
  if (out.degree > a.chart->dim()) return out;
  IndexTuple merged;
  for (const auto& [ia, ca] : a.terms) {
    for (const auto& [ib, cb] : b.terms) {
      int sign = merge_tuples(ia, ib, merged);
      if (sign == 0) continue;
      Expr c = mul(ca, cb);
      if (sign < 0) c = neg(c);
      accumulate(out.terms, merged, c);
    }
  }
  return out;
}

KForm exterior_derivative(const KForm& a) {
  KForm out = zero_form(a.chart, a.degree + 1);
  IndexTuple merged;
  for (const auto& [idx, c] : a.terms) {
    for (const std::string& v : free_symbols(c)) {
      int ci = a.chart->index_of(v);
      if (ci < 0) throw UnknownSymbolError(v);
      Expr dc = differentiate(c, v);
      if (is_zero_expr(dc)) continue;
      IndexTuple dv{uint8_t(ci)};
      int sign = merge_tuples(dv, idx, merged);
      if (sign == 0) continue;
      accumulate(out.terms, merged, sign < 0 ? neg(dc) : dc);
    }
  }
  return out;
}

KForm interior_product(const VectorField& x, const KForm& a) {
  check_same_chart(x.chart, a.chart);
  if (a.degree < 1) throw DegreeError("interior product needs degree >= 1");
  KForm out = zero_form(a.chart, a.degree - 1);
  for (const auto& [idx, c] : a.terms) {
    for (size_t j = 0; j < idx.size(); ++j) {
      const Expr& comp = x.components[idx[j]];
      if (is_zero_expr(comp)) continue;
      Expr c2 = mul(comp, c);
      if (j % 2 == 1) c2 = neg(c2);
      IndexTuple rest;
      rest.reserve(idx.size() - 1);
      for (size_t k = 0; k < idx.size(); ++k)
        if (k != j) rest.push_back(idx[k]);
      accumulate(out.terms, rest, c2);
    }
  }
  return out;
}

KForm lie_derivative(const VectorField& x, const KForm& a) {
  check_same_chart(x.chart, a.chart);
  if (a.degree == 0) return scalar_form(a.chart, lie_scalar(x, a.scalar()));
  KForm d_a = exterior_derivative(a);
  KForm term1 = interior_product(x, d_a);
  KForm term2 = exterior_derivative(interior_product(x, a));
  return form_add(term1, term2);
}

KForm differential(ChartPtr chart, const Expr& f) {
  return exterior_derivative(scalar_form(std::move(chart), f));
}

Expr lie_scalar(const VectorField& x, const Expr& f) {
  std::vector<Expr> terms;
  for (const std::string& v : free_symbols(f)) {
    int i = x.chart->index_of(v);
    if (i < 0) throw UnknownSymbolError(v);
    if (is_zero_expr(x.components[size_t(i)])) continue;
    Expr df = differentiate(f, v);
    if (is_zero_expr(df)) continue;
    terms.push_back(mul(x.components[size_t(i)], df));
  }
  return sum(std::move(terms));
}

std::string to_string(const KForm& a) {
  if (a.terms.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [idx, c] : a.terms) {
    if (!first) os << " + ";
    first = false;
    os << "(" << to_string(c) << ")";
    for (uint8_t i : idx) os << "*d" << a.chart->coord(i);
  }
  return os.str();
}

}  // namespace dynext
