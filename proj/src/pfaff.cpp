#include "dynext/pfaff.hpp"

#include <algorithm>

namespace dynext {

using boost::multiprecision::abs;

namespace {

F mat_abs_max(const NumMat& m) {
  F s = 0;
  for (const auto& row : m)
    for (const F& v : row)
      if (abs(v) > s) s = abs(v);
  return s;
}

}  // namespace

RankResult generic_rank(const std::vector<KForm>& forms, ChartNumerics& cn) {
  RankResult best;
  if (forms.empty()) return best;
  auto results = cn.map_points<RankResult>([&](int i, int r) {
    NumMat m;
    m.reserve(forms.size());
    for (const KForm& f : forms) m.push_back(cn.eval_one_form(f, i, r));
    RankResult rr;
    rr.independent = independent_rows(m);
    rr.rank = int(rr.independent.size());
    return rr;
  });
  for (const RankResult& rr : results)
    if (rr.rank > best.rank) best = rr;
  return best;
}

bool ideal_membership(const KForm& w, const std::vector<KForm>& gens, ChartNumerics& cn) {
  std::vector<KForm> with = gens;
  with.push_back(w);
  return generic_rank(with, cn).rank == generic_rank(gens, cn).rank;
}

SymRow form_to_row(const KForm& w) {
  SymRow row;
  for (const auto& [idx, c] : w.terms) row[idx[0]] = c;
  return row;
}

KForm row_to_form(const ChartPtr& chart, const SymRow& row) {
  KForm f = zero_form(chart, 1);
  for (const auto& [c, e] : row)
    if (!is_zero_expr(e)) f.terms.emplace(IndexTuple{uint8_t(c)}, e);
  return f;
}

namespace {

// target -= factor * source
void row_axpy_neg(SymRow& target, const Expr& factor, const SymRow& source) {
  for (const auto& [c, e] : source) {
    Expr delta = neg(mul(factor, e));
    auto it = target.find(c);
    if (it == target.end()) {
      if (!is_zero_expr(delta)) target.emplace(c, delta);
    } else {
      Expr s = add(it->second, delta);
      if (is_zero_expr(s))
        target.erase(it);
      else
        it->second = s;
    }
  }
}

void scale_row(SymRow& row, const Expr& factor) {
  for (auto& [c, e] : row) e = mul(e, factor);
}

}  // namespace

SymbolicRref symbolic_rref(std::vector<SymRow> rows, int ncols, ChartNumerics& cn) {
  SymbolicRref out;
  out.ncols = ncols;
  std::vector<bool> used(rows.size(), false);
  for (int col = 0; col < ncols; ++col) {
    int best = -1;
    uint32_t best_size = 0;
    for (size_t i = 0; i < rows.size(); ++i) {
      if (used[i]) continue;
      auto it = rows[i].find(col);
      if (it == rows[i].end() || is_zero_expr(it->second)) continue;
      if (cn.is_zero(it->second)) continue;
      uint32_t sz = it->second->size;
      if (best < 0 || sz < best_size) {
        best = int(i);
        best_size = sz;
      }
    }
    if (best < 0) continue;
    used[size_t(best)] = true;
    SymRow pivot_row = rows[size_t(best)];
    Expr inv = power(pivot_row[col], -1);
    scale_row(pivot_row, inv);
    pivot_row[col] = one();
    for (size_t i = 0; i < rows.size(); ++i) {
      if (used[i]) continue;
      auto it = rows[i].find(col);
      if (it == rows[i].end() || is_zero_expr(it->second)) continue;
      Expr f = it->second;
      row_axpy_neg(rows[i], f, pivot_row);
      rows[i].erase(col);
    }
    for (size_t b = 0; b < out.rows.size(); ++b) {
      auto it = out.rows[b].find(col);
      if (it == out.rows[b].end() || is_zero_expr(it->second)) continue;
      Expr f = it->second;
      row_axpy_neg(out.rows[b], f, pivot_row);
      out.rows[b].erase(col);
    }
    out.rows.push_back(std::move(pivot_row));
    out.pivot_cols.push_back(col);
  }
  return out;
}

std::vector<std::vector<Expr>> symbolic_kernel(const std::vector<SymRow>& rows, int nvars,
                                               ChartNumerics& cn) {
  SymbolicRref r = symbolic_rref(rows, nvars, cn);
  std::vector<bool> pivotal(size_t(nvars), false);
  for (int p : r.pivot_cols) pivotal[size_t(p)] = true;
  std::vector<std::vector<Expr>> kernel;
  for (int f = 0; f < nvars; ++f) {
    if (pivotal[size_t(f)]) continue;
    std::vector<Expr> v(size_t(nvars), zero());
    v[size_t(f)] = one();
    for (size_t k = 0; k < r.rows.size(); ++k) {
      auto it = r.rows[k].find(f);
      if (it != r.rows[k].end() && !is_zero_expr(it->second))
        v[size_t(r.pivot_cols[k])] = neg(it->second);
    }
    kernel.push_back(std::move(v));
  }
  return kernel;
}

namespace {

// Substitutes pivot directions out of a symbolic 2-form; the result lives on
// complement coordinates only (as pair -> coefficient).
std::map<std::pair<int, int>, Expr> reduce_two_form_symbolic(const KForm& b,
                                                             const SymbolicRref& r) {
  // substitution lists: coordinate -> [(coordinate, coefficient)]
  int dim = r.ncols;
  std::vector<std::vector<std::pair<int, Expr>>> subst;
  subst.resize(size_t(dim));
  std::vector<int> pivot_row_of(size_t(dim), -1);
  for (size_t k = 0; k < r.rows.size(); ++k) pivot_row_of[size_t(r.pivot_cols[k])] = int(k);
  for (int c = 0; c < dim; ++c) {
    if (pivot_row_of[size_t(c)] < 0) {
      subst[size_t(c)].emplace_back(c, one());
    } else {
      const SymRow& row = r.rows[size_t(pivot_row_of[size_t(c)])];
      for (const auto& [cc, e] : row) {
        if (cc == c) continue;
        if (!is_zero_expr(e)) subst[size_t(c)].emplace_back(cc, neg(e));
      }
    }
  }
  std::map<std::pair<int, int>, Expr> out;
  auto accumulate = [&](int i, int j, const Expr& c) {
    if (is_zero_expr(c)) return;
    std::pair<int, int> key;
    Expr v = c;
    if (i < j) {
      key = {i, j};
    } else if (j < i) {
      key = {j, i};
      v = neg(c);
    } else {
      return;
    }
    auto it = out.find(key);
    if (it == out.end()) {
      out.emplace(key, v);
    } else {
      Expr s = add(it->second, v);
      if (is_zero_expr(s))
        out.erase(it);
      else
        it->second = s;
    }
  };
  for (const auto& [idx, c] : b.terms) {
    for (const auto& [ci, ei] : subst[idx[0]])
      for (const auto& [cj, ej] : subst[idx[1]])
        accumulate(ci, cj, product({c, ei, ej}));
  }
  return out;
}

int torsion_defect_at_point(const std::vector<KForm>& gens, const std::vector<KForm>& dgens,
                            ChartNumerics& cn, int i, int r, bool* involutive_out) {
  NumMat w;
  w.reserve(gens.size());
  for (const KForm& g : gens) w.push_back(cn.eval_one_form(g, i, r));
  if (independent_rows(w).size() < gens.size()) throw NonGenericPoint();
  NumRref rr = num_rref(w);
  F tmax = mat_abs_max(rr.rows);
  int dim = cn.chart().dim();
  NumMat torsion;
  F bscale = 1;
  for (const KForm& dg : dgens) {
    NumMat b = cn.eval_two_form(dg, i, r);
    F bm = mat_abs_max(b);
    if (bm > bscale) bscale = bm;
    torsion.push_back(reduce_two_form(rr, b, dim));
  }
  F scale = bscale * (1 + tmax) * (1 + tmax);
  bool inv = true;
  for (auto& row : torsion) {
    F tol = kZeroTol * scale;
    for (F& v : row)
      if (abs(v) <= tol) v = 0;
    if (!row_near_zero(row, scale)) inv = false;
  }
  if (involutive_out) *involutive_out = inv;
  return num_rank(torsion);
}

}  // namespace

std::vector<KForm> derived_system(const std::vector<KForm>& gens, ChartNumerics& cn) {
  if (gens.empty()) return {};
  ChartPtr chart = gens[0].chart;
  int dim = chart->dim();
  std::vector<SymRow> rows;
  rows.reserve(gens.size());
  for (const KForm& g : gens) rows.push_back(form_to_row(g));
  SymbolicRref srref = symbolic_rref(std::move(rows), dim, cn);
  if (srref.rows.size() < gens.size())
    throw GenericityError("derived system: generators are not generically independent");

  size_t g = srref.rows.size();
  std::vector<KForm> basis;
  basis.reserve(g);
  for (const SymRow& row : srref.rows) basis.push_back(row_to_form(chart, row));

  // torsion of each basis element in the complement pair space
  std::vector<std::map<std::pair<int, int>, Expr>> torsions;
  torsions.reserve(g);
  for (const KForm& w : basis)
    torsions.push_back(reduce_two_form_symbolic(exterior_derivative(w), srref));

  std::map<std::pair<int, int>, int> pair_col;
  for (const auto& t : torsions)
    for (const auto& [key, e] : t) {
      (void)e;
      if (!pair_col.count(key)) {
        int id = int(pair_col.size());
        pair_col[key] = id;
      }
    }

  // equations: one row per complement pair, unknowns are the g combination
  // coefficients
  std::vector<SymRow> eq_rows(pair_col.size());
  for (size_t k = 0; k < g; ++k)
    for (const auto& [key, e] : torsions[k]) eq_rows[size_t(pair_col[key])][int(k)] = e;

  std::vector<std::vector<Expr>> kernel = symbolic_kernel(eq_rows, int(g), cn);

  // validation: the numeric torsion rank must be stable across sample points
  // and match the symbolic elimination
  auto ranks = cn.map_points<int>([&](int i, int r) {
    NumMat m;
    m.reserve(g);
    for (size_t k = 0; k < g; ++k) {
      NumRow row(pair_col.size(), F(0));
      for (const auto& [key, e] : torsions[k])
        row[size_t(pair_col.at(key))] = cn.eval(e, i, r).value;
      m.push_back(std::move(row));
    }
    return num_rank(std::move(m));
  });
  for (int rk : ranks)
    if (rk != ranks[0])
      throw GenericityError("derived system: torsion rank unstable across sample points");
  if (!ranks.empty() && size_t(ranks[0]) != g - kernel.size())
    throw GenericityError("derived system: symbolic and numeric torsion ranks disagree");

  std::vector<KForm> out;
  out.reserve(kernel.size());
  for (const auto& v : kernel) {
    KForm w = zero_form(chart, 1);
    for (size_t k = 0; k < g; ++k) {
      if (is_zero_expr(v[k])) continue;
      w = form_add(w, form_scale(basis[k], v[k]));
    }
    out.push_back(std::move(w));
  }
  return out;
}

bool is_involutive(const std::vector<KForm>& gens, ChartNumerics& cn) {
  if (gens.empty()) return true;
  std::vector<KForm> dgens;
  dgens.reserve(gens.size());
  for (const KForm& g : gens) dgens.push_back(exterior_derivative(g));
  bool all = true;
  cn.map_points<int>([&](int i, int r) {
    bool inv = true;
    torsion_defect_at_point(gens, dgens, cn, i, r, &inv);
    if (!inv) all = false;
    return 0;
  });
  return all;
}

int defect(const std::vector<KForm>& gens, ChartNumerics& cn) {
  if (gens.empty()) return 0;
  std::vector<KForm> dgens;
  dgens.reserve(gens.size());
  for (const KForm& g : gens) dgens.push_back(exterior_derivative(g));
  auto results = cn.map_points<int>(
      [&](int i, int r) { return torsion_defect_at_point(gens, dgens, cn, i, r, nullptr); });
  int d = 0;
  for (int v : results) d = std::max(d, v);
  return d;
}

DerivedFlag compute_flag(const ChartPtr& chart, const std::vector<KForm>& generators,
                         ChartNumerics& cn) {
  DerivedFlag flag;
  KForm dt = coordinate_differential(chart, 0);
  flag.levels.push_back(generators);
  int guard = chart->dim() + 2;
  while (true) {
    const std::vector<KForm>& level = flag.levels.back();
    flag.dims.push_back(int(level.size()));
    std::vector<KForm> aug = level;
    aug.push_back(dt);
    if (generic_rank(aug, cn).rank != int(aug.size()))
      throw GenericityError("augmented level is not generically independent");
    flag.aug_dims.push_back(int(aug.size()));
    flag.aug_defects.push_back(defect(aug, cn));
    flag.aug_involutive.push_back(flag.aug_defects.back() == 0);
    flag.augmented.push_back(std::move(aug));
    if (flag.levels.size() >= 2 &&
        flag.dims[flag.dims.size() - 1] == flag.dims[flag.dims.size() - 2]) {
      flag.stabilize_index = int(flag.levels.size()) - 2;
      // the last level repeats the stabilized one; drop it
      flag.levels.pop_back();
      flag.augmented.pop_back();
      flag.dims.pop_back();
      flag.aug_dims.pop_back();
      flag.aug_defects.pop_back();
      flag.aug_involutive.pop_back();
      break;
    }
    if (level.empty()) {
      flag.stabilize_index = int(flag.levels.size()) - 1;
      break;
    }
    if (--guard < 0) throw GenericityError("derived flag failed to stabilize");
    flag.levels.push_back(derived_system(level, cn));
  }
  return flag;
}

const DerivedFlag& PfaffianSystem::flag(ChartNumerics& cn) const {
  if (!flag_cache_)
    flag_cache_ = std::make_shared<const DerivedFlag>(compute_flag(chart, generators, cn));
  return *flag_cache_;
}

DefectReport lid_report(const ChartPtr& chart, const DerivedFlag& flag, ChartNumerics& cn) {
  DefectReport rep;
  rep.aug_dims = flag.aug_dims;
  rep.defects = flag.aug_defects;
  rep.involutive = flag.aug_involutive;
  rep.k_star = 0;
  rep.lid = 0;
  rep.controllable = controllability_check(flag);
  for (size_t k = 0; k < flag.aug_involutive.size(); ++k) {
    if (!flag.aug_involutive[k]) {
      rep.k_star = int(k);
      rep.lid = flag.aug_defects[k];
      const std::vector<KForm>& aug = flag.augmented[k];
      std::vector<KForm> derived = derived_system(aug, cn);
      std::vector<KForm> stack = derived;
      stack.insert(stack.end(), aug.begin(), aug.end());
      auto subsets = cn.map_points<std::vector<int>>([&](int i, int r) {
        NumMat m;
        m.reserve(stack.size());
        for (const KForm& f : stack) m.push_back(cn.eval_one_form(f, i, r));
        return independent_rows(m);
      });
      size_t nd = derived.size();
      for (const auto& subset : subsets) {
        if (subset.size() != nd + size_t(rep.lid)) continue;
        bool derived_first = true;
        for (size_t j = 0; j < nd; ++j)
          if (size_t(j) >= subset.size() || subset[j] != int(j)) derived_first = false;
        if (!derived_first) continue;
        for (size_t j = nd; j < subset.size(); ++j)
          rep.defect_generators.push_back(aug[size_t(subset[j]) - nd]);
        break;
      }
      if (int(rep.defect_generators.size()) != rep.lid)
        throw GenericityError("defect representatives do not match the defect dimension");
      (void)chart;
      break;
    }
  }
  return rep;
}

bool controllability_check(const DerivedFlag& flag) {
  return flag.aug_dims.back() == 1;
}

}  // namespace dynext
