#pragma once

#include <map>
#include <optional>

#include "dynext/numeric.hpp"

namespace dynext {

struct RankResult {
  int rank = 0;
  std::vector<int> independent;  // earliest independent subset achieving rank
};

// Maximum rank of the coefficient matrix over the sample points, with a
// generically independent subset from the first point achieving it.
RankResult generic_rank(const std::vector<KForm>& forms, ChartNumerics& cn);

// True iff appending w does not raise the generic rank of the span.
bool ideal_membership(const KForm& w, const std::vector<KForm>& gens, ChartNumerics& cn);

// Sparse symbolic row over chart coordinates (or any column space).
using SymRow = std::map<int, Expr>;

struct SymbolicRref {
  std::vector<SymRow> rows;        // reduced, unit pivots
  std::vector<int> pivot_cols;     // aligned with rows
  int ncols = 0;
  bool is_pivot(int c) const {
    for (int p : pivot_cols)
      if (p == c) return true;
    return false;
  }
};

// Fraction-free style elimination with quotient coefficients; pivots are
// validated as generically nonzero at the sample points.
SymbolicRref symbolic_rref(std::vector<SymRow> rows, int ncols, ChartNumerics& cn);

// Kernel basis of the linear map c -> sum_k c_k row_k for symbolic rows.
std::vector<std::vector<Expr>> symbolic_kernel(const std::vector<SymRow>& rows, int nvars,
                                               ChartNumerics& cn);

SymRow form_to_row(const KForm& w);
KForm row_to_form(const ChartPtr& chart, const SymRow& row);

// Basis of { w in span(gens) : dw == 0 modulo <gens> }, computed by symbolic
// elimination on the torsion map with sample-point pivot validation.
std::vector<KForm> derived_system(const std::vector<KForm>& gens, ChartNumerics& cn);

// Frobenius test: d w_i ^ w_1 ^ ... ^ w_r vanishes generically for every i.
bool is_involutive(const std::vector<KForm>& gens, ChartNumerics& cn);

// dim(span gens) - dim(derived system), decided numerically.
int defect(const std::vector<KForm>& gens, ChartNumerics& cn);

struct DerivedFlag {
  std::vector<std::vector<KForm>> levels;     // I^(0) ... stabilized level
  std::vector<std::vector<KForm>> augmented;  // <I^(k), dt>
  std::vector<int> dims;                      // of levels
  std::vector<int> aug_dims;
  std::vector<int> aug_defects;
  std::vector<bool> aug_involutive;
  int stabilize_index = 0;  // first k with dim I^(k) == dim I^(k+1)
};

struct PfaffianSystem {
  ChartPtr chart;
  std::vector<KForm> generators;

  const DerivedFlag& flag(ChartNumerics& cn) const;

 private:
  mutable std::shared_ptr<const DerivedFlag> flag_cache_;
};

DerivedFlag compute_flag(const ChartPtr& chart, const std::vector<KForm>& generators,
                         ChartNumerics& cn);

struct DefectReport {
  std::vector<int> aug_dims;
  std::vector<int> defects;
  std::vector<bool> involutive;
  int k_star = 0;  // least non-involutive augmented level; 0 when all pass
  int lid = 0;
  std::vector<KForm> defect_generators;  // representatives at k_star
  bool controllable = false;
};

DefectReport lid_report(const ChartPtr& chart, const DerivedFlag& flag, ChartNumerics& cn);

// <I^(n), dt> == <dt>: the stabilized augmented level has generic rank 1.
bool controllability_check(const DerivedFlag& flag);

}  // namespace dynext
