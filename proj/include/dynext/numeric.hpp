#pragma once

#include <functional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dynext/eval.hpp"
#include "dynext/form.hpp"

namespace dynext {

using NumRow = std::vector<F>;
using NumMat = std::vector<NumRow>;

// Thrown internally when a sample point fails a genericity precondition
// (e.g. generator rank drops there); the point is then resampled.
struct NonGenericPoint : std::runtime_error {
  NonGenericPoint() : std::runtime_error("non-generic sample point") {}
};

// Cached high-precision evaluation of expressions at the deterministic
// sample points of one chart. Values depend only on (seed, coordinate
// names, point index, retry index).
class ChartNumerics {
 public:
  ChartNumerics(ChartPtr chart, Sampler sampler)
      : chart_(std::move(chart)), sampler_(sampler) {}

  const Chart& chart() const { return *chart_; }
  const Sampler& sampler() const { return sampler_; }

  SamplePoint point(int point_index, int retry) const;
  EvalResult eval(const Expr& e, int point_index, int retry);
  NumRow eval_one_form(const KForm& w, int point_index, int retry);
  // Antisymmetric coefficient matrix B with B[i][j] = coeff of e_i ^ e_j, i<j.
  NumMat eval_two_form(const KForm& w, int point_index, int retry);

  // Generic zero decision at this chart's sample points (memoized).
  bool is_zero(const Expr& e);

  // Runs fn at each of the sampler's points, retrying a point on DomainError
  // or NonGenericPoint. Collects the successful results; throws
  // SamplingExhausted when every point fails.
  template <class T>
  std::vector<T> map_points(const std::function<T(int, int)>& fn) {
    std::vector<T> out;
    for (int i = 0; i < sampler_.n_points; ++i) {
      for (int r = 0; r < sampler_.retry_limit; ++r) {
        try {
          out.push_back(fn(i, r));
        } catch (const DomainError&) {
          continue;
        } catch (const NonGenericPoint&) {
          continue;
        }
        break;
      }
    }
    if (out.empty()) throw SamplingExhausted("all sample points failed");
    return out;
  }

 private:
  ChartPtr chart_;
  Sampler sampler_;
  struct KeyHash {
    size_t operator()(const std::pair<const ExprNode*, uint32_t>& k) const {
      return std::hash<const void*>()(k.first) * 1000003u + k.second;
    }
  };
  std::unordered_map<std::pair<const ExprNode*, uint32_t>, EvalResult, KeyHash> cache_;
  std::unordered_map<const ExprNode*, bool> zero_cache_;
  std::vector<Expr> pins_;  // keeps cached nodes alive
};

// Numeric rank with relative threshold; 'matrix' is consumed.
int num_rank(NumMat matrix);
// Greedy earliest independent row subset achieving the matrix rank.
std::vector<int> independent_rows(const NumMat& matrix);

struct NumRref {
  NumMat rows;                 // reduced rows, unit pivots
  std::vector<int> pivot_cols; // aligned with rows
  F scale = 1;                 // magnitude reference of the input
};

// Reduced row echelon form; dependent rows are dropped.
NumRref num_rref(const NumMat& matrix);

// Reduces a one-form row modulo the span of rref rows.
NumRow reduce_row(const NumRref& r, NumRow row);
// Substitutes pivot directions out of a two-form; returns the complement
// block as a flattened row over complement index pairs (i<j).
NumRow reduce_two_form(const NumRref& r, const NumMat& b, int dim);
// Same reduction, returned as the antisymmetric complement-block matrix.
NumMat reduce_two_form_matrix(const NumRref& r, const NumMat& b, int dim);
// Complement coordinates (non-pivot columns) of a reduction.
std::vector<int> complement_columns(const NumRref& r, int dim);

bool row_near_zero(const NumRow& row, const F& scale);

}  // namespace dynext
