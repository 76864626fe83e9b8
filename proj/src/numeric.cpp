#include "dynext/numeric.hpp"

#include <algorithm>

namespace dynext {

using boost::multiprecision::abs;

SamplePoint ChartNumerics::point(int point_index, int retry) const {
  return sampler_.point(chart_->coords, point_index, retry);
}

EvalResult ChartNumerics::eval(const Expr& e, int point_index, int retry) {
  uint32_t key = uint32_t(point_index) * 64u + uint32_t(retry % 64);
  auto it = cache_.find({e.get(), key});
  if (it != cache_.end()) return it->second;
  EvalResult r = evaluate_scaled(e, point(point_index, retry));
  pins_.push_back(e);
  cache_.emplace(std::make_pair(e.get(), key), r);
  return r;
}

NumRow ChartNumerics::eval_one_form(const KForm& w, int point_index, int retry) {
  NumRow row(size_t(chart_->dim()), F(0));
  for (const auto& [idx, c] : w.terms) row[idx[0]] = eval(c, point_index, retry).value;
  return row;
}

NumMat ChartNumerics::eval_two_form(const KForm& w, int point_index, int retry) {
  int d = chart_->dim();
  NumMat b(size_t(d), NumRow(size_t(d), F(0)));
  for (const auto& [idx, c] : w.terms) {
    F v = eval(c, point_index, retry).value;
    b[idx[0]][idx[1]] += v;
    b[idx[1]][idx[0]] -= v;
  }
  return b;
}

bool ChartNumerics::is_zero(const Expr& e) {
  auto it = zero_cache_.find(e.get());
  if (it != zero_cache_.end()) return it->second;
  bool result = true;
  int valid = 0;
  for (int i = 0; i < sampler_.n_points && result; ++i) {
    for (int r = 0; r < sampler_.retry_limit; ++r) {
      try {
        EvalResult res = eval(e, i, r);
        ++valid;
        F scale = res.magnitude < 1 ? F(1) : res.magnitude;
        if (abs(res.value) > kZeroTol * scale) result = false;
      } catch (const DomainError&) {
        continue;
      }
      break;
    }
  }
  if (valid == 0) throw SamplingExhausted("no sample point in the domain of: " + to_string(e));
  pins_.push_back(e);
  zero_cache_.emplace(e.get(), result);
  return result;
}

namespace {

F matrix_scale(const NumMat& m) {
  F s = 1;
  for (const auto& row : m)
    for (const F& v : row)
      if (abs(v) > s) s = abs(v);
  return s;
}

}  // namespace

int num_rank(NumMat m) {
  if (m.empty()) return 0;
  size_t rows = m.size(), cols = m[0].size();
  F tol = kZeroTol * matrix_scale(m);
  int rank = 0;
  size_t rpos = 0;
  for (size_t c = 0; c < cols && rpos < rows; ++c) {
    size_t best = rpos;
    for (size_t r = rpos + 1; r < rows; ++r)
      if (abs(m[r][c]) > abs(m[best][c])) best = r;
    if (abs(m[best][c]) <= tol) continue;
    std::swap(m[rpos], m[best]);
    for (size_t r = rpos + 1; r < rows; ++r) {
      F f = m[r][c] / m[rpos][c];
      if (f == 0) continue;
      for (size_t k = c; k < cols; ++k) m[r][k] -= f * m[rpos][k];
    }
    ++rpos;
    ++rank;
  }
  return rank;
}

std::vector<int> independent_rows(const NumMat& matrix) {
  std::vector<int> keep;
  if (matrix.empty()) return keep;
  F tol = kZeroTol * matrix_scale(matrix);
  NumMat basis;
  std::vector<int> pivots;
  for (size_t i = 0; i < matrix.size(); ++i) {
    NumRow row = matrix[i];
    for (size_t b = 0; b < basis.size(); ++b) {
      F f = row[size_t(pivots[b])];
      if (f == 0) continue;
      for (size_t k = 0; k < row.size(); ++k) row[k] -= f * basis[b][k];
    }
    size_t p = 0;
    F best = 0;
    for (size_t k = 0; k < row.size(); ++k)
      if (abs(row[k]) > best) {
        best = abs(row[k]);
        p = k;
      }
    if (best <= tol) continue;
    F inv = 1 / row[p];
    for (F& v : row) v *= inv;
    basis.push_back(std::move(row));
    pivots.push_back(int(p));
    keep.push_back(int(i));
  }
  return keep;
}

NumRref num_rref(const NumMat& matrix) {
  NumRref out;
  out.scale = matrix_scale(matrix);
  F tol = kZeroTol * out.scale;
  for (const NumRow& source : matrix) {
    NumRow row = source;
    for (size_t b = 0; b < out.rows.size(); ++b) {
      F f = row[size_t(out.pivot_cols[b])];
      if (f == 0) continue;
      for (size_t k = 0; k < row.size(); ++k) row[k] -= f * out.rows[b][k];
    }
    size_t p = 0;
    F best = 0;
    for (size_t k = 0; k < row.size(); ++k)
      if (abs(row[k]) > best) {
        best = abs(row[k]);
        p = k;
      }
    if (best <= tol) continue;
    F inv = 1 / row[p];
    for (F& v : row) v *= inv;
    // clear the new pivot from earlier rows
    for (size_t b = 0; b < out.rows.size(); ++b) {
      F f = out.rows[b][p];
      if (f == 0) continue;
      for (size_t k = 0; k < row.size(); ++k) out.rows[b][k] -= f * row[k];
    }
    out.rows.push_back(std::move(row));
    out.pivot_cols.push_back(int(p));
  }
  return out;
}

NumRow reduce_row(const NumRref& r, NumRow row) {
  for (size_t b = 0; b < r.rows.size(); ++b) {
    F f = row[size_t(r.pivot_cols[b])];
    if (f == 0) continue;
    for (size_t k = 0; k < row.size(); ++k) row[k] -= f * r.rows[b][k];
  }
  return row;
}

std::vector<int> complement_columns(const NumRref& r, int dim) {
  std::vector<int> comp;
  std::vector<char> is_pivot(size_t(dim), 0);
  for (int p : r.pivot_cols) is_pivot[size_t(p)] = 1;
  for (int i = 0; i < dim; ++i)
    if (!is_pivot[size_t(i)]) comp.push_back(i);
  return comp;
}

NumMat reduce_two_form_matrix(const NumRref& r, const NumMat& b, int dim) {
  std::vector<int> comp = complement_columns(r, dim);
  size_t c = comp.size();
  NumMat t(size_t(dim), NumRow(c, F(0)));
  for (size_t j = 0; j < c; ++j) t[size_t(comp[j])][j] = 1;
  for (size_t k = 0; k < r.rows.size(); ++k) {
    int p = r.pivot_cols[k];
    for (size_t j = 0; j < c; ++j) t[size_t(p)][j] = -r.rows[k][size_t(comp[j])];
  }
  NumMat bt(size_t(dim), NumRow(c, F(0)));
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) {
      if (b[size_t(i)][size_t(k)] == 0) continue;
      for (size_t j = 0; j < c; ++j) bt[size_t(i)][j] += b[size_t(i)][size_t(k)] * t[size_t(k)][j];
    }
  NumMat bp(c, NumRow(c, F(0)));
  for (size_t i = 0; i < c; ++i)
    for (int k = 0; k < dim; ++k) {
      if (t[size_t(k)][i] == 0) continue;
      for (size_t j = 0; j < c; ++j) bp[i][j] += t[size_t(k)][i] * bt[size_t(k)][j];
    }
  return bp;
}

NumRow reduce_two_form(const NumRref& r, const NumMat& b, int dim) {
  NumMat bp = reduce_two_form_matrix(r, b, dim);
  size_t c = bp.size();
  NumRow flat;
  flat.reserve(c * (c > 0 ? c - 1 : 0) / 2);
  for (size_t i = 0; i < c; ++i)
    for (size_t j = i + 1; j < c; ++j) flat.push_back(bp[i][j]);
  return flat;
}

bool row_near_zero(const NumRow& row, const F& scale) {
  F tol = kZeroTol * (scale < 1 ? F(1) : scale);
  for (const F& v : row)
    if (abs(v) > tol) return false;
  return true;
}

}  // namespace dynext
