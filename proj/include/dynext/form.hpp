#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynext/expr.hpp"

namespace dynext {

struct ChartMismatch : std::runtime_error {
  explicit ChartMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct DegreeError : std::runtime_error {
  explicit DegreeError(const std::string& what) : std::runtime_error(what) {}
};

// Coordinate chart on the extended manifold. Layout is fixed for the chart's
// lifetime: index 0 is time, then inputs, then states.
struct Chart {
  std::vector<std::string> coords;
  int n_inputs = 0;
  int n_states = 0;

  int dim() const { return int(coords.size()); }
  int time_index() const { return 0; }
  int input_begin() const { return 1; }
  int input_end() const { return 1 + n_inputs; }
  int state_begin() const { return 1 + n_inputs; }
  int state_end() const { return 1 + n_inputs + n_states; }
  bool is_input(int i) const { return i >= input_begin() && i < input_end(); }
  bool is_state(int i) const { return i >= state_begin() && i < state_end(); }
  const std::string& coord(int i) const { return coords[size_t(i)]; }
  int index_of(const std::string& name) const;      // -1 when absent
  int require_index(const std::string& name) const; // throws UnknownSymbolError
  std::vector<std::string> input_names() const;
  std::vector<std::string> state_names() const;
  std::string fingerprint() const;
};

using ChartPtr = std::shared_ptr<const Chart>;

ChartPtr make_chart(const std::vector<std::string>& inputs,
                    const std::vector<std::string>& states);

// Strictly increasing coordinate-index tuple.
using IndexTuple = std::vector<uint8_t>;

// Degree-k differential form with sparse tuple-indexed storage. Coefficients
// are kept exactly; a coefficient is dropped only when structurally zero.
struct KForm {
  ChartPtr chart;
  int degree = 0;
  std::map<IndexTuple, Expr> terms;  // keys strictly increasing, length == degree

  bool is_zero() const { return terms.empty(); }
  Expr coefficient(const IndexTuple& idx) const;
  Expr scalar() const;  // degree-0 payload
};

struct VectorField {
  ChartPtr chart;
  std::vector<Expr> components;  // one per chart coordinate
};

KForm zero_form(ChartPtr chart, int degree);
KForm scalar_form(ChartPtr chart, Expr value);
KForm coordinate_differential(ChartPtr chart, int coord_index);
KForm coordinate_differential(ChartPtr chart, const std::string& name);
// Builds a 1-form from (coordinate name, coefficient) pairs.
KForm one_form(ChartPtr chart, const std::vector<std::pair<std::string, Expr>>& coeffs);

KForm form_add(const KForm& a, const KForm& b);
KForm form_sub(const KForm& a, const KForm& b);
KForm form_scale(const KForm& a, const Expr& s);

KForm wedge(const KForm& a, const KForm& b);
KForm exterior_derivative(const KForm& a);
KForm interior_product(const VectorField& x, const KForm& a);
// Cartan's formula: i_X d a + d i_X a.
KForm lie_derivative(const VectorField& x, const KForm& a);

// Differential of a scalar function on the chart.
KForm differential(ChartPtr chart, const Expr& f);
// Directional derivative of a scalar function along a vector field.
Expr lie_scalar(const VectorField& x, const Expr& f);

std::string to_string(const KForm& a);

}  // namespace dynext
