#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace dynext {

using Q = boost::multiprecision::cpp_rational;

enum class ExprKind : uint8_t { Rational, Var, Apply, Power, Product, Sum };
enum class FuncKind : uint8_t { Sin, Cos, Tan, Cot, Exp, Ln };

const char* func_name(FuncKind f);

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

// Immutable expression tree node. Always in normal form: sums and products
// are flattened, rational constants folded, children sorted under a fixed
// structural order, and like terms / repeated factors merged. Build only
// through the factory functions below.
struct ExprNode {
  ExprKind kind;
  FuncKind func = FuncKind::Sin;  // Apply only
  long long exponent = 0;         // Power only
  Q value;                        // Rational only
  std::string var;                // Var only
  std::vector<Expr> kids;         // Sum/Product children; Power base; Apply arg
  uint64_t hash = 0;
  uint32_t size = 1;  // tree node count, saturating
};

Expr rat(Q v);
Expr rat(long long p, long long q = 1);
Expr var(std::string name);
Expr sum(std::vector<Expr> terms);
Expr product(std::vector<Expr> factors);
Expr power(const Expr& base, long long exponent);
Expr apply_func(FuncKind f, const Expr& arg);

Expr add(const Expr& a, const Expr& b);
Expr sub(const Expr& a, const Expr& b);
Expr mul(const Expr& a, const Expr& b);
Expr div(const Expr& a, const Expr& b);
Expr neg(const Expr& a);

inline Expr zero() { return rat(0); }
inline Expr one() { return rat(1); }

bool is_zero_expr(const Expr& e);
bool is_one_expr(const Expr& e);

// Fixed structural total order; negative/zero/positive like strcmp.
int compare_expr(const Expr& a, const Expr& b);
bool equal_expr(const Expr& a, const Expr& b);

// Re-normalizes an arbitrary tree bottom-up. Factory output is already
// normal, so normalize(normalize(e)) == normalize(e) structurally.
Expr normalize(const Expr& e);

// Exact partial derivative with respect to a symbol; other symbols are
// treated as constants.
Expr differentiate(const Expr& e, const std::string& v);

// Replaces every occurrence of the symbol by the given expression.
Expr substitute(const Expr& e, const std::string& v, const Expr& replacement);

std::set<std::string> free_symbols(const Expr& e);
bool depends_on(const Expr& e, const std::string& v);

std::string to_string(const Expr& e);

}  // namespace dynext
