#include "dynext/sysfile.hpp"

#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

#include "dynext/parser.hpp"

namespace dynext {

namespace {

struct Value {
  enum Kind { String, Integer, Boolean, Array } kind;
  std::string str;
  long long num = 0;
  bool flag = false;
  std::vector<Value> items;
};

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

Value parse_value(const std::string& raw, int line) {
  std::string s = strip(raw);
  if (s.empty()) throw SysFileError("missing value", line);
  Value v;
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') throw SysFileError("unterminated string", line);
    v.kind = Value::String;
    v.str = s.substr(1, s.size() - 2);
    return v;
  }
  if (s == "true" || s == "false") {
    v.kind = Value::Boolean;
    v.flag = s == "true";
    return v;
  }
  if (s.front() == '[') {
    if (s.back() != ']') throw SysFileError("unterminated array", line);
    v.kind = Value::Array;
    std::string body = s.substr(1, s.size() - 2);
    std::string item;
    bool in_string = false;
    for (char c : body) {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        if (!strip(item).empty()) v.items.push_back(parse_value(item, line));
        item.clear();
      } else {
        item += c;
      }
    }
    if (!strip(item).empty()) v.items.push_back(parse_value(item, line));
    return v;
  }
  try {
    size_t used = 0;
    long long n = std::stoll(s, &used);
    if (used == s.size()) {
      v.kind = Value::Integer;
      v.num = n;
      return v;
    }
  } catch (...) {
  }
  throw SysFileError("cannot parse value: " + s, line);
}

bool valid_identifier(const std::string& s) {
  if (s.empty() || !std::isalpha((unsigned char)s[0])) return false;
  for (char c : s)
    if (!std::isalnum((unsigned char)c) && c != '_') return false;
  static const char* reserved[] = {"sin", "cos", "tan", "cot", "exp", "ln", "t"};
  for (const char* r : reserved)
    if (s == r) return false;
  return true;
}

Expr parse_expression(const std::string& text, int line, const std::string& field) {
  try {
    return parse_expr(text);
  } catch (const ParseError& e) {
    throw SysFileError(std::string("expression error: ") + e.what(), line, field);
  }
}

Q parse_rational(const std::string& text, int line, const std::string& field) {
  static const std::regex re(R"(^\s*(-?\d+)\s*(/\s*(\d+))?\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re))
    throw SysFileError("expected a rational p or p/q: " + text, line, field);
  Q num(m[1].str());
  if (m[3].matched) {
    Q den(m[3].str());
    if (den == 0) throw SysFileError("zero denominator", line, field);
    return num / den;
  }
  return num;
}

}  // namespace

SystemFile parse_system_text(const std::string& text) {
  SystemFile sf;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  std::map<std::string, Expr> dynamics;
  std::map<std::string, int> dynamics_line;
  bool have_states = false;

  while (std::getline(in, line)) {
    ++lineno;
    std::string s = strip(strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw SysFileError("malformed section header", lineno);
      section = strip(s.substr(1, s.size() - 2));
      if (section != "system" && section != "point" && section != "dynamics" &&
          section != "candidates" && section != "search")
        throw SysFileError("unknown section: " + section, lineno);
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos) throw SysFileError("expected key = value", lineno);
    std::string key = strip(s.substr(0, eq));
    std::string raw = s.substr(eq + 1);
    if (section.empty()) throw SysFileError("key outside any section", lineno, key);

    if (section == "system") {
      Value v = parse_value(raw, lineno);
      if (key == "states" || key == "inputs") {
        if (v.kind != Value::Array) throw SysFileError("expected an array", lineno, key);
        std::vector<std::string> names;
        for (const Value& item : v.items) {
          if (item.kind != Value::String)
            throw SysFileError("expected string entries", lineno, key);
          if (!valid_identifier(item.str))
            throw SysFileError("invalid coordinate name: " + item.str, lineno, key);
          names.push_back(item.str);
        }
        if (key == "states") {
          sf.states = names;
          have_states = true;
        } else {
          sf.inputs = names;
        }
      } else {
        throw SysFileError("unknown key in [system]: " + key, lineno, key);
      }
    } else if (section == "point") {
      Value v = parse_value(raw, lineno);
      if (v.kind != Value::String) throw SysFileError("point values are strings", lineno, key);
      if (sf.point.count(key)) throw SysFileError("duplicate point entry", lineno, key);
      sf.point[key] = parse_rational(v.str, lineno, key);
    } else if (section == "dynamics") {
      if (dynamics.count(key)) throw SysFileError("duplicate dynamics for state", lineno, key);
      Value v = parse_value(raw, lineno);
      if (v.kind != Value::String) throw SysFileError("dynamics entries are strings", lineno, key);
      dynamics[key] = parse_expression(v.str, lineno, key);
      dynamics_line[key] = lineno;
    } else if (section == "candidates") {
      if (key != "outputs") throw SysFileError("unknown key in [candidates]: " + key, lineno, key);
      Value v = parse_value(raw, lineno);
      if (v.kind != Value::Array) throw SysFileError("expected an array", lineno, key);
      for (const Value& item : v.items) {
        if (item.kind != Value::String) throw SysFileError("expected string entries", lineno, key);
        sf.candidates.push_back(parse_expression(item.str, lineno, key));
      }
    } else if (section == "search") {
      Value v = parse_value(raw, lineno);
      if (key == "seed") {
        if (v.kind != Value::Integer) throw SysFileError("seed must be an integer", lineno, key);
        sf.seed = uint64_t(v.num);
      } else if (key == "max_order") {
        if (v.kind != Value::Integer) throw SysFileError("max_order must be an integer", lineno, key);
        sf.max_order = int(v.num);
      } else if (key == "heuristic") {
        if (v.kind != Value::String || (v.str != "none" && v.str != "lid" && v.str != "cover"))
          throw SysFileError("heuristic must be none|lid|cover", lineno, key);
        sf.heuristic = v.str;
      } else if (key == "algorithm") {
        if (v.kind != Value::String || (v.str != "dijkstra" && v.str != "astar"))
          throw SysFileError("algorithm must be dijkstra|astar", lineno, key);
        sf.algorithm = v.str;
      } else if (key == "coefficients") {
        if (v.kind != Value::Array) throw SysFileError("expected an array", lineno, key);
        sf.coefficients.clear();
        for (const Value& item : v.items) {
          if (item.kind != Value::Integer)
            throw SysFileError("coefficients must be integers", lineno, key);
          sf.coefficients.push_back(item.num);
        }
      } else if (key == "support") {
        if (v.kind != Value::Integer) throw SysFileError("support must be an integer", lineno, key);
        sf.support = int(v.num);
      } else if (key == "include_prolongations") {
        if (v.kind != Value::Boolean) throw SysFileError("expected true/false", lineno, key);
        sf.include_prolongations = v.flag;
      } else {
        throw SysFileError("unknown key in [search]: " + key, lineno, key);
      }
    }
  }

  if (!have_states || sf.states.empty()) throw SysFileError("empty states list", 0, "states");
  if (sf.inputs.empty()) throw SysFileError("empty inputs list", 0, "inputs");
  for (size_t i = 0; i < sf.states.size(); ++i)
    for (size_t j = i + 1; j < sf.states.size(); ++j)
      if (sf.states[i] == sf.states[j])
        throw SysFileError("duplicate state: " + sf.states[i], 0, "states");
  for (const std::string& u : sf.inputs)
    for (const std::string& x : sf.states)
      if (u == x) throw SysFileError("coordinate is both input and state: " + u, 0, "inputs");

  for (const std::string& x : sf.states) {
    auto it = dynamics.find(x);
    if (it == dynamics.end())
      throw SysFileError("missing dynamics for state " + x, 0, x);
    sf.dynamics.push_back(it->second);
  }
  for (const auto& [key, e] : dynamics) {
    (void)e;
    bool known = false;
    for (const std::string& x : sf.states)
      if (x == key) known = true;
    if (!known) throw SysFileError("dynamics given for undeclared state " + key,
                                   dynamics_line[key], key);
  }
  return sf;
}

SystemFile parse_system_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw SysFileError("cannot open file: " + path, 0);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_system_text(ss.str());
}

SystemPtr instantiate(const SystemFile& sf) {
  for (const auto& [name, value] : sf.point) {
    (void)value;
    bool known = name == "t";
    for (const std::string& x : sf.states) known = known || x == name;
    for (const std::string& u : sf.inputs) known = known || u == name;
    if (!known) throw SysFileError("point assigns undeclared coordinate " + name, 0, name);
  }
  return build_contact_ideal(sf.states, sf.inputs, sf.dynamics, sf.seed, sf.point);
}

}  // namespace dynext
