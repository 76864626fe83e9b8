#pragma once

#include <map>

#include "dynext/system.hpp"

namespace dynext {

struct SysFileError : std::runtime_error {
  SysFileError(const std::string& what, int line_, std::string field_ = "")
      : std::runtime_error(what + " (line " + std::to_string(line_) +
                           (field_.empty() ? "" : ", field " + field_) + ")"),
        line(line_),
        field(std::move(field_)) {}
  int line;
  std::string field;
};

// Parsed system-definition file: a sectioned key-value format with sections
// [system], [point], [dynamics], [candidates], [search].
struct SystemFile {
  std::vector<std::string> states;
  std::vector<std::string> inputs;
  std::vector<Expr> dynamics;  // aligned with states
  SamplePoint point;
  std::vector<Expr> candidates;
  uint64_t seed = 20260810;
  int max_order = -1;
  std::string heuristic = "none";
  std::string algorithm = "dijkstra";
  std::vector<long long> coefficients{-1, 0, 1};
  int support = 3;
  bool include_prolongations = true;
};

SystemFile parse_system_text(const std::string& text);
SystemFile parse_system_file(const std::string& path);

SystemPtr instantiate(const SystemFile& sf);

}  // namespace dynext
