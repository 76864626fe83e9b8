#include <CLI11.hpp>
#include <omp.h>

#include <fstream>
#include <iostream>

#include "dynext/parser.hpp"
#include "dynext/report.hpp"

namespace {

int emit_error(const std::string& kind, const std::string& message, int code,
               const std::string& out_path) {
  dynext::Json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  std::string text = dynext::render_report(j);
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    f << text;
  } else {
    std::cout << text;
  }
  return code;
}

dynext::SamplePoint parse_point_flag(const std::string& spec) {
  dynext::SamplePoint p;
  std::istringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    size_t eq = item.find('=');
    if (eq == std::string::npos)
      throw dynext::SysFileError("--point expects name=value pairs", 0, item);
    std::string name = item.substr(0, eq);
    std::string value = item.substr(eq + 1);
    size_t slash = value.find('/');
    if (slash == std::string::npos) {
      p[name] = dynext::Q(value);
    } else {
      p[name] = dynext::Q(value.substr(0, slash)) / dynext::Q(value.substr(slash + 1));
    }
  }
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynext: feedback-linearizability analysis and minimal dynamic extension search"};
  app.require_subcommand(1);

  std::string file, out_path, heuristic, algorithm, point_spec;
  long long seed = -1;
  int max_order = -1000;
  int threads = 0;
  bool literal_lh = false, restrict_nonincr = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("file", file, "system definition file")->required();
    cmd->add_option("--seed", seed, "sampler seed");
    cmd->add_option("--out", out_path, "write the report to this path");
    cmd->add_option("--point", point_spec, "base point, e.g. x=1/2,y=3");
    cmd->add_option("--threads", threads, "worker threads (0 = library default)");
  };

  CLI::App* check = app.add_subcommand("check", "derived flag, involutivity, controllability, Lid");
  add_common(check);
  CLI::App* search = app.add_subcommand("search", "minimal dynamic extension search");
  add_common(search);
  search->add_option("--heuristic", heuristic, "none|lid|cover");
  search->add_option("--algorithm", algorithm, "dijkstra|astar");
  search->add_option("--max-order", max_order, "search depth bound");
  search->add_flag("--literal-lh", literal_lh, "use the literal adjusted-loss sign");
  search->add_flag("--restrict-nonincreasing", restrict_nonincr,
                   "drop arrows that increase the heuristic");
  CLI::App* enumerate = app.add_subcommand("enumerate", "pure-prolongation sweep");
  add_common(enumerate);
  enumerate->add_option("--max-order", max_order, "total prolongation order");

  CLI11_PARSE(app, argc, argv);

  try {
    dynext::SystemFile sf = dynext::parse_system_file(file);
    if (seed >= 0) sf.seed = uint64_t(seed);
    if (!heuristic.empty()) {
      if (heuristic != "none" && heuristic != "lid" && heuristic != "cover")
        return emit_error("input", "--heuristic must be none|lid|cover", 1, out_path);
      sf.heuristic = heuristic;
    }
    if (!algorithm.empty()) {
      if (algorithm != "dijkstra" && algorithm != "astar")
        return emit_error("input", "--algorithm must be dijkstra|astar", 1, out_path);
      sf.algorithm = algorithm;
    }
    if (max_order != -1000) sf.max_order = max_order;
    if (!point_spec.empty()) {
      for (const auto& [k, v] : parse_point_flag(point_spec)) sf.point[k] = v;
    }
    if (threads > 0) omp_set_num_threads(threads);

    dynext::SystemPtr sys = dynext::instantiate(sf);
    dynext::SearchOptions opts = dynext::options_from_file(sf);
    opts.literal_reweighting = literal_lh;
    opts.restrict_nonincreasing = restrict_nonincr;
    opts.parallel = threads != 1;

    std::string command = check->parsed() ? "check" : (search->parsed() ? "search" : "enumerate");
    int order = sf.max_order >= 0 ? sf.max_order : 3;
    dynext::Json report = dynext::make_report(sf, sys, command, opts, order);
    std::string text = dynext::render_report(report);
    if (!out_path.empty()) {
      std::ofstream f(out_path);
      if (!f) return emit_error("io", "cannot write " + out_path, 1, "");
      f << text;
    } else {
      std::cout << text;
    }
    return 0;
  } catch (const dynext::SysFileError& e) {
    return emit_error("input", e.what(), 1, out_path);
  } catch (const dynext::UnknownSymbolError& e) {
    return emit_error("input", e.what(), 1, out_path);
  } catch (const dynext::ParseError& e) {
    return emit_error("input", e.what(), 1, out_path);
  } catch (const std::invalid_argument& e) {
    return emit_error("input", e.what(), 1, out_path);
  } catch (const dynext::GenericityError& e) {
    return emit_error("genericity", e.what(), 2, out_path);
  } catch (const dynext::SamplingExhausted& e) {
    return emit_error("genericity", e.what(), 2, out_path);
  } catch (const std::exception& e) {
    return emit_error("engine", e.what(), 2, out_path);
  }
}
