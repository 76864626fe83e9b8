// Compares the serial reference expansion against the OpenMP path on the
// bundled systems: one frontier expansion and a pure-prolongation sweep.
#include <omp.h>

#include <iostream>
#include <string>

#include "dynext/report.hpp"

using namespace dynext;

namespace {

double time_expand(const SystemPtr& sys, bool parallel) {
  CandidateConfig cfg;
  double start = omp_get_wtime();
  std::vector<ArrowLog> log;
  auto children = enumerate_primitive_arrows(sys, cfg, HeuristicKind::None, parallel, &log);
  double elapsed = omp_get_wtime() - start;
  std::cout << "  children: " << children.size() << ", rejected: " << log.size() << "\n";
  return elapsed;
}

double time_sweep(const SystemPtr& sys, int order, bool parallel) {
  double start = omp_get_wtime();
  auto sweep = prolongation_sweep(sys, order, parallel);
  double elapsed = omp_get_wtime() - start;
  std::cout << "  profiles: " << sweep.size() << "\n";
  return elapsed;
}

}  // namespace

int main(int argc, char** argv) {
  std::string dir = argc > 1 ? argv[1] : "corpus";
  int sweep_order = argc > 2 ? std::stoi(argv[2]) : 3;

  SystemFile sf = parse_system_file(dir + "/first_order_extension.toml");
  std::cout << "threads available: " << omp_get_max_threads() << "\n";

  std::cout << "frontier expansion (serial reference)\n";
  SystemPtr sys_serial = instantiate(sf);
  double ts = time_expand(sys_serial, false);
  std::cout << "  time: " << ts << " s\n";

  std::cout << "frontier expansion (OpenMP)\n";
  SystemPtr sys_parallel = instantiate(sf);
  double tp = time_expand(sys_parallel, true);
  std::cout << "  time: " << tp << " s, speedup x" << (tp > 0 ? ts / tp : 0) << "\n";

  std::cout << "prolongation sweep to order " << sweep_order << " (serial reference)\n";
  SystemPtr sweep_serial = instantiate(sf);
  double ss = time_sweep(sweep_serial, sweep_order, false);
  std::cout << "  time: " << ss << " s\n";

  std::cout << "prolongation sweep to order " << sweep_order << " (OpenMP)\n";
  SystemPtr sweep_parallel = instantiate(sf);
  double sp = time_sweep(sweep_parallel, sweep_order, true);
  std::cout << "  time: " << sp << " s, speedup x" << (sp > 0 ? ss / sp : 0) << "\n";
  return 0;
}
