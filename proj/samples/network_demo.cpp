// Simulate a mixed-membership network, fit it, and score the estimate.

#include <iostream>

#include "conekit/metrics.hpp"
#include "conekit/models.hpp"
#include "conekit/simulators.hpp"

int main() {
  using namespace conekit;
  NetworkConfig cfg;
  cfg.n = 1000;
  cfg.K = 3;
  cfg.mean_degree = 60.0;
  cfg.seed = 7;
  const SimulatedNetwork sim = simulate_network(cfg);

  // Isolated nodes have no spectral embedding; fit on the rest.
  auto [A, kept] = remove_isolated_nodes(sim.A);
  const NetworkFit fit = fit_dcmmsb(A, 3, /*p=*/1);
  const Matrix truth = select_rows(sim.truth.Theta, kept);

  std::cout << "edges " << A.edge_count() << ", corners";
  for (auto c : fit.cone.corners) std::cout << ' ' << kept[c];
  std::cout << "\nrel L1 error " << rel_error(truth, fit.params.Theta, ErrorNorm::l1) << "\nrc_avg "
            << rc_avg(truth, fit.params.Theta) << "\nB_hat\n"
            << fit.params.B << "\n";
}
