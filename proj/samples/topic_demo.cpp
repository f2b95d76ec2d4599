// Simulate an anchor-word corpus and recover the topic matrix.

#include <iostream>

#include "conekit/metrics.hpp"
#include "conekit/models.hpp"
#include "conekit/simulators.hpp"

int main() {
  using namespace conekit;
  TopicConfig cfg;
  cfg.V = 500;
  cfg.K = 5;
  cfg.D = 5000;
  cfg.N = 200;
  cfg.seed = 3;
  const SimulatedCorpus corpus = gen_topics(cfg);

  auto [A, kept] = remove_empty_words(corpus.A);
  const TopicFit fit = fit_topics(A, 5, /*split seed=*/1);
  const Matrix truth = select_rows(corpus.truth.T, kept);

  std::cout << "anchor words found";
  for (auto c : fit.cone.corners) std::cout << ' ' << kept[c];
  std::cout << "\nl1 topic error " << l1_topic_error(truth, fit.T) << "\n";
}
