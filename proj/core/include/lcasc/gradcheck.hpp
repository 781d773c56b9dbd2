#pragma once

#include <string>
#include <vector>

#include "lcasc/model.hpp"

namespace lcasc {

struct GradCheckResult {
  double max_rel_err = 0.0;
  int checks = 0;
};

/* Central-difference check of one layer's backward pass against f(theta) =
 * sum_i r_i * y_i with a fixed random upstream r. Probes every input element
 * and every parameter element; the error metric is |a-n| / max(1, |a|, |n|).
 * Dropout layers are replayed by re-seeding the forward rng. ReLU inputs
 * should sit away from zero; h is the central-difference step. */
GradCheckResult check_layer(Layer& layer, const Tensor& x, uint64_t seed,
                            double h = 1e-5);

/* End-to-end check on a whole network: loss = KL(y || softmax(logits)) plus
 * the l2 term, analytic gradients from loss_gradient + backward_from_logits,
 * numeric from central differences. Probes max_probes randomly chosen
 * parameter elements per tensor plus a sample of input elements. */
GradCheckResult check_network(Network& net, const Tensor& x,
                              const std::vector<int>& label_indices,
                              double l2, uint64_t seed, int max_probes = 4,
                              double h = 1e-5);

struct SuiteLine {
  std::string name;
  GradCheckResult result;
  bool ok = false;
};

/* Per-layer sweep over every layer kind at small sizes, one line each.
 * tol is the pass threshold on max_rel_err. */
std::vector<SuiteLine> layer_suite(uint64_t seed, double tol = 1e-4);

}  // namespace lcasc
