#pragma once

#include <string>
#include <vector>

#include "dscnn/network.hpp"

namespace dscnn {

// Central finite-difference verification of every analytic gradient.
// Each case draws random instances, scalarizes the layer output with a
// random projection (or the MSE loss for the end-to-end cases), and compares
// every gradient component against (f(x+h) - f(x-h)) / 2h.
//
// relative error = |a - b| / max(|a|, |b|, 1e-3); the floor keeps the
// comparison meaningful for near-zero components where the difference
// quotient is dominated by rounding.
double gradcheck_relative_error(double a, double b);

// The difference quotient is only a valid oracle where the loss is smooth at
// the h scale; a max-pool argmax or ReLU mask flipping inside [x-2h, x+2h]
// corrupts it. Components where the central differences at steps h and 2h
// disagree are therefore excluded, and a case fails if more than 5% of its
// components had to be excluded.
struct GradCheckCase {
  std::string name;
  int64_t instances = 0;
  int64_t components = 0;   // compared against the analytic gradient
  int64_t skipped = 0;      // excluded as non-smooth at the h scale
  double max_rel_err = 0.0;
  bool pass = true;
};

struct GradCheckOptions {
  int64_t instances = 20;
  double step = 1e-5;
  double tolerance = 1e-4;
  uint64_t seed = 1;
};

// Cases: conv2d, conv3d, maxpool2d, maxpool3d, batchnorm, linear, relu, mse,
// and one tiny end-to-end network per variant.
std::vector<GradCheckCase> run_gradient_checks(const GradCheckOptions& opts = {});

}  // namespace dscnn
