#pragma once

// Reference implementations written straight from the formulas, sharing no
// code with the library. Unit and acceptance tests compare against these.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fedhumor/features.hpp"
#include "fedhumor/labeling.hpp"
#include "fedhumor/model.hpp"

namespace fedhumor::testing {

// Mean loss in long double; the finite-difference oracle for gradients.
inline long double oracle_loss(const ModelParams& p, const FeatureMatrix& xs, const std::vector<int>& ys,
                        LossKind kind, ClassPriors priors, double beta) {
  long double total = 0.0L;
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    long double z[2];
    for (int c = 0; c < 2; ++c) {
      z[c] = p.bias[c];
      for (std::size_t d = 0; d < p.dim; ++d) z[c] += (long double)p.weights[c * p.dim + d] * xs.row(i)[d];
    }
    const long double m = std::max(z[0], z[1]);
    const long double e0 = std::exp(z[0] - m), e1 = std::exp(z[1] - m);
    const long double pr[2] = {e0 / (e0 + e1), e1 / (e0 + e1)};
    if (kind == LossKind::plain_nll) {
      total -= std::log(pr[ys[i]]);
      continue;
    }
    const long double s[2] = {pr[0] / std::pow((long double)priors.negative, (long double)beta),
                              pr[1] / std::pow((long double)priors.positive, (long double)beta)};
    const long double lse = std::max(s[0], s[1]) +
                            std::log(std::exp(s[0] - std::max(s[0], s[1])) + std::exp(s[1] - std::max(s[0], s[1])));
    if (kind == LossKind::scaled_nll) {
      total -= s[ys[i]] - lse;
    } else {
      total -= (s[0] - lse) + (s[1] - lse);
    }
  }
  return total / xs.rows();
}

struct Prf {
  double p, r, f1;
};

// Per-class precision/recall/F1, then the plain average. Class 0 treats
// negatives as the positive class, so its tp is the matrix's tn.
inline Prf oracle_macro(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  auto ratio = [](double a, double b) { return b == 0.0 ? 0.0 : a / b; };
  const double p1 = ratio(tp, tp + fp), r1 = ratio(tp, tp + fn);
  const double p0 = ratio(tn, tn + fn), r0 = ratio(tn, tn + fp);
  const double f1_1 = ratio(2 * p1 * r1, p1 + r1), f1_0 = ratio(2 * p0 * r0, p0 + r0);
  return {(p0 + p1) / 2, (r0 + r1) / 2, (f1_0 + f1_1) / 2};
}

}  // namespace fedhumor::testing
