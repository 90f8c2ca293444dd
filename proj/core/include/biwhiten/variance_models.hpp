#pragma once

#include "biwhiten/types.hpp"

namespace biwhiten {

// Coefficients of a quadratic variance function Var[Y] = a + b X + c X^2,
// where X = E[Y]. The coefficients pin the mean-variance relation, not a
// specific distribution family.
struct QvfParams {
  double a = 0.0;
  double b = 1.0;
  double c = 0.0;
};

// Two-parameter surface of nonnegative-count variance estimators
// alpha [ (1-beta) y + beta y^2 ]: beta interpolates between linear and
// quadratic growth, alpha sets the global scale.
struct AlphaBeta {
  double alpha;
  double beta;

  AlphaBeta(double alpha, double beta);
};

// Entries observed with probability p and replaced by zero otherwise.
struct ZeroInflation {
  double p;

  explicit ZeroInflation(double p);
};

// Var[Y] at mean x.
double qvf_variance(const QvfParams& params, double x);

// Unbiased single-observation variance estimate (a + b y + c y^2) / (1 + c).
// Throws DomainError at c = -1, where no unbiased estimate that depends only
// on the observation exists (the Bernoulli-type families).
double qvf_unbiased_estimate(const QvfParams& params, double y);

double alphabeta_estimate(const AlphaBeta& ab, double y);

// Bijection between the (alpha, beta) surface and QVFs with a = 0,
// b, c >= 0, (b, c) != (0, 0): b = alpha (1-beta) / (1 - alpha beta),
// c = alpha beta / (1 - alpha beta).
QvfParams alphabeta_to_qvf(const AlphaBeta& ab);
AlphaBeta qvf_to_alphabeta(const QvfParams& params);

// QVF of the zero-inflated observation in terms of its own mean p X:
// (a p, b, (c + 1 - p) / p).
QvfParams zero_inflated_qvf(const QvfParams& params, const ZeroInflation& zi);

// Unbiased variance estimate for a zero-inflated observation:
// (a p^2 + b p y + (1 + c - p) y^2) / (1 + c). Throws DomainError at c = -1.
double zero_inflated_estimate(const QvfParams& params, const ZeroInflation& zi, double y_bar);

}  // namespace biwhiten
