#include "biwhiten/variance_models.hpp"

#include <cmath>
#include <string>

namespace biwhiten {

namespace {

void require_estimable(const QvfParams& params, const char* who) {
  if (params.c == -1.0)
    throw DomainError(std::string(who) +
                      ": c = -1 admits no unbiased variance estimate from a single observation");
}

}  // namespace

AlphaBeta::AlphaBeta(double alpha, double beta) : alpha(alpha), beta(beta) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw DomainError("AlphaBeta: alpha must be positive and finite");
  if (!(beta >= 0.0) || !(beta <= 1.0))
    throw DomainError("AlphaBeta: beta must lie in [0, 1]");
}

ZeroInflation::ZeroInflation(double p) : p(p) {
  if (!(p > 0.0) || !(p <= 1.0))
    throw DomainError("ZeroInflation: observation probability must lie in (0, 1]");
}

double qvf_variance(const QvfParams& params, double x) {
  return params.a + params.b * x + params.c * x * x;
}

double qvf_unbiased_estimate(const QvfParams& params, double y) {
  require_estimable(params, "qvf_unbiased_estimate");
  return (params.a + params.b * y + params.c * y * y) / (1.0 + params.c);
}

double alphabeta_estimate(const AlphaBeta& ab, double y) {
  return ab.alpha * ((1.0 - ab.beta) * y + ab.beta * y * y);
}

QvfParams alphabeta_to_qvf(const AlphaBeta& ab) {
  const double denom = 1.0 - ab.alpha * ab.beta;
  if (denom == 0.0)
    throw DomainError("alphabeta_to_qvf: alpha * beta = 1 has no QVF counterpart");
  return {0.0, ab.alpha * (1.0 - ab.beta) / denom, ab.alpha * ab.beta / denom};
}

AlphaBeta qvf_to_alphabeta(const QvfParams& params) {
  if (params.a != 0.0)
    throw DomainError("qvf_to_alphabeta: requires a = 0");
  if (params.b < 0.0 || params.c < 0.0 || (params.b == 0.0 && params.c == 0.0))
    throw DomainError("qvf_to_alphabeta: requires b, c >= 0 with (b, c) != (0, 0)");
  return AlphaBeta{(params.b + params.c) / (1.0 + params.c), params.c / (params.b + params.c)};
}

QvfParams zero_inflated_qvf(const QvfParams& params, const ZeroInflation& zi) {
  return {params.a * zi.p, params.b, (params.c + 1.0 - zi.p) / zi.p};
}

double zero_inflated_estimate(const QvfParams& params, const ZeroInflation& zi, double y_bar) {
  require_estimable(params, "zero_inflated_estimate");
  const double p = zi.p;
  return (params.a * p * p + params.b * p * y_bar + (1.0 + params.c - p) * y_bar * y_bar) /
         (1.0 + params.c);
}

}  // namespace biwhiten
