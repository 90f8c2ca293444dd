#pragma once

#include <string>
#include <vector>

#include "biwhiten/biwhiten.hpp"
#include "biwhiten/simgen.hpp"

namespace biwhiten {

// --model strings: poisson | binomial:L | negbinomial:R | genpoisson:ETA |
// qvf:a,b,c | alphabeta:a,b
VarianceModel parse_model(const std::string& text);

// --family strings for simulation: poisson | binomial:L | negbinomial:R |
// genpoisson:ETA
NoiseFamily parse_family(const std::string& text);

// --beta-grid start:step:end (inclusive of end up to rounding)
std::vector<double> parse_beta_grid(const std::string& text);

// lognormal:S | expuniform:H | uniform:LO,HI
FactorDist parse_factor_dist(const std::string& text);

// Entry point behind the binary. Exit codes: 0 success, 1 domain/data
// errors, 2 usage errors.
int cli_main(int argc, const char* const* argv);

}  // namespace biwhiten
