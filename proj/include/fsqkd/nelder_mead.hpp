#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fsqkd {

struct NelderMeadOptions {
    double x_tolerance = 1e-5;  ///< stop when the simplex diameter (max-norm) falls below this
    double f_tolerance = 0.0;   ///< stop when |f_worst - f_best| <= f_tolerance * (1 + |f_best|)
    int max_evaluations = 2000;
    double initial_step = 0.5;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Unconstrained Nelder-Mead minimisation with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). Bounds are the
/// caller's job, through a change of variables. Non-finite objective values
/// are treated as +infinity.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::span<const double> start, const NelderMeadOptions& options = {});

}  // namespace fsqkd
