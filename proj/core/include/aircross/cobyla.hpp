#pragma once

#include <functional>
#include <span>
#include <vector>

namespace aircross {

// Outcome of a derivative-free constrained minimization run.
enum class CobylaStatus {
    TrustRegionConverged,  // trust region contracted down to rho_end
    EvaluationLimit,       // stopped by max_evals
    NumericalBreakdown,    // simplex inverse lost accuracy
};

struct CobylaResult {
    std::vector<double> x;
    double objective = 0.0;      // f at x
    double max_violation = 0.0;  // largest constraint violation at x
    int evaluations = 0;
    CobylaStatus status = CobylaStatus::TrustRegionConverged;

    bool converged() const { return status == CobylaStatus::TrustRegionConverged; }
};

// Objective/constraint evaluation: fill f with the objective and con[k] with
// the m constraint values; the minimizer drives all con[k] toward
// nonnegativity while decreasing f.
using CobylaCallback =
    std::function<void(std::span<const double> x, double& f, std::span<double> con)>;

// Minimizes f(x) subject to con_k(x) >= 0, k = 0..m-1, by Powell's method of
// linear approximations over a moving simplex inside a contracting trust
// region (COBYLA; M. J. D. Powell, 1992/1994).  Reimplemented here from the
// published algorithm with zero-based indexing.  rho_begin is a reasonable
// initial change to the variables, rho_end the required final accuracy.
CobylaResult cobyla_minimize(int n, int m, std::span<const double> x0, double rho_begin,
                             double rho_end, int max_evals, const CobylaCallback& calcfc);

}  // namespace aircross
