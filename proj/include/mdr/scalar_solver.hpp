#ifndef MDR_SCALAR_SOLVER_HPP
#define MDR_SCALAR_SOLVER_HPP

#include <vector>

namespace mdr {

/// Scalar source: variance var_x, individual distortion caps d (one per
/// description), central cap d0.  Valid when 0 < d0 < d_l < var_x.
struct ScalarInstance {
    double var_x;
    std::vector<double> d;
    double d0;

    int l() const { return static_cast<int>(d.size()); }
};

/// Which regime the optimal coupling lands in.  The classifier evaluates
///   f(a) = 1/(s0 + a) - sum_l 1/(s_l + a),   s_l = d_l var_x/(var_x - d_l),
/// at a = 0 and a = var_x.
enum class ScalarCase {
    interior,  // f(0) > 0 > f(var_x): root a* in (0, var_x)
    zero,      // f(0) <= 0: a* = 0, central cap is slack
    saturated, // f(var_x) >= 0: a* = var_x, individual cap L is slack
};

const char* to_string(ScalarCase c);

struct ScalarSolution {
    ScalarCase scase;
    double a_star;
    double sum_rate_nats;
    std::vector<double> sigma2;     // noise variances of the achieving scheme
    std::vector<double> d_achieved; // distortions the scheme actually hits
    double d0_achieved;
    double residual; // |f(a*)| in the interior case, 0 otherwise
};

ScalarCase classify(const ScalarInstance& inst);

/// Exact sum rate and achieving scheme for a scalar instance.  Interior
/// roots come from bisection driven to |f| <= 1e-12 (200 iteration cap).
ScalarSolution solve(const ScalarInstance& inst);

} // namespace mdr

#endif
