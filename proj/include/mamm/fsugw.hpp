#pragma once

#include <limits>
#include <optional>

#include "mamm/types.hpp"

namespace mamm {

/// Coupling between control patches (rows) and original-motion patches
/// (columns). Rows always sum to `a`; columns are pulled toward `b`.
struct TransportPlan {
    Matrix plan;
    Vector a;
    Vector b;
};

struct SolverParams {
    double alpha = 0.8;
    double lambda = 0.05;  // +infinity gives a balanced column marginal
    double epsilon = 1.0;
    int mirror_steps = 100;
    int sinkhorn_steps = 200;
    double tol_objective = 1e-5;
    double tol_marginal = 1e-8;
    std::optional<Mask> mask;  // false entries are forced to zero

    void validate() const;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Individual terms of the fused semi-unbalanced GW objective at one plan.
struct ObjectiveTerms {
    double gw = 0.0;           // L_GW
    double wasserstein = 0.0;  // L_W
    double kl = 0.0;           // KL(T^T 1 || b); 0 when lambda is infinite
    double entropy = 0.0;      // H(T) = -sum T log T
    double total = 0.0;        // weighted sum the solver minimizes
    double regularized = 0.0;  // total - epsilon * H(T)
};

double wasserstein_loss(const Matrix& cost, const Matrix& plan);

/// G[i,k] = sum_{j,l} (D_Y[i,j] - D_X[k,l])^2 T[j,l]; the gradient of gw_loss is 2G.
Matrix gw_linearized_cost(const Matrix& dist_y, const Matrix& dist_x, const Matrix& plan);

double gw_loss(const Matrix& dist_y, const Matrix& dist_x, const Matrix& plan);

/// Generalized KL divergence sum c log(c/b) - c + b with 0 log 0 = 0.
double kl_divergence(const Vector& c, const Vector& b);

/// -sum T log T with 0 log 0 = 0.
double plan_entropy(const Matrix& plan);

/// `dist_w` may be null (pure GW: alpha is taken as 1).
ObjectiveTerms evaluate_objective(const Matrix& dist_y, const Matrix& dist_x, const Matrix* dist_w,
                                  const TransportPlan& plan, const SolverParams& params);

struct SinkhornResult {
    TransportPlan plan;
    int iterations = 0;
    double marginal_violation = 0.0;  // max |T1 - a| before the final row update
    bool log_domain = false;
};

/// Scales K (masked) to T = diag(u) K diag(v) with the row marginal exact and
/// the column marginal relaxed by lambda * KL. Switches to log-domain scaling
/// when the scaling vectors leave [1e-30, 1e30].
SinkhornResult semi_unbalanced_sinkhorn(const Matrix& kernel, const Vector& a, const Vector& b, double lambda,
                                        double epsilon, const Mask* mask = nullptr, int max_iterations = 200,
                                        double tolerance = 1e-8);

/// T = a b^T restricted to the mask, with rows rescaled to a.
TransportPlan initial_plan(const Vector& a, const Vector& b, const Mask* mask = nullptr);

struct FsugwResult {
    TransportPlan plan;
    ObjectiveTerms objective;
    int steps = 0;
    double marginal_violation = 0.0;
};

/// Projected mirror descent on the plan with the motion fixed. Returns the
/// iterate with the lowest objective, which is never worse than `init`.
FsugwResult solve_fsugw(const Matrix& dist_y, const Matrix& dist_x, const Matrix* dist_w,
                        const SolverParams& params, const TransportPlan& init);

}  // namespace mamm
