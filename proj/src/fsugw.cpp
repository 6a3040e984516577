#include "mamm/fsugw.hpp"

#include <cmath>
#include <string>

#include "mamm/error.hpp"

namespace mamm {

namespace {

constexpr double kScaleLimit = 1e30;
// Plan mass below this is dropped: subnormal entries slow matrix products by
// more than an order of magnitude and carry no information at 1e-8 tolerances.
constexpr double kNegligible = 1e-200;

double soft_exponent(double lambda, double epsilon) {
    if (std::isinf(lambda)) return 1.0;
    return lambda / (lambda + epsilon);
}

bool out_of_range(const Vector& s) {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const double x = s[i];
        if (!std::isfinite(x) || x > kScaleLimit || (x > 0.0 && x < 1.0 / kScaleLimit)) return true;
    }
    return false;
}

void check_rows(const Matrix& kernel) {
    for (Eigen::Index i = 0; i < kernel.rows(); ++i) {
        if (!(kernel.row(i).maxCoeff() > 0.0)) {
            throw SolverError("infeasible transport: row " + std::to_string(i) + " has no admissible column");
        }
    }
}

void check_marginals(const Matrix& kernel, const Vector& a, const Vector& b) {
    if (a.size() != kernel.rows() || b.size() != kernel.cols()) {
        throw InputError("marginal sizes do not match the kernel");
    }
    if ((a.array() <= 0.0).any() || (b.array() <= 0.0).any()) throw InputError("marginals must be positive");
}

// log(sum exp(x)) over entries, -inf when every entry is -inf.
double log_sum_exp(const auto& x) {
    const double m = x.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((x.array() - m).exp().sum());
}

std::optional<SinkhornResult> scale_direct(const Matrix& kernel, const Vector& a, const Vector& b, double phi,
                                           int max_iterations, double tolerance) {
    const Eigen::Index rows = kernel.rows();
    const Eigen::Index cols = kernel.cols();
    Vector u(rows), v = Vector::Ones(cols);
    Vector kv = kernel * v;
    Vector ktu(cols);
    SinkhornResult result;
    for (int it = 0; it < max_iterations; ++it) {
        u = a.cwiseQuotient(kv);
        if (phi > 0.0) {
            ktu.noalias() = kernel.transpose() * u;
            for (Eigen::Index k = 0; k < cols; ++k) {
                v[k] = ktu[k] > 0.0 ? (phi == 1.0 ? b[k] / ktu[k] : std::pow(b[k] / ktu[k], phi)) : 0.0;
            }
        }
        if (out_of_range(u) || out_of_range(v)) return std::nullopt;
        kv.noalias() = kernel * v;
        result.iterations = it + 1;
        result.marginal_violation = (u.cwiseProduct(kv) - a).cwiseAbs().maxCoeff();
        if (result.marginal_violation <= tolerance) break;
    }
    u = a.cwiseQuotient(kv);
    if (out_of_range(u)) return std::nullopt;
    result.plan.plan = u.asDiagonal() * kernel * v.asDiagonal();
    result.plan.a = a;
    result.plan.b = b;
    return result;
}

SinkhornResult scale_log(const Matrix& log_kernel, const Vector& a, const Vector& b, double phi, int max_iterations,
                         double tolerance) {
    const Eigen::Index rows = log_kernel.rows();
    const Eigen::Index cols = log_kernel.cols();
    const Vector log_a = a.array().log();
    const Vector log_b = b.array().log();
    Vector f(rows), g = Vector::Zero(cols);
    Vector row_lse(rows);
    auto update_row_lse = [&] {
        for (Eigen::Index i = 0; i < rows; ++i) row_lse[i] = log_sum_exp(log_kernel.row(i).transpose() + g);
    };
    update_row_lse();
    SinkhornResult result;
    result.log_domain = true;
    for (int it = 0; it < max_iterations; ++it) {
        f = log_a - row_lse;
        if (phi > 0.0) {
            for (Eigen::Index k = 0; k < cols; ++k) {
                const double lse = log_sum_exp(log_kernel.col(k) + f);
                g[k] = std::isfinite(lse) ? phi * (log_b[k] - lse) : -kInfinity;
            }
        }
        update_row_lse();
        result.iterations = it + 1;
        result.marginal_violation = ((f + row_lse).array().exp() - a.array()).abs().maxCoeff();
        if (result.marginal_violation <= tolerance) break;
    }
    f = log_a - row_lse;
    Matrix plan(rows, cols);
    for (Eigen::Index k = 0; k < cols; ++k) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double l = log_kernel(i, k);
            plan(i, k) = std::isfinite(l) && std::isfinite(g[k]) ? std::exp(f[i] + l + g[k]) : 0.0;
        }
    }
    result.plan = TransportPlan{std::move(plan), a, b};
    return result;
}

// Projection of exp(log_kernel) onto the constraint set; log_kernel is -inf
// where transport is forbidden.
SinkhornResult project(Matrix log_kernel, const Vector& a, const Vector& b, double phi, int max_iterations,
                       double tolerance) {
    for (Eigen::Index i = 0; i < log_kernel.rows(); ++i) {
        const double m = log_kernel.row(i).maxCoeff();
        if (!std::isfinite(m)) {
            throw SolverError("infeasible transport: row " + std::to_string(i) + " has no admissible column");
        }
        log_kernel.row(i).array() -= m;  // absorbed exactly by the row scaling
    }
    // also covers -inf, which vectorized exp maps to a subnormal instead of 0
    const double floor = std::log(kNegligible);
    const Matrix kernel = (log_kernel.array() < floor).select(0.0, log_kernel.array().exp());
    if (auto direct = scale_direct(kernel, a, b, phi, max_iterations, tolerance)) return *direct;
    return scale_log(log_kernel, a, b, phi, max_iterations, tolerance);
}

Matrix masked(const Matrix& m, const Mask* mask) {
    if (!mask) return m;
    if (mask->rows() != m.rows() || mask->cols() != m.cols()) throw InputError("mask shape does not match the plan");
    return mask->select(m, 0.0);
}

void check_square(const Matrix& d, const char* name) {
    if (d.rows() != d.cols()) throw InputError(std::string(name) + " must be square");
}

void check_gw_shapes(const Matrix& dist_y, const Matrix& dist_x, const Matrix& plan) {
    check_square(dist_y, "control distance matrix");
    check_square(dist_x, "motion distance matrix");
    if (plan.rows() != dist_y.rows() || plan.cols() != dist_x.rows()) {
        throw InputError("plan shape " + std::to_string(plan.rows()) + "x" + std::to_string(plan.cols()) +
                         " does not match distance matrices " + std::to_string(dist_y.rows()) + " and " +
                         std::to_string(dist_x.rows()));
    }
}

Matrix linearized_cost_unchecked(const Matrix& dist_y, const Matrix& dist_x, const Matrix& dist_y_sq,
                                 const Matrix& dist_x_sq, const Matrix& plan) {
    const Vector r = plan.rowwise().sum();
    const Vector c = plan.colwise().sum().transpose();
    Matrix yt(plan.rows(), plan.cols());
    yt.noalias() = dist_y * plan;
    Matrix g(plan.rows(), plan.cols());
    g.noalias() = -2.0 * yt * dist_x.transpose();
    g.colwise() += dist_y_sq * r;
    g.rowwise() += (dist_x_sq * c).transpose();
    return g;
}

// Everything but the entropy, which the iteration does not need.
ObjectiveTerms objective_from(const Matrix& plan, const Vector& b, const Matrix& lin_cost, const Matrix* dist_w,
                              const SolverParams& params) {
    ObjectiveTerms t;
    const double alpha = dist_w ? params.alpha : 1.0;
    t.gw = lin_cost.cwiseProduct(plan).sum();
    t.wasserstein = dist_w ? wasserstein_loss(*dist_w, plan) : 0.0;
    t.kl = std::isinf(params.lambda) ? 0.0 : kl_divergence(plan.colwise().sum().transpose(), b);
    t.total = alpha * t.gw + (1.0 - alpha) * t.wasserstein + (std::isinf(params.lambda) ? 0.0 : params.lambda * t.kl);
    return t;
}

void add_entropy(ObjectiveTerms& t, const Matrix& plan, double epsilon) {
    t.entropy = plan_entropy(plan);
    t.regularized = t.total - epsilon * t.entropy;
}

bool satisfies(const TransportPlan& p, const Mask* mask, double tolerance) {
    if ((p.plan.array() < 0.0).any()) return false;
    if (mask && (p.plan.array() != 0.0 && !mask->array()).any()) return false;
    return (p.plan.rowwise().sum() - p.a).cwiseAbs().maxCoeff() <= tolerance;
}

}  // namespace

void SolverParams::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("alpha must lie in [0, 1]");
    if (!(lambda >= 0.0)) throw InputError("lambda must be >= 0");
    if (!(epsilon > 0.0) || std::isinf(epsilon)) throw InputError("epsilon must be positive and finite");
    if (mirror_steps < 1 || sinkhorn_steps < 1) throw InputError("iteration budgets must be positive");
    if (!(tol_objective > 0.0) || !(tol_marginal > 0.0)) throw InputError("tolerances must be positive");
}

double wasserstein_loss(const Matrix& cost, const Matrix& plan) {
    if (cost.rows() != plan.rows() || cost.cols() != plan.cols()) {
        throw InputError("cost and plan shapes differ");
    }
    return cost.cwiseProduct(plan).sum();
}

Matrix gw_linearized_cost(const Matrix& dist_y, const Matrix& dist_x, const Matrix& plan) {
    check_gw_shapes(dist_y, dist_x, plan);
    return linearized_cost_unchecked(dist_y, dist_x, dist_y.cwiseAbs2(), dist_x.cwiseAbs2(), plan);
}

double gw_loss(const Matrix& dist_y, const Matrix& dist_x, const Matrix& plan) {
    return gw_linearized_cost(dist_y, dist_x, plan).cwiseProduct(plan).sum();
}

double kl_divergence(const Vector& c, const Vector& b) {
    if (c.size() != b.size()) throw InputError("KL arguments differ in size");
    double sum = 0.0;
    for (Eigen::Index k = 0; k < c.size(); ++k) {
        if (c[k] > 0.0) sum += c[k] * std::log(c[k] / b[k]);
        sum += b[k] - c[k];
    }
    return sum;
}

double plan_entropy(const Matrix& plan) {
    double h = 0.0;
    for (Eigen::Index k = 0; k < plan.cols(); ++k)
        for (Eigen::Index i = 0; i < plan.rows(); ++i) {
            const double t = plan(i, k);
            if (t > 0.0) h -= t * std::log(t);
        }
    return h;
}

ObjectiveTerms evaluate_objective(const Matrix& dist_y, const Matrix& dist_x, const Matrix* dist_w,
                                  const TransportPlan& plan, const SolverParams& params) {
    const Matrix g = gw_linearized_cost(dist_y, dist_x, plan.plan);
    if (dist_w && (dist_w->rows() != plan.plan.rows() || dist_w->cols() != plan.plan.cols())) {
        throw InputError("Wasserstein cost shape does not match the plan");
    }
    ObjectiveTerms t = objective_from(plan.plan, plan.b, g, dist_w, params);
    add_entropy(t, plan.plan, params.epsilon);
    return t;
}

SinkhornResult semi_unbalanced_sinkhorn(const Matrix& kernel, const Vector& a, const Vector& b, double lambda,
                                        double epsilon, const Mask* mask, int max_iterations, double tolerance) {
    check_marginals(kernel, a, b);
    if (!(epsilon > 0.0)) throw InputError("epsilon must be positive");
    if ((kernel.array() < 0.0).any() || !kernel.allFinite()) throw InputError("kernel must be finite and nonnegative");
    const Matrix k = masked(kernel, mask);
    check_rows(k);
    const double phi = soft_exponent(lambda, epsilon);
    if (auto direct = scale_direct(k, a, b, phi, max_iterations, tolerance)) return *direct;
    const Matrix log_kernel = k.array().log();
    return scale_log(log_kernel, a, b, phi, max_iterations, tolerance);
}

TransportPlan initial_plan(const Vector& a, const Vector& b, const Mask* mask) {
    Matrix plan = masked(a * b.transpose(), mask);
    check_rows(plan);
    const Vector rows = plan.rowwise().sum();
    plan = a.cwiseQuotient(rows).asDiagonal() * plan;
    return TransportPlan{std::move(plan), a, b};
}

FsugwResult solve_fsugw(const Matrix& dist_y, const Matrix& dist_x, const Matrix* dist_w,
                        const SolverParams& params, const TransportPlan& init) {
    params.validate();
    check_gw_shapes(dist_y, dist_x, init.plan);
    check_marginals(init.plan, init.a, init.b);
    if (dist_w && (dist_w->rows() != init.plan.rows() || dist_w->cols() != init.plan.cols())) {
        throw InputError("Wasserstein cost shape does not match the plan");
    }
    const Mask* mask = params.mask ? &*params.mask : nullptr;
    if (mask && (mask->rows() != init.plan.rows() || mask->cols() != init.plan.cols())) {
        throw InputError("mask shape does not match the plan");
    }

    TransportPlan current = init;
    if (!satisfies(current, mask, params.tol_marginal)) {
        // Make the starting point feasible: drop forbidden mass and rescale rows.
        current.plan = masked(current.plan.cwiseMax(0.0), mask);
        check_rows(current.plan);
        current.plan = current.a.cwiseQuotient(current.plan.rowwise().sum()).asDiagonal() * current.plan;
    }

    const double alpha = dist_w ? params.alpha : 1.0;
    const double phi = soft_exponent(params.lambda, params.epsilon);
    const Matrix dist_y_sq = dist_y.cwiseAbs2();
    const Matrix dist_x_sq = dist_x.cwiseAbs2();

    Matrix lin = linearized_cost_unchecked(dist_y, dist_x, dist_y_sq, dist_x_sq, current.plan);
    FsugwResult best{current, objective_from(current.plan, current.b, lin, dist_w, params), 0, 0.0};
    double previous = best.objective.total;

    for (int step = 1; step <= params.mirror_steps; ++step) {
        // K = T * exp(-C / eps) with C the gradient of the smooth part.
        Matrix log_kernel = (-(2.0 * alpha / params.epsilon)) * lin;
        if (dist_w && alpha < 1.0) log_kernel -= ((1.0 - alpha) / params.epsilon) * *dist_w;
        log_kernel.array() += current.plan.array().log();
        if (mask) log_kernel = mask->select(log_kernel, -kInfinity);

        SinkhornResult projected =
            project(std::move(log_kernel), current.a, current.b, phi, params.sinkhorn_steps, params.tol_marginal);
        current = std::move(projected.plan);
        current.plan = (current.plan.array() < kNegligible).select(0.0, current.plan);

        lin = linearized_cost_unchecked(dist_y, dist_x, dist_y_sq, dist_x_sq, current.plan);
        const ObjectiveTerms terms = objective_from(current.plan, current.b, lin, dist_w, params);
        if (!std::isfinite(terms.total) || !current.plan.allFinite()) {
            throw SolverError("objective became non-finite at mirror step " + std::to_string(step) +
                              "; try a larger epsilon");
        }
        if (terms.total < best.objective.total) {
            best.plan = current;
            best.objective = terms;
        }
        best.steps = step;
        if (std::abs(terms.total - previous) <= params.tol_objective * std::abs(previous)) break;
        previous = terms.total;
    }
    best.marginal_violation = (best.plan.plan.rowwise().sum() - best.plan.a).cwiseAbs().maxCoeff();
    add_entropy(best.objective, best.plan.plan, params.epsilon);
    return best;
}

}  // namespace mamm
