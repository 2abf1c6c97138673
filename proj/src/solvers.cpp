// SPDX-License-Identifier: Apache-2.0
#include "raysep/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "raysep/error.hpp"

namespace raysep {

void SolverConfig::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw ValidationError("residual bound must be finite and nonnegative");
    if (reweight_xi && !(*reweight_xi > 0.0)) throw ValidationError("reweight xi must be positive");
    if (max_reweight_iters < 0) throw ValidationError("max_reweight_iters must be nonnegative");
    if (!(inner_tol > 0.0)) throw ValidationError("inner_tol must be positive");
    if (inner_max_iters < 1) throw ValidationError("inner_max_iters must be positive");
    if (!(cross_term_bound >= 0.0)) throw ValidationError("cross_term_bound must be nonnegative");
}

nlohmann::json to_json(const SolveDiagnostics& d) {
    return {{"iterations", d.iterations},
            {"outer_iterations", d.outer_iterations},
            {"residual", d.residual},
            {"bound", d.bound},
            {"objective", d.objective},
            {"optimality", d.optimality},
            {"converged", d.converged},
            {"method", d.method}};
}

namespace detail {

namespace {

constexpr double kTiny = 1e-300;

double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Minimizes 1/2 x^H A x - Re(b^H x) + lambda sum w_i |x_i| from a start with no zero
// entry. Returns early once some coordinate's optimum given the others is within
// `drop_gap` of zero. Returns false on a breakdown.
bool newton_group_lasso(const CMatrix& a, const CVector& b, const Eigen::VectorXd& w,
                        double lambda, double scale, double drop_gap, CVector& x) {
    const auto k = x.size();
    auto f = [&](const CVector& v) {
        return 0.5 * std::real(v.dot(a * v)) - std::real(b.dot(v)) + lambda * w.dot(v.cwiseAbs());
    };
    Eigen::MatrixXd hq(2 * k, 2 * k);
    hq << a.real(), -a.imag(), a.imag(), a.real();
    double fx = f(x);
    for (int it = 0; it < 80; ++it) {
        const Eigen::VectorXd mag = x.cwiseAbs();
        if (!(mag.minCoeff() > 1e-12 * mag.maxCoeff())) return true;
        CVector grad = a * x - b;
        for (Eigen::Index i = 0; i < k; ++i)
            if (std::abs(a(i, i) * x[i] - grad[i]) - lambda * w[i] <= drop_gap) return true;
        for (Eigen::Index i = 0; i < k; ++i) grad[i] += lambda * w[i] * x[i] / mag[i];
        if (grad.cwiseAbs().maxCoeff() <= 1e-13 * scale) return true;
        Eigen::MatrixXd h = hq;
        for (Eigen::Index i = 0; i < k; ++i) {
            const double ur = x[i].real() / mag[i];
            const double ui = x[i].imag() / mag[i];
            const double c = lambda * w[i] / mag[i];
            h(i, i) += c * (1.0 - ur * ur);
            h(k + i, k + i) += c * (1.0 - ui * ui);
            h(i, k + i) -= c * ur * ui;
            h(k + i, i) -= c * ur * ui;
        }
        Eigen::VectorXd gr(2 * k);
        gr << grad.real(), grad.imag();
        h.diagonal().array() += 1e-13 * h.diagonal().maxCoeff();
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        if (ldlt.info() != Eigen::Success) return false;
        const Eigen::VectorXd d = -ldlt.solve(gr);
        const double slope = gr.dot(d);
        if (!(slope < 0.0)) return true;
        CVector step(k);
        for (Eigen::Index i = 0; i < k; ++i) step[i] = cdouble(d[i], d[k + i]);
        double t = 1.0;
        CVector next;
        double fn = fx;
        for (int ls = 0; ls < 50; ++ls, t *= 0.5) {
            next = x + t * step;
            fn = f(next);
            if (fn <= fx + 1e-4 * t * slope) break;
        }
        if (!(fn < fx)) return true;
        x = next;
        fx = fn;
    }
    return true;
}

}  // namespace

WeightedLasso::WeightedLasso(const CMatrix& g, const CMatrix& y, Eigen::VectorXd weights,
                             bool nonnegative)
    : g_(g), y_(y), w_(std::move(weights)), nonneg_(nonnegative) {
    if (g_.rows() != y_.rows()) throw ValidationError("dictionary and data row counts differ");
    if (w_.size() != g_.cols()) throw ValidationError("one weight per dictionary column required");
    if (!(w_.minCoeff() > 0.0)) throw ValidationError("weights must be positive");
    gh_y_ = g_.adjoint() * y_;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(g_ * g_.adjoint(), Eigen::EigenvaluesOnly);
    lipschitz_ = std::max(es.eigenvalues().maxCoeff(), kTiny) * (1.0 + 1e-10);
    y_norm_ = y_.norm();
    grad_scale_ = std::max(max_abs(gh_y_), kTiny);
}

double WeightedLasso::lambda_max() const {
    double lam = 0.0;
    for (Eigen::Index q = 0; q < gh_y_.rows(); ++q)
        for (Eigen::Index l = 0; l < gh_y_.cols(); ++l) {
            const double c = nonneg_ ? std::max(gh_y_(q, l).real(), 0.0) : std::abs(gh_y_(q, l));
            lam = std::max(lam, c / w_[q]);
        }
    return lam;
}

double WeightedLasso::penalty(const CMatrix& s) const {
    return w_.dot(s.cwiseAbs().rowwise().sum());
}

CMatrix WeightedLasso::prox(const CMatrix& v, double lambda_step) const {
    CMatrix out(v.rows(), v.cols());
    for (Eigen::Index l = 0; l < v.cols(); ++l)
        for (Eigen::Index q = 0; q < v.rows(); ++q) {
            const double tau = lambda_step * w_[q];
            if (nonneg_) {
                out(q, l) = std::max(v(q, l).real() - tau, 0.0);
            } else {
                const double mag = std::abs(v(q, l));
                out(q, l) = mag > tau ? v(q, l) * (1.0 - tau / mag) : cdouble{};
            }
        }
    return out;
}

double WeightedLasso::optimality(const CMatrix& s, double lambda) const {
    const CMatrix grad = g_.adjoint() * (g_ * s - y_);
    const CMatrix step = prox(s - grad / lipschitz_, lambda / lipschitz_);
    return lipschitz_ * max_abs(s - step) / grad_scale_;
}

bool WeightedLasso::polish(CMatrix& s, Eigen::Index col, double lambda) const {
    const auto M = g_.rows();
    std::vector<Eigen::Index> support;
    for (Eigen::Index q = 0; q < s.rows(); ++q)
        if (s(q, 0) != cdouble{}) support.push_back(q);
    if (support.empty()) return true;
    const auto k = static_cast<Eigen::Index>(support.size());
    if (k > (nonneg_ ? 2 * M : M)) return false;

    CMatrix a(M, k);
    CVector x(k);
    Eigen::VectorXd w(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto q = support[static_cast<std::size_t>(i)];
        a.col(i) = g_.col(q);
        x[i] = s(q, 0);
        w[i] = w_[q];
    }
    const CMatrix gram = a.adjoint() * a;
    const CVector rhs = a.adjoint() * y_.col(col);

    if (nonneg_) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram.real());
        if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-15)) return false;
        const Eigen::VectorXd next = ldlt.solve(rhs.real() - lambda * w);
        if (!(next.minCoeff() > 0.0)) return false;
        for (Eigen::Index i = 0; i < k; ++i) s(support[static_cast<std::size_t>(i)], 0) = next[i];
        return true;
    }

    // Damped Newton on the support in real coordinates; |x_i| is smooth away from zero.
    // Entries collapsing to zero are dropped and the reduced support is re-solved.
    std::vector<Eigen::Index> keep(static_cast<std::size_t>(k));
    std::iota(keep.begin(), keep.end(), Eigen::Index{0});
    const double scale = std::max(rhs.cwiseAbs().maxCoeff(), kTiny);
    while (!keep.empty()) {
        const auto n = static_cast<Eigen::Index>(keep.size());
        CMatrix gk(n, n);
        CVector rk(n), xk(n);
        Eigen::VectorXd wk(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto ii = keep[static_cast<std::size_t>(i)];
            for (Eigen::Index j = 0; j < n; ++j) gk(i, j) = gram(ii, keep[static_cast<std::size_t>(j)]);
            rk[i] = rhs[ii];
            xk[i] = x[ii];
            wk[i] = w[ii];
        }
        if (!newton_group_lasso(gk, rk, wk, lambda, scale, 0.0, xk)) return false;
        Eigen::Index weakest = 0;
        const double smallest = xk.cwiseAbs().minCoeff(&weakest);
        if (smallest > 1e-9 * xk.cwiseAbs().maxCoeff()) {
            CMatrix out = CMatrix::Zero(s.rows(), 1);
            for (Eigen::Index i = 0; i < n; ++i)
                out(support[static_cast<std::size_t>(keep[static_cast<std::size_t>(i)])], 0) = xk[i];
            s = std::move(out);
            return true;
        }
        for (Eigen::Index i = 0; i < n; ++i) x[keep[static_cast<std::size_t>(i)]] = xk[i];
        keep.erase(keep.begin() + weakest);
    }
    s.setZero();
    return true;
}

CMatrix WeightedLasso::support_least_squares(const CMatrix& s) const {
    const auto M = g_.rows();
    CMatrix out = CMatrix::Zero(s.rows(), s.cols());
    for (Eigen::Index l = 0; l < s.cols(); ++l) {
        std::vector<Eigen::Index> support;
        for (Eigen::Index q = 0; q < s.rows(); ++q)
            if (s(q, l) != cdouble{}) support.push_back(q);
        if (support.empty()) continue;
        const auto k = static_cast<Eigen::Index>(support.size());
        CMatrix a(M, k);
        for (Eigen::Index i = 0; i < k; ++i) a.col(i) = g_.col(support[static_cast<std::size_t>(i)]);
        if (nonneg_) {
            Eigen::MatrixXd ar(2 * M, k);
            ar << a.real(), a.imag();
            Eigen::VectorXd br(2 * M);
            br << y_.col(l).real(), y_.col(l).imag();
            const Eigen::VectorXd x = ar.colPivHouseholderQr().solve(br);
            for (Eigen::Index i = 0; i < k; ++i)
                out(support[static_cast<std::size_t>(i)], l) = std::max(x[i], 0.0);
        } else {
            const CVector x = a.colPivHouseholderQr().solve(y_.col(l));
            for (Eigen::Index i = 0; i < k; ++i) out(support[static_cast<std::size_t>(i)], l) = x[i];
        }
    }
    return out;
}

bool WeightedLasso::active_set(CMatrix& s, Eigen::Index col, double lambda, double tol,
                              std::vector<double>& history, int& steps) const {
    const auto M = g_.rows();
    const auto Q = g_.cols();
    const auto data = y_.col(col);
    std::vector<Eigen::Index> support;
    for (Eigen::Index q = 0; q < Q; ++q)
        if (s(q, 0) != cdouble{}) support.push_back(q);
    if (static_cast<Eigen::Index>(support.size()) > M) support.clear();
    CVector x(static_cast<Eigen::Index>(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i) x[static_cast<Eigen::Index>(i)] = s(support[i], 0);

    auto assemble = [&] {
        CMatrix out = CMatrix::Zero(Q, 1);
        for (std::size_t i = 0; i < support.size(); ++i) out(support[i], 0) = x[static_cast<Eigen::Index>(i)];
        return out;
    };
    auto objective = [&](const CMatrix& v) {
        return 0.5 * (g_ * v - data).squaredNorm() + lambda * penalty(v);
    };

    for (int outer = 0; outer < 4 * static_cast<int>(M) + 20; ++outer) {
        ++steps;
        // Solve on the working set, dropping coordinates whose optimum is zero.
        while (!support.empty()) {
            const auto n = static_cast<Eigen::Index>(support.size());
            CMatrix a(M, n);
            Eigen::VectorXd w(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                a.col(i) = g_.col(support[static_cast<std::size_t>(i)]);
                w[i] = w_[support[static_cast<std::size_t>(i)]];
            }
            const CMatrix gram = a.adjoint() * a;
            const CVector rhs = a.adjoint() * data;
            if (!newton_group_lasso(gram, rhs, w, lambda, grad_scale_, 0.1 * tol * grad_scale_, x))
                return false;
            const CVector c = rhs - gram * x + gram.diagonal().cwiseProduct(x);
            Eigen::Index drop = -1;
            for (Eigen::Index i = 0; i < n; ++i)
                if (std::abs(c[i]) - lambda * w[i] <= 0.1 * tol * grad_scale_ &&
                    (drop < 0 || std::abs(x[i]) < std::abs(x[drop])))
                    drop = i;
            if (drop < 0) break;
            support.erase(support.begin() + drop);
            CVector shorter(n - 1);
            for (Eigen::Index i = 0, j = 0; i < n; ++i)
                if (i != drop) shorter[j++] = x[i];
            x = std::move(shorter);
        }
        CMatrix current = assemble();
        history.push_back(objective(current));

        const CVector corr = g_.adjoint() * (data - g_ * current);
        Eigen::Index worst = -1;
        double worst_gap = 0.0;
        for (Eigen::Index q = 0; q < Q; ++q) {
            if (current(q, 0) != cdouble{}) continue;
            const double gap = std::abs(corr[q]) - lambda * w_[q];
            if (gap > worst_gap) {
                worst_gap = gap;
                worst = q;
            }
        }
        if (worst < 0 || worst_gap <= 0.1 * tol * grad_scale_) {
            if (column_optimality(current, col, lambda) <= tol) {
                s = std::move(current);
                return true;
            }
            if (worst < 0) return false;
        }
        if (static_cast<Eigen::Index>(support.size()) >= 2 * M) return false;
        // Exact coordinate minimizer for the entering column.
        support.push_back(worst);
        CVector grown(x.size() + 1);
        grown.head(x.size()) = x;
        grown[x.size()] = worst_gap / g_.col(worst).squaredNorm() * corr[worst] / std::abs(corr[worst]);
        x = std::move(grown);
    }
    return false;
}

double WeightedLasso::column_optimality(const CMatrix& s, Eigen::Index col, double lambda) const {
    const CMatrix grad = g_.adjoint() * (g_ * s - y_.col(col));
    const CMatrix step = prox(s - grad / lipschitz_, lambda / lipschitz_);
    return lipschitz_ * max_abs(s - step) / grad_scale_;
}

LassoSolution WeightedLasso::solve(double lambda, const CMatrix& warm, double tol,
                                   int max_iters) const {
    const auto Q = g_.cols();
    const auto L = y_.cols();
    const bool have_warm = warm.rows() == Q && warm.cols() == L;

    LassoSolution out;
    out.s = CMatrix::Zero(Q, L);
    out.converged = true;
    std::vector<std::vector<double>> histories(static_cast<std::size_t>(L));

    // Columns share lambda only, so each one runs to its own tolerance.
    for (Eigen::Index l = 0; l < L; ++l) {
        const auto data = y_.col(l);
        auto objective = [&](const CMatrix& gs, const CMatrix& v) {
            return 0.5 * (gs - data).squaredNorm() + lambda * penalty(v);
        };
        CMatrix x = have_warm ? CMatrix(warm.col(l)) : CMatrix::Zero(Q, 1);
        if (nonneg_) x = x.real().cwiseMax(0.0).cast<cdouble>();
        CMatrix gx = g_ * x;
        double fx = objective(gx, x);
        CMatrix y = x;
        CMatrix gy = gx;
        double t = 1.0;
        const double step = 1.0 / lipschitz_;
        auto& hist = histories[static_cast<std::size_t>(l)];
        double opt = column_optimality(x, l, lambda);
        bool done = opt <= tol;
        if (!done && !nonneg_) {
            CMatrix trial = x;
            std::vector<double> trial_hist;
            int steps = 0;
            const bool ok = active_set(trial, l, lambda, tol, trial_hist, steps);
            out.iterations += steps;
            if (ok) {
                out.s.col(l) = trial;
                out.optimality = std::max(out.optimality, column_optimality(trial, l, lambda));
                hist = std::move(trial_hist);
                continue;
            }
        }
        std::vector<char> last_support;

        for (int k = 1; k <= max_iters && !done; ++k) {
            const CMatrix z = prox(y - step * (g_.adjoint() * (gy - data)), lambda * step);
            const CMatrix gz = g_ * z;
            const double fz = objective(gz, z);
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            if (fz <= fx) {
                // Monotone accelerated step.
                y = z + ((t - 1.0) / t_next) * (z - x);
                gy = gz + ((t - 1.0) / t_next) * (gz - gx);
                x = z;
                gx = gz;
                fx = fz;
                t = t_next;
            } else {
                // Function-value restart: drop momentum and keep the incumbent.
                y = x;
                gy = gx;
                t = 1.0;
            }
            hist.push_back(fx);
            ++out.iterations;
            if (k % 10 != 0 && k != max_iters) continue;

            opt = column_optimality(x, l, lambda);
            if (opt <= tol) break;
            std::vector<char> support(static_cast<std::size_t>(Q));
            for (Eigen::Index q = 0; q < Q; ++q) support[static_cast<std::size_t>(q)] = x(q, 0) != cdouble{};
            last_support = std::move(support);
            CMatrix p = x;
            if (!polish(p, l, lambda)) continue;
            const CMatrix gp = g_ * p;
            const double fp = objective(gp, p);
            const double op = column_optimality(p, l, lambda);
            if (fp <= fx && op < opt) {
                x = p;
                gx = gp;
                fx = fp;
                y = x;
                gy = gx;
                t = 1.0;
                hist.push_back(fx);
                opt = op;
                done = op <= tol;
            }
        }
        out.optimality = std::max(out.optimality, opt);
        out.converged = out.converged && opt <= tol;
        out.s.col(l) = x;
    }

    // Whole-problem objective per iteration; finished columns hold their last value.
    std::size_t longest = 0;
    for (const auto& h : histories) longest = std::max(longest, h.size());
    out.history.assign(longest, 0.0);
    for (Eigen::Index l = 0; l < L; ++l) {
        const auto& h = histories[static_cast<std::size_t>(l)];
        double last = h.empty() ? 0.5 * (g_ * out.s.col(l) - y_.col(l)).squaredNorm() +
                                      lambda * penalty(out.s.col(l))
                                : h.back();
        for (std::size_t i = 0; i < longest; ++i) out.history[i] += i < h.size() ? h[i] : last;
    }
    out.residual = (g_ * out.s - y_).norm();
    out.penalty = penalty(out.s);
    return out;
}

namespace {

bool same_support(const CMatrix& a, const CMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if ((a.data()[i] == cdouble{}) != (b.data()[i] == cdouble{})) return false;
    return true;
}

}  // namespace

ConstrainedSolution solve_constrained(const WeightedLasso& problem, double eps, double tol,
                                      int max_iters, std::optional<double> lambda_hint,
                                      const CMatrix* warm) {
    const auto Q = problem.cols();
    const auto L = problem.snapshots();
    const double y_norm = problem.data_norm();
    const double lam_max = problem.lambda_max();

    ConstrainedSolution out;
    auto zero_solution = [&] {
        out.lasso = LassoSolution{};
        out.lasso.s = CMatrix::Zero(Q, L);
        out.lasso.residual = y_norm;
        out.lasso.converged = true;
        out.lambda = lam_max;
    };
    if (y_norm <= eps) {
        zero_solution();
        return out;
    }
    if (!(lam_max > 0.0))
        throw InfeasibleError("data is orthogonal to every dictionary column", y_norm);

    CMatrix start = (warm != nullptr) ? *warm : CMatrix::Zero(Q, L);

    // Interpolation regime: follow lambda toward zero until the support settles,
    // then refit on that support.
    if (eps <= 1e-12 * y_norm) {
        const double floor = std::max(eps, 1e-12 * y_norm) * (1.0 + 1e-6);
        CMatrix prev;
        double lam = 0.1 * lam_max;
        double best_residual = y_norm;
        for (int k = 0; k < 30; ++k, lam *= 0.1) {
            auto sol = problem.solve(lam, start, tol, max_iters);
            ++out.lambda_updates;
            start = sol.s;
            CMatrix refit = problem.support_least_squares(sol.s);
            const double res = problem.residual(refit);
            best_residual = std::min(best_residual, res);
            if (res <= floor && (same_support(prev, sol.s) || k >= 4)) {
                out.lasso = std::move(sol);
                out.lasso.s = std::move(refit);
                out.lasso.residual = res;
                out.lasso.penalty = problem.penalty(out.lasso.s);
                out.lambda = 0.0;
                return out;
            }
            prev = std::move(sol.s);
        }
        if (best_residual > floor)
            throw InfeasibleError("residual bound is below the smallest achievable residual",
                                  best_residual);
        throw NumericalError("interpolating solve did not settle on a support");
    }

    // Below the bound the l1 excess is about lambda * (eps - residual); 1e-5 keeps it negligible.
    const double rtol = std::max(tol, 1e-5);
    const double upper = eps * (1.0 + 1e-7);
    const double log_eps = std::log(eps);

    // Bracket in log(lambda): f = log(residual) - log(eps) is increasing.
    double t_hi = std::log(lam_max);
    double f_hi = std::log(y_norm) - log_eps;
    CMatrix s_hi = CMatrix::Zero(Q, L);
    double t_lo = 0.0;
    double f_lo = 0.0;
    bool have_lo = false;
    LassoSolution best;  // feasible incumbent (residual <= eps)

    auto evaluate = [&](double t_val, const CMatrix& from) {
        auto sol = problem.solve(std::exp(t_val), from, tol, max_iters);
        ++out.lambda_updates;
        return sol;
    };
    auto accept = [&](const LassoSolution& sol) {
        return sol.residual <= upper && sol.residual >= eps * (1.0 - rtol);
    };

    double t = std::log(lambda_hint ? std::min(*lambda_hint, lam_max)
                                    : lam_max * std::clamp(eps / y_norm, 1e-6, 0.5));
    const double t_floor = std::log(lam_max) + std::log(1e-14);
    for (;;) {
        auto sol = evaluate(t, start);
        const double f = std::log(std::max(sol.residual, kTiny)) - log_eps;
        if (accept(sol)) {
            out.lasso = std::move(sol);
            out.lambda = std::exp(t);
            return out;
        }
        if (f > 0.0) {
            t_hi = t;
            f_hi = f;
            s_hi = sol.s;
            start = sol.s;
            t -= std::log(10.0);
            if (t < t_floor) {
                // the penalized solves stall at their tolerance; the support refit may still fit
                CMatrix refit = problem.support_least_squares(sol.s);
                const double min_res = problem.residual(refit);
                if (min_res <= upper) {
                    out.lasso = std::move(sol);
                    out.lasso.s = std::move(refit);
                    out.lasso.residual = min_res;
                    out.lasso.penalty = problem.penalty(out.lasso.s);
                    out.lambda = std::exp(t);
                    return out;
                }
                throw InfeasibleError("residual bound is below the smallest achievable residual",
                                      std::min(min_res, sol.residual));
            }
        } else {
            t_lo = t;
            f_lo = f;
            have_lo = true;
            best = std::move(sol);
            break;
        }
        if (t >= t_hi) break;
    }
    if (!have_lo) throw NumericalError("could not bracket the regularization level");

    // Illinois regula falsi on the bracket.
    int side = 0;
    for (int it = 0; it < 100; ++it) {
        double t_new = t_lo - f_lo * (t_hi - t_lo) / (f_hi - f_lo);
        const double width = t_hi - t_lo;
        if (!(t_new > t_lo + 1e-3 * width && t_new < t_hi - 1e-3 * width))
            t_new = 0.5 * (t_lo + t_hi);
        const CMatrix& from = (t_new - t_lo < t_hi - t_new) ? best.s : s_hi;
        auto sol = evaluate(t_new, from);
        const double f = std::log(std::max(sol.residual, kTiny)) - log_eps;
        if (accept(sol)) {
            out.lasso = std::move(sol);
            out.lambda = std::exp(t_new);
            return out;
        }
        if (f > 0.0) {
            t_hi = t_new;
            f_hi = f;
            s_hi = std::move(sol.s);
            if (side == 1) f_lo *= 0.5;
            side = 1;
        } else {
            t_lo = t_new;
            f_lo = f;
            best = std::move(sol);
            if (side == -1) f_hi *= 0.5;
            side = -1;
        }
        if (t_hi - t_lo < 1e-13) break;
    }
    // Feasible but the residual did not reach the bound within tolerance.
    out.lasso = std::move(best);
    out.lasso.converged = false;
    out.lambda = std::exp(t_lo);
    return out;
}

PathSolution nonnegative_path(const Eigen::MatrixXd& gram, const Eigen::VectorXd& corr,
                              double b_sq, double bound, int max_breakpoints) {
    const auto Q = corr.size();
    PathSolution out;
    out.s = Eigen::VectorXd::Zero(Q);
    const double target = bound * bound;
    if (b_sq <= target) {
        out.residual = std::sqrt(std::max(b_sq, 0.0));
        out.lambda = std::max(corr.maxCoeff(), 0.0);
        out.ok = true;
        return out;
    }
    Eigen::Index first = 0;
    double lambda = corr.maxCoeff(&first);
    if (!(lambda > 0.0))
        throw InfeasibleError("no dictionary column correlates positively with the data",
                              std::sqrt(b_sq));
    const double scale = lambda;

    std::vector<Eigen::Index> active{first};
    std::vector<char> is_active(static_cast<std::size_t>(Q), 0);
    is_active[static_cast<std::size_t>(first)] = 1;
    Eigen::Index just_left = -1;

    auto residual_sq = [&](const Eigen::VectorXd& s) {
        return std::max(b_sq - 2.0 * corr.dot(s) + s.dot(gram * s), 0.0);
    };
    auto finish = [&](double lam) {
        const double final_sq = residual_sq(out.s);
        out.residual = std::sqrt(final_sq);
        out.lambda = lam;
        out.history.push_back(0.5 * final_sq + lam * out.s.sum());
        const Eigen::VectorXd g_final = corr - gram * out.s;
        double viol = 0.0;
        for (Eigen::Index q = 0; q < Q; ++q)
            viol = std::max(viol, out.s[q] > 0.0 ? std::abs(g_final[q] - lam)
                                                 : std::max(g_final[q] - lam, 0.0));
        out.optimality = viol / scale;
        out.ok = true;
    };

    for (int bp = 0; bp < max_breakpoints; ++bp) {
        out.breakpoints = bp + 1;
        const auto k = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd gaa(k, k);
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j < k; ++j)
                gaa(i, j) = gram(active[static_cast<std::size_t>(i)], active[static_cast<std::size_t>(j)]);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gaa);
        if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14)) return out;
        const Eigen::VectorXd dir = ldlt.solve(Eigen::VectorXd::Ones(k));
        const double one_dir = dir.sum();
        if (!(one_dir > 0.0)) return out;

        // Re-anchor the active coefficients on the exact KKT system.
        Eigen::VectorXd corr_a(k);
        for (Eigen::Index i = 0; i < k; ++i) corr_a[i] = corr[active[static_cast<std::size_t>(i)]];
        const Eigen::VectorXd s_a = ldlt.solve(corr_a - lambda * Eigen::VectorXd::Ones(k));
        for (Eigen::Index i = 0; i < k; ++i) out.s[active[static_cast<std::size_t>(i)]] = s_a[i];

        Eigen::VectorXd grad = corr;
        Eigen::VectorXd slope = Eigen::VectorXd::Zero(Q);
        for (Eigen::Index i = 0; i < k; ++i) {
            const auto col = active[static_cast<std::size_t>(i)];
            grad -= gram.col(col) * s_a[i];
            slope += gram.col(col) * dir[i];
        }

        double t_step = lambda;
        Eigen::Index joining = -1;
        Eigen::Index leaving = -1;
        for (Eigen::Index q = 0; q < Q; ++q) {
            if (is_active[static_cast<std::size_t>(q)] || q == just_left) continue;
            const double denom = 1.0 - slope[q];
            if (denom <= 1e-12) continue;
            const double tq = std::max((lambda - grad[q]) / denom, 0.0);
            if (tq < t_step) {
                t_step = tq;
                joining = q;
            }
        }
        for (Eigen::Index i = 0; i < k; ++i) {
            if (dir[i] >= 0.0) continue;
            const double ti = -s_a[i] / dir[i];
            if (ti < t_step) {
                t_step = std::max(ti, 0.0);
                leaving = i;
                joining = -1;
            }
        }

        const double res_sq = residual_sq(out.s);
        out.history.push_back(0.5 * res_sq + lambda * out.s.sum());
        // Along the segment |r|^2 = res_sq - (2 lambda t - t^2) * 1^T dir.
        const double end_sq = res_sq - (2.0 * lambda * t_step - t_step * t_step) * one_dir;
        if (end_sq <= target) {
            const double disc = std::max(lambda * lambda - (res_sq - target) / one_dir, 0.0);
            const double t_cross = std::clamp(lambda - std::sqrt(disc), 0.0, t_step);
            for (Eigen::Index i = 0; i < k; ++i)
                out.s[active[static_cast<std::size_t>(i)]] = std::max(s_a[i] + t_cross * dir[i], 0.0);
            lambda -= t_cross;
            finish(lambda);
            return out;
        }

        for (Eigen::Index i = 0; i < k; ++i)
            out.s[active[static_cast<std::size_t>(i)]] = s_a[i] + t_step * dir[i];
        lambda -= t_step;

        if (leaving >= 0) {
            const auto col = active[static_cast<std::size_t>(leaving)];
            out.s[col] = 0.0;
            is_active[static_cast<std::size_t>(col)] = 0;
            active.erase(active.begin() + leaving);
            just_left = col;
            if (active.empty()) return out;
        } else if (joining >= 0) {
            active.push_back(joining);
            is_active[static_cast<std::size_t>(joining)] = 1;
            just_left = -1;
        } else {
            // lambda reached zero above the bound: the nonnegative least-squares fit
            // is the closest the program can get. The Gram form cannot resolve residuals
            // much below 1e-6 |b|, so near-exact fits are returned for the caller to check.
            if (end_sq > target + 1e-12 * b_sq)
                throw InfeasibleError("residual bound is below the nonnegative least-squares residual",
                                      std::sqrt(end_sq > 0.0 ? end_sq : 0.0));
            finish(0.0);
            return out;
        }
    }
    return out;
}

}  // namespace detail

namespace {

SparseSpectrum make_spectrum(const AngleGrid& grid, CMatrix coefficients) {
    SparseSpectrum out{grid, std::move(coefficients), {}, {}, {}};
    out.values = out.coefficients.cwiseAbs().rowwise().sum();
    return out;
}

void fill_diagnostics(SolveDiagnostics& d, const detail::ConstrainedSolution& sol, double bound) {
    d.iterations += sol.lasso.iterations;
    d.residual = sol.lasso.residual;
    d.bound = bound;
    d.optimality = sol.lasso.optimality;
    d.converged = sol.lasso.converged && sol.lasso.residual <= bound * (1.0 + 1e-6) +
                                             1e-12 * std::max(bound, 1.0);
    d.objective_history = sol.lasso.history;
}

}  // namespace

SparseSpectrum bpdn(const SteeringDictionary& dict, const CVector& y, const SolverConfig& cfg) {
    cfg.validate();
    if (y.size() != dict.rows()) throw ValidationError("data length does not match the array");
    const CMatrix data = y;
    detail::WeightedLasso problem(dict.matrix(), data, Eigen::VectorXd::Ones(dict.cols()), false);
    const auto sol = detail::solve_constrained(problem, cfg.epsilon, cfg.inner_tol, cfg.inner_max_iters);
    auto out = make_spectrum(dict.grid(), sol.lasso.s);
    out.diagnostics.method = "bpdn";
    out.diagnostics.outer_iterations = sol.lambda_updates;
    fill_diagnostics(out.diagnostics, sol, cfg.epsilon);
    if (cfg.epsilon <= 1e-12 * problem.data_norm())
        out.diagnostics.converged = sol.lasso.residual <= 1e-12 * problem.data_norm() * (1.0 + 1e-6);
    out.diagnostics.objective = out.values.sum();
    return out;
}

SparseSpectrum reweighted_cs(const SteeringDictionary& dict, const CMatrix& y, const SolverConfig& cfg) {
    cfg.validate();
    if (y.rows() != dict.rows()) throw ValidationError("data rows do not match the array");
    if (y.cols() < 1) throw ValidationError("reweighted CS needs at least one snapshot");
    const auto Q = dict.cols();

    Eigen::VectorXd w = Eigen::VectorXd::Ones(Q);
    SolveDiagnostics diag;
    diag.method = "reweighted_cs";

    auto run = [&](const Eigen::VectorXd& weights, const CMatrix* warm,
                   std::optional<double> hint) {
        detail::WeightedLasso problem(dict.matrix(), y, weights, false);
        auto sol = detail::solve_constrained(problem, cfg.epsilon, cfg.inner_tol,
                                             cfg.inner_max_iters, hint, warm);
        fill_diagnostics(diag, sol, cfg.epsilon);
        return sol;
    };

    auto sol = run(w, nullptr, std::nullopt);
    Eigen::VectorXd row_l1 = sol.lasso.s.cwiseAbs().rowwise().sum();
    const double xi = cfg.reweight_xi ? *cfg.reweight_xi : 1e-3 * row_l1.maxCoeff();
    if (xi > 0.0) {
        for (int k = 0; k < cfg.max_reweight_iters; ++k) {
            ++diag.outer_iterations;
            const Eigen::VectorXd w_next = (row_l1.array() + xi).inverse().matrix();
            // Rescale lambda with the typical weight change to keep the warm start close.
            const double hint = sol.lambda * (w.mean() / w_next.mean());
            w = w_next;
            auto next = run(w, &sol.lasso.s, hint > 0.0 ? std::optional<double>(hint) : std::nullopt);
            const double change = (next.lasso.s - sol.lasso.s).cwiseAbs().maxCoeff();
            const double size = next.lasso.s.cwiseAbs().maxCoeff();
            sol = std::move(next);
            row_l1 = sol.lasso.s.cwiseAbs().rowwise().sum();
            if (change <= cfg.inner_tol * std::max(size, 1e-300)) break;
        }
    }
    auto out = make_spectrum(dict.grid(), sol.lasso.s);
    out.weights = w;
    out.diagnostics = diag;
    out.diagnostics.objective = w.dot(out.values);
    return out;
}

namespace {

Eigen::MatrixXd lifted_gram(const LiftedSystem& sys) {
    if (sys.steering.size() > 0) {
        // <g_q g_q^H, g_k g_k^H>_F = |g_q^H g_k|^2.
        return (sys.steering.adjoint() * sys.steering).cwiseAbs2();
    }
    return (sys.lifted.adjoint() * sys.lifted).real();
}

CVector offdiagonal_part(const CVector& v, int M) {
    CVector out = v;
    for (int i = 0; i < M; ++i) out[i * M + i] = 0.0;
    return out;
}

}  // namespace

SparseSpectrum subspace_cs(const LiftedSystem& sys, const SolverConfig& cfg) {
    cfg.validate();
    if (!(cfg.epsilon > 0.0)) throw ValidationError("subspace CS needs a positive delta");
    const int M = sys.num_sensors;
    if (sys.lifted.rows() != static_cast<Eigen::Index>(M) * M || sys.r_v.size() != sys.lifted.rows())
        throw ValidationError("lifted system dimensions are inconsistent");
    if (sys.lifted.cols() != static_cast<Eigen::Index>(sys.grid.size()))
        throw ValidationError("lifted dictionary does not match the grid");

    const Eigen::MatrixXd gram = lifted_gram(sys);
    const double delta = cfg.epsilon;
    SolveDiagnostics diag;
    diag.method = "subspace_cs";
    diag.bound = delta;
    double last_lambda = -1.0;

    const bool joint = cfg.cross_terms == CrossTermMode::joint && cfg.cross_term_bound > 0.0;
    auto solve_target = [&](const CVector& target) -> Eigen::VectorXd {
        const Eigen::VectorXd corr = (sys.lifted.adjoint() * target).real();
        const double b_sq = target.squaredNorm();
        auto run_path = [&] {
            if (!joint) return detail::nonnegative_path(gram, corr, b_sq, delta, cfg.inner_max_iters);
            try {
                return detail::nonnegative_path(gram, corr, b_sq, delta, cfg.inner_max_iters);
            } catch (const InfeasibleError& e) {
                // not yet feasible for this nuisance; take the closest fit and let the
                // nuisance update shrink the residual
                const double relaxed = e.min_residual() * (1.0 + 1e-6) + 1e-12 * std::sqrt(b_sq);
                return detail::nonnegative_path(gram, corr, b_sq, relaxed, cfg.inner_max_iters);
            }
        };
        auto path = run_path();
        if (path.ok) {
            last_lambda = path.lambda;
            diag.iterations += path.breakpoints;
            diag.optimality = path.optimality;
            diag.converged = path.optimality <= cfg.inner_tol;
            diag.objective_history = path.history;
            return path.s;
        }
        // Degenerate active set: fall back to the proximal solver on the same program.
        const CMatrix data = target;
        detail::WeightedLasso problem(sys.lifted, data, Eigen::VectorXd::Ones(sys.lifted.cols()), true);
        auto sol = detail::solve_constrained(problem, delta, cfg.inner_tol, cfg.inner_max_iters);
        diag.iterations += sol.lasso.iterations;
        diag.optimality = sol.lasso.optimality;
        diag.converged = sol.lasso.converged;
        diag.objective_history = sol.lasso.history;
        diag.method = "subspace_cs/proximal";
        return sol.lasso.s.real();
    };

    Eigen::VectorXd s = solve_target(sys.r_v);
    CVector nuisance = CVector::Zero(sys.r_v.size());
    if (joint) {
        // Block-coordinate descent. Once the pair (s, d) is feasible it stays feasible
        // after every nuisance update, so from then on the l1 objective never increases.
        for (int it = 0; it < 100; ++it) {
            ++diag.outer_iterations;
            const CVector miss = sys.r_v - sys.lifted * s.cast<cdouble>();
            CVector d = offdiagonal_part(miss, M);
            const double dn = d.norm();
            if (dn > cfg.cross_term_bound) d *= cfg.cross_term_bound / dn;
            nuisance = d;
            const Eigen::VectorXd next = solve_target(sys.r_v - nuisance);
            const double change = (next - s).cwiseAbs().maxCoeff();
            s = next;
            const double res = (sys.r_v - nuisance - sys.lifted * s.cast<cdouble>()).norm();
            if (res <= delta * (1.0 + 1e-6) && change <= cfg.inner_tol * std::max(s.maxCoeff(), 1e-300))
                break;
        }
    }

    s = s.cwiseMax(0.0);
    const double residual = (sys.r_v - nuisance - sys.lifted * s.cast<cdouble>()).norm();
    if (residual > delta * (1.0 + 1e-6) && diag.method == "subspace_cs" && (joint || last_lambda == 0.0))
        throw InfeasibleError("residual bound is below the nonnegative least-squares residual", residual);
    auto out = make_spectrum(sys.grid, s.cast<cdouble>());
    out.diagnostics = diag;
    out.diagnostics.residual = residual;
    out.diagnostics.objective = s.sum();
    out.diagnostics.converged =
        out.diagnostics.converged && out.diagnostics.residual <= delta * (1.0 + 1e-6);
    return out;
}

double choose_delta(const SubspaceDecomposition& dec, double factor) {
    if (!(factor >= 0.0)) throw ValidationError("delta factor must be nonnegative");
    const auto P = dec.signal_dim;
    const auto M = dec.size();
    const double noise = dec.eigenvalues.tail(M - P).cwiseMax(0.0).norm();
    const double signal = dec.eigenvalues.head(P).norm();
    const double floor = std::max(1e-9 * signal, std::numeric_limits<double>::min());
    return std::max(factor * noise, floor);
}

double choose_cross_term_bound(const SubspaceDecomposition& dec, double factor) {
    if (!(factor >= 0.0)) throw ValidationError("cross-term factor must be nonnegative");
    return factor * dec.eigenvalues.head(dec.signal_dim).norm();
}

}  // namespace raysep
