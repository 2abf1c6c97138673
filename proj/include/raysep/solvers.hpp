// SPDX-License-Identifier: Apache-2.0
//
// Sparse recovery over an angle grid.
//
//   bpdn          min |s|_1           s.t. |G s - y|_2 <= eps
//   reweighted_cs min |W S_l1|_1      s.t. |G S - Y|_F <= eps, W refreshed from the
//                 previous solution as w_q = 1 / (sum_l |S_ql| + xi)
//   subspace_cs   min |s'|_1, s' >= 0 s.t. |r_V - G' s'|_2 <= delta
//
// The complex programs are solved through their penalized form
// 1/2 |G S - Y|^2 + lambda sum_q w_q sum_l |S_ql|, with lambda root-found so the
// residual meets the bound. The nonnegative lifted program follows the exact
// piecewise-linear regularization path down to the residual bound.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "raysep/array_model.hpp"
#include "raysep/subspace.hpp"

namespace raysep {

enum class CrossTermMode {
    folded,  // cross-term energy absorbed by delta
    joint,   // off-diagonal nuisance d with |d|_2 <= kappa estimated alongside s'
};

struct SolverConfig {
    double epsilon = 0.0;                // residual bound (eps or delta)
    std::optional<double> reweight_xi;   // unset: 1e-3 * max of the first solution
    int max_reweight_iters = 10;
    double inner_tol = 1e-8;             // relative first-order optimality tolerance
    int inner_max_iters = 20000;
    CrossTermMode cross_terms = CrossTermMode::folded;
    double cross_term_bound = 0.0;       // kappa, joint mode only

    void validate() const;
};

struct SolveDiagnostics {
    int iterations = 0;        // inner iterations (FISTA steps or path breakpoints)
    int outer_iterations = 0;  // lambda updates or reweighting passes
    double residual = 0.0;
    double bound = 0.0;
    double objective = 0.0;    // l1 (weighted for reweighted_cs) of the returned solution
    double optimality = 0.0;   // relative first-order optimality of the final penalized solve
    bool converged = false;
    std::string method;
    std::vector<double> objective_history;  // inner objective of the final solve, per iteration
};

nlohmann::json to_json(const SolveDiagnostics& d);

struct SparseSpectrum {
    AngleGrid grid;
    CMatrix coefficients;     // Q x L; real and nonnegative for subspace_cs
    Eigen::VectorXd values;   // per grid angle: sum_l |S_ql|, or the power for subspace_cs
    Eigen::VectorXd weights;  // weights of the final reweighted pass (reweighted_cs only)
    SolveDiagnostics diagnostics;
};

SparseSpectrum bpdn(const SteeringDictionary& dict, const CVector& y, const SolverConfig& cfg);

SparseSpectrum reweighted_cs(const SteeringDictionary& dict, const CMatrix& y, const SolverConfig& cfg);

/// `cfg.epsilon` is delta and must be positive.
SparseSpectrum subspace_cs(const LiftedSystem& lifted, const SolverConfig& cfg);

/// Residual bound for subspace_cs: factor * sqrt(sum_{k>P} lambda_k^2), floored at
/// 1e-9 * |r_V|_2 so it stays positive. factor = 0 requests near-interpolation.
double choose_delta(const SubspaceDecomposition& dec, double factor = 1.5);

/// Default kappa for joint cross-term mode: factor * sqrt(sum_{k<=P} lambda_k^2).
double choose_cross_term_bound(const SubspaceDecomposition& dec, double factor = 0.25);

namespace detail {

struct LassoSolution {
    CMatrix s;
    double residual = 0.0;
    double penalty = 0.0;  // sum_q w_q sum_l |s_ql|
    double optimality = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;
};

/// Penalized weighted-l1 least squares on a fixed dictionary and data block.
/// With `nonnegative` the unknowns are real and constrained to be >= 0.
class WeightedLasso {
public:
    WeightedLasso(const CMatrix& g, const CMatrix& y, Eigen::VectorXd weights, bool nonnegative);

    LassoSolution solve(double lambda, const CMatrix& warm, double tol, int max_iters) const;

    /// Smallest lambda for which zero is optimal.
    double lambda_max() const;
    double optimality(const CMatrix& s, double lambda) const;
    double data_norm() const { return y_norm_; }
    Eigen::Index cols() const { return g_.cols(); }
    Eigen::Index snapshots() const { return y_.cols(); }

    /// Least squares restricted to the nonzero pattern of `s` (lambda = 0).
    CMatrix support_least_squares(const CMatrix& s) const;
    double residual(const CMatrix& s) const { return (g_ * s - y_).norm(); }
    double penalty(const CMatrix& s) const;

private:
    CMatrix prox(const CMatrix& v, double lambda_step) const;
    double column_optimality(const CMatrix& s, Eigen::Index col, double lambda) const;
    bool polish(CMatrix& s, Eigen::Index col, double lambda) const;
    bool active_set(CMatrix& s, Eigen::Index col, double lambda, double tol,
                    std::vector<double>& history, int& steps) const;

    CMatrix g_;
    CMatrix y_;
    Eigen::VectorXd w_;
    bool nonneg_;
    CMatrix gh_y_;
    double lipschitz_;
    double y_norm_;
    double grad_scale_;
};

struct ConstrainedSolution {
    LassoSolution lasso;
    double lambda = 0.0;
    int lambda_updates = 0;
};

/// min sum w |s| s.t. |G s - y| <= eps via root-finding on lambda. Throws InfeasibleError.
ConstrainedSolution solve_constrained(const WeightedLasso& problem, double eps, double tol,
                                      int max_iters, std::optional<double> lambda_hint = {},
                                      const CMatrix* warm = nullptr);

struct PathSolution {
    Eigen::VectorXd s;
    double residual = 0.0;
    double lambda = 0.0;
    int breakpoints = 0;
    double optimality = 0.0;
    bool ok = false;  // false when the path hit a degenerate active set
    std::vector<double> history;
};

/// Nonnegative lasso path on Gram form: minimize |s|_1 over s >= 0 with
/// |b - A s|_2 <= bound, given gram = A^T A, corr = A^T b, b_sq = |b|^2.
PathSolution nonnegative_path(const Eigen::MatrixXd& gram, const Eigen::VectorXd& corr,
                              double b_sq, double bound, int max_breakpoints);

}  // namespace detail

}  // namespace raysep
