#pragma once

// Symmetric generalized eigensolvers for pencils S u = lambda B u with B SPD:
// a dense fallback for small problems and a shift-invert Lanczos with full
// reorthogonalization in the B inner product for large ones. Linear
// constraints <c, u>_B = 0 are handled by a bordered (KKT) factorization in
// the iterative path and by a spectral penalty in the dense path, so the
// pencil stays symmetric and the eigensolver oblivious.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmcindex {

using SpMat = Eigen::SparseMatrix<double>;

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EigenOptions {
    int dense_threshold = 3000;
    double tol = 1e-10;       // Ritz residual target, relative
    int max_steps = 0;        // 0 = automatic
    std::uint64_t seed = 0x5eed5u;
    bool force_dense = false;
    bool force_iterative = false;
};

struct Spectrum {
    Eigen::VectorXd values;    // nondecreasing
    Eigen::MatrixXd vectors;   // columns, B-orthonormal
    Eigen::VectorXd residuals; // ||S u - lambda B u|| / (max(1,|lambda|) ||B u||)
    std::string constraint = "unconstrained";

    int count() const { return static_cast<int>(values.size()); }
};

// Operator-defined symmetric pencil for the iterative path. solve_shifted
// must apply (S - sigma B)^{-1} restricted to the constraint subspace (the
// bordered systems below do exactly that).
struct OperatorPencil {
    int n = 0;
    double sigma = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply_S;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply_B;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> solve_shifted;
};

namespace detail {

inline void bProjectOut(Eigen::VectorXd& w, const std::vector<Eigen::VectorXd>& cons,
                        const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& applyB) {
    for (const auto& c : cons) {
        Eigen::VectorXd Bc = applyB(c);
        double cc = c.dot(Bc);
        if (cc <= 0) continue;
        w -= c * (Bc.dot(w) / cc);
    }
}

} // namespace detail

// Shift-invert Lanczos for the lowest `count` eigenpairs of S u = lambda B u
// on {u : <c,u>_B = 0 for all constraints}, assuming sigma lies strictly
// below the constrained spectrum.
inline Spectrum lanczosShiftInvertLowest(const OperatorPencil& op, int count,
                                         const EigenOptions& opts,
                                         const std::vector<Eigen::VectorXd>& constraints = {}) {
    const int n = op.n;
    if (count < 1) throw SolverError("eigensolver: count must be >= 1");
    if (count > n - static_cast<int>(constraints.size()))
        throw SolverError("eigensolver: count exceeds the constrained subspace dimension");

    int max_steps = opts.max_steps > 0 ? opts.max_steps
                                       : std::min(n, std::max(6 * count + 120, 160));
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<Eigen::VectorXd> V; // B-orthonormal Lanczos basis
    std::vector<double> alpha, beta; // tridiagonal entries; beta[j] couples j, j+1
    auto bnorm = [&](const Eigen::VectorXd& x) { return std::sqrt(x.dot(op.apply_B(x))); };

    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    detail::bProjectOut(v, constraints, op.apply_B);
    double nv = bnorm(v);
    if (!(nv > 0)) throw SolverError("eigensolver: degenerate start vector");
    v /= nv;
    V.push_back(v);

    Eigen::VectorXd ritz_values;
    Eigen::MatrixXd ritz_Y;
    int converged = 0;

    for (int j = 0; j < max_steps; ++j) {
        Eigen::VectorXd w = op.solve_shifted(op.apply_B(V[j]));
        detail::bProjectOut(w, constraints, op.apply_B);
        double a = w.dot(op.apply_B(V[j]));
        alpha.push_back(a);
        w -= a * V[j];
        if (j > 0) w -= beta[j - 1] * V[j - 1];
        // full reorthogonalization, twice for safety
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& u : V) w -= u * (u.dot(op.apply_B(w)));
        double b = bnorm(w);
        if (!(b > 1e-13)) {
            // invariant subspace found; restart with a fresh random direction
            for (int i = 0; i < n; ++i) w[i] = gauss(rng);
            detail::bProjectOut(w, constraints, op.apply_B);
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& u : V) w -= u * (u.dot(op.apply_B(w)));
            b = bnorm(w);
            if (!(b > 1e-13)) break; // subspace exhausted
            beta.push_back(0.0);
            V.push_back(w / b);
        } else {
            beta.push_back(b);
            V.push_back(w / b);
        }

        const int m = j + 1;
        if (m < count || (m % 5 != 0 && m < max_steps - 1)) continue;

        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            T(i, i) = alpha[i];
            if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        // Largest theta <=> eigenvalues nearest above sigma.
        Eigen::VectorXd theta = es.eigenvalues();
        Eigen::MatrixXd Y = es.eigenvectors();
        std::vector<int> order(m);
        for (int i = 0; i < m; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int x, int y) { return theta[x] > theta[y]; });

        // A clearly negative Ritz value means sigma sits inside the spectrum.
        if (theta[order[m - 1]] < -1e-7 * std::max(1e-300, theta[order[0]]))
            throw SolverError("eigensolver: shift is not below the constrained spectrum");

        converged = 0;
        for (int r = 0; r < std::min(count, m); ++r) {
            int idx = order[r];
            if (theta[idx] <= 0) break; // below sigma: sigma was not a lower bound
            double rnorm = std::abs(beta[m - 1] * Y(m - 1, idx)) / std::max(1e-300, theta[idx]);
            if (rnorm < opts.tol)
                ++converged;
            else
                break;
        }
        if (converged >= count) {
            ritz_values.resize(count);
            ritz_Y.resize(m, count);
            for (int r = 0; r < count; ++r) {
                ritz_values[r] = theta[order[r]];
                ritz_Y.col(r) = Y.col(order[r]);
            }
            break;
        }
    }
    if (converged < count)
        throw SolverError("eigensolver: Lanczos did not converge " + std::to_string(count) +
                          " eigenpairs in " + std::to_string(max_steps) + " steps");

    const int m = static_cast<int>(ritz_Y.rows());
    Spectrum out;
    out.values.resize(count);
    out.vectors.resize(n, count);
    out.residuals.resize(count);
    for (int r = 0; r < count; ++r) {
        double lam = op.sigma + 1.0 / ritz_values[r];
        Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < m; ++i) u += ritz_Y(i, r) * V[i];
        out.values[r] = lam;
        out.vectors.col(r) = u;
    }
    // theta descending already implies lambda ascending
    for (int r = 0; r + 1 < count; ++r)
        if (out.values[r] > out.values[r + 1] + 1e-12 * std::max(1.0, std::abs(out.values[r])))
            throw SolverError("eigensolver: internal ordering violation");

    // Re-orthonormalize in B and compute true residuals.
    for (int r = 0; r < count; ++r) {
        Eigen::VectorXd u = out.vectors.col(r);
        for (int q = 0; q < r; ++q) {
            Eigen::VectorXd uq = out.vectors.col(q);
            u -= uq * uq.dot(op.apply_B(u));
        }
        double nu = std::sqrt(u.dot(op.apply_B(u)));
        if (!(nu > 0)) throw SolverError("eigensolver: eigenvector collapse");
        u /= nu;
        out.vectors.col(r) = u;
        Eigen::VectorXd Su = op.apply_S(u);
        Eigen::VectorXd Bu = op.apply_B(u);
        out.residuals[r] =
            (Su - out.values[r] * Bu).norm() /
            (std::max(1.0, std::abs(out.values[r])) * std::max(1e-300, Bu.norm()));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Matrix pencils (used by the Jacobi module)

namespace detail {

inline Eigen::MatrixXd denseOf(const SpMat& A) { return Eigen::MatrixXd(A); }

} // namespace detail

// Dense path: reduce onto an explicit basis of the constraint subspace
// (orthogonal complement of the vectors B c), then solve the reduced
// generalized problem. Constraints are satisfied to machine precision.
inline Spectrum solveDenseConstrained(const SpMat& S, const SpMat& B,
                                      const std::vector<Eigen::VectorXd>& constraints,
                                      int count) {
    const int n = static_cast<int>(S.rows());
    const int k = static_cast<int>(constraints.size());
    if (count < 1 || count > n - k)
        throw SolverError("eigensolver: bad count for dense constrained solve");
    Eigen::MatrixXd Sd = detail::denseOf(S);
    Eigen::MatrixXd Bd = detail::denseOf(B);

    Eigen::MatrixXd Sz = Sd, Bz = Bd;
    Eigen::MatrixXd Z; // n x (n-k) basis with (B c)^T Z = 0
    if (k > 0) {
        Eigen::MatrixXd C(n, k);
        for (int j = 0; j < k; ++j) C.col(j) = Bd * constraints[j];
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(C);
        Z = Eigen::MatrixXd(qr.householderQ()).rightCols(n - k);
        Sz = Z.transpose() * Sd * Z;
        Bz = Z.transpose() * Bd * Z;
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Sz, Bz);
    if (es.info() != Eigen::Success)
        throw SolverError("eigensolver: dense generalized solve failed");
    Spectrum out;
    out.values = es.eigenvalues().head(count);
    out.vectors = k > 0 ? Eigen::MatrixXd(Z * es.eigenvectors().leftCols(count))
                        : Eigen::MatrixXd(es.eigenvectors().leftCols(count));
    out.residuals.resize(count);
    for (int r = 0; r < count; ++r) {
        Eigen::VectorXd u = out.vectors.col(r);
        Eigen::VectorXd Bu = Bd * u;
        Eigen::VectorXd r_full = Sd * u - out.values[r] * Bu;
        // the residual within the constraint subspace is what converges
        if (k > 0) r_full = Z * (Z.transpose() * r_full).eval();
        out.residuals[r] = r_full.norm() /
                           (std::max(1.0, std::abs(out.values[r])) * std::max(1e-300, Bu.norm()));
    }
    return out;
}

// Iterative path: bordered factorization of [S - sigma B, Bc; (Bc)^T, 0]
// realizes the shift-inverted operator on the constraint subspace.
inline Spectrum solveIterativeConstrained(const SpMat& S, const SpMat& B,
                                          const std::vector<Eigen::VectorXd>& constraints,
                                          int count, double sigma_hint,
                                          const EigenOptions& opts) {
    const int n = static_cast<int>(S.rows());
    const int k = static_cast<int>(constraints.size());
    double sigma = sigma_hint;

    for (int attempt = 0; attempt < 4; ++attempt) {
        // Assemble the bordered system.
        SpMat K(n + k, n + k);
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(S.nonZeros() + B.nonZeros() + 2 * k * n);
        for (int col = 0; col < n; ++col) {
            for (SpMat::InnerIterator it(S, col); it; ++it)
                trips.emplace_back(it.row(), col, it.value());
            for (SpMat::InnerIterator it(B, col); it; ++it)
                trips.emplace_back(it.row(), col, -sigma * it.value());
        }
        for (int j = 0; j < k; ++j) {
            Eigen::VectorXd Bc = B * constraints[j];
            for (int i = 0; i < n; ++i) {
                if (Bc[i] == 0.0) continue;
                trips.emplace_back(i, n + j, Bc[i]);
                trips.emplace_back(n + j, i, Bc[i]);
            }
        }
        K.setFromTriplets(trips.begin(), trips.end());
        K.makeCompressed();
        Eigen::SparseLU<SpMat> lu;
        lu.compute(K);
        if (lu.info() != Eigen::Success) {
            sigma = sigma * 4 - 1;
            continue;
        }

        OperatorPencil op;
        op.n = n;
        op.sigma = sigma;
        op.apply_S = [&S](const Eigen::VectorXd& x) { return Eigen::VectorXd(S * x); };
        op.apply_B = [&B](const Eigen::VectorXd& x) { return Eigen::VectorXd(B * x); };
        op.solve_shifted = [&lu, n, k](const Eigen::VectorXd& rhs) {
            Eigen::VectorXd big = Eigen::VectorXd::Zero(n + k);
            big.head(n) = rhs;
            Eigen::VectorXd sol = lu.solve(big);
            return Eigen::VectorXd(sol.head(n));
        };
        try {
            Spectrum out = lanczosShiftInvertLowest(op, count, opts, constraints);
            if (out.values[0] - sigma < 1e-8 * (1.0 + std::abs(out.values[0]))) {
                // sigma was suspiciously close to (or inside) the spectrum
                sigma = sigma * 4 - 1;
                continue;
            }
            return out;
        } catch (const SolverError&) {
            if (attempt == 3) throw;
            sigma = sigma * 4 - 1;
        }
    }
    throw SolverError("eigensolver: could not certify a shift below the spectrum");
}

} // namespace cmcindex
