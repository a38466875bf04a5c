#pragma once

// P1 finite-element discretization of the second-variation quadratic form
//   Q(u,v) = int_M <grad u, grad v> - |A|^2 u v  dM + int_dM II^dW(N,N) u v ds
// (weak form of the Jacobi operator with the Robin boundary condition), the
// constrained eigenvalue problem on mean-zero functions, and the Morse index.

#include "cmcindex/eigensolver.hpp"
#include "cmcindex/geometry.hpp"
#include "cmcindex/mesh.hpp"

#include <cstdio>
#include <ostream>

namespace cmcindex {

struct QuadraticForm {
    SpMat S;                      // stiffness - potential + Robin term
    SpMat B;                      // consistent P1 mass
    Eigen::VectorXd area_weights; // a_i = int phi_i dM = B * 1
    double mean_edge = 0;
    double max_normA2 = 0;
    double max_abs_robin = 0;     // max |II^dW(N,N)| over boundary vertices
    int n = 0;
};

struct AssembleOptions {
    double free_boundary_tol = 0.05; // radians
    double off_surface_tol = 1e-6;
    double tangency_tol = 0.05;
};

// Gradient of the barycentric coordinate at corner c of face f.
inline Vec3 hatGradient(const Mesh& m, int f, int c) {
    const auto& t = m.face(f);
    const Vec3& a = m.position(t[(c + 1) % 3]);
    const Vec3& b = m.position(t[(c + 2) % 3]);
    Vec3 n = (m.position(t[1]) - m.position(t[0])).cross(m.position(t[2]) - m.position(t[0]));
    double twoA = n.norm();
    return n.normalized().cross(b - a) / twoA;
}

inline QuadraticForm assemble(const Mesh& m, const SurfaceGeometry& g,
                              const Container* container,
                              const AssembleOptions& opt = {}) {
    const int nv = m.numVertices();
    QuadraticForm q;
    q.n = nv;
    q.mean_edge = m.meanEdgeLength();
    q.max_normA2 = g.maxNormA2();

    if (container) {
        auto fb = checkFreeBoundary(m, g, *container, opt.off_surface_tol);
        if (fb.max_angle > opt.free_boundary_tol)
            throw GeometryError("free boundary violated: conormal/container-normal angle " +
                                std::to_string(fb.max_angle) + " rad at vertex " +
                                std::to_string(fb.worst_vertex));
    }

    std::vector<Eigen::Triplet<double>> sT, bT;
    sT.reserve(9 * m.numFaces() + 2 * nv);
    bT.reserve(9 * m.numFaces());
    Eigen::VectorXd lumped = Eigen::VectorXd::Zero(nv);

    for (int f = 0; f < m.numFaces(); ++f) {
        const auto& t = m.face(f);
        double A = m.faceArea(f);
        Vec3 grad[3];
        for (int c = 0; c < 3; ++c) grad[c] = hatGradient(m, f, c);
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                sT.emplace_back(t[a], t[b], A * grad[a].dot(grad[b]));
                bT.emplace_back(t[a], t[b], A / 12.0 * (a == b ? 2.0 : 1.0));
            }
            lumped[t[a]] += A / 3.0;
        }
    }
    // potential -|A|^2, vertex-lumped
    for (int v = 0; v < nv; ++v) sT.emplace_back(v, v, -g.normA2[v] * lumped[v]);

    // Robin term II^dW(N,N), lumped per boundary edge
    if (container) {
        for (const auto& e : m.edges()) {
            if (!e.boundary) continue;
            double len = (m.position(e.head) - m.position(e.tail)).norm();
            for (int v : {e.tail, e.head}) {
                ContainerData cd = containerData(*container, m.position(v), g.normal[v],
                                                 opt.off_surface_tol, opt.tangency_tol);
                sT.emplace_back(v, v, cd.II_NN * len / 2.0);
                q.max_abs_robin = std::max(q.max_abs_robin, std::abs(cd.II_NN));
            }
        }
    }

    q.S.resize(nv, nv);
    q.S.setFromTriplets(sT.begin(), sT.end());
    q.S.makeCompressed();
    q.B.resize(nv, nv);
    q.B.setFromTriplets(bT.begin(), bT.end());
    q.B.makeCompressed();
    q.area_weights = q.B * Eigen::VectorXd::Ones(nv);
    return q;
}

// Lowest eigenpairs of S u = lambda B u, restricted to the discrete mean-zero
// class {a^T u = 0} when `mean_zero` is set. Dense below the threshold,
// shift-invert Lanczos on the bordered pencil above it; both deterministic.
inline Spectrum constrainedSpectrum(const QuadraticForm& q, int count, bool mean_zero = true,
                                    const EigenOptions& opts = {}) {
    if (count < 1 || count >= q.n - 1)
        throw SolverError("constrainedSpectrum: need 1 <= count < V - 1");
    std::vector<Eigen::VectorXd> cons;
    if (mean_zero) cons.push_back(Eigen::VectorXd::Ones(q.n)); // <1, u>_B = a^T u
    Spectrum s;
    bool dense = !opts.force_iterative && (q.n <= opts.dense_threshold || opts.force_dense);
    if (dense) {
        s = solveDenseConstrained(q.S, q.B, cons, count);
    } else {
        double sigma = -3.0 * (1.0 + q.max_normA2 + q.max_abs_robin);
        s = solveIterativeConstrained(q.S, q.B, cons, count, sigma, opts);
    }
    s.constraint = mean_zero ? "mean-zero" : "unconstrained";
    for (int r = 0; r < s.count(); ++r) {
        Eigen::VectorXd u = s.vectors.col(r);
        double uBu = u.dot(q.B * u);
        double mismatch = std::abs(u.dot(q.S * u) - s.values[r] * uBu);
        if (mismatch > 1e-8 * uBu * std::max(1.0, std::abs(s.values[r])))
            throw SolverError("constrainedSpectrum: Rayleigh quotient mismatch " +
                              std::to_string(mismatch));
    }
    return s;
}

struct MorseIndex {
    int negative = 0;       // eigenvalues < -zero_tol
    int numerically_zero = 0; // eigenvalues within [-zero_tol, zero_tol]
    double zero_tol = 0;
};

// Spectral zero threshold tied to the discretization error scale. The |A|^2
// factor is floored at 1 so flat surfaces keep a usable threshold.
inline double defaultZeroTol(const QuadraticForm& q) {
    return 2.5 * q.mean_edge * q.mean_edge * std::max(1.0, q.max_normA2);
}

inline MorseIndex morseIndex(const Spectrum& s, double zero_tol) {
    if (s.count() == 0) throw SolverError("morseIndex: empty spectrum");
    if (!(s.values[s.count() - 1] > zero_tol))
        throw SolverError("morseIndex: spectrum too short to certify the index "
                          "(last eigenvalue " +
                          std::to_string(s.values[s.count() - 1]) + " <= zero_tol " +
                          std::to_string(zero_tol) + ")");
    MorseIndex out;
    out.zero_tol = zero_tol;
    for (int i = 0; i < s.count(); ++i) {
        if (s.values[i] < -zero_tol)
            ++out.negative;
        else if (s.values[i] <= zero_tol)
            ++out.numerically_zero;
    }
    return out;
}

inline double rayleigh(const QuadraticForm& q, const Eigen::VectorXd& u) {
    double den = u.dot(q.B * u);
    if (!(den > 0)) throw SolverError("rayleigh: zero (or negative) denominator");
    return u.dot(q.S * u) / den;
}

// Coordinate text export (row, col, value), column-major order, one entry per line.
inline void writeCoordinateMatrix(std::ostream& os, const SpMat& M) {
    os << M.rows() << " " << M.cols() << " " << M.nonZeros() << "\n";
    char buf[96];
    for (int k = 0; k < M.outerSize(); ++k)
        for (SpMat::InnerIterator it(M, k); it; ++it) {
            std::snprintf(buf, sizeof(buf), "%ld %ld %.17g\n", static_cast<long>(it.row()),
                          static_cast<long>(it.col()), it.value());
            os << buf;
        }
}

} // namespace cmcindex
