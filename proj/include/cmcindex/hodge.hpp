#pragma once

// Discrete 1-form complex on lowest-order (Whitney) edge elements:
// d0/d1 incidence, mass matrices, the weak Hodge Laplacian on 1-forms under
// the tangential-field (free/absolute) and normal-field (relative, i*w = 0)
// boundary conditions, harmonic bases of dimension 2g+k-1, the 1-form
// spectrum, the Hodge star and Whitney sampling to vertex vector fields.
//
// The harmonic dimension is a rank fact here: with edge elements the kernel
// dimensions of both weak Laplacians equal 2g+k-1 combinatorially, so the
// dimension test is exact integer arithmetic up to a documented rank gap.

#include "cmcindex/eigensolver.hpp"
#include "cmcindex/geometry.hpp"
#include "cmcindex/jacobi.hpp"
#include "cmcindex/mesh.hpp"

#include <Eigen/SparseCholesky>

#include <memory>
#include <vector>

namespace cmcindex {

struct HodgeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OneForm {
    Eigen::VectorXd coeff; // one circulation per canonical oriented edge (tail < head)
};

enum class FieldBC {
    tangential, // dual field tangent to dM: free (absolute) complex
    normal      // dual field normal to dM: i*w = 0 essential, relative complex
};

inline const char* to_string(FieldBC bc) {
    return bc == FieldBC::tangential ? "tangential_field" : "normal_field";
}

struct DeRhamComplex {
    const Mesh* mesh = nullptr;
    SpMat d0;  // E x V, (d0 f)_e = f(head) - f(tail)
    SpMat d1;  // F x E, signed boundary sum; d1 * d0 = 0 exactly
    SpMat M0;  // consistent P1 mass
    SpMat M1;  // Whitney 1-form mass
    SpMat R;   // rotation pairing R(a,b) = int <n x W_b, W_a>
    SpMat A_ex; // d1^T M2 d1 with M2 = diag(1/area)
    SpMat G;    // d0^T M1 (V x E); G w = weak codifferential data
    Eigen::VectorXd face_area;
    std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> M1_solver;
    std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> M0_solver;

    int nE() const { return static_cast<int>(M1.rows()); }
    int nV() const { return static_cast<int>(M0.rows()); }
};

inline DeRhamComplex assembleComplex(const Mesh& m) {
    DeRhamComplex C;
    C.mesh = &m;
    const int nv = m.numVertices(), ne = m.numEdges(), nf = m.numFaces();

    std::vector<Eigen::Triplet<double>> d0T, d1T, m0T, m1T, rT;
    d0T.reserve(2 * ne);
    for (int e = 0; e < ne; ++e) {
        d0T.emplace_back(e, m.edge(e).tail, -1.0);
        d0T.emplace_back(e, m.edge(e).head, +1.0);
    }

    C.face_area.resize(nf);
    for (int f = 0; f < nf; ++f) {
        const auto& t = m.face(f);
        double A = m.faceArea(f);
        C.face_area[f] = A;
        Vec3 n = m.faceNormal(f);
        Vec3 grad[3];
        for (int c = 0; c < 3; ++c) grad[c] = hatGradient(m, f, c);

        double Gm[3][3], Hm[3][3];
        for (int p = 0; p < 3; ++p)
            for (int qq = 0; qq < 3; ++qq) {
                Gm[p][qq] = grad[p].dot(grad[qq]);
                Hm[p][qq] = n.cross(grad[p]).dot(grad[qq]);
            }
        auto bary = [A](int x, int y) { return A / 12.0 * (x == y ? 2.0 : 1.0); };

        // local directed edges (corner a -> corner b) and their global ids/signs
        const int la[3] = {0, 1, 2}, lb[3] = {1, 2, 0};
        int ge[3];
        double sg[3];
        for (int k = 0; k < 3; ++k) {
            int u = t[la[k]], v = t[lb[k]];
            ge[k] = m.edgeBetween(u, v);
            sg[k] = (m.edge(ge[k]).tail == u) ? 1.0 : -1.0;
            d1T.emplace_back(f, ge[k], sg[k]);
        }
        for (int k1 = 0; k1 < 3; ++k1) {
            int a = la[k1], b = lb[k1];
            for (int k2 = 0; k2 < 3; ++k2) {
                int c = la[k2], d = lb[k2];
                double mass = bary(a, c) * Gm[b][d] - bary(a, d) * Gm[b][c] -
                              bary(b, c) * Gm[a][d] + bary(b, d) * Gm[a][c];
                m1T.emplace_back(ge[k1], ge[k2], sg[k1] * sg[k2] * mass);
                double rot = bary(c, a) * Hm[d][b] - bary(c, b) * Hm[d][a] -
                             bary(d, a) * Hm[c][b] + bary(d, b) * Hm[c][a];
                rT.emplace_back(ge[k1], ge[k2], sg[k1] * sg[k2] * rot);
            }
        }
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) m0T.emplace_back(t[a], t[b], bary(a, b));
    }

    C.d0.resize(ne, nv);
    C.d0.setFromTriplets(d0T.begin(), d0T.end());
    C.d1.resize(nf, ne);
    C.d1.setFromTriplets(d1T.begin(), d1T.end());
    C.M0.resize(nv, nv);
    C.M0.setFromTriplets(m0T.begin(), m0T.end());
    C.M1.resize(ne, ne);
    C.M1.setFromTriplets(m1T.begin(), m1T.end());
    C.R.resize(ne, ne);
    C.R.setFromTriplets(rT.begin(), rT.end());

    SpMat M2inv(nf, nf);
    std::vector<Eigen::Triplet<double>> m2T;
    for (int f = 0; f < nf; ++f) m2T.emplace_back(f, f, 1.0 / C.face_area[f]);
    M2inv.setFromTriplets(m2T.begin(), m2T.end());
    C.A_ex = SpMat(C.d1.transpose()) * M2inv * C.d1;
    C.G = SpMat(C.d0.transpose()) * C.M1;
    for (SpMat* M : {&C.d0, &C.d1, &C.M0, &C.M1, &C.R, &C.A_ex, &C.G}) M->makeCompressed();

    C.M1_solver = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
    C.M1_solver->compute(C.M1);
    C.M0_solver = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
    C.M0_solver->compute(C.M0);
    if (C.M1_solver->info() != Eigen::Success || C.M0_solver->info() != Eigen::Success)
        throw HodgeError("mass matrix factorization failed");
    return C;
}

namespace detail {

inline SpMat subMatrix(const SpMat& A, const std::vector<int>& rowMap,
                       const std::vector<int>& colMap, int nr, int nc) {
    std::vector<Eigen::Triplet<double>> T;
    T.reserve(A.nonZeros());
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it) {
            int r = rowMap[it.row()], c = colMap[it.col()];
            if (r >= 0 && c >= 0) T.emplace_back(r, c, it.value());
        }
    SpMat out(nr, nc);
    out.setFromTriplets(T.begin(), T.end());
    out.makeCompressed();
    return out;
}

// Restriction of the complex to a boundary condition: the tangential (free)
// case keeps everything, the normal (relative) case drops boundary edges and
// boundary vertices.
struct SubComplex {
    std::vector<int> edges;   // global edge ids in the subproblem
    std::vector<int> emap;    // global -> local edge (-1 outside)
    std::vector<int> vmap;    // global -> local vertex (-1 outside)
    SpMat A_ex, M1, G, M0, d0;
    int nE = 0, nV = 0;
};

inline SubComplex makeSub(const DeRhamComplex& C, FieldBC bc) {
    const Mesh& m = *C.mesh;
    SubComplex S;
    S.vmap.assign(m.numVertices(), -1);
    S.emap.assign(m.numEdges(), -1);
    if (bc == FieldBC::tangential) {
        for (int e = 0; e < m.numEdges(); ++e) {
            S.emap[e] = e;
            S.edges.push_back(e);
        }
        for (int v = 0; v < m.numVertices(); ++v) S.vmap[v] = v;
        S.nE = m.numEdges();
        S.nV = m.numVertices();
        S.A_ex = C.A_ex;
        S.M1 = C.M1;
        S.G = C.G;
        S.M0 = C.M0;
        S.d0 = C.d0;
        return S;
    }
    for (int e = 0; e < m.numEdges(); ++e)
        if (!m.edge(e).boundary) {
            S.emap[e] = static_cast<int>(S.edges.size());
            S.edges.push_back(e);
        }
    int nv = 0;
    for (int v = 0; v < m.numVertices(); ++v)
        if (!m.vertexOnBoundary(v)) S.vmap[v] = nv++;
    S.nE = static_cast<int>(S.edges.size());
    S.nV = nv;
    S.A_ex = subMatrix(C.A_ex, S.emap, S.emap, S.nE, S.nE);
    S.M1 = subMatrix(C.M1, S.emap, S.emap, S.nE, S.nE);
    S.G = subMatrix(C.G, S.vmap, S.emap, S.nV, S.nE);
    S.M0 = subMatrix(C.M0, S.vmap, S.vmap, S.nV, S.nV);
    S.d0 = subMatrix(C.d0, S.emap, S.vmap, S.nE, S.nV);
    return S;
}

// Lowest eigenpairs of the weak 1-form Hodge Laplacian under bc. The
// codifferential block is handled without forming M0^{-1}: the iterative
// path factors the bordered saddle system, the dense path inverts M0 densely.
inline Spectrum hodgeLowest(const SubComplex& S, int count, const EigenOptions& opts) {
    if (S.nE == 0 || count < 1) throw HodgeError("hodge solve: empty problem or bad count");
    count = std::min(count, S.nE);
    bool dense = !opts.force_iterative && (S.nE <= opts.dense_threshold || opts.force_dense);
    if (dense) {
        Eigen::MatrixXd M0d(S.M0), Gd(S.G), M1d(S.M1), Aex(S.A_ex);
        Eigen::MatrixXd L = Aex;
        if (S.nV > 0) L += Gd.transpose() * M0d.llt().solve(Gd);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(L, M1d);
        if (es.info() != Eigen::Success) throw HodgeError("dense hodge eigensolve failed");
        Spectrum out;
        out.values = es.eigenvalues().head(count);
        out.vectors = es.eigenvectors().leftCols(count);
        out.residuals.resize(count);
        for (int r = 0; r < count; ++r) {
            Eigen::VectorXd u = out.vectors.col(r);
            Eigen::VectorXd res = L * u - out.values[r] * (M1d * u);
            out.residuals[r] = res.norm() / (std::max(1.0, std::abs(out.values[r])) *
                                             std::max(1e-300, (M1d * u).norm()));
        }
        return out;
    }

    // bordered system [[A_ex + s M1, G^T], [G, -M0]] realizes (L + s M1)^{-1}
    const double s = 1.0;
    const int n = S.nE, nv = S.nV;
    std::vector<Eigen::Triplet<double>> T;
    T.reserve(S.A_ex.nonZeros() + S.M1.nonZeros() + 2 * S.G.nonZeros() + S.M0.nonZeros());
    for (int k = 0; k < S.A_ex.outerSize(); ++k)
        for (SpMat::InnerIterator it(S.A_ex, k); it; ++it)
            T.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < S.M1.outerSize(); ++k)
        for (SpMat::InnerIterator it(S.M1, k); it; ++it)
            T.emplace_back(it.row(), it.col(), s * it.value());
    for (int k = 0; k < S.G.outerSize(); ++k)
        for (SpMat::InnerIterator it(S.G, k); it; ++it) {
            T.emplace_back(n + it.row(), it.col(), it.value());
            T.emplace_back(it.col(), n + it.row(), it.value());
        }
    for (int k = 0; k < S.M0.outerSize(); ++k)
        for (SpMat::InnerIterator it(S.M0, k); it; ++it)
            T.emplace_back(n + it.row(), n + it.col(), -it.value());
    SpMat K(n + nv, n + nv);
    K.setFromTriplets(T.begin(), T.end());
    K.makeCompressed();
    Eigen::SparseLU<SpMat> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success) throw HodgeError("hodge: saddle factorization failed");

    Eigen::SimplicialLDLT<SpMat> m0f;
    if (nv > 0) {
        m0f.compute(S.M0);
        if (m0f.info() != Eigen::Success) throw HodgeError("hodge: M0 factorization failed");
    }

    OperatorPencil op;
    op.n = n;
    op.sigma = -s;
    op.apply_B = [&S](const Eigen::VectorXd& x) { return Eigen::VectorXd(S.M1 * x); };
    op.apply_S = [&S, &m0f, nv](const Eigen::VectorXd& x) {
        Eigen::VectorXd y = S.A_ex * x;
        if (nv > 0) y += S.G.transpose() * m0f.solve(Eigen::VectorXd(S.G * x));
        return y;
    };
    op.solve_shifted = [&lu, n, nv](const Eigen::VectorXd& rhs) {
        Eigen::VectorXd big = Eigen::VectorXd::Zero(n + nv);
        big.head(n) = rhs;
        Eigen::VectorXd sol = lu.solve(big);
        return Eigen::VectorXd(sol.head(n));
    };
    return lanczosShiftInvertLowest(op, count, opts);
}

} // namespace detail

struct HarmonicBasis {
    FieldBC bc = FieldBC::tangential;
    std::vector<OneForm> forms;  // global edge coefficients, M1-orthonormal
    Eigen::MatrixXd gram;        // L2 Gram matrix of the basis
    Eigen::VectorXd kernel_eigenvalues; // the numerically-zero eigenvalues
    double first_nonzero = 0;

    int dim() const { return static_cast<int>(forms.size()); }
};

inline EigenOptions hodgeDefaultOptions() {
    EigenOptions o;
    o.dense_threshold = 1200;
    return o;
}

// Basis of the discrete harmonic space under bc. The dimension must equal
// 2g + k - 1 with a clean spectral gap (factor >= 1e6), otherwise this is a
// hard error -- the Lemma 2.1 test must never pass or fail by luck.
inline HarmonicBasis harmonicBasis(const DeRhamComplex& C, FieldBC bc,
                                   EigenOptions opts = hodgeDefaultOptions()) {
    const Mesh& m = *C.mesh;
    Topology topo = topologyOf(m);
    const int d_exp = 2 * topo.genus + topo.boundary_components - 1;
    detail::SubComplex S = detail::makeSub(C, bc);

    HarmonicBasis out;
    out.bc = bc;
    if (S.nE == 0) {
        if (d_exp != 0)
            throw HodgeError("harmonic basis: empty subcomplex but 2g+k-1 = " +
                             std::to_string(d_exp));
        out.gram.resize(0, 0);
        return out;
    }
    int want = std::min(S.nE, d_exp + 3);
    if (S.nE <= d_exp + 2) opts.force_dense = true; // tiny problem, resolve fully
    Spectrum sp = detail::hodgeLowest(S, want, opts);

    // rank split: the first d_exp eigenvalues must be a factor >= 1e6 below
    // the next one; conversely the (d_exp+1)-th must not also look like zero.
    auto val = [&](int i) { return std::max(std::abs(sp.values[i]), 1e-300); };
    if (d_exp > want) throw HodgeError("harmonic basis: requested dimension unavailable");
    if (d_exp >= 1 && d_exp < sp.count()) {
        if (!(val(d_exp - 1) <= 1e-6 * val(d_exp)))
            throw HodgeError("harmonic basis: ambiguous rank gap (eigenvalue " +
                             std::to_string(sp.values[d_exp - 1]) + " vs " +
                             std::to_string(sp.values[d_exp]) + "); dimension != 2g+k-1?");
    }
    if (d_exp < sp.count() - 1 && val(d_exp) <= 1e-6 * val(d_exp + 1))
        throw HodgeError("harmonic basis: found more than 2g+k-1 = " + std::to_string(d_exp) +
                         " numerically-zero eigenvalues");
    if (d_exp == sp.count() && d_exp > 0 && val(d_exp - 1) > 1e-9)
        throw HodgeError("harmonic basis: kernel eigenvalues not resolved");

    // Polish: remove the exact-form component so the weak codifferential of
    // each basis form vanishes to solver precision. K alpha = G w is always
    // solvable (the rhs is orthogonal to constants); K = d0^T M1 d0 is the
    // P1 stiffness of the sub 0-forms, pinned at one vertex in the free case.
    Eigen::MatrixXd W(S.nE, d_exp);
    for (int r = 0; r < d_exp; ++r) W.col(r) = sp.vectors.col(r);
    if (d_exp > 0 && S.nV > 0) {
        SpMat Kst = S.G * S.d0;
        const bool pin = (bc == FieldBC::tangential); // constants span the kernel
        const int off = pin ? 1 : 0;
        std::vector<int> redmap(S.nV);
        for (int v = 0; v < S.nV; ++v) redmap[v] = v - off;
        if (pin) redmap[0] = -1;
        SpMat Kred = pin ? detail::subMatrix(Kst, redmap, redmap, S.nV - 1, S.nV - 1) : Kst;
        if (Kred.rows() > 0) {
            Eigen::SimplicialLDLT<SpMat> kf(Kred);
            if (kf.info() != Eigen::Success)
                throw HodgeError("harmonic basis: 0-form stiffness factorization failed");
            for (int r = 0; r < d_exp; ++r) {
                Eigen::VectorXd rhs = S.G * W.col(r);
                Eigen::VectorXd alpha = Eigen::VectorXd::Zero(S.nV);
                if (pin)
                    alpha.tail(S.nV - 1) = kf.solve(Eigen::VectorXd(rhs.tail(S.nV - 1)));
                else
                    alpha = kf.solve(rhs);
                W.col(r) -= S.d0 * alpha;
            }
        }
        // re-orthonormalize in M1 after the correction
        for (int r = 0; r < d_exp; ++r) {
            Eigen::VectorXd u = W.col(r);
            for (int q = 0; q < r; ++q) u -= W.col(q) * W.col(q).dot(S.M1 * u);
            double nu = std::sqrt(u.dot(S.M1 * u));
            if (!(nu > 0)) throw HodgeError("harmonic basis: polish collapsed a basis vector");
            W.col(r) = u / nu;
        }
    }
    out.gram.resize(d_exp, d_exp);
    out.kernel_eigenvalues.resize(d_exp);
    for (int r = 0; r < d_exp; ++r) out.kernel_eigenvalues[r] = sp.values[r];
    out.first_nonzero = d_exp < sp.count() ? sp.values[d_exp] : 0.0;
    out.forms.resize(d_exp);
    for (int r = 0; r < d_exp; ++r) {
        Eigen::VectorXd global = Eigen::VectorXd::Zero(C.nE());
        for (int i = 0; i < S.nE; ++i) global[S.edges[i]] = W(i, r);
        out.forms[r].coeff = global;
    }
    for (int a = 0; a < d_exp; ++a)
        for (int b = 0; b < d_exp; ++b)
            out.gram(a, b) = out.forms[a].coeff.dot(C.M1 * out.forms[b].coeff);
    return out;
}

// Nondecreasing 1-form Hodge-Laplacian eigenvalues (tangential-field bc by
// default); the first 2g+k-1 are the harmonic space.
inline Spectrum oneFormSpectrum(const DeRhamComplex& C, int count,
                                FieldBC bc = FieldBC::tangential,
                                EigenOptions opts = hodgeDefaultOptions()) {
    detail::SubComplex S = detail::makeSub(C, bc);
    if (count > S.nE) throw HodgeError("oneFormSpectrum: count exceeds edge count");
    Spectrum sp = detail::hodgeLowest(S, count, opts);
    if (bc == FieldBC::normal) {
        Eigen::MatrixXd expanded = Eigen::MatrixXd::Zero(C.nE(), sp.count());
        for (int r = 0; r < sp.count(); ++r)
            for (int i = 0; i < S.nE; ++i) expanded(S.edges[i], r) = sp.vectors(i, r);
        sp.vectors = std::move(expanded);
    }
    sp.constraint = to_string(bc);
    return sp;
}

// L2 projection of the 90-degree rotation of the Whitney interpolant.
inline OneForm star(const DeRhamComplex& C, const OneForm& w) {
    OneForm out;
    out.coeff = C.M1_solver->solve(Eigen::VectorXd(C.R * w.coeff));
    return out;
}

// Whitney interpolant evaluated per face (constant = centroid value).
inline Vec3 faceFieldValue(const DeRhamComplex& C, const OneForm& w, int f) {
    const Mesh& m = *C.mesh;
    const auto& t = m.face(f);
    Vec3 grad[3];
    for (int c = 0; c < 3; ++c) grad[c] = hatGradient(m, f, c);
    Vec3 u = Vec3::Zero();
    const int la[3] = {0, 1, 2}, lb[3] = {1, 2, 0};
    for (int k = 0; k < 3; ++k) {
        int a = la[k], b = lb[k];
        int ge = m.edgeBetween(t[a], t[b]);
        double sg = (m.edge(ge).tail == t[a]) ? 1.0 : -1.0;
        u += sg * w.coeff[ge] * (grad[b] - grad[a]) / 3.0;
    }
    return u;
}

// Exact integral of the Whitney field over M (the field is linear per face).
inline Vec3 integralOfField(const DeRhamComplex& C, const OneForm& w) {
    Vec3 s = Vec3::Zero();
    for (int f = 0; f < C.mesh->numFaces(); ++f)
        s += C.face_area[f] * faceFieldValue(C, w, f);
    return s;
}

// Area-weighted vertex sampling of the Whitney field, projected to the
// vertex tangent planes.
inline std::vector<Vec3> sampleField(const DeRhamComplex& C, const OneForm& w,
                                     const SurfaceGeometry& g) {
    const Mesh& m = *C.mesh;
    std::vector<Vec3> out(m.numVertices(), Vec3::Zero());
    std::vector<double> wt(m.numVertices(), 0.0);
    for (int f = 0; f < m.numFaces(); ++f) {
        Vec3 u = faceFieldValue(C, w, f);
        for (int c = 0; c < 3; ++c) {
            out[m.face(f)[c]] += C.face_area[f] * u;
            wt[m.face(f)[c]] += C.face_area[f];
        }
    }
    for (int v = 0; v < m.numVertices(); ++v) {
        if (wt[v] > 0) out[v] /= wt[v];
        out[v] -= out[v].dot(g.normal[v]) * g.normal[v];
    }
    return out;
}

// Relative residual of the weak Hodge Laplacian applied to w (tangential bc).
inline double harmonicResidual(const DeRhamComplex& C, const OneForm& w) {
    Eigen::VectorXd Lw = C.A_ex * w.coeff +
                         C.G.transpose() * C.M0_solver->solve(Eigen::VectorXd(C.G * w.coeff));
    double den = (C.M1 * w.coeff).norm();
    return den > 0 ? Lw.norm() / den : 0.0;
}

inline void writeOneFormCSV(std::ostream& os, const DeRhamComplex& C, const OneForm& w) {
    os << "tail,head,coefficient\n";
    char buf[96];
    for (int e = 0; e < C.nE(); ++e) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.17g\n", C.mesh->edge(e).tail,
                      C.mesh->edge(e).head, w.coeff[e]);
        os << buf;
    }
}

} // namespace cmcindex
