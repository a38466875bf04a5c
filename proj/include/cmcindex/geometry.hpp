#pragma once

// Discrete differential geometry of the immersed surface and of the ambient
// container: vertex normals, shape operator by iterated quadric (Monge) fits,
// mean curvature, boundary conormals, and the container's second fundamental
// form evaluated from the Hessian of its implicit function.

#include "cmcindex/mesh.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace cmcindex {

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Containers: ambient region W = {F <= 0} with smooth implicit boundary.
// The outward unit normal of W is grad F / |grad F|.

class Container {
public:
    virtual ~Container() = default;
    virtual double value(const Vec3& p) const = 0;
    virtual Vec3 gradient(const Vec3& p) const = 0;
    virtual Mat3 hessian(const Vec3& p) const = 0;
    virtual std::string name() const = 0;
    virtual std::map<std::string, double> params() const = 0;
};

class BallContainer final : public Container {
public:
    explicit BallContainer(double radius) : r_(radius) {
        if (!(radius > 0)) throw GeometryError("ball container: radius must be positive");
    }
    double value(const Vec3& p) const override { return p.squaredNorm() - r_ * r_; }
    Vec3 gradient(const Vec3& p) const override { return 2.0 * p; }
    Mat3 hessian(const Vec3&) const override { return 2.0 * Mat3::Identity(); }
    std::string name() const override { return "ball"; }
    std::map<std::string, double> params() const override { return {{"radius", r_}}; }

private:
    double r_;
};

// W = {x : <n, x> <= d}; n is the outward normal of W.
class HalfSpaceContainer final : public Container {
public:
    HalfSpaceContainer(const Vec3& outward_normal, double offset)
        : n_(outward_normal.normalized()), d_(offset) {}
    double value(const Vec3& p) const override { return n_.dot(p) - d_; }
    Vec3 gradient(const Vec3&) const override { return n_; }
    Mat3 hessian(const Vec3&) const override { return Mat3::Zero(); }
    std::string name() const override { return "halfspace"; }
    std::map<std::string, double> params() const override {
        return {{"nx", n_.x()}, {"ny", n_.y()}, {"nz", n_.z()}, {"offset", d_}};
    }

private:
    Vec3 n_;
    double d_;
};

// Slab z0 <= z <= z1; F is the signed distance to the nearer face.
class SlabContainer final : public Container {
public:
    SlabContainer(double z0, double z1) : z0_(z0), z1_(z1) {
        if (!(z1 > z0)) throw GeometryError("slab container: need z1 > z0");
    }
    double value(const Vec3& p) const override { return std::max(z0_ - p.z(), p.z() - z1_); }
    Vec3 gradient(const Vec3& p) const override {
        return lowerFace(p) ? Vec3(0, 0, -1) : Vec3(0, 0, 1);
    }
    Mat3 hessian(const Vec3&) const override { return Mat3::Zero(); }
    std::string name() const override { return "slab"; }
    std::map<std::string, double> params() const override { return {{"z0", z0_}, {"z1", z1_}}; }

private:
    bool lowerFace(const Vec3& p) const { return z0_ - p.z() > p.z() - z1_; }
    double z0_, z1_;
};

// Complement of a ball; boundary sphere is not mean convex seen from outside.
class BallComplementContainer final : public Container {
public:
    explicit BallComplementContainer(double radius) : r_(radius) {}
    double value(const Vec3& p) const override { return r_ * r_ - p.squaredNorm(); }
    Vec3 gradient(const Vec3& p) const override { return -2.0 * p; }
    Mat3 hessian(const Vec3&) const override { return -2.0 * Mat3::Identity(); }
    std::string name() const override { return "ball_complement"; }
    std::map<std::string, double> params() const override { return {{"radius", r_}}; }

private:
    double r_;
};

inline std::shared_ptr<Container> makeContainer(const std::string& name,
                                                const std::map<std::string, double>& params) {
    auto get = [&](const std::string& key, double dflt) {
        auto it = params.find(key);
        return it == params.end() ? dflt : it->second;
    };
    if (name == "ball") return std::make_shared<BallContainer>(get("radius", 1.0));
    if (name == "halfspace")
        return std::make_shared<HalfSpaceContainer>(
            Vec3(get("nx", 0), get("ny", 0), get("nz", -1)), get("offset", 0.0));
    if (name == "slab") return std::make_shared<SlabContainer>(get("z0", 0.0), get("z1", 1.0));
    if (name == "ball_complement")
        return std::make_shared<BallComplementContainer>(get("radius", 1.0));
    if (name == "none") return nullptr;
    throw GeometryError("unknown container: " + name);
}

struct ContainerData {
    double II_NN = 0;  // second fundamental form of dW on (N, N)
    double H_bdry = 0; // mean curvature of dW w.r.t. the outward normal
};

// Evaluate II^dW(N,N) and H^dW at a point p on {F = 0} given a unit vector N
// tangent to dW there. Both come from the Hessian of F.
inline ContainerData containerData(const Container& c, const Vec3& p, const Vec3& N,
                                   double on_surface_tol = 1e-6,
                                   double tangency_tol = 0.05) {
    Vec3 g = c.gradient(p);
    double gn = g.norm();
    if (!(gn > 1e-12))
        throw GeometryError("container '" + c.name() + "': vanishing gradient at query point");
    double dist = std::abs(c.value(p)) / gn;
    double scale = std::max(1.0, p.norm());
    if (dist > on_surface_tol * scale)
        throw GeometryError("container '" + c.name() + "': point is off the boundary (distance " +
                            std::to_string(dist) + ")");
    Vec3 nu = g / gn;
    if (std::abs(N.dot(nu)) > tangency_tol)
        throw GeometryError("container '" + c.name() +
                            "': direction is not tangent to the container boundary");
    Mat3 Hf = c.hessian(p);
    ContainerData out;
    out.II_NN = -N.dot(Hf * N) / gn;
    out.H_bdry = -0.5 * (Hf.trace() - nu.dot(Hf * nu)) / gn;
    return out;
}

struct MeanConvexityVerdict {
    bool mean_convex = true;
    double worst_H = -std::numeric_limits<double>::infinity();
};

inline MeanConvexityVerdict checkMeanConvex(const Container& c, const std::vector<Vec3>& pts,
                                            double tol = 1e-9) {
    MeanConvexityVerdict v;
    for (const auto& p : pts) {
        Vec3 g = c.gradient(p);
        double gn = g.norm();
        if (!(gn > 1e-12)) continue;
        Vec3 nu = g / gn;
        Mat3 Hf = c.hessian(p);
        double H = -0.5 * (Hf.trace() - nu.dot(Hf * nu)) / gn;
        v.worst_H = std::max(v.worst_H, H);
        if (H > tol) v.mean_convex = false;
    }
    return v;
}

// ---------------------------------------------------------------------------
// Surface geometry

struct SurfaceGeometry {
    std::vector<Vec3> normal;          // unit, orientation from face winding
    std::vector<Mat3> shape;           // ambient symmetric shape operator, N in kernel
    std::vector<double> H;             // mean curvature = tr(shape)/2
    std::vector<double> normA2;        // |A|^2 = squared Frobenius norm of shape
    std::vector<Vec3> conormal;        // outward unit conormal, zero off boundary
    std::vector<bool> fit_fallback;    // vertices where the quadric fit failed

    double maxNormA2() const {
        double m = 0;
        for (double a : normA2) m = std::max(m, a);
        return m;
    }
};

namespace detail {

inline void orthonormalFrame(const Vec3& n, Vec3& e1, Vec3& e2) {
    Vec3 a = std::abs(n.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
    e1 = (a - a.dot(n) * n).normalized();
    e2 = n.cross(e1);
}

inline std::vector<int> kRing(const Mesh& m, int v, int depth) {
    std::vector<int> out;
    std::vector<char> seen(m.numVertices(), 0);
    seen[v] = 1;
    size_t level_begin = 0;
    for (int u : m.vertexNeighbors(v)) {
        if (!seen[u]) { seen[u] = 1; out.push_back(u); }
    }
    for (int d = 1; d < depth; ++d) {
        size_t level_end = out.size();
        for (size_t i = level_begin; i < level_end; ++i)
            for (int u : m.vertexNeighbors(out[i]))
                if (!seen[u]) { seen[u] = 1; out.push_back(u); }
        level_begin = level_end;
    }
    return out;
}

// Cotangent mean-curvature fallback for rank-deficient fits. Uses the
// discrete Laplacian of the position, Delta p = 2 H N for A X = -D_X N.
inline double cotanMeanCurvature(const Mesh& m, int v, const Vec3& N) {
    Vec3 lap = Vec3::Zero();
    double area = 0;
    for (int f : m.vertexFaces(v)) {
        const auto& t = m.face(f);
        int i = 0;
        while (t[i] != v) ++i;
        const Vec3& p = m.position(t[i]);
        const Vec3& q = m.position(t[(i + 1) % 3]);
        const Vec3& r = m.position(t[(i + 2) % 3]);
        double a2 = 2.0 * m.faceArea(f); // |(p-q) x (r-q)| etc.
        if (a2 < 1e-300) continue;
        double cot_q = (p - q).dot(r - q) / a2;
        double cot_r = (p - r).dot(q - r) / a2;
        lap += cot_r * (q - p) + cot_q * (r - p);
        area += m.faceArea(f) / 3.0;
    }
    if (area < 1e-300) return 0;
    return lap.dot(N) / (4.0 * area);
}

} // namespace detail

// Vertex normals by angle-weighted face-normal averaging, then an iterated
// quadric (Monge patch) fit over the 2-ring producing the shape operator,
// the refined normal, H and |A|^2. Boundary vertices get one-sided fits and
// a conormal from the boundary tangent: eta = T x N with T along the loop.
inline SurfaceGeometry computeGeometry(const Mesh& m) {
    const int nv = m.numVertices();
    SurfaceGeometry g;
    g.normal.assign(nv, Vec3::Zero());
    g.shape.assign(nv, Mat3::Zero());
    g.H.assign(nv, 0.0);
    g.normA2.assign(nv, 0.0);
    g.conormal.assign(nv, Vec3::Zero());
    g.fit_fallback.assign(nv, false);

    // Angle-weighted normals fix the orientation.
    for (int f = 0; f < m.numFaces(); ++f) {
        const auto& t = m.face(f);
        Vec3 nf = m.faceNormal(f);
        for (int c = 0; c < 3; ++c) {
            Vec3 a = (m.position(t[(c + 1) % 3]) - m.position(t[c])).normalized();
            Vec3 b = (m.position(t[(c + 2) % 3]) - m.position(t[c])).normalized();
            double ang = std::acos(std::clamp(a.dot(b), -1.0, 1.0));
            g.normal[t[c]] += ang * nf;
        }
    }
    for (int v = 0; v < nv; ++v) {
        double n = g.normal[v].norm();
        if (!(n > 1e-300)) throw GeometryError("degenerate normal at vertex " + std::to_string(v));
        g.normal[v] /= n;
    }

    // Iterated Monge fit h(x,y) in the frame of the current normal, quartic
    // over the 3-ring when the stencil supports it (the quadratic 2-ring fit
    // carries an O(h^2) curvature bias that eats the error budget), quadratic
    // over the 2-ring otherwise. Coordinates are scaled by the stencil radius
    // so rank detection is meaningful.
    auto fitAt = [&](int v, int degree, int depth, Vec3& N, Vec3& e1, Vec3& e2,
                     Eigen::VectorXd& coef) -> bool {
        const int ncoef = degree == 4 ? 15 : 6;
        std::vector<int> ring = detail::kRing(m, v, depth);
        if (static_cast<int>(ring.size()) < ncoef + (degree == 4 ? 3 : 0)) return false;
        const Vec3 N_ref = N;
        double s = 0;
        for (int u : ring) s += (m.position(u) - m.position(v)).squaredNorm();
        s = std::sqrt(s / ring.size());
        if (!(s > 0)) return false;
        for (int iter = 0; iter < 4; ++iter) {
            detail::orthonormalFrame(N, e1, e2);
            Eigen::MatrixXd Amat(ring.size(), ncoef);
            Eigen::VectorXd rhs(ring.size());
            for (size_t i = 0; i < ring.size(); ++i) {
                Vec3 d = m.position(ring[i]) - m.position(v);
                double x = d.dot(e1) / s, y = d.dot(e2) / s;
                Amat(i, 0) = 1.0;
                Amat(i, 1) = x;
                Amat(i, 2) = y;
                Amat(i, 3) = 0.5 * x * x;
                Amat(i, 4) = x * y;
                Amat(i, 5) = 0.5 * y * y;
                if (degree == 4) {
                    Amat(i, 6) = x * x * x;
                    Amat(i, 7) = x * x * y;
                    Amat(i, 8) = x * y * y;
                    Amat(i, 9) = y * y * y;
                    Amat(i, 10) = x * x * x * x;
                    Amat(i, 11) = x * x * x * y;
                    Amat(i, 12) = x * x * y * y;
                    Amat(i, 13) = x * y * y * y;
                    Amat(i, 14) = y * y * y * y;
                }
                rhs(i) = d.dot(N) / s;
            }
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Amat);
            qr.setThreshold(1e-6);
            if (qr.rank() < ncoef) return false;
            coef = qr.solve(rhs);
            // curvature radius far below the stencil radius means the fit is
            // extrapolating garbage (ill-conditioned one-sided stencil)
            if (std::abs(coef(3)) > 2.0 || std::abs(coef(4)) > 2.0 || std::abs(coef(5)) > 2.0)
                return false;
            Vec3 Nnew = (N - coef(1) * e1 - coef(2) * e2).normalized();
            double drift = (Nnew - N).norm();
            N = Nnew;
            if (N.dot(N_ref) < 0.5) return false; // fit wandered; distrust it
            if (drift < 1e-15) break;
        }
        detail::orthonormalFrame(N, e1, e2);
        coef(3) /= s; // curvature block back to unscaled coordinates
        coef(4) /= s;
        coef(5) /= s;
        return true;
    };

    for (int v = 0; v < nv; ++v) {
        Vec3 N = g.normal[v], e1, e2;
        Eigen::VectorXd coef;
        // Quartic fits need two-sided stencils to stay conditioned; boundary
        // vertices use the plain quadratic over their (one-sided) 2-ring.
        bool ok = !m.vertexOnBoundary(v) && fitAt(v, 4, 3, N, e1, e2, coef);
        if (!ok) {
            N = g.normal[v];
            ok = fitAt(v, 2, 2, N, e1, e2, coef);
        }
        if (ok) {
            g.normal[v] = N;
            double a = coef(3), b = coef(4), c = coef(5);
            g.shape[v] = a * e1 * e1.transpose() + c * e2 * e2.transpose() +
                         b * (e1 * e2.transpose() + e2 * e1.transpose());
            g.H[v] = 0.5 * (a + c);
            g.normA2[v] = a * a + 2.0 * b * b + c * c;
        } else {
            g.fit_fallback[v] = true;
            double H = detail::cotanMeanCurvature(m, v, g.normal[v]);
            detail::orthonormalFrame(g.normal[v], e1, e2);
            g.H[v] = H;
            g.shape[v] = H * (e1 * e1.transpose() + e2 * e2.transpose());
            g.normA2[v] = 2.0 * H * H;
        }
    }

    // Outward conormal at boundary vertices.
    for (const auto& loop : m.boundaryLoops()) {
        for (int v : loop) {
            auto [prev, next] = m.boundaryNeighbors(v);
            Vec3 T = (m.position(next) - m.position(prev));
            T -= T.dot(g.normal[v]) * g.normal[v];
            double tn = T.norm();
            if (!(tn > 1e-300))
                throw GeometryError("degenerate boundary tangent at vertex " + std::to_string(v));
            T /= tn;
            g.conormal[v] = T.cross(g.normal[v]).normalized();
        }
    }
    return g;
}

struct FreeBoundaryCheck {
    double max_angle = 0; // radians, max over boundary vertices of angle(eta, nu)
    int worst_vertex = -1;
};

// Free boundary means eta = nu along dM. Returns the worst angular deviation.
inline FreeBoundaryCheck checkFreeBoundary(const Mesh& m, const SurfaceGeometry& g,
                                           const Container& c,
                                           double off_surface_tol = 1e-6) {
    FreeBoundaryCheck out;
    for (const auto& loop : m.boundaryLoops()) {
        for (int v : loop) {
            const Vec3& p = m.position(v);
            Vec3 grad = c.gradient(p);
            double gn = grad.norm();
            if (!(gn > 1e-12))
                throw GeometryError("container gradient vanishes at boundary vertex " +
                                    std::to_string(v));
            double dist = std::abs(c.value(p)) / gn;
            double scale = std::max(1.0, p.norm());
            if (dist > off_surface_tol * scale)
                throw GeometryError("boundary vertex " + std::to_string(v) +
                                    " is off the container boundary (distance " +
                                    std::to_string(dist) + ")");
            Vec3 nu = grad / gn;
            const Vec3& eta = g.conormal[v];
            double ang = std::atan2(eta.cross(nu).norm(), eta.dot(nu));
            if (ang > out.max_angle) {
                out.max_angle = ang;
                out.worst_vertex = v;
            }
        }
    }
    return out;
}

} // namespace cmcindex
