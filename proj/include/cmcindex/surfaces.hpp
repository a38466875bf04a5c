#pragma once

// Canonical test surfaces paired with containers and analytic oracles:
// flat disk in the unit ball, hemisphere on a plane, cylinder in a slab,
// flat annulus, punctured torus and a genus-2 surface with one boundary
// component (the last three are Hodge-only fixtures without containers).

#include "cmcindex/geometry.hpp"
#include "cmcindex/mesh.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace cmcindex {

struct AnalyticOracle {
    std::optional<double> H;       // exact constant mean curvature
    std::optional<double> normA2;  // exact constant |A|^2
    // Up to n exact constrained Jacobi eigenvalues, fewer if only a prefix is known.
    std::function<std::vector<double>(int)> jacobi_eigenvalues;
    std::optional<int> index;      // exact weak (volume-constrained) Morse index
};

struct GeneratedSurface {
    std::string name;
    Mesh mesh;
    std::shared_ptr<Container> container;  // null for Hodge-only fixtures
    std::shared_ptr<Projector> projector;  // null if refinement needs no projection
    AnalyticOracle oracle;
};

namespace detail {

// Triangulate the annular band between two concentric index rings given as
// global vertex ids, ordered by increasing angle. Works for unequal counts.
inline void weaveBand(const std::vector<int>& inner, const std::vector<int>& outer,
                      std::vector<std::array<int, 3>>& tris) {
    const size_t a = inner.size(), b = outer.size();
    size_t i = 0, k = 0;
    const double two_pi = 2.0 * std::numbers::pi;
    while (i < a || k < b) {
        double next_inner = i < a ? two_pi * double(i + 1) / double(a)
                                  : std::numeric_limits<double>::infinity();
        double next_outer = k < b ? two_pi * double(k + 1) / double(b)
                                  : std::numeric_limits<double>::infinity();
        if (next_outer <= next_inner) {
            tris.push_back({inner[i % a], outer[k % b], outer[(k + 1) % b]});
            ++k;
        } else {
            tris.push_back({inner[i % a], outer[k % b], inner[(i + 1) % a]});
            ++i;
        }
    }
}

// Polar disk triangulation: ring j of 6j vertices at radius rho(j/n), height
// and radial placement delegated to `place`. Returns ring-start indices.
inline void polarDiskMesh(int n, const std::function<Vec3(double, double)>& place,
                          std::vector<Vec3>& pts, std::vector<std::array<int, 3>>& tris) {
    pts.clear();
    tris.clear();
    pts.push_back(place(0.0, 0.0));
    std::vector<std::vector<int>> rings(n + 1);
    rings[0] = {0};
    const double two_pi = 2.0 * std::numbers::pi;
    for (int j = 1; j <= n; ++j) {
        rings[j].resize(6 * j);
        for (int i = 0; i < 6 * j; ++i) {
            rings[j][i] = static_cast<int>(pts.size());
            pts.push_back(place(double(j) / n, two_pi * double(i) / double(6 * j)));
        }
    }
    for (int k = 0; k < 6; ++k) tris.push_back({0, rings[1][k], rings[1][(k + 1) % 6]});
    for (int j = 2; j <= n; ++j) weaveBand(rings[j - 1], rings[j], tris);
}

// Union-jack split of a logically rectangular grid patch.
inline void unionJackQuad(int v00, int v10, int v11, int v01, bool flip_diag,
                          std::vector<std::array<int, 3>>& tris) {
    if (!flip_diag) {
        tris.push_back({v00, v10, v11});
        tris.push_back({v00, v11, v01});
    } else {
        tris.push_back({v00, v10, v01});
        tris.push_back({v10, v11, v01});
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Projectors used by refine()

struct PlanarDiskProjector final : Projector {
    double boundary_radius;
    double height;
    PlanarDiskProjector(double rb, double z) : boundary_radius(rb), height(z) {}
    Vec3 project(const Vec3& p, bool on_boundary) const override {
        if (!on_boundary) return p;
        double rho = std::hypot(p.x(), p.y());
        if (rho < 1e-300) return p;
        double s = boundary_radius / rho;
        return Vec3(s * p.x(), s * p.y(), height);
    }
};

struct SphereProjector final : Projector {
    double radius;
    explicit SphereProjector(double r) : radius(r) {}
    Vec3 project(const Vec3& p, bool on_boundary) const override {
        Vec3 q = p;
        if (on_boundary) q.z() = 0; // equator stays on the supporting plane
        double n = q.norm();
        if (n < 1e-300) return q;
        return q * (radius / n);
    }
};

struct CylinderProjector final : Projector {
    double radius;
    explicit CylinderProjector(double r) : radius(r) {}
    Vec3 project(const Vec3& p, bool) const override {
        double rho = std::hypot(p.x(), p.y());
        if (rho < 1e-300) return p;
        double s = radius / rho;
        return Vec3(s * p.x(), s * p.y(), p.z());
    }
};

struct TorusProjector final : Projector {
    double major, minor;
    TorusProjector(double R, double r) : major(R), minor(r) {}
    Vec3 project(const Vec3& p, bool) const override {
        double rho = std::hypot(p.x(), p.y());
        if (rho < 1e-300) return p;
        Vec3 c(major * p.x() / rho, major * p.y() / rho, 0.0);
        Vec3 d = p - c;
        double dn = d.norm();
        if (dn < 1e-300) return p;
        return c + d * (minor / dn);
    }
};

// ---------------------------------------------------------------------------
// Generators

// Flat unit disk at height `offset` inside the unit ball (offset = 0 gives the
// equatorial free-boundary disk; offset != 0 deliberately violates the free
// boundary condition by roughly asin(offset) radians).
inline GeneratedSurface genDiskInBall(int resolution, double offset = 0.0) {
    if (resolution < 1) throw MeshError("disk: resolution must be >= 1");
    if (std::abs(offset) >= 1.0) throw MeshError("disk: |offset| must be < 1");
    const double rb = std::sqrt(1.0 - offset * offset);
    std::vector<Vec3> pts;
    std::vector<std::array<int, 3>> tris;
    detail::polarDiskMesh(resolution,
                          [&](double rho, double theta) {
                              return Vec3(rb * rho * std::cos(theta), rb * rho * std::sin(theta),
                                          offset);
                          },
                          pts, tris);
    GeneratedSurface s;
    s.name = "disk";
    s.mesh = Mesh::fromData(std::move(pts), std::move(tris));
    s.container = std::make_shared<BallContainer>(1.0);
    s.projector = std::make_shared<PlanarDiskProjector>(rb, offset);
    s.oracle.H = 0.0;
    s.oracle.normA2 = 0.0;
    s.oracle.index = 0;
    // Only the two zero modes (restrictions of x and y) are pinned analytically.
    s.oracle.jacobi_eigenvalues = [](int n) {
        return std::vector<double>(std::min(n, 2), 0.0);
    };
    return s;
}

// Upper hemisphere of the given radius resting orthogonally on z = 0; the
// container is the half-space z >= 0. Faces are wound so that N points toward
// the center, making H = 1/radius positive.
inline GeneratedSurface genHemisphereOnPlane(double radius, int resolution) {
    if (!(radius > 0)) throw MeshError("hemisphere: radius must be positive");
    if (resolution < 2) throw MeshError("hemisphere: resolution must be >= 2");
    const double half_pi = 0.5 * std::numbers::pi;
    std::vector<Vec3> pts;
    std::vector<std::array<int, 3>> tris;
    detail::polarDiskMesh(resolution,
                          [&](double t, double theta) {
                              if (t >= 1.0) // boundary ring snapped to the equator
                                  return Vec3(radius * std::cos(theta), radius * std::sin(theta),
                                              0.0);
                              double phi = half_pi * t;
                              return Vec3(radius * std::sin(phi) * std::cos(theta),
                                          radius * std::sin(phi) * std::sin(theta),
                                          radius * std::cos(phi));
                          },
                          pts, tris);
    for (auto& t : tris) std::swap(t[1], t[2]); // inward normal => H > 0
    GeneratedSurface s;
    s.name = "hemisphere";
    s.mesh = Mesh::fromData(std::move(pts), std::move(tris));
    s.container = std::make_shared<HalfSpaceContainer>(Vec3(0, 0, -1), 0.0);
    s.projector = std::make_shared<SphereProjector>(radius);
    s.oracle.H = 1.0 / radius;
    s.oracle.normA2 = 2.0 / (radius * radius);
    s.oracle.index = 0;
    double r2 = radius * radius;
    s.oracle.jacobi_eigenvalues = [r2](int n) {
        // J-spectrum of the hemisphere with Neumann data: spherical harmonics
        // even in z, constants excluded: (l(l+1) - 2)/r^2 with multiplicity l+1.
        std::vector<double> v;
        for (int l = 1; static_cast<int>(v.size()) < n; ++l)
            for (int c = 0; c < l + 1; ++c) v.push_back((l * (l + 1) - 2.0) / r2);
        v.resize(n);
        return v;
    };
    return s;
}

// Cylinder x^2 + y^2 = r^2, 0 <= z <= L in the slab {0 <= z <= L}. Faces are
// wound so that N points toward the axis (H = 1/(2r) > 0). Lengths near the
// degenerate transitions L = n*pi*r are rejected.
inline GeneratedSurface genCylinderInSlab(double r, double L, int res_theta, int res_z = 0) {
    if (!(r > 0) || !(L > 0)) throw MeshError("cylinder: r and L must be positive");
    if (res_theta < 3) throw MeshError("cylinder: angular resolution must be >= 3");
    const double pi = std::numbers::pi;
    double ratio = L / (pi * r);
    if (std::abs(ratio - std::round(ratio)) < 1e-6)
        throw MeshError("cylinder: L/(pi r) is within 1e-6 of an integer; the index is "
                        "unstable at the transition length");
    if (res_z <= 0)
        res_z = std::max(2, static_cast<int>(std::lround(res_theta * L / (2.0 * pi * r))));
    const int nt = res_theta, nz = res_z;
    std::vector<Vec3> pts(nt * (nz + 1));
    for (int j = 0; j <= nz; ++j)
        for (int i = 0; i < nt; ++i) {
            double th = 2.0 * pi * i / nt;
            pts[j * nt + i] = Vec3(r * std::cos(th), r * std::sin(th), L * double(j) / nz);
        }
    std::vector<std::array<int, 3>> tris;
    tris.reserve(2 * nt * nz);
    for (int j = 0; j < nz; ++j)
        for (int i = 0; i < nt; ++i) {
            int i1 = (i + 1) % nt;
            int v00 = j * nt + i, v10 = j * nt + i1;
            int v01 = (j + 1) * nt + i, v11 = (j + 1) * nt + i1;
            // order chosen for inward normals
            detail::unionJackQuad(v00, v01, v11, v10, ((i + j) & 1) != 0, tris);
        }
    GeneratedSurface s;
    s.name = "cylinder";
    s.mesh = Mesh::fromData(std::move(pts), std::move(tris));
    s.container = std::make_shared<SlabContainer>(0.0, L);
    s.projector = std::make_shared<CylinderProjector>(r);
    s.oracle.H = 0.5 / r;
    s.oracle.normA2 = 1.0 / (r * r);
    s.oracle.index = static_cast<int>(std::floor(L / (pi * r)));
    s.oracle.jacobi_eigenvalues = [r, L, pi](int n) {
        // (k pi / L)^2 + (m^2 - 1)/r^2 over modes (m, k) != (0, 0); Fourier
        // modes in theta give multiplicity 2 for m >= 1.
        std::vector<double> v;
        int span = 4 + static_cast<int>(std::ceil(std::sqrt(double(n)) * 4 + L / r + 8));
        for (int mm = 0; mm <= span; ++mm)
            for (int k = 0; k <= span; ++k) {
                if (mm == 0 && k == 0) continue;
                double lam = std::pow(k * pi / L, 2) + (double(mm) * mm - 1.0) / (r * r);
                v.push_back(lam);
                if (mm >= 1) v.push_back(lam);
            }
        std::sort(v.begin(), v.end());
        v.resize(std::min<size_t>(v.size(), n));
        return v;
    };
    return s;
}

// Flat annulus r0 <= rho <= r1 in the plane z = 0; Hodge fixture, no container.
inline GeneratedSurface genFlatAnnulus(double r0, double r1, int res_r, int res_t) {
    if (!(0 < r0 && r0 < r1)) throw MeshError("annulus: need 0 < r0 < r1");
    if (res_r < 1 || res_t < 3) throw MeshError("annulus: bad resolution");
    std::vector<Vec3> pts((res_r + 1) * res_t);
    const double two_pi = 2.0 * std::numbers::pi;
    for (int j = 0; j <= res_r; ++j) {
        double rho = r0 + (r1 - r0) * double(j) / res_r;
        for (int i = 0; i < res_t; ++i) {
            double th = two_pi * i / res_t;
            pts[j * res_t + i] = Vec3(rho * std::cos(th), rho * std::sin(th), 0.0);
        }
    }
    std::vector<std::array<int, 3>> tris;
    tris.reserve(2 * res_r * res_t);
    for (int j = 0; j < res_r; ++j)
        for (int i = 0; i < res_t; ++i) {
            int i1 = (i + 1) % res_t;
            int v00 = j * res_t + i, v10 = j * res_t + i1;
            int v01 = (j + 1) * res_t + i, v11 = (j + 1) * res_t + i1;
            detail::unionJackQuad(v00, v10, v11, v01, ((i + j) & 1) != 0, tris);
        }
    GeneratedSurface s;
    s.name = "annulus";
    s.mesh = Mesh::fromData(std::move(pts), std::move(tris));
    s.oracle.H = 0.0;
    s.oracle.normA2 = 0.0;
    return s;
}

namespace detail {
inline Mesh torusGrid(int n, double R, double rt, const Vec3& center) {
    std::vector<Vec3> pts(n * n);
    const double two_pi = 2.0 * std::numbers::pi;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double u = two_pi * i / n, v = two_pi * j / n;
            pts[i * n + j] = center + Vec3((R + rt * std::cos(v)) * std::cos(u),
                                           (R + rt * std::cos(v)) * std::sin(u),
                                           rt * std::sin(v));
        }
    std::vector<std::array<int, 3>> tris;
    tris.reserve(2 * n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            int i1 = (i + 1) % n, j1 = (j + 1) % n;
            int v00 = i * n + j, v10 = i1 * n + j, v01 = i * n + j1, v11 = i1 * n + j1;
            unionJackQuad(v00, v10, v11, v01, ((i + j) & 1) != 0, tris);
        }
    return Mesh::fromData(std::move(pts), std::move(tris));
}
} // namespace detail

// Torus of revolution (major 2, tube 0.8) with one triangle removed: the
// (g, k) = (1, 1) Hodge fixture. No container.
inline GeneratedSurface genPuncturedTorus(int resolution) {
    if (resolution < 2) throw MeshError("punctured torus: resolution must be >= 2");
    const int n = 4 * resolution; // keep the grid well-proportioned
    Mesh closed = detail::torusGrid(n, 2.0, 0.8, Vec3::Zero());
    GeneratedSurface s;
    s.name = "punctured_torus";
    s.mesh = closed.removeFace(0);
    s.projector = std::make_shared<TorusProjector>(2.0, 0.8);
    return s;
}

// Genus-2 surface with one boundary component: two tori joined along a
// removed triangle, then one more triangle removed. Purely a topology/Hodge
// fixture; the embedding near the junction is stretched but non-degenerate.
inline GeneratedSurface genGenus2WithBoundary(int resolution) {
    if (resolution < 2) throw MeshError("genus2: resolution must be >= 2");
    const int n = 3 * resolution;
    const double R = 1.2, rt = 0.5, cx = 2.0;
    Mesh A = detail::torusGrid(n, R, rt, Vec3(-cx, 0, 0));
    Mesh B = detail::torusGrid(n, R, rt, Vec3(+cx, 0, 0));

    auto nearestFace = [](const Mesh& m) {
        int best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int f = 0; f < m.numFaces(); ++f) {
            double d = m.faceCentroid(f).norm();
            if (d < bd) { bd = d; best = f; }
        }
        return best;
    };
    Mesh Ao = A.removeFace(nearestFace(A));
    Mesh Bo = B.removeFace(nearestFace(B));
    const auto& loopA = Ao.boundaryLoops().at(0);
    const auto& loopB = Bo.boundaryLoops().at(0);
    if (loopA.size() != 3 || loopB.size() != 3)
        throw MeshError("genus2: expected triangular boundary loops");

    // Identify the loops with reversed cyclic order (orientation compatible);
    // among the three rotations pick the geometric best, fall back otherwise.
    for (int attempt = 0; attempt < 3; ++attempt) {
        std::vector<int> order(3);
        for (int i = 0; i < 3; ++i) order[i] = loopB[(attempt + 3 - i) % 3];
        std::vector<Vec3> pts = Ao.positions();
        const int nA = Ao.numVertices();
        std::vector<int> bmap(Bo.numVertices(), -1);
        for (int i = 0; i < 3; ++i) {
            bmap[order[i]] = loopA[i];
            pts[loopA[i]] = 0.5 * (Ao.position(loopA[i]) + Bo.position(order[i]));
        }
        int next = nA;
        for (int v = 0; v < Bo.numVertices(); ++v) {
            if (bmap[v] != -1) continue;
            bmap[v] = next++;
            pts.push_back(Bo.position(v));
        }
        std::vector<std::array<int, 3>> tris = Ao.faces();
        for (const auto& t : Bo.faces())
            tris.push_back({bmap[t[0]], bmap[t[1]], bmap[t[2]]});
        try {
            Mesh glued = Mesh::fromData(std::move(pts), std::move(tris));
            int far_face = 0;
            double fd = -1;
            for (int f = 0; f < glued.numFaces(); ++f) {
                double d = glued.faceCentroid(f).norm();
                if (d > fd) { fd = d; far_face = f; }
            }
            GeneratedSurface s;
            s.name = "genus2";
            s.mesh = glued.removeFace(far_face);
            return s;
        } catch (const MeshError&) {
            continue; // try the next rotation
        }
    }
    throw MeshError("genus2: could not glue the tori with a consistent orientation");
}

} // namespace cmcindex
