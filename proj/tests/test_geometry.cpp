#include <catch2/catch_amalgamated.hpp>

#include "cmcindex/geometry.hpp"
#include "cmcindex/surfaces.hpp"

#include <random>

using namespace cmcindex;

TEST_CASE("container data: unit ball, half-space, slab, complement") {
    BallContainer ball(1.0);
    Vec3 p(1, 0, 0), N(0, 0, 1); // N tangent to the sphere at p
    ContainerData cd = containerData(ball, p, N);
    CHECK(cd.II_NN == Catch::Approx(-1.0).margin(1e-14));
    CHECK(cd.H_bdry == Catch::Approx(-1.0).margin(1e-14));

    HalfSpaceContainer hs(Vec3(0, 0, -1), 0.0); // W = {z >= 0}
    cd = containerData(hs, Vec3(0.3, -0.2, 0), Vec3(1, 0, 0));
    CHECK(cd.II_NN == 0.0);
    CHECK(cd.H_bdry == 0.0);

    SlabContainer slab(0.0, 4.0);
    cd = containerData(slab, Vec3(1, 0, 4.0), Vec3(0, 1, 0));
    CHECK(cd.II_NN == 0.0);
    CHECK(cd.H_bdry == 0.0);
    CHECK(slab.gradient(Vec3(0, 0, 3.9)).z() == 1.0);
    CHECK(slab.gradient(Vec3(0, 0, 0.1)).z() == -1.0);

    BallComplementContainer comp(1.0);
    cd = containerData(comp, p, N);
    CHECK(cd.II_NN == Catch::Approx(+1.0).margin(1e-14));
    CHECK(cd.H_bdry == Catch::Approx(+1.0).margin(1e-14));
}

TEST_CASE("container data rejects off-surface and non-tangent queries") {
    BallContainer ball(1.0);
    CHECK_THROWS_WITH(containerData(ball, Vec3(1.5, 0, 0), Vec3(0, 0, 1)),
                      Catch::Matchers::ContainsSubstring("off the boundary"));
    CHECK_THROWS_WITH(containerData(ball, Vec3(1, 0, 0), Vec3(1, 0, 0)),
                      Catch::Matchers::ContainsSubstring("not tangent"));
}

TEST_CASE("mean convexity verdicts for the suite containers") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec3> sphere_pts;
    for (int i = 0; i < 64; ++i) {
        Vec3 p(u(rng), u(rng), u(rng));
        if (p.norm() < 1e-3) continue;
        sphere_pts.push_back(p.normalized());
    }
    CHECK(checkMeanConvex(BallContainer(1.0), sphere_pts).mean_convex);
    CHECK_FALSE(checkMeanConvex(BallComplementContainer(1.0), sphere_pts).mean_convex);

    std::vector<Vec3> plane_pts;
    for (int i = 0; i < 32; ++i) plane_pts.push_back(Vec3(u(rng), u(rng), 0.0));
    CHECK(checkMeanConvex(HalfSpaceContainer(Vec3(0, 0, -1), 0.0), plane_pts).mean_convex);
    CHECK(checkMeanConvex(SlabContainer(0, 4), plane_pts).mean_convex);
}

TEST_CASE("flat disk geometry is exactly planar") {
    GeneratedSurface s = genDiskInBall(12);
    SurfaceGeometry g = computeGeometry(s.mesh);
    double maxH = 0, maxA2 = 0;
    for (int v = 0; v < s.mesh.numVertices(); ++v) {
        maxH = std::max(maxH, std::abs(g.H[v]));
        maxA2 = std::max(maxA2, g.normA2[v]);
        CHECK(g.normal[v].dot(Vec3(0, 0, 1)) == Catch::Approx(1.0).margin(1e-12));
    }
    CHECK(maxH < 1e-8);
    CHECK(maxA2 < 1e-8);
}

TEST_CASE("cylinder curvatures: eigenvalues {0, 1/r}, H = 1/(2r)") {
    GeneratedSurface s = genCylinderInSlab(1.0, 4.0, 64);
    SurfaceGeometry g = computeGeometry(s.mesh);
    // check an interior vertex (middle ring)
    int nt = 64;
    int v = (s.mesh.numVertices() / (2 * nt)) * nt + 3;
    REQUIRE_FALSE(s.mesh.vertexOnBoundary(v));
    CHECK(g.H[v] == Catch::Approx(0.5).epsilon(0.02));
    CHECK(g.normA2[v] == Catch::Approx(1.0).epsilon(0.02));
    Eigen::SelfAdjointEigenSolver<Mat3> es(g.shape[v]);
    Eigen::Vector3d ev = es.eigenvalues();
    // ambient 3x3 shape operator has eigenvalues {0 (normal dir), 0, 1/r}
    CHECK(std::abs(ev[0]) < 0.02);
    CHECK(std::abs(ev[1]) < 0.02);
    CHECK(ev[2] == Catch::Approx(1.0).epsilon(0.02));
    // normals point toward the axis (H >= 0 convention)
    Vec3 p = s.mesh.position(v);
    CHECK(g.normal[v].dot(Vec3(-p.x(), -p.y(), 0).normalized()) > 0.99);
}

TEST_CASE("hemisphere curvatures: H = 1/r, |A|^2 = 2/r^2 within 2%") {
    GeneratedSurface s = genHemisphereOnPlane(1.0, 24);
    SurfaceGeometry g = computeGeometry(s.mesh);
    int interior_checked = 0;
    for (int v = 0; v < s.mesh.numVertices(); ++v) {
        if (s.mesh.vertexOnBoundary(v)) continue;
        CHECK(g.H[v] == Catch::Approx(1.0).epsilon(0.02));
        CHECK(g.normA2[v] == Catch::Approx(2.0).epsilon(0.04));
        ++interior_checked;
    }
    CHECK(interior_checked > 100);

    GeneratedSurface s2 = genHemisphereOnPlane(2.0, 24);
    SurfaceGeometry g2 = computeGeometry(s2.mesh);
    int mid = s2.mesh.numVertices() / 3;
    CHECK(g2.H[mid] == Catch::Approx(0.5).epsilon(0.02));
    CHECK(g2.normA2[mid] == Catch::Approx(0.5).epsilon(0.04));
}

TEST_CASE("pointwise shape-operator identities hold to machine precision") {
    GeneratedSurface s = genHemisphereOnPlane(1.0, 10);
    SurfaceGeometry g = computeGeometry(s.mesh);
    std::mt19937 rng(3);
    std::normal_distribution<double> gauss;
    for (int v = 0; v < s.mesh.numVertices(); ++v) {
        // |A|^2 >= 2 H^2 (Cauchy-Schwarz for symmetric 2x2)
        CHECK(g.normA2[v] >= 2.0 * g.H[v] * g.H[v] - 1e-10);
        // trace identity <A xi, xi> + <A *xi, *xi> = 2 H |xi|^2
        Vec3 r(gauss(rng), gauss(rng), gauss(rng));
        Vec3 xi = r - r.dot(g.normal[v]) * g.normal[v];
        Vec3 sxi = g.normal[v].cross(xi);
        double lhs = xi.dot(g.shape[v] * xi) + sxi.dot(g.shape[v] * sxi);
        double rhs = 2.0 * g.H[v] * xi.squaredNorm();
        CHECK(lhs == Catch::Approx(rhs).margin(1e-12 * (1.0 + std::abs(rhs))));
        // tr A = 2H by construction
        CHECK(g.shape[v].trace() == Catch::Approx(2.0 * g.H[v]).margin(1e-12));
        // unit normal, orthogonal unit conormal on the boundary
        CHECK(g.normal[v].norm() == Catch::Approx(1.0).margin(1e-12));
        if (s.mesh.vertexOnBoundary(v)) {
            CHECK(g.conormal[v].norm() == Catch::Approx(1.0).margin(1e-12));
            CHECK(std::abs(g.conormal[v].dot(g.normal[v])) < 1e-12);
        }
    }
}

TEST_CASE("free boundary check: flat disk is exact") {
    GeneratedSurface s = genDiskInBall(16);
    SurfaceGeometry g = computeGeometry(s.mesh);
    auto fb = checkFreeBoundary(s.mesh, g, *s.container);
    CHECK(fb.max_angle < 1e-10);
}

TEST_CASE("free boundary check: curved suite surfaces converge at order >= 2") {
    {
        GeneratedSurface s = genCylinderInSlab(1.0, 4.0, 32);
        SurfaceGeometry g = computeGeometry(s.mesh);
        double dev_c = checkFreeBoundary(s.mesh, g, *s.container).max_angle;
        Mesh fine = refine(s.mesh, s.projector.get());
        SurfaceGeometry gf = computeGeometry(fine);
        double dev_f = checkFreeBoundary(fine, gf, *s.container).max_angle;
        CHECK(dev_c < 2e-3);
        CHECK(dev_f < dev_c / 2.5);
    }
    {
        GeneratedSurface s = genHemisphereOnPlane(1.0, 12);
        SurfaceGeometry gc = computeGeometry(s.mesh);
        double dev_c = checkFreeBoundary(s.mesh, gc, *s.container).max_angle;
        Mesh fine = refine(s.mesh, s.projector.get());
        SurfaceGeometry gf = computeGeometry(fine);
        double dev_f = checkFreeBoundary(fine, gf, *s.container).max_angle;
        CHECK(dev_c < 2e-3);
        CHECK(dev_f < dev_c / 2.5);
    }
}

TEST_CASE("offset disk violates the free boundary condition by ~0.1 rad") {
    GeneratedSurface s = genDiskInBall(12, 0.1);
    SurfaceGeometry g = computeGeometry(s.mesh);
    auto fb = checkFreeBoundary(s.mesh, g, *s.container);
    CHECK(fb.max_angle == Catch::Approx(std::asin(0.1)).margin(0.01));
}

TEST_CASE("boundary vertices off the container boundary are an error") {
    GeneratedSurface s = genDiskInBall(8);
    SurfaceGeometry g = computeGeometry(s.mesh);
    BallContainer wrong(1.1);
    CHECK_THROWS_WITH(checkFreeBoundary(s.mesh, g, wrong),
                      Catch::Matchers::ContainsSubstring("off the container"));
}
