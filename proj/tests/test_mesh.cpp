#include <catch2/catch_amalgamated.hpp>

#include "cmcindex/mesh.hpp"
#include "cmcindex/surfaces.hpp"

#include <set>
#include <sstream>

using namespace cmcindex;

namespace {

Mesh meshFromOFF(const std::string& text) {
    std::istringstream ss(text);
    return loadOFF(ss);
}

// outer square + inner square, 8 triangles around the hole
Mesh squareAnnulus() {
    std::vector<Vec3> pts = {
        {-2, -2, 0}, {2, -2, 0}, {2, 2, 0}, {-2, 2, 0},  // outer
        {-1, -1, 0}, {1, -1, 0}, {1, 1, 0}, {-1, 1, 0},  // inner
    };
    std::vector<std::array<int, 3>> tris = {
        {0, 1, 5}, {0, 5, 4}, {1, 2, 6}, {1, 6, 5},
        {2, 3, 7}, {2, 7, 6}, {3, 0, 4}, {3, 4, 7},
    };
    return Mesh::fromData(pts, tris);
}

} // namespace

TEST_CASE("single triangle OFF is the smallest valid disk") {
    Mesh m = meshFromOFF("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
    CHECK(m.numVertices() == 3);
    CHECK(m.numEdges() == 3);
    CHECK(m.numFaces() == 1);
    Topology t = topologyOf(m);
    CHECK(t.genus == 0);
    CHECK(t.boundary_components == 1);
    CHECK(t.euler_characteristic == 1);
}

TEST_CASE("OFF parser rejects malformed input with location") {
    CHECK_THROWS_AS(meshFromOFF("3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"), MeshError);
    CHECK_THROWS_WITH(meshFromOFF("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n"),
                      Catch::Matchers::ContainsSubstring("non-triangle"));
    CHECK_THROWS_AS(meshFromOFF("OFF\n3 1 0\n0 0 0\n1 0 0\n"), MeshError);
}

TEST_CASE("OBJ parser handles v/vt/vn tokens and 1-based indices") {
    std::istringstream ss("v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1\n");
    Mesh m = loadOBJ(ss);
    CHECK(m.numFaces() == 1);
    CHECK(m.position(1).x() == 1.0);
}

TEST_CASE("Moebius band is rejected as non-orientable") {
    // strip of quads with a half twist glued in
    const int n = 6;
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i) {
        double th = 2.0 * std::numbers::pi * i / n;
        double w = 0.4;
        // twist angle th/2
        Vec3 center(std::cos(th), std::sin(th), 0);
        Vec3 dir(std::cos(th / 2) * std::cos(th), std::cos(th / 2) * std::sin(th),
                 std::sin(th / 2));
        pts.push_back(center - w * dir);
        pts.push_back(center + w * dir);
    }
    std::vector<std::array<int, 3>> tris;
    for (int i = 0; i < n; ++i) {
        int a0 = 2 * i, b0 = 2 * i + 1;
        int a1, b1;
        if (i + 1 < n) {
            a1 = 2 * (i + 1);
            b1 = 2 * (i + 1) + 1;
        } else {
            a1 = 1; // glue with the flip
            b1 = 0;
        }
        tris.push_back({a0, b0, b1});
        tris.push_back({a0, b1, a1});
    }
    CHECK_THROWS_WITH(Mesh::fromData(pts, tris),
                      Catch::Matchers::ContainsSubstring("orientable"));
}

TEST_CASE("edge shared by three faces is rejected as non-manifold") {
    std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, -1, 0}};
    std::vector<std::array<int, 3>> tris = {{0, 1, 2}, {1, 0, 3}, {1, 0, 4}};
    // edge (0,1) bounds faces 0, 1, 2 (second/third traverse 1->0 twice)
    CHECK_THROWS_AS(Mesh::fromData(pts, tris), MeshError);
}

TEST_CASE("two fans meeting at one vertex are non-manifold") {
    std::vector<Vec3> pts = {{0, 0, 0},  {1, 0, 0},  {1, 1, 0},
                             {-1, 0, 0}, {-1, -1, 0}};
    std::vector<std::array<int, 3>> tris = {{0, 1, 2}, {0, 3, 4}};
    CHECK_THROWS_WITH(Mesh::fromData(pts, tris),
                      Catch::Matchers::ContainsSubstring("non-manifold"));
}

TEST_CASE("square annulus has genus 0 and two boundary loops") {
    Mesh m = squareAnnulus();
    CHECK(m.numVertices() == 8);
    CHECK(m.numFaces() == 8);
    Topology t = topologyOf(m);
    CHECK(t.genus == 0);
    CHECK(t.boundary_components == 2);
    CHECK(t.euler_characteristic == 0);
}

TEST_CASE("torus with one triangle removed is a punctured torus") {
    GeneratedSurface s = genPuncturedTorus(2);
    Topology t = topologyOf(s.mesh);
    CHECK(t.genus == 1);
    CHECK(t.boundary_components == 1);
    CHECK(t.euler_characteristic == -1);
}

TEST_CASE("closed surfaces are rejected by topology extraction") {
    // small closed tetrahedron
    std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    std::vector<std::array<int, 3>> tris = {{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {0, 3, 2}};
    Mesh m = Mesh::fromData(pts, tris);
    CHECK_THROWS_WITH(topologyOf(m), Catch::Matchers::ContainsSubstring("closed"));
}

TEST_CASE("boundary loops partition the boundary edges") {
    for (auto s : {genDiskInBall(6), genFlatAnnulus(0.5, 1.0, 4, 16), genPuncturedTorus(2)}) {
        const Mesh& m = s.mesh;
        int boundary_edges = 0;
        for (const auto& e : m.edges()) boundary_edges += e.boundary ? 1 : 0;
        int loop_edges = 0;
        std::set<int> seen;
        for (const auto& loop : m.boundaryLoops()) {
            for (size_t i = 0; i < loop.size(); ++i) {
                int u = loop[i], v = loop[(i + 1) % loop.size()];
                int e = m.edgeBetween(u, v);
                REQUIRE(e >= 0);
                CHECK(m.edge(e).boundary);
                CHECK(seen.insert(e).second); // no edge repeats across loops
                ++loop_edges;
            }
        }
        CHECK(loop_edges == boundary_edges);
    }
}

TEST_CASE("Euler characteristic identity holds exactly on suite meshes") {
    for (auto s : {genDiskInBall(8), genHemisphereOnPlane(1.0, 8),
                   genCylinderInSlab(1.0, 4.0, 16), genFlatAnnulus(0.5, 1.0, 4, 16),
                   genPuncturedTorus(2), genGenus2WithBoundary(2)}) {
        Topology t = topologyOf(s.mesh);
        CHECK(s.mesh.numVertices() - s.mesh.numEdges() + s.mesh.numFaces() ==
              2 - 2 * t.genus - t.boundary_components);
    }
}

TEST_CASE("refine quadruples faces and preserves topology") {
    GeneratedSurface disk = genDiskInBall(1);
    CHECK(disk.mesh.numFaces() == 6);
    Mesh r1 = refine(disk.mesh, disk.projector.get());
    CHECK(r1.numFaces() == 24);
    Mesh r2 = refine(r1, disk.projector.get());
    CHECK(r2.numFaces() == 96); // x16 after two rounds
    Topology t = topologyOf(r2);
    CHECK(t.genus == 0);
    CHECK(t.boundary_components == 1);

    for (auto s : {genHemisphereOnPlane(1.0, 6), genCylinderInSlab(1.0, 4.0, 12),
                   genPuncturedTorus(2)}) {
        Topology before = topologyOf(s.mesh);
        Mesh fine = refine(s.mesh, s.projector.get());
        Topology after = topologyOf(fine);
        CHECK(before.genus == after.genus);
        CHECK(before.boundary_components == after.boundary_components);
        CHECK(fine.numFaces() == 4 * s.mesh.numFaces());
    }
}

TEST_CASE("cylinder refinement projects new vertices back onto the cylinder") {
    GeneratedSurface s = genCylinderInSlab(1.0, 4.0, 10, 10);
    REQUIRE(s.mesh.numFaces() == 200);
    Mesh fine = refine(s.mesh, s.projector.get());
    CHECK(fine.numFaces() == 800);
    for (int v = 0; v < fine.numVertices(); ++v) {
        double rho = std::hypot(fine.position(v).x(), fine.position(v).y());
        CHECK(std::abs(rho - 1.0) < 1e-12);
    }
}

TEST_CASE("canonical OFF writer round-trips bit-exactly") {
    GeneratedSurface s = genHemisphereOnPlane(1.0, 4);
    std::ostringstream os;
    s.mesh.writeOFF(os);
    std::istringstream is(os.str());
    Mesh back = loadOFF(is);
    REQUIRE(back.numVertices() == s.mesh.numVertices());
    REQUIRE(back.numFaces() == s.mesh.numFaces());
    for (int v = 0; v < back.numVertices(); ++v)
        CHECK(back.position(v) == s.mesh.position(v)); // %.17g round-trip is exact
    std::ostringstream os2;
    back.writeOFF(os2);
    CHECK(os.str() == os2.str());
}
