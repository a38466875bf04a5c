#pragma once

// Half-edge triangle mesh with boundary: construction with manifold and
// orientation validation, boundary-loop extraction, combinatorial topology
// (genus, boundary components), OFF/OBJ ingestion and 1-to-4 refinement.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace cmcindex {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct MeshError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HalfEdge {
    int origin = -1; // vertex the half-edge leaves
    int next = -1;   // next half-edge around the same face
    int twin = -1;   // opposite half-edge, -1 on the boundary
    int face = -1;
    int edge = -1;   // undirected edge index
};

struct Edge {
    int tail = -1; // canonical orientation tail -> head, tail < head
    int head = -1;
    int he = -1;   // one incident half-edge
    bool boundary = false;
};

// Optional projection applied to newly created vertices during refinement.
struct Projector {
    virtual ~Projector() = default;
    virtual Vec3 project(const Vec3& p, bool on_boundary_edge) const = 0;
};

class Mesh {
public:
    static Mesh fromData(std::vector<Vec3> positions,
                         std::vector<std::array<int, 3>> triangles) {
        Mesh m;
        m.positions_ = std::move(positions);
        m.tris_ = std::move(triangles);
        m.buildConnectivity();
        return m;
    }

    int numVertices() const { return static_cast<int>(positions_.size()); }
    int numFaces() const { return static_cast<int>(tris_.size()); }
    int numEdges() const { return static_cast<int>(edges_.size()); }

    const Vec3& position(int v) const { return positions_[v]; }
    const std::vector<Vec3>& positions() const { return positions_; }
    const std::array<int, 3>& face(int f) const { return tris_[f]; }
    const std::vector<std::array<int, 3>>& faces() const { return tris_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(int e) const { return edges_[e]; }
    const std::vector<HalfEdge>& halfEdges() const { return hes_; }

    bool vertexOnBoundary(int v) const { return vertex_boundary_[v]; }
    bool edgeOnBoundary(int e) const { return edges_[e].boundary; }

    // Boundary loops as vertex sequences, ordered along the incident faces'
    // winding direction. Every boundary edge belongs to exactly one loop.
    const std::vector<std::vector<int>>& boundaryLoops() const { return loops_; }

    // Previous/next boundary vertex around v's loop (loop orientation).
    std::pair<int, int> boundaryNeighbors(int v) const {
        auto it = loop_nbrs_.find(v);
        if (it == loop_nbrs_.end())
            throw MeshError("vertex " + std::to_string(v) + " is not on the boundary");
        return it->second;
    }

    int edgeBetween(int u, int v) const {
        auto it = edge_lookup_.find(dirKey(std::min(u, v), std::max(u, v)));
        return it == edge_lookup_.end() ? -1 : it->second;
    }

    // One-ring vertex neighbors (unordered, deterministic order).
    const std::vector<int>& vertexNeighbors(int v) const { return vnbrs_[v]; }
    const std::vector<int>& vertexFaces(int v) const { return vfaces_[v]; }

    Vec3 faceNormal(int f) const {
        const auto& t = tris_[f];
        Vec3 n = (positions_[t[1]] - positions_[t[0]])
                     .cross(positions_[t[2]] - positions_[t[0]]);
        return n.normalized();
    }
    double faceArea(int f) const {
        const auto& t = tris_[f];
        return 0.5 * (positions_[t[1]] - positions_[t[0]])
                         .cross(positions_[t[2]] - positions_[t[0]])
                         .norm();
    }
    Vec3 faceCentroid(int f) const {
        const auto& t = tris_[f];
        return (positions_[t[0]] + positions_[t[1]] + positions_[t[2]]) / 3.0;
    }

    double totalArea() const {
        double a = 0;
        for (int f = 0; f < numFaces(); ++f) a += faceArea(f);
        return a;
    }
    double meanEdgeLength() const {
        double s = 0;
        for (const auto& e : edges_) s += (positions_[e.head] - positions_[e.tail]).norm();
        return s / std::max<size_t>(1, edges_.size());
    }

    // Canonical ASCII OFF: vertices then faces in index order.
    void writeOFF(std::ostream& os) const {
        os << "OFF\n" << numVertices() << " " << numFaces() << " " << numEdges() << "\n";
        char buf[128];
        for (const auto& p : positions_) {
            std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
            os << buf;
        }
        for (const auto& t : tris_) os << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    }

    Mesh removeFace(int f) const {
        if (f < 0 || f >= numFaces()) throw MeshError("removeFace: bad face index");
        std::vector<std::array<int, 3>> tris;
        tris.reserve(tris_.size() - 1);
        for (int i = 0; i < numFaces(); ++i)
            if (i != f) tris.push_back(tris_[i]);
        return fromData(positions_, std::move(tris));
    }

private:
    static std::uint64_t dirKey(int a, int b) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
               static_cast<std::uint32_t>(b);
    }

    void buildConnectivity() {
        const int nv = numVertices();
        const int nf = numFaces();
        if (nv == 0 || nf == 0) throw MeshError("empty mesh");

        double scale = 0;
        for (const auto& p : positions_) scale = std::max(scale, p.cwiseAbs().maxCoeff());
        if (!(scale > 0)) scale = 1;

        hes_.assign(3 * nf, HalfEdge{});
        std::unordered_map<std::uint64_t, int> directed;
        directed.reserve(3 * nf * 2);

        for (int f = 0; f < nf; ++f) {
            const auto& t = tris_[f];
            for (int c = 0; c < 3; ++c) {
                if (t[c] < 0 || t[c] >= nv)
                    throw MeshError("face " + std::to_string(f) + ": vertex index out of range");
            }
            if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
                throw MeshError("face " + std::to_string(f) + ": repeated vertex");
            double area = 0.5 * (positions_[t[1]] - positions_[t[0]])
                                    .cross(positions_[t[2]] - positions_[t[0]])
                                    .norm();
            if (!(area > 1e-14 * scale * scale))
                throw MeshError("face " + std::to_string(f) + ": degenerate (area ~ 0)");
            for (int c = 0; c < 3; ++c) {
                int he = 3 * f + c;
                hes_[he].origin = t[c];
                hes_[he].next = 3 * f + (c + 1) % 3;
                hes_[he].face = f;
                int u = t[c], v = t[(c + 1) % 3];
                auto [it, fresh] = directed.emplace(dirKey(u, v), he);
                if (!fresh)
                    throw MeshError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                                    "): traversed twice in the same direction -- mesh is "
                                    "non-manifold or not consistently orientable");
            }
        }

        // Twins + undirected edges (canonical tail < head).
        edges_.clear();
        edge_lookup_.clear();
        for (int f = 0; f < nf; ++f) {
            const auto& t = tris_[f];
            for (int c = 0; c < 3; ++c) {
                int he = 3 * f + c;
                int u = t[c], v = t[(c + 1) % 3];
                auto itTwin = directed.find(dirKey(v, u));
                hes_[he].twin = (itTwin == directed.end()) ? -1 : itTwin->second;
                int a = std::min(u, v), b = std::max(u, v);
                auto key = dirKey(a, b);
                auto it = edge_lookup_.find(key);
                if (it == edge_lookup_.end()) {
                    Edge e;
                    e.tail = a;
                    e.head = b;
                    e.he = he;
                    e.boundary = (hes_[he].twin == -1);
                    edge_lookup_.emplace(key, static_cast<int>(edges_.size()));
                    hes_[he].edge = static_cast<int>(edges_.size());
                    edges_.push_back(e);
                } else {
                    hes_[he].edge = it->second;
                    edges_[it->second].boundary = false;
                }
            }
        }

        vertex_boundary_.assign(nv, false);
        for (const auto& e : edges_)
            if (e.boundary) vertex_boundary_[e.tail] = vertex_boundary_[e.head] = true;

        // Vertex -> incident faces / neighbors.
        vfaces_.assign(nv, {});
        for (int f = 0; f < nf; ++f)
            for (int c = 0; c < 3; ++c) vfaces_[tris_[f][c]].push_back(f);
        vnbrs_.assign(nv, {});
        for (const auto& e : edges_) {
            vnbrs_[e.tail].push_back(e.head);
            vnbrs_[e.head].push_back(e.tail);
        }

        checkVertexManifold();
        extractBoundaryLoops();
    }

    // Each vertex's incident faces must form a single fan (one umbrella).
    void checkVertexManifold() {
        const int nv = numVertices();
        std::vector<int> out_he(nv, -1);
        for (int he = 0; he < static_cast<int>(hes_.size()); ++he) {
            int v = hes_[he].origin;
            // Prefer an outgoing boundary half-edge so a boundary fan is swept end to end.
            if (out_he[v] == -1 || hes_[he].twin == -1) out_he[v] = he;
        }
        for (int v = 0; v < nv; ++v) {
            int start = out_he[v];
            if (start == -1) throw MeshError("vertex " + std::to_string(v) + ": isolated");
            int count = 0;
            int he = start;
            while (true) {
                ++count;
                // next outgoing half-edge around v: twin of the half-edge entering v
                int prev = prevHe(he);
                if (hes_[prev].twin == -1) break; // hit the boundary on the far side
                he = hes_[prev].twin;
                if (he == start) break;
                if (count > static_cast<int>(vfaces_[v].size())) break;
            }
            if (count != static_cast<int>(vfaces_[v].size()))
                throw MeshError("vertex " + std::to_string(v) +
                                ": non-manifold (incident faces are not a single fan)");
        }
    }

    int prevHe(int he) const { return hes_[hes_[he].next].next; }

    void extractBoundaryLoops() {
        loops_.clear();
        loop_nbrs_.clear();
        // Boundary "virtual" half-edges run opposite to the face half-edge
        // (u->v face-side means v->u on the hole side). We traverse loops in
        // the face-winding direction: follow boundary edges chained head->tail
        // of consecutive face half-edges.
        std::map<int, int> nextBoundaryFrom; // origin vertex -> boundary he (face side)
        for (int he = 0; he < static_cast<int>(hes_.size()); ++he) {
            if (hes_[he].twin != -1) continue;
            int u = hes_[he].origin;
            if (nextBoundaryFrom.count(u))
                throw MeshError("vertex " + std::to_string(u) +
                                ": more than two boundary edges (boundary loops not simple)");
            nextBoundaryFrom[u] = he;
        }
        std::map<int, bool> used;
        for (const auto& [v, he0] : nextBoundaryFrom) {
            if (used.count(v)) continue;
            std::vector<int> loop;
            int he = he0;
            while (true) {
                int u = hes_[he].origin;
                if (used.count(u)) throw MeshError("boundary traversal revisited a vertex");
                used[u] = true;
                loop.push_back(u);
                int w = hes_[hes_[he].next].origin; // destination
                auto it = nextBoundaryFrom.find(w);
                if (it == nextBoundaryFrom.end())
                    throw MeshError("boundary chain broken at vertex " + std::to_string(w));
                he = it->second;
                if (hes_[he].origin == hes_[he0].origin) break;
            }
            if (loop.size() < 3) throw MeshError("boundary loop with fewer than 3 vertices");
            for (size_t i = 0; i < loop.size(); ++i) {
                int prev = loop[(i + loop.size() - 1) % loop.size()];
                int next = loop[(i + 1) % loop.size()];
                loop_nbrs_[loop[i]] = {prev, next};
            }
            loops_.push_back(std::move(loop));
        }
    }

    std::vector<Vec3> positions_;
    std::vector<std::array<int, 3>> tris_;
    std::vector<HalfEdge> hes_;
    std::vector<Edge> edges_;
    std::unordered_map<std::uint64_t, int> edge_lookup_;
    std::vector<bool> vertex_boundary_;
    std::vector<std::vector<int>> loops_;
    std::map<int, std::pair<int, int>> loop_nbrs_;
    std::vector<std::vector<int>> vnbrs_;
    std::vector<std::vector<int>> vfaces_;
};

struct Topology {
    int genus = 0;
    int boundary_components = 0;
    int euler_characteristic = 0;
};

// Combinatorial topology; exact integer arithmetic, no geometry involved.
inline Topology topologyOf(const Mesh& m) {
    Topology t;
    t.euler_characteristic = m.numVertices() - m.numEdges() + m.numFaces();
    t.boundary_components = static_cast<int>(m.boundaryLoops().size());
    if (t.boundary_components == 0)
        throw MeshError("closed surface (no boundary components); this toolkit requires "
                        "nonempty boundary");
    int twice_g = 2 - t.boundary_components - t.euler_characteristic;
    if (twice_g < 0 || twice_g % 2 != 0)
        throw MeshError("inconsistent topology: 2 - k - chi = " + std::to_string(twice_g) +
                        " is not an even nonnegative integer");
    t.genus = twice_g / 2;
    return t;
}

// ---------------------------------------------------------------------------
// File ingestion (ASCII OFF / OBJ, triangles only)

namespace detail {
inline bool nextContentLine(std::istream& is, std::string& line, int& lineno) {
    while (std::getline(is, line)) {
        ++lineno;
        auto h = line.find('#');
        if (h != std::string::npos) line.erase(h);
        bool blank = true;
        for (char ch : line)
            if (!std::isspace(static_cast<unsigned char>(ch))) { blank = false; break; }
        if (!blank) return true;
    }
    return false;
}
} // namespace detail

inline Mesh loadOFF(std::istream& is) {
    std::string line;
    int lineno = 0;
    if (!detail::nextContentLine(is, line, lineno)) throw MeshError("OFF: empty stream");
    {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag != "OFF") throw MeshError("OFF: missing header at line " + std::to_string(lineno));
    }
    if (!detail::nextContentLine(is, line, lineno)) throw MeshError("OFF: missing counts");
    int nv = 0, nf = 0, ne = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> nv >> nf >> ne) || nv <= 0 || nf < 0)
            throw MeshError("OFF: bad counts at line " + std::to_string(lineno));
    }
    std::vector<Vec3> pts(nv);
    for (int i = 0; i < nv; ++i) {
        if (!detail::nextContentLine(is, line, lineno))
            throw MeshError("OFF: unexpected EOF in vertex list");
        std::istringstream ss(line);
        if (!(ss >> pts[i].x() >> pts[i].y() >> pts[i].z()))
            throw MeshError("OFF: bad vertex at line " + std::to_string(lineno));
    }
    std::vector<std::array<int, 3>> tris(nf);
    for (int i = 0; i < nf; ++i) {
        if (!detail::nextContentLine(is, line, lineno))
            throw MeshError("OFF: unexpected EOF in face list");
        std::istringstream ss(line);
        int cnt = 0;
        if (!(ss >> cnt)) throw MeshError("OFF: bad face at line " + std::to_string(lineno));
        if (cnt != 3)
            throw MeshError("OFF: non-triangle face (" + std::to_string(cnt) +
                            " vertices) at line " + std::to_string(lineno));
        if (!(ss >> tris[i][0] >> tris[i][1] >> tris[i][2]))
            throw MeshError("OFF: bad face indices at line " + std::to_string(lineno));
    }
    return Mesh::fromData(std::move(pts), std::move(tris));
}

inline Mesh loadOBJ(std::istream& is) {
    std::vector<Vec3> pts;
    std::vector<std::array<int, 3>> tris;
    std::string line;
    int lineno = 0;
    while (detail::nextContentLine(is, line, lineno)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Vec3 p;
            if (!(ss >> p.x() >> p.y() >> p.z()))
                throw MeshError("OBJ: bad vertex at line " + std::to_string(lineno));
            pts.push_back(p);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ss >> tok) {
                auto slash = tok.find('/');
                if (slash != std::string::npos) tok.erase(slash);
                int i = 0;
                try {
                    i = std::stoi(tok);
                } catch (...) {
                    throw MeshError("OBJ: bad face token at line " + std::to_string(lineno));
                }
                if (i <= 0)
                    throw MeshError("OBJ: unsupported face index at line " +
                                    std::to_string(lineno));
                idx.push_back(i - 1);
            }
            if (idx.size() != 3)
                throw MeshError("OBJ: non-triangle face (" + std::to_string(idx.size()) +
                                " vertices) at line " + std::to_string(lineno));
            tris.push_back({idx[0], idx[1], idx[2]});
        } // v t / vn / o / g / s / usemtl / mtllib are ignored
    }
    if (pts.empty() || tris.empty()) throw MeshError("OBJ: no triangle data found");
    return Mesh::fromData(std::move(pts), std::move(tris));
}

enum class MeshFormat { OFF, OBJ };

inline Mesh loadMesh(std::istream& is, MeshFormat fmt) {
    return fmt == MeshFormat::OFF ? loadOFF(is) : loadOBJ(is);
}

// ---------------------------------------------------------------------------
// 1-to-4 midpoint refinement; topology (g, k) is preserved.

inline Mesh refine(const Mesh& m, const Projector* proj = nullptr) {
    std::vector<Vec3> pts = m.positions();
    pts.resize(m.numVertices() + m.numEdges());
    for (int e = 0; e < m.numEdges(); ++e) {
        const auto& er = m.edge(e);
        Vec3 mid = 0.5 * (m.position(er.tail) + m.position(er.head));
        if (proj) {
            mid = proj->project(mid, er.boundary);
            if (!mid.allFinite())
                throw MeshError("refine: projector produced a non-finite point on edge " +
                                std::to_string(e));
        }
        pts[m.numVertices() + e] = mid;
    }
    std::vector<std::array<int, 3>> tris;
    tris.reserve(4 * m.numFaces());
    for (int f = 0; f < m.numFaces(); ++f) {
        const auto& t = m.face(f);
        int m01 = m.numVertices() + m.edgeBetween(t[0], t[1]);
        int m12 = m.numVertices() + m.edgeBetween(t[1], t[2]);
        int m20 = m.numVertices() + m.edgeBetween(t[2], t[0]);
        tris.push_back({t[0], m01, m20});
        tris.push_back({t[1], m12, m01});
        tris.push_back({t[2], m20, m12});
        tris.push_back({m01, m12, m20});
    }
    return Mesh::fromData(std::move(pts), std::move(tris));
}

} // namespace cmcindex
