#include "ganno/graph.hpp"

namespace ganno {

Skeleton apply_permutation(const Skeleton& s, const Permutation& p) {
    if (p.n() != s.n) throw DataError("apply_permutation: size mismatch");
    const Permutation inv = p.inverse();
    std::vector<std::array<int, 2>> edges;
    edges.reserve(s.edges.size());
    for (const auto& e : s.edges)
        edges.push_back({inv.perm[e[0]], inv.perm[e[1]]});
    return Skeleton::make(s.n, std::move(edges));
}

AnnotatedGraph apply_permutation(const AnnotatedGraph& g, const Permutation& p) {
    if (p.n() != g.skeleton.n) throw DataError("apply_permutation: size mismatch");
    const Permutation inv = p.inverse();

    AnnotatedGraph out;
    out.skeleton = apply_permutation(g.skeleton, p);
    out.node_feats = p.apply_rows(g.node_feats);
    out.edge_feats.resize(g.edge_feats.rows(), g.edge_feats.cols());
    for (int k = 0; k < g.skeleton.num_edges(); ++k) {
        const auto& e = g.skeleton.edges[k];
        int kk = out.skeleton.edge_index(inv.perm[e[0]], inv.perm[e[1]]);
        out.edge_feats.row(kk) = g.edge_feats.row(k);
    }
    return out;
}

std::uint64_t skeleton_digest(const Skeleton& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    auto eat = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    eat(static_cast<std::uint64_t>(s.n));
    for (const auto& e : s.edges) {
        eat(static_cast<std::uint64_t>(e[0]));
        eat(static_cast<std::uint64_t>(e[1]));
    }
    return h;
}

}  // namespace ganno
