#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "ganno/graph.hpp"

namespace ganno {

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Disjoint union of graphs for batched message passing. Undirected edges
/// keep a single feature row; both orientations are materialized as index
/// arrays only (dir_src[k] -> dir_dst[k] referencing row dir_edge[k]), so the
/// two orientations of an edge share one feature row by construction.
template <class S>
struct GraphBatch {
    int num_graphs = 0;
    int total_nodes = 0;
    int total_edges = 0;  // undirected

    MatX<S> node_feats;   // total_nodes x d
    MatX<S> edge_feats;   // total_edges x c
    std::vector<std::array<int, 2>> edges;  // global node ids, sorted pairs

    std::vector<int> dir_src, dir_dst, dir_edge;  // size 2*total_edges
    std::vector<int> node_graph;  // graph indicator per node
    std::vector<int> edge_graph;  // graph id per undirected edge
    std::vector<int> node_offset; // size num_graphs+1
    std::vector<int> edge_offset; // size num_graphs+1
    std::vector<int> degree;      // per node
    VecX<S> agg_coeff;            // per directed edge: 1/sqrt(d_src*d_dst)

    /// Endpoints of undirected edge k, as flat arrays (for gathers).
    std::vector<int> end_a, end_b;
};

template <class S>
GraphBatch<S> make_batch(std::span<const AnnotatedGraph> graphs) {
    if (graphs.empty()) throw DataError("batch: empty graph list");
    // dimensions fixed by the first graph that has rows; empty feature
    // matrices (e.g. the edge features of a one-node graph) match anything
    int d = -1, c = -1;
    for (const auto& g : graphs) {
        if (g.num_nodes() > 0 && d < 0) d = g.node_dim();
        if (g.num_edges() > 0 && c < 0) c = g.edge_dim();
    }
    if (d < 0) d = graphs[0].node_dim();
    if (c < 0) c = graphs[0].edge_dim();

    GraphBatch<S> b;
    b.num_graphs = static_cast<int>(graphs.size());
    b.node_offset.push_back(0);
    b.edge_offset.push_back(0);
    for (const auto& g : graphs) {
        if ((g.num_nodes() > 0 && g.node_dim() != d) || (g.num_edges() > 0 && g.edge_dim() != c))
            throw DataError("batch: feature dimension mismatch across graphs");
        b.node_offset.push_back(b.node_offset.back() + g.num_nodes());
        b.edge_offset.push_back(b.edge_offset.back() + g.num_edges());
    }
    b.total_nodes = b.node_offset.back();
    b.total_edges = b.edge_offset.back();

    b.node_feats.resize(b.total_nodes, d);
    b.edge_feats.resize(b.total_edges, c);
    b.node_graph.resize(b.total_nodes);
    b.edge_graph.resize(b.total_edges);
    b.degree.assign(b.total_nodes, 0);
    b.edges.reserve(b.total_edges);
    b.end_a.reserve(b.total_edges);
    b.end_b.reserve(b.total_edges);
    b.dir_src.reserve(2 * b.total_edges);
    b.dir_dst.reserve(2 * b.total_edges);
    b.dir_edge.reserve(2 * b.total_edges);

    for (int gi = 0; gi < b.num_graphs; ++gi) {
        const auto& g = graphs[gi];
        const int no = b.node_offset[gi];
        if (g.num_nodes() > 0) b.node_feats.middleRows(no, g.num_nodes()) = g.node_feats.cast<S>();
        for (int i = 0; i < g.num_nodes(); ++i) b.node_graph[no + i] = gi;
        for (int k = 0; k < g.num_edges(); ++k) {
            const auto& e = g.skeleton.edges[k];
            const int a = no + e[0], bb = no + e[1];
            const int ek = b.edge_offset[gi] + k;
            b.edge_feats.row(ek) = g.edge_feats.row(k).cast<S>();
            b.edge_graph[ek] = gi;
            b.edges.push_back({a, bb});
            b.end_a.push_back(a);
            b.end_b.push_back(bb);
            b.degree[a]++;
            b.degree[bb]++;
            b.dir_src.push_back(a);
            b.dir_dst.push_back(bb);
            b.dir_edge.push_back(ek);
            b.dir_src.push_back(bb);
            b.dir_dst.push_back(a);
            b.dir_edge.push_back(ek);
        }
    }

    b.agg_coeff.resize(2 * b.total_edges);
    for (int k = 0; k < 2 * b.total_edges; ++k) {
        const double ds = b.degree[b.dir_src[k]], dt = b.degree[b.dir_dst[k]];
        b.agg_coeff[k] = static_cast<S>(1.0 / std::sqrt(ds * dt));
    }
    return b;
}

template <class S>
std::vector<AnnotatedGraph> unbatch(const GraphBatch<S>& b) {
    std::vector<AnnotatedGraph> out(b.num_graphs);
    for (int gi = 0; gi < b.num_graphs; ++gi) {
        const int no = b.node_offset[gi];
        const int n = b.node_offset[gi + 1] - no;
        const int eo = b.edge_offset[gi];
        const int m = b.edge_offset[gi + 1] - eo;
        std::vector<std::array<int, 2>> edges(m);
        for (int k = 0; k < m; ++k)
            edges[k] = {b.edges[eo + k][0] - no, b.edges[eo + k][1] - no};
        out[gi].skeleton = Skeleton::make(n, std::move(edges));
        out[gi].node_feats = b.node_feats.middleRows(no, n).template cast<double>();
        out[gi].edge_feats = b.edge_feats.middleRows(eo, m).template cast<double>();
    }
    return out;
}

}  // namespace ganno
