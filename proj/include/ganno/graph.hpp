#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <stdexcept>
#include <vector>

#include "ganno/rng.hpp"

namespace ganno {

/// Thrown when input data violates a schema or structural invariant.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A non-annotated graph: node count plus a set of undirected edges.
/// Edges are stored once, as sorted index pairs in ascending order, so
/// {i,j} and {j,i} are the same edge by construction.
struct Skeleton {
    int n = 0;
    std::vector<std::array<int, 2>> edges;

    int num_edges() const { return static_cast<int>(edges.size()); }

    /// Validates and normalizes an edge list: self-loops and duplicates are
    /// rejected, pairs are sorted and ordered.
    static Skeleton make(int n, std::vector<std::array<int, 2>> raw_edges) {
        if (n < 1) throw DataError("skeleton: node count must be >= 1");
        for (auto& e : raw_edges) {
            if (e[0] == e[1]) throw DataError("skeleton: self-loop on node " + std::to_string(e[0]));
            if (e[0] > e[1]) std::swap(e[0], e[1]);
            if (e[0] < 0 || e[1] >= n)
                throw DataError("skeleton: edge index out of range: {" + std::to_string(e[0]) +
                                "," + std::to_string(e[1]) + "} with n=" + std::to_string(n));
        }
        std::sort(raw_edges.begin(), raw_edges.end());
        if (std::adjacent_find(raw_edges.begin(), raw_edges.end()) != raw_edges.end())
            throw DataError("skeleton: duplicate edge");
        Skeleton s;
        s.n = n;
        s.edges = std::move(raw_edges);
        return s;
    }

    /// Index of edge {i,j} in the edge array, or -1.
    int edge_index(int i, int j) const {
        std::array<int, 2> key{std::min(i, j), std::max(i, j)};
        auto it = std::lower_bound(edges.begin(), edges.end(), key);
        if (it == edges.end() || *it != key) return -1;
        return static_cast<int>(it - edges.begin());
    }

    std::vector<std::vector<int>> adjacency() const {
        std::vector<std::vector<int>> adj(n);
        for (const auto& e : edges) {
            adj[e[0]].push_back(e[1]);
            adj[e[1]].push_back(e[0]);
        }
        return adj;
    }

    bool operator==(const Skeleton&) const = default;
};

/// A skeleton with feature annotations. Row i of node_feats belongs to node
/// i; row k of edge_feats belongs to skeleton.edges[k]. Storing one row per
/// unordered edge makes e_ij == e_ji structural.
struct AnnotatedGraph {
    Skeleton skeleton;
    Eigen::MatrixXd node_feats;  // n x d
    Eigen::MatrixXd edge_feats;  // |edges| x c

    int num_nodes() const { return skeleton.n; }
    int num_edges() const { return skeleton.num_edges(); }
    int node_dim() const { return static_cast<int>(node_feats.cols()); }
    int edge_dim() const { return static_cast<int>(edge_feats.cols()); }

    /// Feature row of edge {i,j} in either orientation.
    Eigen::RowVectorXd edge_feat(int i, int j) const {
        int k = skeleton.edge_index(i, j);
        if (k < 0) throw DataError("edge_feat: no edge {" + std::to_string(i) + "," + std::to_string(j) + "}");
        return edge_feats.row(k);
    }

    void validate() const {
        if (node_feats.rows() != skeleton.n)
            throw DataError("graph: node_feats rows != n");
        if (edge_feats.rows() != skeleton.num_edges())
            throw DataError("graph: edge_feats rows != |edges|");
        if (!node_feats.allFinite() || !edge_feats.allFinite())
            throw DataError("graph: non-finite feature");
    }
};

/// A bijection on {0..n-1}. perm[i] is the input index that lands at output
/// slot i, i.e. applying p to a matrix X gives Y with Y.row(i) = X.row(perm[i]).
struct Permutation {
    std::vector<int> perm;

    int n() const { return static_cast<int>(perm.size()); }

    static Permutation identity(int n) {
        Permutation p;
        p.perm.resize(n);
        for (int i = 0; i < n; ++i) p.perm[i] = i;
        return p;
    }

    static Permutation random(int n, Rng& rng) {
        Permutation p = identity(n);
        for (int i = n - 1; i > 0; --i)
            std::swap(p.perm[i], p.perm[static_cast<int>(rng.below(i + 1))]);
        return p;
    }

    Permutation inverse() const {
        Permutation q;
        q.perm.resize(perm.size());
        for (int i = 0; i < n(); ++i) q.perm[perm[i]] = i;
        return q;
    }

    template <class Derived>
    Eigen::MatrixX<typename Derived::Scalar> apply_rows(const Eigen::MatrixBase<Derived>& x) const {
        Eigen::MatrixX<typename Derived::Scalar> out(x.rows(), x.cols());
        for (int i = 0; i < n(); ++i) out.row(i) = x.row(perm[i]);
        return out;
    }
};

Skeleton apply_permutation(const Skeleton& s, const Permutation& p);
AnnotatedGraph apply_permutation(const AnnotatedGraph& g, const Permutation& p);

/// Digest of the ordered skeleton representation (node count + edge list).
/// Sensitive to node ordering, unlike the isomorphism-invariant hash in the
/// evaluation module; used to key per-skeleton caches.
std::uint64_t skeleton_digest(const Skeleton& s);

}  // namespace ganno
