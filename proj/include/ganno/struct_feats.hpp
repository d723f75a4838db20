#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ganno/batch.hpp"
#include "ganno/graph.hpp"

namespace ganno {

/// Node degrees and per-node simple-cycle counts extracted from a skeleton.
/// cycle_counts(i, k) is the number of distinct simple cycles of length
/// ks[k] that contain node i; each cycle is counted once, not once per
/// traversal direction or rotation.
struct StructFeatures {
    Eigen::VectorXi degrees;
    Eigen::MatrixXi cycle_counts;  // n x |ks|
    std::vector<int> ks;

    int dim() const { return 1 + static_cast<int>(ks.size()); }
};

Eigen::VectorXi degrees(const Skeleton& s);

/// Per-node counts of simple cycles with lengths in ks (each in 3..8).
/// Rooted DFS with canonical-representative dedup: a cycle is discovered at
/// its minimum-index node, and paths are enumerated with second vertex <
/// last vertex to kill direction duplicates. Cost grows exponentially in
/// max(ks) only, so it stays cheap for the small cycle lengths used here.
Eigen::MatrixXi count_cycles(const Skeleton& s, const std::vector<int>& ks);

StructFeatures struct_features(const Skeleton& s, const std::vector<int>& ks = {3, 4, 5, 6});

/// Per-dataset standardization of raw structural features (train split
/// statistics). Applied before the features enter any network input.
struct StructScaler {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;

    static StructScaler fit(const std::vector<StructFeatures>& feats);
    Eigen::MatrixXd apply(const StructFeatures& f) const;
};

/// Standardized structural features for every node of a batch, aligned with
/// batch node indexing.
template <class S>
MatX<S> batch_struct_feats(const GraphBatch<S>& b, const std::vector<const StructFeatures*>& per_graph,
                           const StructScaler& scaler) {
    const int dim = per_graph.empty() ? 0 : per_graph[0]->dim();
    MatX<S> out(b.total_nodes, dim);
    for (int gi = 0; gi < b.num_graphs; ++gi) {
        Eigen::MatrixXd rows = scaler.apply(*per_graph[gi]);
        out.middleRows(b.node_offset[gi], rows.rows()) = rows.cast<S>();
    }
    return out;
}

}  // namespace ganno
