#pragma once

#include <string>
#include <vector>

#include "ganno/graph.hpp"

namespace ganno {

/// Result of loading a TUDataset-format directory, before rescaling.
struct TuData {
    std::vector<AnnotatedGraph> graphs;
    Eigen::VectorXd node_min, node_max;  // dataset-wide per-column
    Eigen::VectorXd edge_min, edge_max;
};

/// Loads the standard TUDataset text layout from dir: <prefix>_A.txt,
/// <prefix>_graph_indicator.txt, <prefix>_node_attributes.txt and
/// <prefix>_edge_attributes.txt (prefix auto-detected from the _A.txt file).
/// Node ids in the files are 1-based and global; every undirected edge must
/// be listed in both orientations with identical attribute rows, and the two
/// listings are merged into one stored edge.
TuData load_tudataset(const std::string& dir);

/// Linearly rescales every continuous feature column of the loaded graphs to
/// [lo, hi] using the dataset-wide min/max (constant columns map to the
/// middle of the range).
void rescale_features(TuData& data, double lo, double hi);

}  // namespace ganno
