#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ganno/graph.hpp"
#include "ganno/smiles.hpp"
#include "ganno/struct_feats.hpp"

namespace ganno {

enum class DatasetFormat { Smiles, TuDataset, Json };

struct DatasetConfig {
    DatasetFormat format = DatasetFormat::Smiles;
    std::string path;                    // SMILES file, TUDataset dir, or ndjson file
    std::string vocab = "qm9";           // molecular vocab for smiles format
    std::vector<double> split = {0.8, 0.1, 0.1};
    double rescale_lo = -1.0, rescale_hi = 1.0;
    std::vector<int> cycle_ks = {3, 4, 5, 6};
    std::uint64_t seed = 0;

    void validate() const;
};

struct DatasetMeta {
    DatasetFormat format;
    std::string vocab;                   // empty for non-molecular
    int node_dim = 0, edge_dim = 0;
    bool categorical = false;            // one-hot features (molecular)
    std::vector<double> node_min, node_max, edge_min, edge_max;  // continuous rescale
    double rescale_lo = -1.0, rescale_hi = 1.0;
    std::vector<int> cycle_ks;
    Eigen::VectorXd struct_mean, struct_std;
    std::vector<int> train_idx, val_idx, test_idx;
    std::uint64_t seed = 0;
    int filtered_invalid = 0;            // molecules dropped by the valence filter

    std::string to_json() const;
    static DatasetMeta from_json(const std::string& text);
};

/// A prepared dataset: graphs (features training-ready, i.e. rescaled for
/// continuous data), per-graph structural features, and metadata.
struct Dataset {
    std::vector<AnnotatedGraph> graphs;
    std::vector<StructFeatures> sfeats;
    DatasetMeta meta;

    StructScaler scaler() const { return StructScaler{meta.struct_mean, meta.struct_std}; }
    std::vector<const AnnotatedGraph*> split_graphs(const std::vector<int>& idx) const;
    MolSpec mol_spec() const;

    /// Inverse of the continuous-feature rescaling, mapping model outputs
    /// back to data units. Identity for categorical datasets.
    void inverse_rescale(AnnotatedGraph& g) const;
};

/// Ingests raw data per config: parses/loads, filters valence-violating
/// molecules (counted), rescales continuous features, computes structural
/// features, fits the standardizer on the train split and splits the data.
Dataset prepare_dataset(const DatasetConfig& cfg);

/// Cache round-trip. The cache directory holds graphs.ndjson, meta.json and
/// structfeats.ndjson (entries keyed by skeleton hash and K).
void save_cache(const Dataset& ds, const std::string& dir);
Dataset load_cache(const std::string& dir);

/// k skeletons drawn uniformly with replacement; deterministic under seed.
std::vector<Skeleton> sample_skeletons(const std::vector<const AnnotatedGraph*>& ds, int k,
                                       std::uint64_t seed);

}  // namespace ganno
