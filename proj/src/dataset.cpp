#include "ganno/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ganno/eval.hpp"
#include "ganno/graph_json.hpp"
#include "ganno/rng.hpp"
#include "ganno/tudataset.hpp"
#include "json.hpp"

namespace ganno {

using nlohmann::json;

void DatasetConfig::validate() const {
    if (path.empty()) throw DataError("dataset config: path is required");
    if (split.size() != 3) throw DataError("dataset config: split needs 3 fractions");
    const double s = split[0] + split[1] + split[2];
    if (std::abs(s - 1.0) > 1e-9) throw DataError("dataset config: split fractions must sum to 1");
    if (rescale_lo >= rescale_hi) throw DataError("dataset config: rescale range must be ordered");
    for (int k : cycle_ks)
        if (k < 3 || k > 8) throw DataError("dataset config: cycle lengths must be in 3..8");
}

namespace {

std::string format_name(DatasetFormat f) {
    switch (f) {
        case DatasetFormat::Smiles: return "smiles";
        case DatasetFormat::TuDataset: return "tudataset";
        case DatasetFormat::Json: return "json";
    }
    return "?";
}

DatasetFormat format_from(const std::string& s) {
    if (s == "smiles") return DatasetFormat::Smiles;
    if (s == "tudataset") return DatasetFormat::TuDataset;
    if (s == "json") return DatasetFormat::Json;
    throw DataError("unknown dataset format: " + s);
}

json vec_to_json(const std::vector<double>& v) { return json(v); }
json vec_to_json(const Eigen::VectorXd& v) {
    json j = json::array();
    for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

Eigen::VectorXd eigvec_from(const json& j) {
    Eigen::VectorXd v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
    return v;
}

}  // namespace

std::string DatasetMeta::to_json() const {
    json j;
    j["format"] = format_name(format);
    j["vocab"] = vocab;
    j["node_dim"] = node_dim;
    j["edge_dim"] = edge_dim;
    j["categorical"] = categorical;
    j["node_min"] = vec_to_json(node_min);
    j["node_max"] = vec_to_json(node_max);
    j["edge_min"] = vec_to_json(edge_min);
    j["edge_max"] = vec_to_json(edge_max);
    j["rescale_lo"] = rescale_lo;
    j["rescale_hi"] = rescale_hi;
    j["cycle_ks"] = cycle_ks;
    j["struct_mean"] = vec_to_json(struct_mean);
    j["struct_std"] = vec_to_json(struct_std);
    j["train_idx"] = train_idx;
    j["val_idx"] = val_idx;
    j["test_idx"] = test_idx;
    j["seed"] = seed;
    j["filtered_invalid"] = filtered_invalid;
    return j.dump(2);
}

DatasetMeta DatasetMeta::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("meta: malformed JSON: ") + e.what());
    }
    DatasetMeta m;
    m.format = format_from(j.at("format").get<std::string>());
    m.vocab = j.at("vocab").get<std::string>();
    m.node_dim = j.at("node_dim").get<int>();
    m.edge_dim = j.at("edge_dim").get<int>();
    m.categorical = j.at("categorical").get<bool>();
    m.node_min = j.at("node_min").get<std::vector<double>>();
    m.node_max = j.at("node_max").get<std::vector<double>>();
    m.edge_min = j.at("edge_min").get<std::vector<double>>();
    m.edge_max = j.at("edge_max").get<std::vector<double>>();
    m.rescale_lo = j.at("rescale_lo").get<double>();
    m.rescale_hi = j.at("rescale_hi").get<double>();
    m.cycle_ks = j.at("cycle_ks").get<std::vector<int>>();
    m.struct_mean = eigvec_from(j.at("struct_mean"));
    m.struct_std = eigvec_from(j.at("struct_std"));
    m.train_idx = j.at("train_idx").get<std::vector<int>>();
    m.val_idx = j.at("val_idx").get<std::vector<int>>();
    m.test_idx = j.at("test_idx").get<std::vector<int>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.filtered_invalid = j.at("filtered_invalid").get<int>();
    return m;
}

std::vector<const AnnotatedGraph*> Dataset::split_graphs(const std::vector<int>& idx) const {
    std::vector<const AnnotatedGraph*> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(&graphs[i]);
    return out;
}

MolSpec Dataset::mol_spec() const {
    if (meta.vocab == "qm9") return MolSpec::qm9();
    if (meta.vocab == "zinc") return MolSpec::zinc();
    throw DataError("dataset has no molecular vocabulary");
}

void Dataset::inverse_rescale(AnnotatedGraph& g) const {
    if (meta.categorical) return;
    const double lo = meta.rescale_lo, hi = meta.rescale_hi;
    auto unscale = [&](Eigen::MatrixXd& m, const std::vector<double>& mn,
                       const std::vector<double>& mx) {
        for (int c = 0; c < m.cols(); ++c) {
            const double span = mx[c] - mn[c];
            for (int r = 0; r < m.rows(); ++r)
                m(r, c) = span > 0 ? mn[c] + (m(r, c) - lo) / (hi - lo) * span
                                   : mn[c];
        }
    };
    unscale(g.node_feats, meta.node_min, meta.node_max);
    unscale(g.edge_feats, meta.edge_min, meta.edge_max);
}

namespace {

void make_splits(DatasetMeta& meta, int count, const std::vector<double>& split,
                 std::uint64_t seed) {
    std::vector<int> idx(count);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed ^ 0x5eedULL);
    for (int i = count - 1; i > 0; --i)
        std::swap(idx[i], idx[static_cast<int>(rng.below(i + 1))]);
    const int n_train = static_cast<int>(split[0] * count);
    const int n_val = static_cast<int>(split[1] * count);
    meta.train_idx.assign(idx.begin(), idx.begin() + n_train);
    meta.val_idx.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
    meta.test_idx.assign(idx.begin() + n_train + n_val, idx.end());
    if (meta.train_idx.empty()) throw DataError("dataset: empty training split");
}

}  // namespace

Dataset prepare_dataset(const DatasetConfig& cfg) {
    cfg.validate();
    Dataset ds;
    ds.meta.format = cfg.format;
    ds.meta.rescale_lo = cfg.rescale_lo;
    ds.meta.rescale_hi = cfg.rescale_hi;
    ds.meta.cycle_ks = cfg.cycle_ks;
    ds.meta.seed = cfg.seed;

    if (cfg.format == DatasetFormat::Smiles) {
        const MolSpec spec = cfg.vocab == "zinc" ? MolSpec::zinc() : MolSpec::qm9();
        ds.meta.vocab = cfg.vocab == "zinc" ? "zinc" : "qm9";
        ds.meta.categorical = true;
        ds.meta.node_dim = spec.atom_dim();
        ds.meta.edge_dim = spec.edge_dim();
        auto all = read_smiles_file(cfg.path, spec);
        const ValenceModel vm = ValenceModel::from(spec);
        for (auto& g : all) {
            if (is_valid(g, vm))
                ds.graphs.push_back(std::move(g));
            else
                ds.meta.filtered_invalid++;
        }
        if (ds.graphs.empty()) throw DataError("dataset: no molecules survived the valence filter");
    } else if (cfg.format == DatasetFormat::TuDataset) {
        TuData tu = load_tudataset(cfg.path);
        ds.meta.categorical = false;
        ds.meta.node_dim = static_cast<int>(tu.graphs[0].node_dim());
        ds.meta.edge_dim = static_cast<int>(tu.graphs[0].edge_dim());
        ds.meta.node_min.assign(tu.node_min.data(), tu.node_min.data() + tu.node_min.size());
        ds.meta.node_max.assign(tu.node_max.data(), tu.node_max.data() + tu.node_max.size());
        ds.meta.edge_min.assign(tu.edge_min.data(), tu.edge_min.data() + tu.edge_min.size());
        ds.meta.edge_max.assign(tu.edge_max.data(), tu.edge_max.data() + tu.edge_max.size());
        rescale_features(tu, cfg.rescale_lo, cfg.rescale_hi);
        ds.graphs = std::move(tu.graphs);
    } else {
        ds.graphs = read_ndjson_file(cfg.path);
        if (ds.graphs.empty()) throw DataError("dataset: empty ndjson file");
        ds.meta.categorical = false;
        ds.meta.node_dim = ds.graphs[0].node_dim();
        ds.meta.edge_dim = ds.graphs[0].edge_dim();
        for (const auto& g : ds.graphs)
            if (g.node_dim() != ds.meta.node_dim || g.edge_dim() != ds.meta.edge_dim)
                throw DataError("dataset: inconsistent feature dimensions across graphs");
    }

    ds.sfeats.reserve(ds.graphs.size());
    for (const auto& g : ds.graphs) ds.sfeats.push_back(struct_features(g.skeleton, cfg.cycle_ks));

    make_splits(ds.meta, static_cast<int>(ds.graphs.size()), cfg.split, cfg.seed);

    std::vector<StructFeatures> train_feats;
    train_feats.reserve(ds.meta.train_idx.size());
    for (int i : ds.meta.train_idx) train_feats.push_back(ds.sfeats[i]);
    const StructScaler sc = StructScaler::fit(train_feats);
    ds.meta.struct_mean = sc.mean;
    ds.meta.struct_std = sc.stddev;
    return ds;
}

void save_cache(const Dataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_ndjson_file(dir + "/graphs.ndjson", ds.graphs);
    {
        std::ofstream os(dir + "/meta.json");
        if (!os) throw DataError("cannot write " + dir + "/meta.json");
        os << ds.meta.to_json() << '\n';
    }
    // structural feature cache, deduplicated by skeleton hash
    std::ofstream os(dir + "/structfeats.ndjson");
    if (!os) throw DataError("cannot write " + dir + "/structfeats.ndjson");
    std::unordered_set<std::uint64_t> seen;
    for (size_t i = 0; i < ds.graphs.size(); ++i) {
        const std::uint64_t h = skeleton_digest(ds.graphs[i].skeleton);
        if (!seen.insert(h).second) continue;
        json j;
        j["skeleton_hash"] = h;
        j["ks"] = ds.sfeats[i].ks;
        json deg = json::array();
        for (int v = 0; v < ds.sfeats[i].degrees.size(); ++v) deg.push_back(ds.sfeats[i].degrees[v]);
        j["degrees"] = std::move(deg);
        json cyc = json::array();
        for (int r = 0; r < ds.sfeats[i].cycle_counts.rows(); ++r) {
            json row = json::array();
            for (int c = 0; c < ds.sfeats[i].cycle_counts.cols(); ++c)
                row.push_back(ds.sfeats[i].cycle_counts(r, c));
            cyc.push_back(std::move(row));
        }
        j["cycle_counts"] = std::move(cyc);
        os << j.dump() << '\n';
    }
}

Dataset load_cache(const std::string& dir) {
    Dataset ds;
    {
        std::ifstream is(dir + "/meta.json");
        if (!is) throw DataError("cache: cannot open " + dir + "/meta.json");
        std::stringstream ss;
        ss << is.rdbuf();
        ds.meta = DatasetMeta::from_json(ss.str());
    }
    ds.graphs = read_ndjson_file(dir + "/graphs.ndjson");
    // empty feature matrices lose their width through JSON; restore it
    for (auto& g : ds.graphs) {
        if (g.node_feats.rows() == 0) g.node_feats.resize(0, ds.meta.node_dim);
        if (g.edge_feats.rows() == 0) g.edge_feats.resize(0, ds.meta.edge_dim);
    }

    std::unordered_map<std::uint64_t, StructFeatures> by_hash;
    {
        std::ifstream is(dir + "/structfeats.ndjson");
        if (!is) throw DataError("cache: cannot open " + dir + "/structfeats.ndjson");
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            StructFeatures f;
            f.ks = j.at("ks").get<std::vector<int>>();
            const auto& deg = j.at("degrees");
            f.degrees.resize(deg.size());
            for (size_t i = 0; i < deg.size(); ++i) f.degrees[static_cast<int>(i)] = deg[i].get<int>();
            const auto& cyc = j.at("cycle_counts");
            f.cycle_counts.resize(cyc.size(), f.ks.size());
            for (size_t r = 0; r < cyc.size(); ++r)
                for (size_t c = 0; c < f.ks.size(); ++c)
                    f.cycle_counts(static_cast<int>(r), static_cast<int>(c)) = cyc[r][c].get<int>();
            by_hash[j.at("skeleton_hash").get<std::uint64_t>()] = std::move(f);
        }
    }
    ds.sfeats.reserve(ds.graphs.size());
    for (const auto& g : ds.graphs) {
        auto it = by_hash.find(skeleton_digest(g.skeleton));
        if (it == by_hash.end())
            throw DataError("cache: structfeats entry missing for a graph skeleton");
        ds.sfeats.push_back(it->second);
    }
    return ds;
}

std::vector<Skeleton> sample_skeletons(const std::vector<const AnnotatedGraph*>& ds, int k,
                                       std::uint64_t seed) {
    if (ds.empty()) throw DataError("sample_skeletons: empty dataset");
    if (k < 1) throw DataError("sample_skeletons: k must be >= 1");
    Rng rng(seed);
    std::vector<Skeleton> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i)
        out.push_back(ds[static_cast<size_t>(rng.below(ds.size()))]->skeleton);
    return out;
}

}  // namespace ganno
