#include "ganno/tudataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace ganno {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("tudataset: cannot open: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

std::vector<double> parse_csv_row(const std::string& line, const std::string& file, int lineno) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (...) {
            throw DataError("tudataset: " + file + " line " + std::to_string(lineno) +
                            ": bad number '" + tok + "'");
        }
    }
    if (out.empty())
        throw DataError("tudataset: " + file + " line " + std::to_string(lineno) + ": empty row");
    return out;
}

}  // namespace

TuData load_tudataset(const std::string& dir) {
    std::string prefix;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() > 6 && name.substr(name.size() - 6) == "_A.txt") {
            prefix = name.substr(0, name.size() - 6);
            break;
        }
    }
    if (prefix.empty()) throw DataError("tudataset: no *_A.txt file in " + dir);
    const std::string base = dir + "/" + prefix;

    const auto a_lines = read_lines(base + "_A.txt");
    const auto gi_lines = read_lines(base + "_graph_indicator.txt");
    const auto na_lines = read_lines(base + "_node_attributes.txt");
    const auto ea_lines = read_lines(base + "_edge_attributes.txt");

    if (ea_lines.size() != a_lines.size())
        throw DataError("tudataset: edge_attributes line count != A line count");
    if (na_lines.size() != gi_lines.size())
        throw DataError("tudataset: node_attributes line count != graph_indicator line count");

    const int total_nodes = static_cast<int>(gi_lines.size());
    std::vector<int> node_graph(total_nodes);  // 0-based graph ids
    int num_graphs = 0;
    for (int i = 0; i < total_nodes; ++i) {
        int gid;
        try {
            gid = std::stoi(gi_lines[i]);
        } catch (...) {
            throw DataError("tudataset: graph_indicator line " + std::to_string(i + 1) + ": bad id");
        }
        node_graph[i] = gid - 1;
        num_graphs = std::max(num_graphs, gid);
    }

    // nodes of one graph must be contiguous in TUDataset files
    std::vector<int> node_offset(num_graphs + 1, 0);
    for (int i = 0; i < total_nodes; ++i) {
        if (i > 0 && node_graph[i] < node_graph[i - 1])
            throw DataError("tudataset: graph_indicator not sorted");
        node_offset[node_graph[i] + 1]++;
    }
    for (int g = 0; g < num_graphs; ++g) node_offset[g + 1] += node_offset[g];

    const int node_dim = static_cast<int>(parse_csv_row(na_lines[0], "node_attributes", 1).size());
    Eigen::MatrixXd node_attr(total_nodes, node_dim);
    for (int i = 0; i < total_nodes; ++i) {
        const auto row = parse_csv_row(na_lines[i], "node_attributes", i + 1);
        if (static_cast<int>(row.size()) != node_dim)
            throw DataError("tudataset: node_attributes line " + std::to_string(i + 1) +
                            ": ragged row");
        for (int c = 0; c < node_dim; ++c) node_attr(i, c) = row[c];
    }

    // collect directed edges; merge orientations and demand agreement
    struct Pending {
        int count = 0;
        int orientations = 0;  // bit 1: (lo,hi) seen, bit 2: (hi,lo) seen
        std::vector<double> attr;
    };
    std::map<std::pair<int, int>, Pending> merged;
    int edge_dim = -1;
    for (size_t k = 0; k < a_lines.size(); ++k) {
        std::stringstream ss(a_lines[k]);
        int i = 0, j = 0;
        char comma = 0;
        if (!(ss >> i >> comma >> j) || comma != ',')
            throw DataError("tudataset: A line " + std::to_string(k + 1) + ": expected 'i, j'");
        i -= 1;
        j -= 1;
        if (i < 0 || j < 0 || i >= total_nodes || j >= total_nodes)
            throw DataError("tudataset: A line " + std::to_string(k + 1) + ": node id out of range");
        if (i == j) throw DataError("tudataset: A line " + std::to_string(k + 1) + ": self-loop");
        if (node_graph[i] != node_graph[j])
            throw DataError("tudataset: A line " + std::to_string(k + 1) +
                            ": edge crosses graph boundaries");
        const auto attr = parse_csv_row(ea_lines[k], "edge_attributes", static_cast<int>(k + 1));
        if (edge_dim < 0) edge_dim = static_cast<int>(attr.size());
        if (static_cast<int>(attr.size()) != edge_dim)
            throw DataError("tudataset: edge_attributes line " + std::to_string(k + 1) +
                            ": ragged row");
        auto key = std::minmax(i, j);
        auto& p = merged[{key.first, key.second}];
        if (p.count == 0) {
            p.attr = attr;
        } else if (p.attr != attr) {
            throw DataError("tudataset: A line " + std::to_string(k + 1) +
                            ": orientations of edge carry different attributes");
        }
        p.count++;
        p.orientations |= (i < j) ? 1 : 2;
    }
    for (const auto& [key, p] : merged) {
        if (p.count != 2 || p.orientations != 3)
            throw DataError("tudataset: edge {" + std::to_string(key.first + 1) + "," +
                            std::to_string(key.second + 1) + "} must be listed exactly once per orientation");
    }

    TuData out;
    out.graphs.resize(num_graphs);
    std::vector<std::vector<std::array<int, 2>>> per_graph_edges(num_graphs);
    std::vector<std::vector<const std::vector<double>*>> per_graph_attr(num_graphs);
    for (const auto& [key, p] : merged) {
        const int g = node_graph[key.first];
        per_graph_edges[g].push_back({key.first - node_offset[g], key.second - node_offset[g]});
        per_graph_attr[g].push_back(&p.attr);
    }
    for (int g = 0; g < num_graphs; ++g) {
        const int n = node_offset[g + 1] - node_offset[g];
        if (n == 0) throw DataError("tudataset: graph " + std::to_string(g + 1) + " has no nodes");
        auto& ag = out.graphs[g];
        // map.key order is sorted by global pair, which matches local sorted order
        std::vector<std::array<int, 2>> edges = per_graph_edges[g];
        ag.skeleton = Skeleton::make(n, edges);
        ag.node_feats = node_attr.middleRows(node_offset[g], n);
        ag.edge_feats.resize(static_cast<int>(edges.size()), edge_dim >= 0 ? edge_dim : 0);
        for (size_t k = 0; k < edges.size(); ++k) {
            const int idx = ag.skeleton.edge_index(edges[k][0], edges[k][1]);
            for (int c = 0; c < edge_dim; ++c) ag.edge_feats(idx, c) = (*per_graph_attr[g][k])[c];
        }
    }

    out.node_min = node_attr.colwise().minCoeff();
    out.node_max = node_attr.colwise().maxCoeff();
    if (edge_dim > 0) {
        out.edge_min = Eigen::VectorXd::Constant(edge_dim, std::numeric_limits<double>::infinity());
        out.edge_max = -out.edge_min;
        for (const auto& g : out.graphs)
            for (int k = 0; k < g.edge_feats.rows(); ++k)
                for (int c = 0; c < edge_dim; ++c) {
                    out.edge_min[c] = std::min(out.edge_min[c], g.edge_feats(k, c));
                    out.edge_max[c] = std::max(out.edge_max[c], g.edge_feats(k, c));
                }
    }
    return out;
}

void rescale_features(TuData& data, double lo, double hi) {
    auto scale = [&](Eigen::MatrixXd& m, const Eigen::VectorXd& mn, const Eigen::VectorXd& mx) {
        for (int c = 0; c < m.cols(); ++c) {
            const double span = mx[c] - mn[c];
            for (int r = 0; r < m.rows(); ++r) {
                m(r, c) = span > 0 ? lo + (hi - lo) * (m(r, c) - mn[c]) / span : 0.5 * (lo + hi);
            }
        }
    };
    for (auto& g : data.graphs) {
        scale(g.node_feats, data.node_min, data.node_max);
        scale(g.edge_feats, data.edge_min, data.edge_max);
    }
}

}  // namespace ganno
