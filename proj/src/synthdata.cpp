#include "ganno/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "ganno/graph.hpp"

namespace ganno {

namespace {

struct Node {
    double x, y;
};

struct Edge {
    int a, b;
};

struct Graph {
    std::vector<Node> nodes;
    std::vector<Edge> edges;
};

Graph make_graph(Rng& rng) {
    Graph g;
    // mostly chains with occasional branches and a rare cycle, like
    // skeletonized ridge structures
    const int n = 4 + static_cast<int>(rng.below(14));
    g.nodes.reserve(n);
    double heading = rng.uniform(0, 2 * M_PI);
    g.nodes.push_back({rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6)});
    std::vector<int> frontier{0};
    while (static_cast<int>(g.nodes.size()) < n) {
        const int parent = frontier[rng.uniform() < 0.85
                                        ? frontier.size() - 1
                                        : static_cast<size_t>(rng.below(frontier.size()))];
        heading += rng.gaussian() * 0.6;
        const double step = 0.08 + 0.06 * rng.uniform();
        const double nx = std::clamp(g.nodes[parent].x + step * std::cos(heading), -1.0, 1.0);
        const double ny = std::clamp(g.nodes[parent].y + step * std::sin(heading), -1.0, 1.0);
        const int id = static_cast<int>(g.nodes.size());
        g.nodes.push_back({nx, ny});
        g.edges.push_back({parent, id});
        frontier.push_back(id);
        if (frontier.size() > 4 && rng.uniform() < 0.3)
            frontier.erase(frontier.begin() + static_cast<long>(rng.below(frontier.size() - 1)));
    }
    if (n >= 6 && rng.uniform() < 0.15) {
        const int a = static_cast<int>(rng.below(n));
        const int b = static_cast<int>(rng.below(n));
        bool exists = a == b;
        for (const auto& e : g.edges)
            if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) exists = true;
        if (!exists) g.edges.push_back({std::min(a, b), std::max(a, b)});
    }
    return g;
}

}  // namespace

void write_synth_fingerprint(const std::string& out_dir, int graphs, std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string prefix = out_dir + "/SYNTH";
    std::ofstream fa(prefix + "_A.txt");
    std::ofstream fg(prefix + "_graph_indicator.txt");
    std::ofstream fn(prefix + "_node_attributes.txt");
    std::ofstream fe(prefix + "_edge_attributes.txt");
    if (!fa || !fg || !fn || !fe) throw DataError("cannot write synth corpus to " + out_dir);
    fn.precision(8);
    fe.precision(8);

    Rng rng(seed);
    int node_base = 0;
    for (int gi = 1; gi <= graphs; ++gi) {
        Graph g = make_graph(rng);
        for (const auto& nd : g.nodes) {
            fg << gi << '\n';
            fn << nd.x << ", " << nd.y << '\n';
        }
        for (const auto& e : g.edges) {
            const auto& pa = g.nodes[e.a];
            const auto& pb = g.nodes[e.b];
            const double len = std::hypot(pa.x - pb.x, pa.y - pb.y);
            const double ang = std::atan2(pb.y - pa.y, pb.x - pa.x);
            const double fold = std::cos(2 * ang);  // direction-independent
            fa << node_base + e.a + 1 << ", " << node_base + e.b + 1 << '\n';
            fe << len << ", " << fold << '\n';
            fa << node_base + e.b + 1 << ", " << node_base + e.a + 1 << '\n';
            fe << len << ", " << fold << '\n';
        }
        node_base += static_cast<int>(g.nodes.size());
    }
}

}  // namespace ganno
