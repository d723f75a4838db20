#include "ganno/struct_feats.hpp"

#include <algorithm>
#include <cmath>

namespace ganno {

Eigen::VectorXi degrees(const Skeleton& s) {
    Eigen::VectorXi d = Eigen::VectorXi::Zero(s.n);
    for (const auto& e : s.edges) {
        d[e[0]]++;
        d[e[1]]++;
    }
    return d;
}

namespace {

struct CycleDfs {
    const std::vector<std::vector<int>>& adj;
    const std::vector<std::vector<bool>>& is_adj;
    int max_k;
    int root = 0;
    std::vector<bool> on_path;
    std::vector<int> path;
    Eigen::MatrixXi* counts;           // n x (max_k+1), column k = cycles of length k
    void run(int v) {
        // extend the path with neighbors strictly greater than the root
        for (int u : adj[v]) {
            if (u <= root || on_path[u]) continue;
            path.push_back(u);
            on_path[u] = true;
            const int len = static_cast<int>(path.size());
            // close a cycle back to the root; second < last kills the mirror
            if (len >= 3 && is_adj[u][root] && path[1] < u) {
                for (int w : path) (*counts)(w, len) += 1;
            }
            if (len < max_k) run(u);
            on_path[u] = false;
            path.pop_back();
        }
    }
};

}  // namespace

Eigen::MatrixXi count_cycles(const Skeleton& s, const std::vector<int>& ks) {
    for (int k : ks)
        if (k < 3 || k > 8) throw DataError("count_cycles: lengths must be in 3..8");
    const int max_k = ks.empty() ? 0 : *std::max_element(ks.begin(), ks.end());

    Eigen::MatrixXi by_len = Eigen::MatrixXi::Zero(s.n, max_k + 1);
    if (max_k >= 3 && !s.edges.empty()) {
        auto adj = s.adjacency();
        std::vector<std::vector<bool>> is_adj(s.n, std::vector<bool>(s.n, false));
        for (const auto& e : s.edges) {
            is_adj[e[0]][e[1]] = true;
            is_adj[e[1]][e[0]] = true;
        }
        CycleDfs dfs{adj, is_adj, max_k, 0, std::vector<bool>(s.n, false), {}, &by_len};
        for (int r = 0; r < s.n; ++r) {
            dfs.root = r;
            dfs.path = {r};
            dfs.on_path.assign(s.n, false);
            dfs.on_path[r] = true;
            dfs.run(r);
        }
    }

    Eigen::MatrixXi out(s.n, static_cast<int>(ks.size()));
    for (int c = 0; c < static_cast<int>(ks.size()); ++c) out.col(c) = by_len.col(ks[c]);
    return out;
}

StructFeatures struct_features(const Skeleton& s, const std::vector<int>& ks) {
    StructFeatures f;
    f.degrees = degrees(s);
    f.cycle_counts = count_cycles(s, ks);
    f.ks = ks;
    return f;
}

StructScaler StructScaler::fit(const std::vector<StructFeatures>& feats) {
    if (feats.empty()) throw DataError("StructScaler: no features to fit");
    const int dim = feats[0].dim();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(dim);
    long count = 0;
    for (const auto& f : feats) {
        for (int i = 0; i < f.degrees.size(); ++i) {
            Eigen::VectorXd row(dim);
            row[0] = f.degrees[i];
            for (int c = 0; c < f.cycle_counts.cols(); ++c) row[1 + c] = f.cycle_counts(i, c);
            sum += row;
            sumsq += row.cwiseProduct(row);
            ++count;
        }
    }
    StructScaler sc;
    sc.mean = sum / static_cast<double>(count);
    Eigen::VectorXd var = sumsq / static_cast<double>(count) - sc.mean.cwiseProduct(sc.mean);
    sc.stddev = var.cwiseMax(0.0).cwiseSqrt();
    for (int i = 0; i < sc.stddev.size(); ++i)
        if (sc.stddev[i] < 1e-8) sc.stddev[i] = 1.0;
    return sc;
}

Eigen::MatrixXd StructScaler::apply(const StructFeatures& f) const {
    const int n = static_cast<int>(f.degrees.size());
    const int dim = f.dim();
    Eigen::MatrixXd out(n, dim);
    for (int i = 0; i < n; ++i) {
        out(i, 0) = f.degrees[i];
        for (int c = 0; c < f.cycle_counts.cols(); ++c) out(i, 1 + c) = f.cycle_counts(i, c);
    }
    out.rowwise() -= mean.transpose();
    out.array().rowwise() /= stddev.transpose().array();
    return out;
}

}  // namespace ganno
