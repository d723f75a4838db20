#include "ganno/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "ganno/struct_feats.hpp"
#include "json.hpp"

namespace ganno {

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    // splitmix64-style combine
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebULL;
    h ^= h >> 31;
    return h;
}

std::uint64_t hash_row_quantized(const Eigen::MatrixXd& m, int row) {
    std::uint64_t h = 0x8445d61a4e774912ULL;
    for (int c = 0; c < m.cols(); ++c) {
        const double q = std::round(m(row, c) * 1e6);
        const long long iq = static_cast<long long>(q == 0.0 ? 0.0 : q);  // normalize -0
        h = mix(h, static_cast<std::uint64_t>(iq));
    }
    return h;
}

int one_hot_arg(const Eigen::MatrixXd& m, int row, const char* what) {
    int idx = -1;
    for (int c = 0; c < m.cols(); ++c) {
        const double v = m(row, c);
        if (v == 1.0) {
            if (idx >= 0) throw EvalError(std::string(what) + ": row is not one-hot");
            idx = c;
        } else if (v != 0.0) {
            throw EvalError(std::string(what) + ": row is not one-hot");
        }
    }
    if (idx < 0) throw EvalError(std::string(what) + ": row is not one-hot");
    return idx;
}

bool connected(const Skeleton& s) {
    if (s.n <= 1) return true;
    auto adj = s.adjacency();
    std::vector<bool> seen(s.n, false);
    std::vector<int> stack{0};
    seen[0] = true;
    int count = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int u : adj[v])
            if (!seen[u]) {
                seen[u] = true;
                ++count;
                stack.push_back(u);
            }
    }
    return count == s.n;
}

/// Edge-on-cycle flags via bridge detection.
std::vector<bool> non_bridge_edges(const Skeleton& s) {
    const int m = s.num_edges();
    std::vector<std::vector<std::pair<int, int>>> adj(s.n);
    for (int k = 0; k < m; ++k) {
        adj[s.edges[k][0]].push_back({s.edges[k][1], k});
        adj[s.edges[k][1]].push_back({s.edges[k][0], k});
    }
    std::vector<int> disc(s.n, -1), low(s.n, 0);
    std::vector<bool> on_cycle(m, true);
    int timer = 0;
    struct Frame {
        int v, parent_edge;
        size_t next = 0;
    };
    for (int start = 0; start < s.n; ++start) {
        if (disc[start] != -1) continue;
        std::vector<Frame> stack{{start, -1}};
        disc[start] = low[start] = timer++;
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next < adj[f.v].size()) {
                auto [u, ei] = adj[f.v][f.next++];
                if (ei == f.parent_edge) continue;
                if (disc[u] == -1) {
                    disc[u] = low[u] = timer++;
                    stack.push_back({u, ei});
                } else {
                    low[f.v] = std::min(low[f.v], disc[u]);
                }
            } else {
                const int v = f.v, pe = f.parent_edge;
                stack.pop_back();
                if (pe >= 0) {
                    const int p = stack.back().v;
                    low[p] = std::min(low[p], low[v]);
                    if (low[v] > disc[p]) on_cycle[pe] = false;
                }
            }
        }
    }
    return on_cycle;
}

}  // namespace

bool is_valid(const AnnotatedGraph& g, const ValenceModel& vm) {
    const auto& spec = vm.spec;
    if (g.node_feats.cols() != spec.atom_dim() ||
        (g.edge_feats.rows() > 0 && g.edge_feats.cols() != spec.edge_dim()))
        throw EvalError("is_valid: feature widths do not match the vocabulary");

    std::vector<double> valence_sum(g.skeleton.n, 0.0);
    std::vector<int> bond_kind(g.skeleton.num_edges());
    for (int i = 0; i < g.skeleton.n; ++i) one_hot_arg(g.node_feats, i, "node_feats");
    for (int k = 0; k < g.skeleton.num_edges(); ++k) {
        bond_kind[k] = one_hot_arg(g.edge_feats, k, "edge_feats");
        const double order = MolSpec::kBondOrder[bond_kind[k]];
        valence_sum[g.skeleton.edges[k][0]] += order;
        valence_sum[g.skeleton.edges[k][1]] += order;
    }
    for (int i = 0; i < g.skeleton.n; ++i) {
        const int t = one_hot_arg(g.node_feats, i, "node_feats");
        if (valence_sum[i] > spec.atoms[t].max_valence + 1e-9) return false;
    }
    const auto on_cycle = non_bridge_edges(g.skeleton);
    for (int k = 0; k < g.skeleton.num_edges(); ++k)
        if (bond_kind[k] == 3 && !on_cycle[k]) return false;  // acyclic aromatic bond
    return connected(g.skeleton);
}

std::uint64_t canonical_hash(const AnnotatedGraph& g) {
    const int n = g.skeleton.n;
    const auto deg = degrees(g.skeleton);
    const auto cycles = count_cycles(g.skeleton, {3, 4, 5, 6});

    std::vector<std::uint64_t> color(n);
    for (int i = 0; i < n; ++i) {
        std::uint64_t h = hash_row_quantized(g.node_feats, i);
        h = mix(h, static_cast<std::uint64_t>(deg[i]));
        for (int c = 0; c < cycles.cols(); ++c)
            h = mix(h, static_cast<std::uint64_t>(cycles(i, c)));
        color[i] = h;
    }

    std::vector<std::uint64_t> edge_label(g.skeleton.num_edges());
    for (int k = 0; k < g.skeleton.num_edges(); ++k)
        edge_label[k] = hash_row_quantized(g.edge_feats, k);

    std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbor, edge idx)
    for (int k = 0; k < g.skeleton.num_edges(); ++k) {
        adj[g.skeleton.edges[k][0]].push_back({g.skeleton.edges[k][1], k});
        adj[g.skeleton.edges[k][1]].push_back({g.skeleton.edges[k][0], k});
    }

    std::vector<std::uint64_t> next(n);
    for (int round = 0; round < n; ++round) {
        for (int i = 0; i < n; ++i) {
            std::vector<std::uint64_t> msgs;
            msgs.reserve(adj[i].size());
            for (auto [j, k] : adj[i]) msgs.push_back(mix(edge_label[k], color[j]));
            std::sort(msgs.begin(), msgs.end());
            std::uint64_t h = mix(0x2545f4914f6cdd1dULL, color[i]);
            for (auto m : msgs) h = mix(h, m);
            next[i] = h;
        }
        color.swap(next);
    }

    std::sort(color.begin(), color.end());
    std::uint64_t digest = mix(0x9e3779b97f4a7c15ULL, static_cast<std::uint64_t>(n));
    for (auto c : color) digest = mix(digest, c);
    return digest;
}

double js_distance_hist(const Eigen::VectorXd& p_in, const Eigen::VectorXd& q_in) {
    if (p_in.size() != q_in.size()) throw EvalError("jsd: histogram size mismatch");
    const double ps = p_in.sum(), qs = q_in.sum();
    if (ps <= 0 || qs <= 0) throw EvalError("jsd: empty histogram");
    bool overlap = false;
    for (int i = 0; i < p_in.size(); ++i)
        if (p_in[i] > 0 && q_in[i] > 0) overlap = true;
    if (!overlap) return 1.0;  // disjoint supports: distance is exactly 1

    double div = 0;
    for (int i = 0; i < p_in.size(); ++i) {
        const double p = p_in[i] / ps, q = q_in[i] / qs;
        const double m = 0.5 * (p + q);
        // evaluate the two terms in value order so jsd(p,q) == jsd(q,p)
        // bit-exactly, independent of fp contraction
        const double x = std::min(p, q), y = std::max(p, q);
        const double tx = x > 0 ? 0.5 * x * std::log2(x / m) : 0.0;
        const double ty = y > 0 ? 0.5 * y * std::log2(y / m) : 0.0;
        div += tx + ty;
    }
    div = std::max(0.0, std::min(1.0, div));
    return std::sqrt(div);
}

namespace {

std::pair<Eigen::VectorXd, Eigen::VectorXd> binned(const std::vector<double>& a,
                                                   const std::vector<double>& b, int bins) {
    if (a.empty() || b.empty()) throw EvalError("jsd: empty sample");
    double lo = a[0], hi = a[0];
    for (double v : a) { lo = std::min(lo, v); hi = std::max(hi, v); }
    for (double v : b) { lo = std::min(lo, v); hi = std::max(hi, v); }
    Eigen::VectorXd pa = Eigen::VectorXd::Zero(bins), pb = Eigen::VectorXd::Zero(bins);
    const double span = hi - lo;
    auto bin_of = [&](double v) {
        if (span <= 0) return 0;
        int k = static_cast<int>((v - lo) / span * bins);
        return std::min(k, bins - 1);
    };
    for (double v : a) pa[bin_of(v)] += 1;
    for (double v : b) pb[bin_of(v)] += 1;
    return {pa, pb};
}

}  // namespace

double js_distance_continuous(const std::vector<double>& a, const std::vector<double>& b,
                              int bins) {
    auto [pa, pb] = binned(a, b, bins);
    return js_distance_hist(pa, pb);
}

double js_distance_categorical(const std::vector<int>& a, const std::vector<int>& b, int ncat) {
    if (a.empty() || b.empty()) throw EvalError("jsd: empty sample");
    Eigen::VectorXd pa = Eigen::VectorXd::Zero(ncat), pb = Eigen::VectorXd::Zero(ncat);
    for (int v : a) pa[v] += 1;
    for (int v : b) pb[v] += 1;
    return js_distance_hist(pa, pb);
}

std::string histogram_csv(const std::vector<double>& a, const std::vector<double>& b, int bins) {
    double lo = a.empty() ? 0 : a[0], hi = lo;
    for (double v : a) { lo = std::min(lo, v); hi = std::max(hi, v); }
    for (double v : b) { lo = std::min(lo, v); hi = std::max(hi, v); }
    auto [pa, pb] = binned(a, b, bins);
    pa /= pa.sum();
    pb /= pb.sum();
    std::ostringstream os;
    os << "bin_lo,bin_hi,mass_a,mass_b\n";
    os.precision(12);
    const double w = (hi - lo) / bins;
    for (int k = 0; k < bins; ++k)
        os << lo + k * w << ',' << lo + (k + 1) * w << ',' << pa[k] << ',' << pb[k] << '\n';
    return os.str();
}

EvalReport score_samples(const std::vector<AnnotatedGraph>& generated,
                         const std::unordered_set<std::uint64_t>& training_hashes,
                         const ValenceModel& vm) {
    if (generated.empty()) throw EvalError("score_samples: no samples");
    EvalReport rep;
    rep.sample_size = static_cast<int>(generated.size());

    int valid = 0;
    std::unordered_map<std::uint64_t, int> valid_hashes;
    for (const auto& g : generated) {
        if (!is_valid(g, vm)) continue;
        ++valid;
        valid_hashes[canonical_hash(g)]++;
    }
    const double v_frac = static_cast<double>(valid) / rep.sample_size;
    rep.validity_pct = 100.0 * v_frac;
    if (valid == 0) {
        rep.degenerate = true;
        rep.uniqueness_pct = 0.0;
        rep.novelty_pct = 0.0;
        rep.overall_pct = 0.0;
        return rep;
    }
    const double u_frac = static_cast<double>(valid_hashes.size()) / valid;
    int novel = 0;
    for (const auto& [h, cnt] : valid_hashes)
        if (!training_hashes.count(h)) ++novel;
    const double n_frac = static_cast<double>(novel) / static_cast<double>(valid_hashes.size());
    rep.uniqueness_pct = 100.0 * u_frac;
    rep.novelty_pct = 100.0 * n_frac;
    rep.overall_pct = 100.0 * v_frac * u_frac * n_frac;
    return rep;
}

std::vector<double> connected_distance_distribution(const std::vector<AnnotatedGraph>& graphs) {
    std::vector<double> out;
    for (const auto& g : graphs) {
        if (g.node_feats.cols() < 2)
            throw EvalError("connected_distance_distribution: needs >= 2 node-feature coordinates");
        for (const auto& e : g.skeleton.edges) {
            const double dx = g.node_feats(e[0], 0) - g.node_feats(e[1], 0);
            const double dy = g.node_feats(e[0], 1) - g.node_feats(e[1], 1);
            out.push_back(std::sqrt(dx * dx + dy * dy));
        }
    }
    return out;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["sample_size"] = sample_size;
    j["reference_size"] = reference_size;
    if (validity_pct) {
        j["validity_pct"] = *validity_pct;
        j["uniqueness_pct"] = *uniqueness_pct;
        j["novelty_pct"] = *novelty_pct;
        j["overall_pct"] = *overall_pct;
        j["degenerate"] = degenerate;
    }
    nlohmann::json tbl = nlohmann::json::array();
    for (const auto& e : jsd) tbl.push_back({{"feature", e.feature}, {"jsd", e.distance}});
    j["jsd"] = std::move(tbl);
    return j.dump(2);
}

std::string EvalReport::to_csv() const {
    std::ostringstream os;
    os.precision(12);
    os << "metric,value\n";
    if (validity_pct) {
        os << "validity_pct," << *validity_pct << '\n';
        os << "uniqueness_pct," << *uniqueness_pct << '\n';
        os << "novelty_pct," << *novelty_pct << '\n';
        os << "overall_pct," << *overall_pct << '\n';
    }
    for (const auto& e : jsd) os << "jsd_" << e.feature << ',' << e.distance << '\n';
    return os.str();
}

SkeletonStudy fixed_skeleton_study(
    const std::function<std::vector<AnnotatedGraph>(const std::vector<Skeleton>&, std::uint64_t)>&
        generate,
    const std::vector<Skeleton>& skeletons, int n_samples, std::uint64_t seed,
    const ValenceModel& vm) {
    SkeletonStudy study;
    double sum_valid = 0, sum_unique = 0, sum_vu = 0;
    for (size_t si = 0; si < skeletons.size(); ++si) {
        std::vector<Skeleton> rep(n_samples, skeletons[si]);
        const auto samples = generate(rep, seed + si);
        int valid = 0;
        std::unordered_set<std::uint64_t> uniq;
        for (const auto& g : samples) {
            if (!is_valid(g, vm)) continue;
            ++valid;
            uniq.insert(canonical_hash(g));
        }
        SkeletonStudyRow row;
        row.skeleton_index = static_cast<int>(si);
        row.num_samples = n_samples;
        row.validity_pct = 100.0 * valid / n_samples;
        row.uniqueness_among_valid_pct = valid > 0 ? 100.0 * uniq.size() / valid : 100.0;
        study.rows.push_back(row);
        sum_valid += row.validity_pct;
        sum_unique += row.uniqueness_among_valid_pct;
        sum_vu += 1000.0 * static_cast<double>(uniq.size()) / n_samples;
    }
    const double k = static_cast<double>(skeletons.size());
    study.avg_validity_pct = sum_valid / k;
    study.avg_uniqueness_pct = sum_unique / k;
    study.valid_and_unique_per_mille = sum_vu / k;
    return study;
}

}  // namespace ganno
