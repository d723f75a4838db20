// Acceptance suite: runs every release criterion end to end and prints one
// PASS/FAIL line per criterion. Exits nonzero if any criterion fails.
//
// Criteria 10 and 11 share one desk-scale training run; the full suite is
// CPU-only and fits in about 40 minutes on one core.

#include <Eigen/SVD>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <unordered_map>
#include <unordered_set>

#include "ganno/eval.hpp"
#include "ganno/graph_json.hpp"
#include "ganno/synthdata.hpp"
#include "ganno/wgan.hpp"
#include "json.hpp"
#include "testutil.hpp"

using namespace ganno;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
double g_seconds = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    printf("[%s] criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", id, what.c_str(),
           detail.c_str());
    fflush(stdout);
    if (!ok) ++g_failures;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string fixture_path(const std::string& name) {
    for (const char* base : {"data", "../data", "../../data"}) {
        const fs::path p = fs::path(base) / name;
        if (fs::exists(p)) return p.string();
    }
    throw DataError("fixture not found: " + name + " (run from the repo or build tree)");
}

MatX<float> scaled_struct_feats(const Skeleton& s, const std::vector<int>& ks) {
    auto f = struct_features(s, ks);
    StructScaler sc;
    sc.mean = Eigen::VectorXd::Zero(f.dim());
    sc.stddev = Eigen::VectorXd::Ones(f.dim());
    return sc.apply(f).cast<float>();
}

// --- 1: equivariance / invariance ------------------------------------------

void criterion_1() {
    Timer timer;
    DatasetMeta meta;
    meta.node_dim = 4;
    meta.edge_dim = 4;
    meta.categorical = false;  // linear feature head: deviations are measurable
    meta.cycle_ks = {3, 4, 5, 6};
    ModelOptions opt;  // paper-scale: hidden 64, 6 generator steps, 3 critic steps
    auto [ng_cfg, nc_cfg] = phase_configs(Phase::Node, meta, opt);
    auto [eg_cfg, ec_cfg] = phase_configs(Phase::Edge, meta, opt);
    Rng init(42);
    auto ngen = Mpnn<float>::make(ng_cfg, init);
    auto egen = Mpnn<float>::make(eg_cfg, init);
    auto ncrit = Mpnn<float>::make(nc_cfg, init);
    auto ecrit = Mpnn<float>::make(ec_cfg, init);

    Rng rng(7);
    float worst = 0;
    for (int gi = 0; gi < 100; ++gi) {
        const int n = 3 + static_cast<int>(rng.below(10));  // n <= 12
        auto g = test::random_graph(n, 0.4, 4, 4, rng, true);
        auto batch = make_batch<float>(std::vector<AnnotatedGraph>{g});
        auto sf = scaled_struct_feats(g.skeleton, meta.cycle_ks);
        MatX<float> znode = sample_noise<float>(n, 32, rng);
        MatX<float> zedge = sample_noise<float>(g.skeleton.num_edges(), 32, rng);

        Tape<float> t0;
        auto b_ng = bind(t0, ngen, false, SnMode::Frozen);
        auto b_eg = bind(t0, egen, false, SnMode::Frozen);
        auto b_nc = bind(t0, ncrit, false, SnMode::Frozen);
        auto b_ec = bind(t0, ecrit, false, SnMode::Frozen);
        MatX<float> v0 = t0.val(generator_nodes(t0, b_ng, batch, znode, sf, nullptr));
        MatX<float> e0 = t0.val(generator_edges(t0, b_eg, batch, t0.constant(batch.node_feats),
                                                zedge, sf, nullptr));
        const float c_n0 = t0.val(critic_nodes(t0, b_nc, batch, t0.constant(batch.node_feats), sf))(0, 0);
        const float c_e0 = t0.val(critic_edges(t0, b_ec, batch, t0.constant(batch.node_feats),
                                               t0.constant(batch.edge_feats), sf))(0, 0);

        for (int pi = 0; pi < 10; ++pi) {
            auto p = Permutation::random(n, rng);
            auto gp = apply_permutation(g, p);
            auto bp = make_batch<float>(std::vector<AnnotatedGraph>{gp});
            auto sfp = scaled_struct_feats(gp.skeleton, meta.cycle_ks);
            // map node and edge noise along with the permutation
            MatX<float> znode_p = p.apply_rows(znode);
            MatX<float> zedge_p(zedge.rows(), zedge.cols());
            const Permutation inv = p.inverse();
            for (int k = 0; k < g.skeleton.num_edges(); ++k) {
                const auto& e = g.skeleton.edges[k];
                zedge_p.row(gp.skeleton.edge_index(inv.perm[e[0]], inv.perm[e[1]])) =
                    zedge.row(k);
            }

            Tape<float> t;
            auto p_ng = bind(t, ngen, false, SnMode::Frozen);
            auto p_eg = bind(t, egen, false, SnMode::Frozen);
            auto p_nc = bind(t, ncrit, false, SnMode::Frozen);
            auto p_ec = bind(t, ecrit, false, SnMode::Frozen);
            MatX<float> v1 = t.val(generator_nodes(t, p_ng, bp, znode_p, sfp, nullptr));
            MatX<float> e1 = t.val(generator_edges(t, p_eg, bp, t.constant(bp.node_feats),
                                                   zedge_p, sfp, nullptr));
            const float c_n1 = t.val(critic_nodes(t, p_nc, bp, t.constant(bp.node_feats), sfp))(0, 0);
            const float c_e1 = t.val(critic_edges(t, p_ec, bp, t.constant(bp.node_feats),
                                                  t.constant(bp.edge_feats), sfp))(0, 0);

            worst = std::max(worst, (v1 - p.apply_rows(v0)).cwiseAbs().maxCoeff());
            MatX<float> e0p(e0.rows(), e0.cols());
            for (int k = 0; k < g.skeleton.num_edges(); ++k) {
                const auto& e = g.skeleton.edges[k];
                e0p.row(gp.skeleton.edge_index(inv.perm[e[0]], inv.perm[e[1]])) = e0.row(k);
            }
            worst = std::max(worst, (e1 - e0p).cwiseAbs().maxCoeff());
            worst = std::max(worst, std::abs(c_n1 - c_n0));
            worst = std::max(worst, std::abs(c_e1 - c_e0));
        }
    }
    char buf[160];
    snprintf(buf, sizeof buf, "max abs deviation %.3g (tol 1e-5), %.1fs", static_cast<double>(worst),
             timer.seconds());
    report(1, worst <= 1e-5f && timer.seconds() < 60.0, "equivariance and invariance", buf);
}

// --- 2: end-to-end gradients -------------------------------------------------

void criterion_2() {
    Timer timer;
    DatasetMeta meta;
    meta.node_dim = 3;
    meta.edge_dim = 2;
    meta.categorical = false;
    meta.cycle_ks = {3, 4};
    ModelOptions opt;
    opt.hidden = 8;
    opt.noise_dim = 4;
    opt.gen_steps = 2;
    opt.critic_steps = 2;

    double worst = 0;
    long checked = 0;
    for (Phase phase : {Phase::Node, Phase::Edge}) {
        auto [gen_cfg, critic_cfg] = phase_configs(phase, meta, opt);
        Rng init(phase == Phase::Node ? 11 : 22);
        auto gen = Mpnn<double>::make(gen_cfg, init);
        auto critic = Mpnn<double>::make(critic_cfg, init);

        Rng rng(33);
        auto g1 = test::random_graph(5, 0.6, 3, 2, rng, true);
        auto g2 = test::random_graph(4, 0.6, 3, 2, rng, true);
        std::vector<AnnotatedGraph> gs{g1, g2};
        auto batch = make_batch<double>(gs);
        MatX<double> sf(batch.total_nodes, 3);
        sf << scaled_struct_feats(g1.skeleton, meta.cycle_ks).cast<double>(),
            scaled_struct_feats(g2.skeleton, meta.cycle_ks).cast<double>();
        const int rows = phase == Phase::Node ? batch.total_nodes : batch.total_edges;
        MatX<double> noise = sample_noise<double>(rows, 4, rng);

        auto loss_of = [&](Tape<double>& t, BoundMpnn<double>& bg, BoundMpnn<double>& bc) {
            if (phase == Phase::Node) {
                Var v = generator_nodes(t, bg, batch, noise, sf, nullptr);
                return t.mean_all(critic_nodes(t, bc, batch, v, sf));
            }
            Var vr = t.constant(batch.node_feats);
            Var e = generator_edges(t, bg, batch, vr, noise, sf, nullptr);
            return t.mean_all(critic_edges(t, bc, batch, vr, e, sf));
        };
        auto value = [&]() {
            Tape<double> t;
            auto bg = bind(t, gen, false, SnMode::Frozen);
            auto bc = bind(t, critic, false, SnMode::Frozen);
            return t.val(loss_of(t, bg, bc))(0, 0);
        };

        Tape<double> t;
        Binding<double> reg;
        auto bg = bind(t, gen, true, SnMode::Frozen, &reg);
        auto bc = bind(t, critic, true, SnMode::Frozen, &reg);
        t.backward(loss_of(t, bg, bc));

        const double step = 1e-5;
        for (auto& [param, var] : reg.entries) {
            MatX<double> analytic = t.grad(var);
            for (int r = 0; r < param->rows(); ++r)
                for (int c = 0; c < param->cols(); ++c) {
                    const double keep = (*param)(r, c);
                    (*param)(r, c) = keep + step;
                    const double fp = value();
                    (*param)(r, c) = keep - step;
                    const double fm = value();
                    (*param)(r, c) = keep;
                    const double numeric = (fp - fm) / (2 * step);
                    const double denom =
                        std::max({1.0, std::abs(numeric), std::abs(analytic(r, c))});
                    worst = std::max(worst, std::abs(numeric - analytic(r, c)) / denom);
                    ++checked;
                }
        }
    }
    char buf[160];
    snprintf(buf, sizeof buf, "max rel err %.3g over %ld params (tol 1e-4), %.1fs", worst,
             checked, timer.seconds());
    report(2, worst <= 1e-4 && timer.seconds() < 120.0, "end-to-end gradients vs finite differences",
           buf);
}

// --- 3: spectral normalization ----------------------------------------------

void criterion_3() {
    Timer timer;
    Rng rng(6);
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
        auto layer = Affine<double>::make(64, 64, rng, true);
        for (int i = 0; i < 64; ++i)
            for (int j = 0; j < 64; ++j) layer.w(i, j) = rng.uniform(-1, 1);
        layer.sn = SpectralState<double>::init(64, 64, rng);
        Tape<double> t;
        for (int i = 0; i < 50; ++i) (void)bind(t, layer, true, SnMode::Train);
        auto bl = bind(t, layer, false, SnMode::Frozen);
        Eigen::JacobiSVD<MatX<double>> svd(t.val(bl.w));
        worst = std::max(worst, std::abs(svd.singularValues()(0) - 1.0));
    }
    char buf[120];
    snprintf(buf, sizeof buf, "max |sigma-1| %.3g after 50 forwards (tol 1e-2), %.1fs", worst,
             timer.seconds());
    report(3, worst <= 1e-2, "spectral normalization vs SVD oracle", buf);
}

// --- 4: cycle counting --------------------------------------------------------

void criterion_4() {
    Timer timer;
    const std::vector<int> ks{3, 4, 5, 6};
    long graphs_checked = 0;
    bool ok = true;

    // exhaustive: every connected graph with n <= 7
    for (int n = 1; n <= 7 && ok; ++n) {
        std::vector<std::array<int, 2>> all_pairs;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) all_pairs.push_back({i, j});
        const long masks = 1L << all_pairs.size();
        for (long mask = 0; mask < masks && ok; ++mask) {
            std::vector<std::array<int, 2>> edges;
            for (size_t b = 0; b < all_pairs.size(); ++b)
                if (mask & (1L << b)) edges.push_back(all_pairs[b]);
            // connectivity
            std::vector<int> comp(n, -1);
            std::vector<int> stack{0};
            comp[0] = 0;
            std::vector<std::vector<int>> adj(n);
            for (auto& e : edges) {
                adj[e[0]].push_back(e[1]);
                adj[e[1]].push_back(e[0]);
            }
            int seen = 1;
            while (!stack.empty()) {
                int v = stack.back();
                stack.pop_back();
                for (int u : adj[v])
                    if (comp[u] < 0) {
                        comp[u] = 0;
                        ++seen;
                        stack.push_back(u);
                    }
            }
            if (seen != n) continue;
            Skeleton s;
            s.n = n;
            s.edges = std::move(edges);
            if (count_cycles(s, ks) != test::brute_force_cycle_counts(s, ks)) ok = false;
            ++graphs_checked;
        }
    }
    // random G(10, 0.3)
    Rng rng(99);
    for (int trial = 0; trial < 100 && ok; ++trial) {
        auto s = test::random_skeleton(10, 0.3, rng);
        if (count_cycles(s, ks) != test::brute_force_cycle_counts(s, ks)) ok = false;
        ++graphs_checked;
    }
    char buf[120];
    snprintf(buf, sizeof buf, "%ld graphs, exact match, %.1fs", graphs_checked, timer.seconds());
    report(4, ok, "cycle counts vs brute-force enumeration", buf);
}

// --- 5: JSD oracle -------------------------------------------------------------

void criterion_5() {
    Timer timer;
    auto oracle = [](Eigen::VectorXd p, Eigen::VectorXd q) {
        p /= p.sum();
        q /= q.sum();
        auto h = [](const Eigen::VectorXd& v) {
            double e = 0;
            for (int i = 0; i < v.size(); ++i)
                if (v[i] > 0) e -= v[i] * std::log2(v[i]);
            return e;
        };
        Eigen::VectorXd m = 0.5 * (p + q);
        return std::sqrt(std::max(0.0, h(m) - 0.5 * (h(p) + h(q))));
    };
    Rng rng(13);
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = 2 + static_cast<int>(rng.below(64));
        Eigen::VectorXd p(k), q(k);
        for (int i = 0; i < k; ++i) {
            p[i] = rng.uniform() < 0.25 ? 0.0 : rng.uniform();
            q[i] = rng.uniform() < 0.25 ? 0.0 : rng.uniform();
        }
        if (p.sum() == 0) p[0] = 1;
        if (q.sum() == 0) q[0] = 1;
        worst = std::max(worst, std::abs(js_distance_hist(p, q) - oracle(p, q)));
    }
    Eigen::VectorXd a(3), b(3), c(3);
    a << 2, 1, 0;
    b << 2, 1, 0;
    c << 0, 0, 5;
    const bool bounds = js_distance_hist(a, b) == 0.0 && js_distance_hist(a, c) == 1.0;
    char buf[120];
    snprintf(buf, sizeof buf, "max |impl-oracle| %.3g (tol 1e-12), boundaries exact: %s, %.1fs",
             worst, bounds ? "yes" : "no", timer.seconds());
    report(5, worst <= 1e-12 && bounds, "JSD vs closed-form oracle", buf);
}

// --- 6: canonical hash ---------------------------------------------------------

void criterion_6() {
    Timer timer;
    // permutation invariance on 1000 random pairs
    Rng rng(11);
    bool invariant = true;
    for (int trial = 0; trial < 1000; ++trial) {
        auto g = test::random_categorical_graph(3 + static_cast<int>(rng.below(8)), 0.4, 3, 2, rng);
        auto p = Permutation::random(g.skeleton.n, rng);
        if (canonical_hash(apply_permutation(g, p)) != canonical_hash(g)) invariant = false;
    }

    // exhaustive soundness on all <= 6-node 2-color graphs: hash-equal
    // objects must share a brute-force canonical form
    long objects = 0, wl_failure_pairs = 0;
    std::unordered_map<std::uint64_t, std::uint64_t> canon_of_hash;
    std::unordered_set<std::uint64_t> reported;
    for (int n = 1; n <= 6; ++n) {
        std::vector<std::array<int, 2>> all_pairs;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) all_pairs.push_back({i, j});
        // all permutations of n indices
        std::vector<std::vector<int>> perms;
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) idx[i] = i;
        do perms.push_back(idx);
        while (std::next_permutation(idx.begin(), idx.end()));

        const long masks = 1L << all_pairs.size();
        const long colorings = 1L << n;
        // pair -> bit index, shared by every mask of this n
        auto bit_of = [&](int i, int j) {
            if (i > j) std::swap(i, j);
            int at = 0;
            for (size_t b = 0; b < all_pairs.size(); ++b)
                if (all_pairs[b][0] == i && all_pairs[b][1] == j) at = static_cast<int>(b);
            return at;
        };
        std::vector<std::vector<int>> adjbit(n, std::vector<int>(n, 0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) adjbit[i][j] = bit_of(i, j);

        AnnotatedGraph g;
        for (long mask = 0; mask < masks; ++mask) {
            std::vector<std::array<int, 2>> edges;
            for (size_t b = 0; b < all_pairs.size(); ++b)
                if (mask & (1L << b)) edges.push_back(all_pairs[b]);
            Skeleton skel;
            skel.n = n;
            skel.edges = edges;

            for (long colors = 0; colors < colorings; ++colors) {
                g.skeleton = skel;
                g.node_feats.resize(n, 1);
                for (int i = 0; i < n; ++i) g.node_feats(i, 0) = (colors >> i) & 1;
                g.edge_feats = Eigen::MatrixXd::Zero(static_cast<int>(edges.size()), 1);
                const std::uint64_t h = canonical_hash(g);

                // brute-force canonical form over all n! relabelings
                std::uint64_t canon = ~0ULL;
                for (const auto& perm : perms) {
                    std::uint64_t code = 0;
                    for (const auto& e : edges)
                        code |= 1ULL << adjbit[perm[e[0]]][perm[e[1]]];
                    for (int i = 0; i < n; ++i)
                        if ((colors >> i) & 1) code |= 1ULL << (15 + perm[i]);
                    canon = std::min(canon, code);
                }
                canon |= static_cast<std::uint64_t>(n) << 32;

                auto [it, inserted] = canon_of_hash.try_emplace(h, canon);
                if (!inserted && it->second != canon && reported.insert(h).second)
                    ++wl_failure_pairs;
                ++objects;
            }
        }
    }
    char buf[160];
    snprintf(buf, sizeof buf,
             "invariance on 1000 pairs: %s; %ld objects, %ld non-isomorphic hash collisions, %.1fs",
             invariant ? "ok" : "violated", objects, wl_failure_pairs, timer.seconds());
    report(6, invariant && wl_failure_pairs == 0, "canonical hash soundness", buf);
}

// --- 7: SMILES round-trip vs the frozen independent-tool fixture ---------------

void criterion_7() {
    Timer timer;
    const MolSpec spec = MolSpec::qm9();
    std::ifstream is(fixture_path("qm9_like_counts.json"));
    nlohmann::json fixture = nlohmann::json::parse(is);
    const auto& mols = fixture.at("molecules");

    int agree = 0, roundtrip = 0, total = 0;
    const char* bond_names[4] = {"single", "double", "triple", "aromatic"};
    for (const auto& m : mols) {
        ++total;
        const std::string smi = m.at("smiles").get<std::string>();
        auto g = parse_smiles(smi, spec);

        // atom/bond counts must match the independent implementation
        bool ok = g.skeleton.n == m.at("n_atoms").get<int>() &&
                  g.skeleton.num_edges() == m.at("n_bonds").get<int>();
        std::map<std::string, int> atoms, bonds;
        for (int i = 0; i < g.skeleton.n; ++i)
            for (int c = 0; c < spec.atom_dim(); ++c)
                if (g.node_feats(i, c) == 1.0) atoms[spec.atoms[c].symbol]++;
        for (int k = 0; k < g.skeleton.num_edges(); ++k)
            for (int c = 0; c < 4; ++c)
                if (g.edge_feats(k, c) == 1.0) bonds[bond_names[c]]++;
        for (auto& [sym, cnt] : m.at("atoms").items()) ok = ok && atoms[sym] == cnt.get<int>();
        for (auto& [sym, cnt] : m.at("bonds").items()) ok = ok && bonds[sym] == cnt.get<int>();
        if (static_cast<int>(atoms.size()) != static_cast<int>(m.at("atoms").size())) ok = false;
        if (ok) ++agree;

        // write -> parse is isomorphism-preserving
        auto back = parse_smiles(write_smiles(g, spec), spec);
        bool iso = canonical_hash(back) == canonical_hash(g);
        if (iso && g.skeleton.n <= 7) iso = test::isomorphic(g, back);
        if (iso) ++roundtrip;
    }
    char buf[160];
    snprintf(buf, sizeof buf, "%d/%d tool agreement, %d/%d round-trips, %.1fs", agree, total,
             roundtrip, total, timer.seconds());
    report(7, agree == total && roundtrip == total && total >= 500,
           "SMILES parser vs independent tool + round-trip", buf);
}

// --- 8: Gumbel-ST --------------------------------------------------------------

void criterion_8() {
    Timer timer;
    Rng rng(8);
    MatX<double> logits(1, 4);
    logits << 0.7, -0.2, 0.1, 1.1;
    Eigen::Array4d p = logits.row(0).array().exp();
    p /= p.sum();

    const int draws = 100000;
    Tape<double> t;
    Var big = t.gumbel_softmax_st(t.constant(MatX<double>(logits.replicate(draws, 1))), 1.0, &rng);
    const MatX<double>& v = t.val(big);
    bool onehot = true;
    for (int r = 0; r < v.rows(); ++r)
        if (v.row(r).sum() != 1.0 || v.row(r).maxCoeff() != 1.0) onehot = false;
    Eigen::Array4d freq = v.colwise().sum().array() / draws;
    const double dev = (freq - p).abs().maxCoeff();
    char buf[120];
    snprintf(buf, sizeof buf, "one-hot: %s, max |freq-p| %.4f (tol 0.02), %.1fs",
             onehot ? "always" : "violated", dev, timer.seconds());
    report(8, onehot && dev < 0.02, "straight-through Gumbel-Softmax", buf);
}

// --- shared desk-scale helpers --------------------------------------------------

Dataset prepare_corpus(const fs::path& run_dir, const std::string& smi_path, std::uint64_t seed) {
    DatasetConfig cfg;
    cfg.format = DatasetFormat::Smiles;
    cfg.path = smi_path;
    cfg.vocab = "qm9";
    cfg.seed = seed;
    Dataset ds = prepare_dataset(cfg);
    save_cache(ds, (run_dir / "caches").string());
    return ds;
}

ModelOptions paper_model() {
    ModelOptions opt;
    opt.variant = NodeUpdateVariant::SumOfMlps;  // the small-molecule variant
    return opt;
}

/// Trains one phase in-process and returns the trainer (checkpoints written
/// under dir).
template <class S>
PhaseTrainer<S> train_phase(Phase phase, const Dataset& ds, const ModelOptions& opt,
                            const TrainSettings& settings, const fs::path& dir) {
    auto [gen_cfg, critic_cfg] = phase_configs(phase, ds.meta, opt);
    PhaseTrainer<S> trainer(phase, ds, gen_cfg, critic_cfg, settings);
    fs::create_directories(dir);
    trainer.run(dir.string(), (dir / "loss.csv").string());
    trainer.save_checkpoint((dir / "latest.ckpt").string());
    return trainer;
}

Eigen::VectorXd marginal(const std::vector<AnnotatedGraph>& gs, bool nodes, int dim) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(dim);
    for (const auto& g : gs) {
        const Eigen::MatrixXd& f = nodes ? g.node_feats : g.edge_feats;
        for (int r = 0; r < f.rows(); ++r) {
            int c = 0;
            f.row(r).maxCoeff(&c);
            m[c] += 1;
        }
    }
    const double s = m.sum();
    if (s > 0) m /= s;
    return m;
}

// --- 9: overfit oracle ----------------------------------------------------------

void criterion_9(const fs::path& work) {
    Timer timer;
    const fs::path dir = work / "overfit";
    fs::create_directories(dir);
    {
        std::ofstream os(dir / "one.smi");
        os << "CC(=O)NCO\n";
    }
    DatasetConfig dcfg;
    dcfg.format = DatasetFormat::Smiles;
    dcfg.path = (dir / "one.smi").string();
    dcfg.vocab = "qm9";
    dcfg.split = {1.0, 0.0, 0.0};
    dcfg.seed = 99;
    Dataset ds = prepare_dataset(dcfg);

    TrainSettings ts;
    ts.batch_size = 16;
    ts.n_critic = 2;
    ts.total_steps = 2000;
    ts.lr = 1e-4;
    ts.seed = 99;
    ts.ckpt_every = 1000;
    ts.val_batches = 1;

    ModelOptions opt = paper_model();
    auto node_tr = train_phase<float>(Phase::Node, ds, opt, ts, dir / "node");
    auto edge_tr = train_phase<float>(Phase::Edge, ds, opt, ts, dir / "edge");

    auto [ng_cfg, nc_cfg] = phase_configs(Phase::Node, ds.meta, opt);
    auto [eg_cfg, ec_cfg] = phase_configs(Phase::Edge, ds.meta, opt);
    auto pipe = Pipeline<float>::from_checkpoints((dir / "node/latest.ckpt").string(),
                                                  (dir / "edge/latest.ckpt").string(), ds, ng_cfg,
                                                  eg_cfg);
    std::vector<Skeleton> sks(400, ds.graphs[0].skeleton);
    auto gen = pipe.generate(sks, 4242);

    const auto ref_nodes = marginal({ds.graphs[0]}, true, 4);
    const auto ref_edges = marginal({ds.graphs[0]}, false, 4);
    const auto gen_nodes = marginal(gen, true, 4);
    const auto gen_edges = marginal(gen, false, 4);
    const double tv_nodes = 0.5 * (ref_nodes - gen_nodes).cwiseAbs().sum();
    const double tv_edges = 0.5 * (ref_edges - gen_edges).cwiseAbs().sum();

    char buf[160];
    snprintf(buf, sizeof buf, "node TV %.4f, edge TV %.4f (tol 0.05), %.0fs", tv_nodes, tv_edges,
             timer.seconds());
    report(9, tv_nodes <= 0.05 && tv_edges <= 0.05 && timer.seconds() < 600.0,
           "single-molecule overfit marginals", buf);
}

// --- 10 & 11: desk-scale corpus run ----------------------------------------------

void criteria_10_11(const fs::path& work) {
    Timer timer;
    const fs::path dir = work / "smoke";
    fs::create_directories(dir);
    Dataset ds = prepare_corpus(dir, fixture_path("qm9_like.smi"), 1234);

    // desk-scale settings: single-core budget; batch and n_critic are
    // config knobs, the step count is pinned at 20k
    TrainSettings ts;
    ts.batch_size = 32;
    ts.n_critic = 2;
    ts.total_steps = 20000;
    ts.lr = 1e-4;
    ts.seed = 1234;
    ts.ckpt_every = 2000;
    ts.val_batches = 2;

    ModelOptions opt = paper_model();
    {
        auto tr_node = train_phase<float>(Phase::Node, ds, opt, ts, dir / "node");
        auto tr_edge = train_phase<float>(Phase::Edge, ds, opt, ts, dir / "edge");
    }

    auto [ng_cfg, nc_cfg] = phase_configs(Phase::Node, ds.meta, opt);
    auto [eg_cfg, ec_cfg] = phase_configs(Phase::Edge, ds.meta, opt);
    auto pick = [](const fs::path& d) {
        return fs::exists(d / "best.ckpt") ? (d / "best.ckpt").string()
                                           : (d / "latest.ckpt").string();
    };
    auto pipe = Pipeline<float>::from_checkpoints(pick(dir / "node"), pick(dir / "edge"), ds,
                                                  ng_cfg, eg_cfg);

    auto train_ptrs = ds.split_graphs(ds.meta.train_idx);
    auto skeletons = sample_skeletons(train_ptrs, 1000, 777);
    auto generated = pipe.generate(skeletons, 778);

    const ValenceModel vm = ValenceModel::from(MolSpec::qm9());
    std::unordered_set<std::uint64_t> train_hashes;
    for (auto* g : train_ptrs) train_hashes.insert(canonical_hash(*g));
    EvalReport rep = score_samples(generated, train_hashes, vm);

    std::vector<int> gen_nodes, ref_nodes;
    for (const auto& g : generated)
        for (int r = 0; r < g.node_feats.rows(); ++r) {
            int c = 0;
            g.node_feats.row(r).maxCoeff(&c);
            gen_nodes.push_back(c);
        }
    for (auto* g : train_ptrs)
        for (int r = 0; r < g->node_feats.rows(); ++r) {
            int c = 0;
            g->node_feats.row(r).maxCoeff(&c);
            ref_nodes.push_back(c);
        }
    const double node_jsd = js_distance_categorical(ref_nodes, gen_nodes, 4);

    const double minutes = timer.seconds() / 60.0;
    char buf[200];
    snprintf(buf, sizeof buf,
             "validity %.1f%% (>=30), uniqueness %.1f%% (>=80), node JSD %.4f (<=0.05), %.0f min",
             *rep.validity_pct, *rep.uniqueness_pct, node_jsd, minutes);
    report(10,
           *rep.validity_pct >= 30.0 && *rep.uniqueness_pct >= 80.0 && node_jsd <= 0.05 &&
               minutes <= 60.0,
           "desk-scale corpus smoke", buf);

    // 11: fixed-skeleton study on the same model
    Timer t11;
    auto study_sks = sample_skeletons(train_ptrs, 10, 13579);
    bool skeletons_identical = true;
    auto study = fixed_skeleton_study(
        [&](const std::vector<Skeleton>& sks, std::uint64_t seed) {
            auto out = pipe.generate(sks, seed);
            for (size_t i = 0; i < out.size(); ++i)
                if (!(out[i].skeleton == sks[i])) skeletons_identical = false;
            return out;
        },
        study_sks, 100, 2468, vm);
    char buf2[200];
    snprintf(buf2, sizeof buf2,
             "avg uniqueness among valid %.1f%% (>=50), avg validity %.1f%%, skeletons identical: %s, %.0fs",
             study.avg_uniqueness_pct, study.avg_validity_pct,
             skeletons_identical ? "yes" : "NO", t11.seconds());
    report(11, study.avg_uniqueness_pct >= 50.0 && skeletons_identical,
           "fixed-skeleton conditional generation", buf2);
}

// --- 12: continuous-data self-baseline -------------------------------------------

void criterion_12(const fs::path& work) {
    Timer timer;
    const fs::path dir = work / "fp";
    write_synth_fingerprint((dir / "raw").string(), 30000, 7);
    DatasetConfig cfg;
    cfg.format = DatasetFormat::TuDataset;
    cfg.path = (dir / "raw").string();
    cfg.seed = 7;
    Dataset ds = prepare_dataset(cfg);

    std::vector<AnnotatedGraph> half_a, half_b;
    for (size_t i = 0; i < ds.graphs.size(); ++i)
        (i % 2 == 0 ? half_a : half_b).push_back(ds.graphs[i]);

    auto column = [](const std::vector<AnnotatedGraph>& gs, bool nodes, int col) {
        std::vector<double> out;
        for (const auto& g : gs) {
            const Eigen::MatrixXd& m = nodes ? g.node_feats : g.edge_feats;
            for (int r = 0; r < m.rows(); ++r) out.push_back(m(r, col));
        }
        return out;
    };

    double worst = 0;
    std::string parts;
    for (int c = 0; c < 2; ++c) {
        const double j = js_distance_continuous(column(half_a, true, c), column(half_b, true, c));
        parts += "v" + std::to_string(c + 1) + "=" + std::to_string(j).substr(0, 6) + " ";
        worst = std::max(worst, j);
    }
    for (int c = 0; c < 2; ++c) {
        const double j = js_distance_continuous(column(half_a, false, c), column(half_b, false, c));
        parts += "e" + std::to_string(c + 1) + "=" + std::to_string(j).substr(0, 6) + " ";
        worst = std::max(worst, j);
    }
    {
        const double j = js_distance_continuous(connected_distance_distribution(half_a),
                                                connected_distance_distribution(half_b));
        parts += "d=" + std::to_string(j).substr(0, 6);
        worst = std::max(worst, j);
    }
    char buf[200];
    snprintf(buf, sizeof buf, "%s, max %.4f (tol 0.03), 200 bins, %.0fs", parts.c_str(), worst,
             timer.seconds());
    report(12, worst <= 0.03, "continuous-data split self-baseline", buf);
}

}  // namespace

int main(int argc, char** argv) {
    // optional single-criterion filter: acceptance [N]
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);

    const fs::path work = fs::temp_directory_path() / "ganno_acceptance";
    fs::create_directories(work);

    Timer total;
    auto want = [&](int id) { return only == 0 || only == id; };
    if (want(1)) criterion_1();
    if (want(2)) criterion_2();
    if (want(3)) criterion_3();
    if (want(4)) criterion_4();
    if (want(5)) criterion_5();
    if (want(6)) criterion_6();
    if (want(7)) criterion_7();
    if (want(8)) criterion_8();
    if (want(9)) criterion_9(work);
    if (want(10) || want(11)) criteria_10_11(work);
    if (want(12)) criterion_12(work);

    printf("%s: %d failure(s), %.1f min total\n", g_failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED",
           g_failures, total.seconds() / 60.0);
    return g_failures == 0 ? 0 : 1;
}
