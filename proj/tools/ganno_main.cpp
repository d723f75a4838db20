// Command-line front end: prepare | train | generate | evaluate over a
// single run-directory convention (config echo, caches/, ckpts/, logs/,
// reports/). Exit codes: 0 ok, 1 usage, 2 data error, 3 training divergence.

#include <CLI11.hpp>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "ganno/eval.hpp"
#include "ganno/graph_json.hpp"
#include "ganno/wgan.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ganno;

namespace {

struct RunConfig {
    DatasetConfig dataset;
    ModelOptions model;
    TrainSettings train;
    int eval_bins = 200;
    int eval_count = 1000;
    int study_skeletons = 10;
    int study_samples = 100;
    std::uint64_t seed = 0;
    json raw;  // merged document, echoed into the run dir

    static RunConfig load(const std::string& path, std::optional<std::uint64_t> seed_override) {
        std::ifstream is(path);
        if (!is) throw DataError("config: cannot open " + path);
        json j;
        try {
            j = json::parse(is);
        } catch (const json::exception& e) {
            throw DataError(std::string("config: malformed JSON: ") + e.what());
        }
        RunConfig c;
        const json& d = j.at("dataset");
        const std::string fmt = d.at("format").get<std::string>();
        if (fmt == "smiles")
            c.dataset.format = DatasetFormat::Smiles;
        else if (fmt == "tudataset")
            c.dataset.format = DatasetFormat::TuDataset;
        else if (fmt == "json")
            c.dataset.format = DatasetFormat::Json;
        else
            throw DataError("config: unknown dataset.format: " + fmt);
        c.dataset.path = d.at("path").get<std::string>();
        if (d.contains("vocab")) c.dataset.vocab = d["vocab"].get<std::string>();
        if (d.contains("split")) c.dataset.split = d["split"].get<std::vector<double>>();
        if (d.contains("rescale")) {
            auto r = d["rescale"].get<std::vector<double>>();
            if (r.size() != 2) throw DataError("config: dataset.rescale needs [lo, hi]");
            c.dataset.rescale_lo = r[0];
            c.dataset.rescale_hi = r[1];
        }
        if (d.contains("cycle_ks")) c.dataset.cycle_ks = d["cycle_ks"].get<std::vector<int>>();

        if (j.contains("model")) {
            const json& m = j["model"];
            if (m.contains("hidden")) c.model.hidden = m["hidden"].get<int>();
            if (m.contains("noise_dim")) c.model.noise_dim = m["noise_dim"].get<int>();
            if (m.contains("gen_steps")) c.model.gen_steps = m["gen_steps"].get<int>();
            if (m.contains("critic_steps")) c.model.critic_steps = m["critic_steps"].get<int>();
            if (m.contains("node_update")) {
                const auto v = m["node_update"].get<std::string>();
                if (v == "concat")
                    c.model.variant = NodeUpdateVariant::Concat;
                else if (v == "sum_of_mlps")
                    c.model.variant = NodeUpdateVariant::SumOfMlps;
                else
                    throw DataError("config: model.node_update must be concat|sum_of_mlps");
            }
            if (m.contains("skip_connections"))
                c.model.skip_connections = m["skip_connections"].get<bool>();
            if (m.contains("tau")) c.model.tau = m["tau"].get<double>();
        }
        if (j.contains("train")) {
            const json& t = j["train"];
            if (t.contains("batch_size")) c.train.batch_size = t["batch_size"].get<int>();
            if (t.contains("n_critic")) c.train.n_critic = t["n_critic"].get<int>();
            if (t.contains("total_steps")) c.train.total_steps = t["total_steps"].get<long>();
            if (t.contains("lr")) c.train.lr = t["lr"].get<double>();
            if (t.contains("beta1")) c.train.beta1 = t["beta1"].get<double>();
            if (t.contains("beta2")) c.train.beta2 = t["beta2"].get<double>();
            if (t.contains("ckpt_every")) c.train.ckpt_every = t["ckpt_every"].get<long>();
            if (t.contains("val_batches")) c.train.val_batches = t["val_batches"].get<int>();
        }
        if (j.contains("eval")) {
            const json& e = j["eval"];
            if (e.contains("bins")) c.eval_bins = e["bins"].get<int>();
            if (e.contains("count")) c.eval_count = e["count"].get<int>();
            if (e.contains("study_skeletons")) c.study_skeletons = e["study_skeletons"].get<int>();
            if (e.contains("study_samples")) c.study_samples = e["study_samples"].get<int>();
        }
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (seed_override) c.seed = *seed_override;
        c.dataset.seed = c.seed;
        c.train.seed = c.seed;
        j["seed"] = c.seed;
        c.raw = std::move(j);
        return c;
    }
};

/// Exclusive lock on a run directory, released on destruction.
class RunLock {
public:
    explicit RunLock(const fs::path& dir) : path_(dir / ".lock") {
        fs::create_directories(dir);
        if (fs::exists(path_))
            throw DataError("run directory is locked by another command (" + path_.string() +
                            "); remove the stale lock if no command is running");
        std::ofstream os(path_);
        os << ::getpid() << '\n';
    }
    ~RunLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }

private:
    fs::path path_;
};

void echo_config(const RunConfig& cfg, const fs::path& run_dir) {
    std::ofstream os(run_dir / "config.json");
    os << cfg.raw.dump(2) << '\n';
}

Dataset load_run_dataset(const fs::path& run_dir) {
    const fs::path cache = run_dir / "caches";
    if (!fs::exists(cache / "meta.json"))
        throw DataError("no dataset cache in " + cache.string() + "; run `prepare` first");
    return load_cache(cache.string());
}

int cmd_prepare(const RunConfig& cfg, const fs::path& run_dir) {
    Dataset ds = prepare_dataset(cfg.dataset);
    save_cache(ds, (run_dir / "caches").string());
    echo_config(cfg, run_dir);
    int edgeless = 0;
    for (const auto& g : ds.graphs)
        if (g.num_edges() == 0) ++edgeless;
    std::cout << "prepared " << ds.graphs.size() << " graphs"
              << " (filtered " << ds.meta.filtered_invalid << " valence-invalid)\n"
              << "splits: train " << ds.meta.train_idx.size() << ", val "
              << ds.meta.val_idx.size() << ", test " << ds.meta.test_idx.size() << "\n"
              << "edgeless graphs: " << edgeless << "\n"
              << "cache: " << (run_dir / "caches").string() << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg, const fs::path& run_dir, const std::string& phase_str,
              std::optional<long> steps_override) {
    const Phase phase = phase_str == "edge" ? Phase::Edge : Phase::Node;
    Dataset ds = load_run_dataset(run_dir);
    TrainSettings settings = cfg.train;
    if (steps_override) settings.total_steps = *steps_override;

    auto [gen_cfg, critic_cfg] = phase_configs(phase, ds.meta, cfg.model);
    PhaseTrainer<float> trainer(phase, ds, gen_cfg, critic_cfg, settings);

    const fs::path ckpt_dir = run_dir / "ckpts" / phase_str;
    const fs::path log_dir = run_dir / "logs";
    fs::create_directories(ckpt_dir);
    fs::create_directories(log_dir);
    const fs::path latest = ckpt_dir / "latest.ckpt";
    if (fs::exists(latest)) {
        trainer.load_checkpoint(latest.string());
        std::cout << "resuming " << phase_str << " phase from step " << trainer.step() << "\n";
    }
    echo_config(cfg, run_dir);
    trainer.run(ckpt_dir.string(), (log_dir / ("loss_" + phase_str + ".csv")).string());
    trainer.save_checkpoint(latest.string());
    std::cout << "trained " << phase_str << " phase to step " << trainer.step() << "\n";
    return 0;
}

/// best.ckpt (validation-selected) when present, latest.ckpt otherwise.
fs::path preferred_ckpt(const fs::path& phase_dir) {
    const fs::path best = phase_dir / "best.ckpt";
    return fs::exists(best) ? best : phase_dir / "latest.ckpt";
}

Pipeline<float> load_pipeline(const RunConfig& cfg, const fs::path& run_dir, const Dataset& ds) {
    auto [ng_cfg, nc_cfg] = phase_configs(Phase::Node, ds.meta, cfg.model);
    auto [eg_cfg, ec_cfg] = phase_configs(Phase::Edge, ds.meta, cfg.model);
    const fs::path node_ckpt = preferred_ckpt(run_dir / "ckpts/node");
    const fs::path edge_ckpt = preferred_ckpt(run_dir / "ckpts/edge");
    if (!fs::exists(node_ckpt) || !fs::exists(edge_ckpt))
        throw DataError("both phase checkpoints are required (run `train --phase node` and "
                        "`train --phase edge`)");
    return Pipeline<float>::from_checkpoints(node_ckpt.string(), edge_ckpt.string(), ds, ng_cfg,
                                             eg_cfg);
}

int cmd_generate(const RunConfig& cfg, const fs::path& run_dir, const std::string& skeleton_src,
                 int count, const std::string& out_path) {
    Dataset ds = load_run_dataset(run_dir);
    auto pipeline = load_pipeline(cfg, run_dir, ds);

    std::vector<Skeleton> skeletons;
    if (skeleton_src == "sample") {
        skeletons = sample_skeletons(ds.split_graphs(ds.meta.train_idx), count, cfg.seed ^ 0x5ce1ULL);
    } else {
        auto graphs = read_ndjson_file(skeleton_src, true);
        if (graphs.empty()) throw DataError("skeleton file is empty: " + skeleton_src);
        for (int i = 0; i < count; ++i)
            skeletons.push_back(graphs[i % graphs.size()].skeleton);
    }

    auto generated = pipeline.generate(skeletons, cfg.seed ^ 0x9e27ULL);
    const fs::path out = out_path.empty() ? run_dir / "generated.ndjson" : fs::path(out_path);
    write_ndjson_file(out.string(), generated);
    std::cout << "generated " << generated.size() << " graphs -> " << out.string() << "\n";

    if (ds.meta.categorical) {
        const MolSpec spec = ds.mol_spec();
        const ValenceModel vm = ValenceModel::from(spec);
        std::ofstream smi(out.string() + ".smi");
        int valid = 0;
        for (const auto& g : generated) {
            if (!is_valid(g, vm)) continue;
            smi << write_smiles(g, spec) << '\n';
            ++valid;
        }
        std::cout << "valid molecules: " << valid << " -> " << out.string() << ".smi\n";
    }
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, const fs::path& run_dir, const std::string& generated_path,
                 bool run_study) {
    Dataset ds = load_run_dataset(run_dir);
    const fs::path reports = run_dir / "reports";
    fs::create_directories(reports);

    if (run_study) {
        auto pipeline = load_pipeline(cfg, run_dir, ds);
        auto skeletons =
            sample_skeletons(ds.split_graphs(ds.meta.train_idx), cfg.study_skeletons, cfg.seed ^ 0x57ULL);
        const ValenceModel vm = ValenceModel::from(ds.mol_spec());
        auto study = fixed_skeleton_study(
            [&](const std::vector<Skeleton>& sks, std::uint64_t seed) {
                return pipeline.generate(sks, seed);
            },
            skeletons, cfg.study_samples, cfg.seed ^ 0x575ULL, vm);
        json j;
        j["avg_validity_pct"] = study.avg_validity_pct;
        j["avg_uniqueness_pct"] = study.avg_uniqueness_pct;
        j["valid_and_unique_per_mille"] = study.valid_and_unique_per_mille;
        json rows = json::array();
        for (const auto& r : study.rows)
            rows.push_back({{"skeleton", r.skeleton_index},
                            {"validity_pct", r.validity_pct},
                            {"uniqueness_among_valid_pct", r.uniqueness_among_valid_pct}});
        j["per_skeleton"] = rows;
        std::ofstream os(reports / "fixed_skeleton_study.json");
        os << j.dump(2) << '\n';
        std::cout << "fixed-skeleton study: validity " << study.avg_validity_pct
                  << "%, uniqueness " << study.avg_uniqueness_pct << "% -> "
                  << (reports / "fixed_skeleton_study.json").string() << "\n";
        return 0;
    }

    if (generated_path.empty()) throw DataError("evaluate: --generated FILE is required");
    auto generated = read_ndjson_file(generated_path);
    if (generated.empty()) throw DataError("evaluate: no generated graphs in " + generated_path);
    for (auto& g : generated) {
        if (g.node_feats.rows() == 0) g.node_feats.resize(0, ds.meta.node_dim);
        if (g.edge_feats.rows() == 0) g.edge_feats.resize(0, ds.meta.edge_dim);
    }

    auto ref_ptrs = ds.split_graphs(ds.meta.train_idx);
    EvalReport rep;
    rep.sample_size = static_cast<int>(generated.size());
    rep.reference_size = static_cast<int>(ref_ptrs.size());

    if (ds.meta.categorical) {
        if (generated[0].node_dim() != ds.meta.node_dim ||
            generated[0].edge_dim() != ds.meta.edge_dim)
            throw DataError("evaluate: generated feature widths do not match the dataset vocab");
        const ValenceModel vm = ValenceModel::from(ds.mol_spec());
        std::unordered_set<std::uint64_t> train_hashes;
        for (auto* g : ref_ptrs) train_hashes.insert(canonical_hash(*g));
        rep = score_samples(generated, train_hashes, vm);
        rep.sample_size = static_cast<int>(generated.size());
        rep.reference_size = static_cast<int>(ref_ptrs.size());

        auto cat_of = [](const Eigen::MatrixXd& m, int r) {
            int c = 0;
            m.row(r).maxCoeff(&c);
            return c;
        };
        std::vector<int> gen_nodes, ref_nodes, gen_edges, ref_edges;
        for (const auto& g : generated) {
            for (int r = 0; r < g.node_feats.rows(); ++r) gen_nodes.push_back(cat_of(g.node_feats, r));
            for (int r = 0; r < g.edge_feats.rows(); ++r) gen_edges.push_back(cat_of(g.edge_feats, r));
        }
        for (auto* g : ref_ptrs) {
            for (int r = 0; r < g->node_feats.rows(); ++r) ref_nodes.push_back(cat_of(g->node_feats, r));
            for (int r = 0; r < g->edge_feats.rows(); ++r) ref_edges.push_back(cat_of(g->edge_feats, r));
        }
        rep.jsd.push_back({"node_type", js_distance_categorical(ref_nodes, gen_nodes, ds.meta.node_dim)});
        if (!gen_edges.empty() && !ref_edges.empty())
            rep.jsd.push_back({"edge_type", js_distance_categorical(ref_edges, gen_edges, ds.meta.edge_dim)});
        auto write_cat_hist = [&](const std::string& name, const std::vector<int>& ref,
                                  const std::vector<int>& gen, int ncat) {
            std::ofstream os(reports / ("hist_" + name + ".csv"));
            os << "category,mass_reference,mass_generated\n";
            Eigen::VectorXd pr = Eigen::VectorXd::Zero(ncat), pg = Eigen::VectorXd::Zero(ncat);
            for (int v : ref) pr[v] += 1;
            for (int v : gen) pg[v] += 1;
            pr /= pr.sum();
            pg /= pg.sum();
            for (int c = 0; c < ncat; ++c) os << c << ',' << pr[c] << ',' << pg[c] << '\n';
        };
        write_cat_hist("node_type", ref_nodes, gen_nodes, ds.meta.node_dim);
        if (!gen_edges.empty() && !ref_edges.empty())
            write_cat_hist("edge_type", ref_edges, gen_edges, ds.meta.edge_dim);
    } else {
        // continuous features: per-column JSD plus the connected-node distance
        auto column = [](const std::vector<const AnnotatedGraph*>& gs, bool node, int col) {
            std::vector<double> out;
            for (auto* g : gs) {
                const Eigen::MatrixXd& m = node ? g->node_feats : g->edge_feats;
                for (int r = 0; r < m.rows(); ++r) out.push_back(m(r, col));
            }
            return out;
        };
        std::vector<const AnnotatedGraph*> gen_ptrs;
        for (const auto& g : generated) gen_ptrs.push_back(&g);
        // reference cache holds rescaled features; map back to data units
        std::vector<AnnotatedGraph> ref_raw;
        for (auto* g : ref_ptrs) {
            AnnotatedGraph copy = *g;
            ds.inverse_rescale(copy);
            ref_raw.push_back(std::move(copy));
        }
        std::vector<const AnnotatedGraph*> ref_raw_ptrs;
        for (const auto& g : ref_raw) ref_raw_ptrs.push_back(&g);

        for (int c = 0; c < ds.meta.node_dim; ++c) {
            auto a = column(ref_raw_ptrs, true, c), b = column(gen_ptrs, true, c);
            rep.jsd.push_back({"v" + std::to_string(c + 1),
                               js_distance_continuous(a, b, cfg.eval_bins)});
            std::ofstream os(reports / ("hist_v" + std::to_string(c + 1) + ".csv"));
            os << histogram_csv(a, b, cfg.eval_bins);
        }
        for (int c = 0; c < ds.meta.edge_dim; ++c) {
            auto a = column(ref_raw_ptrs, false, c), b = column(gen_ptrs, false, c);
            rep.jsd.push_back({"e" + std::to_string(c + 1),
                               js_distance_continuous(a, b, cfg.eval_bins)});
            std::ofstream os(reports / ("hist_e" + std::to_string(c + 1) + ".csv"));
            os << histogram_csv(a, b, cfg.eval_bins);
        }
        if (ds.meta.node_dim >= 2) {
            std::vector<AnnotatedGraph> gen_copy = generated;
            auto a = connected_distance_distribution(ref_raw);
            auto b = connected_distance_distribution(gen_copy);
            if (!a.empty() && !b.empty()) {
                rep.jsd.push_back({"d", js_distance_continuous(a, b, cfg.eval_bins)});
                std::ofstream os(reports / "hist_d.csv");
                os << histogram_csv(a, b, cfg.eval_bins);
            }
        }
    }

    {
        std::ofstream os(reports / "eval.json");
        os << rep.to_json() << '\n';
        std::ofstream oc(reports / "eval.csv");
        oc << rep.to_csv();
    }
    std::cout << rep.to_json() << "\n-> " << (reports / "eval.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"skeleton-conditioned graph annotation: two-phase adversarial training"};
    app.require_subcommand(1);

    std::string config_path, run_dir = "run", phase = "node", skeletons = "sample";
    std::string generated_path, out_path;
    std::optional<std::uint64_t> seed;
    std::optional<long> steps;
    int count = 1000;
    bool study = false;

    app.add_option("--config", config_path, "config JSON")->required();
    app.add_option("--run-dir", run_dir, "run directory");
    app.add_option("--seed", seed, "seed override");

    auto* prep = app.add_subcommand("prepare", "ingest raw data into the run-dir caches");
    auto* train = app.add_subcommand("train", "train one annotation phase");
    train->add_option("--phase", phase, "node|edge")->check(CLI::IsMember({"node", "edge"}));
    train->add_option("--steps", steps, "override total generator steps");
    auto* gen = app.add_subcommand("generate", "sample annotated graphs from checkpoints");
    gen->add_option("--skeletons", skeletons, "'sample' or a skeleton ndjson file");
    gen->add_option("--count", count, "number of graphs");
    gen->add_option("--out", out_path, "output ndjson path");
    auto* eval = app.add_subcommand("evaluate", "score generated graphs against the dataset");
    eval->add_option("--generated", generated_path, "generated ndjson file");
    eval->add_flag("--fixed-skeleton-study", study, "run the conditional-generation study");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg = RunConfig::load(config_path, seed);
        RunLock lock{fs::path(run_dir)};
        if (prep->parsed()) return cmd_prepare(cfg, run_dir);
        if (train->parsed()) return cmd_train(cfg, run_dir, phase, steps);
        if (gen->parsed()) return cmd_generate(cfg, run_dir, skeletons, count, out_path);
        if (eval->parsed()) return cmd_evaluate(cfg, run_dir, generated_path, study);
    } catch (const TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
