#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ganno/checkpoint.hpp"
#include "ganno/dataset.hpp"
#include "ganno/mpnn.hpp"
#include "ganno/nn.hpp"

namespace ganno {

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Phase { Node, Edge };

inline const char* phase_name(Phase p) { return p == Phase::Node ? "node" : "edge"; }

/// Critic objective: mean f(fake) - mean f(real). The critic minimizes this,
/// which maximizes the usual real-minus-fake inner objective.
template <class S>
Var critic_wgan_loss(Tape<S>& tape, Var f_fake, Var f_real) {
    return tape.sub(tape.mean_all(f_fake), tape.mean_all(f_real));
}

/// Generator objective: -mean f(fake).
template <class S>
Var generator_wgan_loss(Tape<S>& tape, Var f_fake) {
    return tape.scale(tape.mean_all(f_fake), S(-1));
}

struct TrainSettings {
    int batch_size = 128;
    int n_critic = 5;
    long total_steps = 100000;
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    std::uint64_t seed = 0;
    long ckpt_every = 1000;
    int val_batches = 4;
    std::string run_note;  // free-form, echoed into checkpoints
};

struct LossRow {
    long step;
    double critic_loss;
    double gen_loss;
    double w_estimate;
};

/// Everything the two phases share: dataset access, batch assembly, noise.
template <class S>
class PhaseTrainer {
public:
    PhaseTrainer(Phase phase, const Dataset& ds, const MpnnConfig& gen_cfg,
                 const MpnnConfig& critic_cfg, const TrainSettings& settings)
        : phase_(phase),
          ds_(ds),
          settings_(settings),
          rng_(settings.seed ^ (phase == Phase::Node ? 0x1111ULL : 0x2222ULL)),
          opt_gen_(typename Adam<S>::Config{settings.lr, settings.beta1, settings.beta2, 1e-8}),
          opt_critic_(typename Adam<S>::Config{settings.lr, settings.beta1, settings.beta2, 1e-8}) {
        Rng init_rng(settings.seed ^ (phase == Phase::Node ? 0xA1ULL : 0xA2ULL));
        gen_ = Mpnn<S>::make(gen_cfg, init_rng);
        critic_ = Mpnn<S>::make(critic_cfg, init_rng);
        scaler_ = ds.scaler();
        snapshot();
    }

    long step() const { return step_; }
    Mpnn<S>& generator() { return gen_; }
    Mpnn<S>& critic() { return critic_; }
    const std::vector<LossRow>& history() const { return history_; }

    /// Runs until total_steps (generator steps). ckpt_dir/loss_csv empty
    /// disables the respective outputs.
    void run(const std::string& ckpt_dir, const std::string& loss_csv) {
        std::ofstream csv;
        if (!loss_csv.empty()) {
            const bool fresh = !std::filesystem::exists(loss_csv) || step_ == 0;
            csv.open(loss_csv, fresh ? std::ios::trunc : std::ios::app);
            if (fresh) csv << "step,critic_loss,gen_loss,w_estimate\n";
        }
        while (step_ < settings_.total_steps) {
            const LossRow row = train_step();
            if (csv.is_open()) {
                csv.precision(10);
                csv << row.step << ',' << row.critic_loss << ',' << row.gen_loss << ','
                    << row.w_estimate << '\n';
            }
            if (!ckpt_dir.empty() && (step_ % settings_.ckpt_every == 0 || step_ == settings_.total_steps)) {
                save_checkpoint(ckpt_dir + "/latest.ckpt");
                // best-by-validation selection; only mature checkpoints are
                // eligible (an untrained critic reports a spuriously small
                // Wasserstein estimate)
                if (2 * step_ >= settings_.total_steps) {
                    const double w = validation_w_estimate();
                    if (!have_best_ || std::abs(w) < best_val_w_) {
                        best_val_w_ = std::abs(w);
                        have_best_ = true;
                        save_checkpoint(ckpt_dir + "/best.ckpt");
                    }
                }
                snapshot();
            }
        }
        if (csv.is_open()) csv.flush();
    }

    /// One generator step preceded by n_critic critic steps.
    LossRow train_step() {
        double critic_loss = 0, w_est = 0;
        for (int t = 0; t < settings_.n_critic; ++t) {
            const auto [cl, we] = critic_update();
            critic_loss = cl;
            w_est = we;
        }
        const double gen_loss = generator_update();
        ++step_;
        LossRow row{step_, critic_loss, gen_loss, w_est};
        history_.push_back(row);
        if (!std::isfinite(critic_loss) || !std::isfinite(gen_loss)) handle_divergence();
        return row;
    }

    void save_checkpoint(const std::string& path) {
        Archive a;
        store_net(a, "gen", gen_);
        store_net(a, "critic", critic_);
        store_adam(a, "adam_gen", opt_gen_);
        store_adam(a, "adam_critic", opt_critic_);
        Eigen::MatrixXd misc(1, 3);
        misc << static_cast<double>(step_), lr_halved_ ? 1.0 : 0.0,
            have_best_ ? best_val_w_ : std::numeric_limits<double>::quiet_NaN();
        a.put("trainer/misc", misc);
        a.put_text("rng", rng_.save_state());
        a.put_text("phase", phase_name(phase_));
        a.put_text("dataset_meta", ds_.meta.to_json());
        a.put_text("settings", settings_note());
        a.save(path);
    }

    void load_checkpoint(const std::string& path) {
        Archive a = Archive::load(path);
        if (a.get_text("phase") != phase_name(phase_))
            throw DataError("checkpoint: phase mismatch");
        check_dataset_compat(a, ds_);
        load_net(a, "gen", gen_);
        load_net(a, "critic", critic_);
        load_adam(a, "adam_gen", opt_gen_, gen_);
        load_adam(a, "adam_critic", opt_critic_, critic_);
        const auto& misc = a.get("trainer/misc");
        step_ = static_cast<long>(misc(0, 0));
        lr_halved_ = misc(0, 1) != 0.0;
        if (std::isfinite(misc(0, 2))) {
            best_val_w_ = misc(0, 2);
            have_best_ = true;
        }
        rng_.load_state(a.get_text("rng"));
        snapshot();
    }

    /// Validation Wasserstein estimate (real minus fake critic means) over
    /// val_batches batches of the validation split, spectral norm frozen.
    double validation_w_estimate() {
        const auto& idx = ds_.meta.val_idx.empty() ? ds_.meta.train_idx : ds_.meta.val_idx;
        Rng vrng(settings_.seed ^ 0x7a1ULL);
        double sum = 0;
        for (int b = 0; b < settings_.val_batches; ++b) {
            auto [batch, sf, graphs] = sample_batch(idx, vrng);
            Tape<S> tape;
            auto bgen = bind(tape, gen_, false, SnMode::Frozen);
            auto bcritic = bind(tape, critic_, false, SnMode::Frozen);
            auto [f_real, f_fake] = critic_scores(tape, bgen, bcritic, batch, sf, vrng);
            sum += tape.val(f_real).mean() - tape.val(f_fake).mean();
        }
        return sum / settings_.val_batches;
    }

    /// Static store/load helpers shared with the generation pipeline.
    static void store_net(Archive& a, const std::string& prefix, Mpnn<S>& net) {
        visit_layers(net, [&](const std::string& name, Affine<S>& layer) {
            a.put(prefix + "/" + name + "/w", layer.w.template cast<double>());
            a.put(prefix + "/" + name + "/b", layer.b.template cast<double>());
            if (layer.sn) {
                a.put(prefix + "/" + name + "/sn_u", layer.sn->u.template cast<double>());
                a.put(prefix + "/" + name + "/sn_v", layer.sn->v.template cast<double>());
            }
        });
    }

    static void load_net(Archive& a, const std::string& prefix, Mpnn<S>& net) {
        visit_layers(net, [&](const std::string& name, Affine<S>& layer) {
            const auto& w = a.get(prefix + "/" + name + "/w");
            const auto& b = a.get(prefix + "/" + name + "/b");
            if (w.rows() != layer.w.rows() || w.cols() != layer.w.cols())
                throw DataError("checkpoint: shape mismatch at " + prefix + "/" + name);
            layer.w = w.template cast<S>();
            layer.b = b.template cast<S>();
            if (layer.sn) {
                layer.sn->u = a.get(prefix + "/" + name + "/sn_u").template cast<S>();
                layer.sn->v = a.get(prefix + "/" + name + "/sn_v").template cast<S>();
            }
        });
    }

    static void check_dataset_compat(const Archive& a, const Dataset& ds) {
        const auto meta = DatasetMeta::from_json(a.get_text("dataset_meta"));
        if (meta.node_dim != ds.meta.node_dim || meta.edge_dim != ds.meta.edge_dim ||
            meta.vocab != ds.meta.vocab || meta.categorical != ds.meta.categorical)
            throw DataError("checkpoint: dataset config mismatch");
    }

private:
    using BatchTuple =
        std::tuple<GraphBatch<S>, MatX<S>, std::vector<const AnnotatedGraph*>>;

    Phase phase_;
    const Dataset& ds_;
    TrainSettings settings_;
    Rng rng_;
    Mpnn<S> gen_, critic_;
    Adam<S> opt_gen_, opt_critic_;
    StructScaler scaler_;
    long step_ = 0;
    bool lr_halved_ = false;
    bool have_best_ = false;
    double best_val_w_ = 0;
    std::vector<LossRow> history_;

    // rollback state (last checkpoint cadence)
    std::optional<Archive> snapshot_;

    std::string settings_note() const {
        std::ostringstream os;
        os << "phase=" << phase_name(phase_) << " batch=" << settings_.batch_size
           << " n_critic=" << settings_.n_critic << " steps=" << settings_.total_steps
           << " lr=" << settings_.lr << " seed=" << settings_.seed;
        if (!settings_.run_note.empty()) os << ' ' << settings_.run_note;
        return os.str();
    }

    void snapshot() {
        Archive a;
        store_net(a, "gen", gen_);
        store_net(a, "critic", critic_);
        store_adam(a, "adam_gen", opt_gen_);
        store_adam(a, "adam_critic", opt_critic_);
        a.put_text("rng", rng_.save_state());
        snapshot_ = std::move(a);
    }

    void handle_divergence() {
        std::cerr << "[train " << phase_name(phase_) << "] non-finite loss at step " << step_
                  << ": restoring snapshot";
        if (lr_halved_) {
            std::cerr << "; learning rate already halved, aborting\n";
            throw TrainingDiverged("training diverged twice in phase " +
                                   std::string(phase_name(phase_)));
        }
        Archive& a = *snapshot_;
        load_net(a, "gen", gen_);
        load_net(a, "critic", critic_);
        load_adam(a, "adam_gen", opt_gen_, gen_);
        load_adam(a, "adam_critic", opt_critic_, critic_);
        rng_.load_state(a.get_text("rng"));
        lr_halved_ = true;
        opt_gen_.config().lr *= 0.5;
        opt_critic_.config().lr *= 0.5;
        std::cerr << "; learning rate halved to " << opt_gen_.config().lr << "\n";
    }

    static void store_adam(Archive& a, const std::string& prefix, Adam<S>& opt) {
        auto& m = opt.moment1();
        auto& v = opt.moment2();
        for (size_t i = 0; i < m.size(); ++i) {
            a.put(prefix + "/m" + std::to_string(i), m[i].template cast<double>());
            a.put(prefix + "/v" + std::to_string(i), v[i].template cast<double>());
        }
        Eigen::MatrixXd t(1, 2);
        t << static_cast<double>(opt.step_count()), static_cast<double>(m.size());
        a.put(prefix + "/t", t);
    }

    static void load_adam(Archive& a, const std::string& prefix, Adam<S>& opt, Mpnn<S>& net) {
        const auto& t = a.get(prefix + "/t");
        const auto count = static_cast<size_t>(t(0, 1));
        auto& m = opt.moment1();
        auto& v = opt.moment2();
        m.resize(count);
        v.resize(count);
        for (size_t i = 0; i < count; ++i) {
            m[i] = a.get(prefix + "/m" + std::to_string(i)).template cast<S>();
            v[i] = a.get(prefix + "/v" + std::to_string(i)).template cast<S>();
        }
        opt.step_count() = static_cast<long>(t(0, 0));
        (void)net;
    }

    BatchTuple sample_batch(const std::vector<int>& pool, Rng& rng) {
        std::vector<const AnnotatedGraph*> graphs;
        std::vector<const StructFeatures*> feats;
        graphs.reserve(settings_.batch_size);
        for (int i = 0; i < settings_.batch_size; ++i) {
            const int idx = pool[static_cast<size_t>(rng.below(pool.size()))];
            graphs.push_back(&ds_.graphs[idx]);
            feats.push_back(&ds_.sfeats[idx]);
        }
        std::vector<AnnotatedGraph> copies;  // make_batch wants contiguous graphs
        copies.reserve(graphs.size());
        for (auto* g : graphs) copies.push_back(*g);
        GraphBatch<S> batch = make_batch<S>(copies);
        MatX<S> sf = batch_struct_feats<S>(batch, feats, scaler_);
        return {std::move(batch), std::move(sf), std::move(graphs)};
    }

    /// Runs generator + both critic passes for the current phase; returns
    /// (f_real, f_fake) score Vars.
    std::pair<Var, Var> critic_scores(Tape<S>& tape, BoundMpnn<S>& bgen, BoundMpnn<S>& bcritic,
                                      const GraphBatch<S>& batch, const MatX<S>& sf, Rng& rng) {
        if (phase_ == Phase::Node) {
            MatX<S> noise = sample_noise<S>(batch.total_nodes, gen_.cfg.noise_dim, rng);
            Var v_fake = generator_nodes(tape, bgen, batch, noise, sf, &rng);
            Var f_real = critic_nodes(tape, bcritic, batch, tape.constant(batch.node_feats), sf);
            Var f_fake = critic_nodes(tape, bcritic, batch, v_fake, sf);
            return {f_real, f_fake};
        }
        MatX<S> noise = sample_noise<S>(batch.total_edges, gen_.cfg.noise_dim, rng);
        Var v_real = tape.constant(batch.node_feats);
        Var e_fake = generator_edges(tape, bgen, batch, v_real, noise, sf, &rng);
        Var f_real = critic_edges(tape, bcritic, batch, v_real, tape.constant(batch.edge_feats), sf);
        Var f_fake = critic_edges(tape, bcritic, batch, v_real, e_fake, sf);
        return {f_real, f_fake};
    }

    std::pair<double, double> critic_update() {
        auto [batch, sf, graphs] = sample_batch(ds_.meta.train_idx, rng_);
        Tape<S> tape;
        auto bgen = bind(tape, gen_, false, SnMode::Frozen);
        Binding<S> reg;
        auto bcritic = bind(tape, critic_, true, SnMode::Train, &reg);
        auto [f_real, f_fake] = critic_scores(tape, bgen, bcritic, batch, sf, rng_);
        Var loss = critic_wgan_loss(tape, f_fake, f_real);
        tape.backward(loss);
        apply(reg, tape, opt_critic_);
        const double l = static_cast<double>(tape.val(loss)(0, 0));
        return {l, -l};
    }

    double generator_update() {
        auto [batch, sf, graphs] = sample_batch(ds_.meta.train_idx, rng_);
        Tape<S> tape;
        Binding<S> reg;
        auto bgen = bind(tape, gen_, true, SnMode::Frozen, &reg);
        auto bcritic = bind(tape, critic_, false, SnMode::Train);
        Var f_fake{};
        if (phase_ == Phase::Node) {
            MatX<S> noise = sample_noise<S>(batch.total_nodes, gen_.cfg.noise_dim, rng_);
            Var v_fake = generator_nodes(tape, bgen, batch, noise, sf, &rng_);
            f_fake = critic_nodes(tape, bcritic, batch, v_fake, sf);
        } else {
            MatX<S> noise = sample_noise<S>(batch.total_edges, gen_.cfg.noise_dim, rng_);
            Var v_real = tape.constant(batch.node_feats);
            Var e_fake = generator_edges(tape, bgen, batch, v_real, noise, sf, &rng_);
            f_fake = critic_edges(tape, bcritic, batch, v_real, e_fake, sf);
        }
        Var loss = generator_wgan_loss(tape, f_fake);
        tape.backward(loss);
        apply(reg, tape, opt_gen_);
        return static_cast<double>(tape.val(loss)(0, 0));
    }

    static void apply(Binding<S>& reg, Tape<S>& tape, Adam<S>& opt) {
        std::vector<MatX<S>*> params;
        std::vector<MatX<S>> grads;
        params.reserve(reg.entries.size());
        grads.reserve(reg.entries.size());
        for (auto& [p, var] : reg.entries) {
            params.push_back(p);
            grads.push_back(tape.grad(var));
        }
        opt.step(params, grads);
    }
};

/// The two-phase inference pipeline: node annotations from the node
/// generator, edge annotations conditioned on them, assembled over the
/// conditioning skeletons, continuous features mapped back to data units.
template <class S>
class Pipeline {
public:
    Pipeline(Mpnn<S> node_gen, Mpnn<S> edge_gen, DatasetMeta meta)
        : node_gen_(std::move(node_gen)), edge_gen_(std::move(edge_gen)), meta_(std::move(meta)) {
        scaler_ = StructScaler{meta_.struct_mean, meta_.struct_std};
    }

    static Pipeline from_checkpoints(const std::string& node_ckpt, const std::string& edge_ckpt,
                                     const Dataset& ds, const MpnnConfig& node_gen_cfg,
                                     const MpnnConfig& edge_gen_cfg) {
        Archive an = Archive::load(node_ckpt);
        Archive ae = Archive::load(edge_ckpt);
        if (an.get_text("phase") != std::string("node"))
            throw DataError("pipeline: node checkpoint is not a node-phase checkpoint");
        if (ae.get_text("phase") != std::string("edge"))
            throw DataError("pipeline: edge checkpoint is not an edge-phase checkpoint");
        PhaseTrainer<S>::check_dataset_compat(an, ds);
        PhaseTrainer<S>::check_dataset_compat(ae, ds);
        Rng dummy(0);
        Mpnn<S> ng = Mpnn<S>::make(node_gen_cfg, dummy);
        Mpnn<S> eg = Mpnn<S>::make(edge_gen_cfg, dummy);
        PhaseTrainer<S>::load_net(an, "gen", ng);
        PhaseTrainer<S>::load_net(ae, "gen", eg);
        return Pipeline(std::move(ng), std::move(eg), ds.meta);
    }

    /// Generates one annotated graph per skeleton; deterministic under seed.
    std::vector<AnnotatedGraph> generate(const std::vector<Skeleton>& skeletons,
                                         std::uint64_t seed, int chunk = 256) {
        Rng rng(seed);
        std::vector<AnnotatedGraph> out;
        out.reserve(skeletons.size());
        for (size_t at = 0; at < skeletons.size(); at += chunk) {
            const size_t hi = std::min(at + chunk, skeletons.size());
            std::vector<AnnotatedGraph> shells(hi - at);
            std::vector<StructFeatures> sfeats(hi - at);
            std::vector<const StructFeatures*> sptr(hi - at);
            for (size_t i = at; i < hi; ++i) {
                shells[i - at].skeleton = skeletons[i];
                shells[i - at].node_feats = Eigen::MatrixXd::Zero(skeletons[i].n, meta_.node_dim);
                shells[i - at].edge_feats =
                    Eigen::MatrixXd::Zero(skeletons[i].num_edges(), meta_.edge_dim);
                sfeats[i - at] = struct_features(skeletons[i], meta_.cycle_ks);
                sptr[i - at] = &sfeats[i - at];
            }
            GraphBatch<S> batch = make_batch<S>(shells);
            MatX<S> sf = batch_struct_feats<S>(batch, sptr, scaler_);

            Tape<S> tape;
            auto bng = bind(tape, node_gen_, false, SnMode::Frozen);
            auto beg = bind(tape, edge_gen_, false, SnMode::Frozen);
            MatX<S> znode = sample_noise<S>(batch.total_nodes, node_gen_.cfg.noise_dim, rng);
            Var v_hat = generator_nodes(tape, bng, batch, znode, sf, &rng);
            MatX<S> zedge = sample_noise<S>(batch.total_edges, edge_gen_.cfg.noise_dim, rng);
            Var e_hat = generator_edges(tape, beg, batch, v_hat, zedge, sf, &rng);

            const MatX<S>& v = tape.val(v_hat);
            const MatX<S>& e = tape.val(e_hat);
            for (size_t i = at; i < hi; ++i) {
                const int gi = static_cast<int>(i - at);
                AnnotatedGraph g;
                g.skeleton = skeletons[i];
                g.node_feats = v.middleRows(batch.node_offset[gi], skeletons[i].n)
                                   .template cast<double>();
                g.edge_feats = e.middleRows(batch.edge_offset[gi], skeletons[i].num_edges())
                                   .template cast<double>();
                inverse_rescale(g);
                out.push_back(std::move(g));
            }
        }
        return out;
    }

    const DatasetMeta& meta() const { return meta_; }

private:
    void inverse_rescale(AnnotatedGraph& g) const {
        if (meta_.categorical) return;
        const double lo = meta_.rescale_lo, hi = meta_.rescale_hi;
        auto unscale = [&](Eigen::MatrixXd& m, const std::vector<double>& mn,
                           const std::vector<double>& mx) {
            for (int c = 0; c < m.cols(); ++c) {
                const double span = mx[c] - mn[c];
                for (int r = 0; r < m.rows(); ++r)
                    m(r, c) = span > 0 ? mn[c] + (m(r, c) - lo) / (hi - lo) * span : mn[c];
            }
        };
        unscale(g.node_feats, meta_.node_min, meta_.node_max);
        unscale(g.edge_feats, meta_.edge_min, meta_.edge_max);
    }

    Mpnn<S> node_gen_, edge_gen_;
    DatasetMeta meta_;
    StructScaler scaler_;
};

/// Generator/critic configurations for one phase, derived from the dataset
/// and model options.
struct ModelOptions {
    int hidden = 64;
    int noise_dim = 32;
    int gen_steps = 6;
    int critic_steps = 3;
    NodeUpdateVariant variant = NodeUpdateVariant::Concat;
    bool skip_connections = false;
    double tau = 1.0;
};

inline std::pair<MpnnConfig, MpnnConfig> phase_configs(Phase phase, const DatasetMeta& meta,
                                                       const ModelOptions& opt) {
    MpnnConfig gen;
    gen.role = phase == Phase::Node ? MpnnRole::NodeGenerator : MpnnRole::EdgeGenerator;
    gen.steps = opt.gen_steps;
    gen.hidden = opt.hidden;
    gen.noise_dim = opt.noise_dim;
    gen.struct_dim = 1 + static_cast<int>(meta.cycle_ks.size());
    gen.node_feat_dim = meta.node_dim;
    gen.edge_feat_dim = meta.edge_dim;
    gen.variant = opt.variant;
    gen.skip_connections = opt.skip_connections;
    gen.out_kind = meta.categorical ? FeatureKind::Categorical : FeatureKind::Continuous;
    gen.tau = opt.tau;

    MpnnConfig critic = gen;
    critic.role = phase == Phase::Node ? MpnnRole::NodeCritic : MpnnRole::EdgeCritic;
    critic.steps = opt.critic_steps;
    return {gen, critic};
}

}  // namespace ganno
