#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ganno/batch.hpp"
#include "ganno/nn.hpp"
#include "ganno/struct_feats.hpp"
#include "ganno/tape.hpp"

namespace ganno {

enum class NodeUpdateVariant { Concat, SumOfMlps };
enum class MpnnRole { NodeGenerator, EdgeGenerator, NodeCritic, EdgeCritic };
enum class FeatureKind { Categorical, Continuous };

/// Architecture of one message passing network. Generators run 6 update
/// steps and emit features; critics run 3, are spectrally normalized, and
/// emit one scalar per graph.
struct MpnnConfig {
    MpnnRole role = MpnnRole::NodeGenerator;
    int steps = 6;
    int hidden = 64;
    int noise_dim = 32;
    int struct_dim = 5;   // degree + |K| cycle counts
    int node_feat_dim = 0;
    int edge_feat_dim = 0;
    NodeUpdateVariant variant = NodeUpdateVariant::Concat;
    bool skip_connections = false;
    FeatureKind out_kind = FeatureKind::Categorical;
    double tau = 1.0;

    bool is_generator() const {
        return role == MpnnRole::NodeGenerator || role == MpnnRole::EdgeGenerator;
    }
    bool is_critic() const { return !is_generator(); }
    /// Edge states exist from step 0 (edge phase); the node phase has no
    /// r^(0), so its first edge update sees endpoint states only.
    bool has_initial_edge_state() const {
        return role == MpnnRole::EdgeGenerator || role == MpnnRole::EdgeCritic;
    }
    /// Width of the raw initial node representation before projection.
    int node_input_dim() const {
        return (role == MpnnRole::NodeGenerator ? noise_dim : node_feat_dim) + struct_dim;
    }
    int edge_input_dim() const {
        return role == MpnnRole::EdgeGenerator ? noise_dim : edge_feat_dim;
    }
    int head_out_dim() const {
        if (is_critic()) return 1;
        return role == MpnnRole::NodeGenerator ? node_feat_dim : edge_feat_dim;
    }
};

/// Learnable state of one MPNN (generator or critic).
template <class S>
struct Mpnn {
    MpnnConfig cfg;
    Affine<S> node_proj;                  // [feats|struct] -> hidden
    std::optional<Affine<S>> edge_proj;   // noise or E -> hidden
    std::vector<Mlp<S>> edge_mlps;        // per step
    std::vector<Mlp<S>> node_mlps;        // per step (Concat: [h|h~] -> h; SumOfMlps: h -> h)
    std::vector<Mlp<S>> node_mlps_agg;    // SumOfMlps only: h~ -> h
    std::optional<Affine<S>> feat_head;   // generators: hidden -> out
    std::optional<Mlp<S>> critic_head;    // critics: hidden -> 128 -> 128 -> 1

    static Mpnn make(const MpnnConfig& cfg, Rng& rng) {
        const bool sn = cfg.is_critic();
        const int h = cfg.hidden;
        Mpnn net;
        net.cfg = cfg;
        net.node_proj = Affine<S>::make(cfg.node_input_dim(), h, rng, sn);
        if (cfg.has_initial_edge_state())
            net.edge_proj = Affine<S>::make(cfg.edge_input_dim(), h, rng, sn);
        for (int l = 0; l < cfg.steps; ++l) {
            const bool has_r = cfg.has_initial_edge_state() || l > 0;
            net.edge_mlps.push_back(Mlp<S>::make({has_r ? 3 * h : 2 * h, h, h}, rng, sn));
            if (cfg.variant == NodeUpdateVariant::Concat) {
                net.node_mlps.push_back(Mlp<S>::make({2 * h, h, h}, rng, sn));
            } else {
                net.node_mlps.push_back(Mlp<S>::make({h, h, h}, rng, sn));
                net.node_mlps_agg.push_back(Mlp<S>::make({h, h, h}, rng, sn));
            }
        }
        if (cfg.is_critic())
            net.critic_head = Mlp<S>::make({h, 128, 128, 1}, rng, sn);
        else
            net.feat_head = Affine<S>::make(h, cfg.head_out_dim(), rng, false);
        return net;
    }
};

/// Enumerates every parameter-bearing layer in a stable order. fn is called
/// as fn(name, Affine&) for each affine layer (MLPs expand to their layers).
template <class S, class F>
void visit_layers(Mpnn<S>& net, F&& fn) {
    fn("node_proj", net.node_proj);
    if (net.edge_proj) fn("edge_proj", *net.edge_proj);
    auto visit_mlp = [&](const std::string& base, Mlp<S>& m) {
        for (size_t i = 0; i < m.layers.size(); ++i)
            fn(base + "/l" + std::to_string(i), m.layers[i]);
    };
    for (size_t l = 0; l < net.edge_mlps.size(); ++l)
        visit_mlp("edge_mlp" + std::to_string(l), net.edge_mlps[l]);
    for (size_t l = 0; l < net.node_mlps.size(); ++l)
        visit_mlp("node_mlp" + std::to_string(l), net.node_mlps[l]);
    for (size_t l = 0; l < net.node_mlps_agg.size(); ++l)
        visit_mlp("node_mlp_agg" + std::to_string(l), net.node_mlps_agg[l]);
    if (net.feat_head) fn("feat_head", *net.feat_head);
    if (net.critic_head) visit_mlp("critic_head", *net.critic_head);
}

template <class S>
struct BoundMpnn {
    const Mpnn<S>* net = nullptr;
    BoundAffine<S> node_proj;
    std::optional<BoundAffine<S>> edge_proj;
    std::vector<BoundMlp<S>> edge_mlps;
    std::vector<BoundMlp<S>> node_mlps;
    std::vector<BoundMlp<S>> node_mlps_agg;
    std::optional<BoundAffine<S>> feat_head;
    std::optional<BoundMlp<S>> critic_head;
};

template <class S>
BoundMpnn<S> bind(Tape<S>& tape, Mpnn<S>& net, bool trainable, SnMode mode, Binding<S>* reg = nullptr) {
    BoundMpnn<S> b;
    b.net = &net;
    b.node_proj = bind(tape, net.node_proj, trainable, mode, reg);
    if (net.edge_proj) b.edge_proj = bind(tape, *net.edge_proj, trainable, mode, reg);
    for (auto& m : net.edge_mlps) b.edge_mlps.push_back(bind(tape, m, trainable, mode, reg));
    for (auto& m : net.node_mlps) b.node_mlps.push_back(bind(tape, m, trainable, mode, reg));
    for (auto& m : net.node_mlps_agg) b.node_mlps_agg.push_back(bind(tape, m, trainable, mode, reg));
    if (net.feat_head) b.feat_head = bind(tape, *net.feat_head, trainable, mode, reg);
    if (net.critic_head) b.critic_head = bind(tape, *net.critic_head, trainable, mode, reg);
    return b;
}

/// One update cycle (edge update, degree-normalized aggregation, node
/// update) run for cfg.steps steps. Returns the final (h, r) states; r is
/// invalid when the role has no edge states and steps == 0.
template <class S>
std::pair<Var, Var> mp_run(Tape<S>& tape, const BoundMpnn<S>& net, const GraphBatch<S>& batch,
                           Var h0, Var r0) {
    const MpnnConfig& cfg = net.net->cfg;
    Var h = h0;
    Var r = r0;
    for (int l = 0; l < cfg.steps; ++l) {
        // edge update, symmetrized over the two orientations
        Var ha = tape.gather_rows(h, batch.end_a);
        Var hb = tape.gather_rows(h, batch.end_b);
        Var in_ab = r.valid() ? tape.concat3(ha, hb, r) : tape.concat2(ha, hb);
        Var in_ba = r.valid() ? tape.concat3(hb, ha, r) : tape.concat2(hb, ha);
        Var m_ab = forward(tape, net.edge_mlps[l], in_ab);
        Var m_ba = forward(tape, net.edge_mlps[l], in_ba);
        Var r_new = tape.scale(tape.add(m_ab, m_ba), S(0.5));
        if (cfg.skip_connections && r.valid()) r_new = tape.add(r_new, r);
        r = r_new;

        // aggregate incident edge states with 1/sqrt(d_i d_j)
        Var h_agg = tape.scatter_rows(r, batch.dir_edge, batch.dir_dst, batch.agg_coeff,
                                      batch.total_nodes);

        Var h_new;
        if (cfg.variant == NodeUpdateVariant::Concat) {
            h_new = forward(tape, net.node_mlps[l], tape.concat2(h, h_agg));
        } else {
            h_new = tape.add(forward(tape, net.node_mlps[l], h),
                             forward(tape, net.node_mlps_agg[l], h_agg));
        }
        if (cfg.skip_connections) h_new = tape.add(h_new, h);
        h = h_new;
    }
    return {h, r};
}

/// Node-annotation generator. node_inputs = [noise | struct feats] per node.
/// Returns the generated feature matrix Var (one-hot rows for categorical).
template <class S>
Var generator_nodes(Tape<S>& tape, const BoundMpnn<S>& net, const GraphBatch<S>& batch,
                    const MatX<S>& noise, const MatX<S>& struct_feats, Rng* rng,
                    const MatX<S>* gumbel_noise = nullptr) {
    const MpnnConfig& cfg = net.net->cfg;
    if (noise.rows() != batch.total_nodes)
        throw DataError("generator_nodes: one noise row per node required");
    MatX<S> raw(batch.total_nodes, noise.cols() + struct_feats.cols());
    raw << noise, struct_feats;
    Var h0 = forward(tape, net.node_proj, tape.constant(std::move(raw)));
    auto [h, r] = mp_run(tape, net, batch, h0, Var{});
    Var logits = forward(tape, *net.feat_head, h);
    if (cfg.out_kind == FeatureKind::Categorical)
        return tape.gumbel_softmax_st(logits, static_cast<S>(cfg.tau), rng, gumbel_noise);
    return logits;
}

/// Edge-annotation generator. Conditions on node features V (real during
/// training, generated at inference); noise has one row per undirected edge.
template <class S>
Var generator_edges(Tape<S>& tape, const BoundMpnn<S>& net, const GraphBatch<S>& batch,
                    Var node_feats, const MatX<S>& noise, const MatX<S>& struct_feats, Rng* rng,
                    const MatX<S>* gumbel_noise = nullptr) {
    const MpnnConfig& cfg = net.net->cfg;
    if (noise.rows() != batch.total_edges)
        throw DataError("generator_edges: one noise row per undirected edge required");
    if (tape.val(node_feats).rows() != batch.total_nodes)
        throw DataError("generator_edges: node feature row count mismatch");
    Var h0 = forward(tape, net.node_proj,
                     tape.concat2(node_feats, tape.constant(struct_feats)));
    Var r0 = forward(tape, *net.edge_proj, tape.constant(noise));
    auto [h, r] = mp_run(tape, net, batch, h0, r0);
    Var logits = forward(tape, *net.feat_head, r);
    if (cfg.out_kind == FeatureKind::Categorical)
        return tape.gumbel_softmax_st(logits, static_cast<S>(cfg.tau), rng, gumbel_noise);
    return logits;
}

/// Per-node critic scores (before pooling), total_nodes x 1.
template <class S>
Var critic_node_scores(Tape<S>& tape, const BoundMpnn<S>& net, const GraphBatch<S>& batch,
                       Var node_feats, const MatX<S>& struct_feats) {
    Var h0 = forward(tape, net.node_proj,
                     tape.concat2(node_feats, tape.constant(struct_feats)));
    auto [h, r] = mp_run(tape, net, batch, h0, Var{});
    return forward(tape, *net.critic_head, h);
}

/// Node critic: mean per-node score within each graph -> num_graphs x 1.
template <class S>
Var critic_nodes(Tape<S>& tape, const BoundMpnn<S>& net, const GraphBatch<S>& batch,
                 Var node_feats, const MatX<S>& struct_feats) {
    Var scores = critic_node_scores(tape, net, batch, node_feats, struct_feats);
    return tape.segment_mean(scores, batch.node_graph, batch.num_graphs);
}

/// Edge critic: scores each undirected edge and mean-pools per graph.
/// Graphs without edges score 0.
template <class S>
Var critic_edges(Tape<S>& tape, const BoundMpnn<S>& net, const GraphBatch<S>& batch,
                 Var node_feats, Var edge_feats, const MatX<S>& struct_feats) {
    Var h0 = forward(tape, net.node_proj,
                     tape.concat2(node_feats, tape.constant(struct_feats)));
    Var r0 = forward(tape, *net.edge_proj, edge_feats);
    auto [h, r] = mp_run(tape, net, batch, h0, r0);
    Var scores = forward(tape, *net.critic_head, r);
    return tape.segment_mean(scores, batch.edge_graph, batch.num_graphs);
}

}  // namespace ganno
