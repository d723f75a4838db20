#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ganno/rng.hpp"
#include "ganno/tape.hpp"

namespace ganno {

/// How spectral normalization behaves when a network is bound to a tape.
/// Train runs one power-iteration step (mutating the persistent u/v
/// estimates) before computing sigma; Frozen uses the estimates as-is.
/// Normalization itself is always applied when a layer carries state.
enum class SnMode { Train, Frozen };

/// Persistent power-iteration state for one spectrally normalized layer.
template <class S>
struct SpectralState {
    VecX<S> u;  // length = in
    VecX<S> v;  // length = out

    static SpectralState init(int in, int out, Rng& rng) {
        SpectralState st;
        st.u.resize(in);
        st.v.resize(out);
        for (int i = 0; i < in; ++i) st.u[i] = static_cast<S>(rng.gaussian());
        for (int i = 0; i < out; ++i) st.v[i] = static_cast<S>(rng.gaussian());
        st.u.normalize();
        st.v.normalize();
        return st;
    }

    /// One power-iteration step on w (in x out).
    void step(const MatX<S>& w) {
        if (w.isZero(S(0))) return;
        v = (w.transpose() * u).normalized();
        u = (w * v).normalized();
    }

    /// Current spectral-norm estimate.
    S sigma(const MatX<S>& w) const { return u.dot(w * v); }
};

/// Affine layer, weights stored in x out. Critic layers carry spectral
/// normalization state; generator layers do not.
template <class S>
struct Affine {
    MatX<S> w;  // in x out
    MatX<S> b;  // 1 x out
    std::optional<SpectralState<S>> sn;

    int in() const { return static_cast<int>(w.rows()); }
    int out() const { return static_cast<int>(w.cols()); }

    static Affine make(int in, int out, Rng& rng, bool spectral) {
        Affine a;
        a.w.resize(in, out);
        a.b.resize(1, out);
        const double k = 1.0 / std::sqrt(static_cast<double>(in));
        for (int i = 0; i < in; ++i)
            for (int j = 0; j < out; ++j) a.w(i, j) = static_cast<S>(rng.uniform(-k, k));
        for (int j = 0; j < out; ++j) a.b(0, j) = static_cast<S>(rng.uniform(-k, k));
        if (spectral) {
            a.sn = SpectralState<S>::init(in, out, rng);
            // warm up toward the top singular pair so sigma starts sane
            for (int i = 0; i < 5; ++i) a.sn->step(a.w);
        }
        return a;
    }
};

/// Tape-bound affine layer: parameter Vars created once per tape so that
/// gradients from several uses of the same layer accumulate in one place.
template <class S>
struct BoundAffine {
    Var w;  // normalized weight when spectral
    Var b;
};

/// Records which tape Var each trainable parameter was bound to, so the
/// optimizer can read gradients back after backward().
template <class S>
struct Binding {
    std::vector<std::pair<MatX<S>*, Var>> entries;

    void note(MatX<S>* param, Var v) { entries.push_back({param, v}); }
};

/// Binds a layer to a tape. trainable=false records parameters as tape
/// constants (no gradient work at all). The SnMode only matters for layers
/// with spectral state.
template <class S>
BoundAffine<S> bind(Tape<S>& tape, Affine<S>& layer, bool trainable, SnMode mode,
                    Binding<S>* reg = nullptr) {
    BoundAffine<S> out;
    Var wraw = trainable ? tape.input(layer.w) : tape.constant(layer.w);
    if (trainable && reg) reg->note(&layer.w, wraw);
    if (layer.sn) {
        if (mode == SnMode::Train) layer.sn->step(layer.w);
        out.w = tape.spectral_scale(wraw, layer.sn->u, layer.sn->v);
    } else {
        out.w = wraw;
    }
    out.b = trainable ? tape.input(layer.b) : tape.constant(layer.b);
    if (trainable && reg) reg->note(&layer.b, out.b);
    return out;
}

template <class S>
Var forward(Tape<S>& tape, const BoundAffine<S>& layer, Var x) {
    return tape.affine(x, layer.w, layer.b);
}

/// Feedforward network: affine layers with CELU between them (not after the
/// last). The update MLPs of the message passing nets are all 2-layer with
/// 64-wide hiddens; critic heads are 64-128-128-1.
template <class S>
struct Mlp {
    std::vector<Affine<S>> layers;
    S celu_alpha = S(1);

    static Mlp make(const std::vector<int>& widths, Rng& rng, bool spectral) {
        Mlp m;
        for (size_t i = 0; i + 1 < widths.size(); ++i)
            m.layers.push_back(Affine<S>::make(widths[i], widths[i + 1], rng, spectral));
        return m;
    }

    int in() const { return layers.front().in(); }
    int out() const { return layers.back().out(); }
};

template <class S>
struct BoundMlp {
    std::vector<BoundAffine<S>> layers;
    S celu_alpha;
};

template <class S>
BoundMlp<S> bind(Tape<S>& tape, Mlp<S>& mlp, bool trainable, SnMode mode, Binding<S>* reg = nullptr) {
    BoundMlp<S> out;
    out.celu_alpha = mlp.celu_alpha;
    for (auto& l : mlp.layers) out.layers.push_back(bind(tape, l, trainable, mode, reg));
    return out;
}

template <class S>
Var forward(Tape<S>& tape, const BoundMlp<S>& mlp, Var x) {
    Var h = x;
    for (size_t i = 0; i < mlp.layers.size(); ++i) {
        h = forward(tape, mlp.layers[i], h);
        if (i + 1 < mlp.layers.size()) h = tape.celu(h, mlp.celu_alpha);
    }
    return h;
}

/// count x dim matrix of standard Gaussian noise.
template <class S>
MatX<S> sample_noise(int count, int dim, Rng& rng) {
    MatX<S> z(count, dim);
    for (int r = 0; r < count; ++r)
        for (int c = 0; c < dim; ++c) z(r, c) = static_cast<S>(rng.gaussian());
    return z;
}

/// Adam. Steps with any non-finite gradient are skipped entirely (all
/// parameters), with a warning on stderr.
template <class S>
class Adam {
public:
    struct Config {
        double lr = 1e-4;
        double beta1 = 0.5;
        double beta2 = 0.999;
        double eps = 1e-8;
    };

    explicit Adam(Config cfg = {}) : cfg_(cfg) {}

    Config& config() { return cfg_; }
    const Config& config() const { return cfg_; }
    long steps_taken() const { return t_; }

    /// grads[i] pairs with params[i]. Returns false if the step was skipped.
    bool step(const std::vector<MatX<S>*>& params, const std::vector<MatX<S>>& grads) {
        for (const auto& g : grads)
            if (!g.allFinite()) {
                std::cerr << "[adam] non-finite gradient, skipping step\n";
                decay_only();
                return false;
            }
        if (m_.empty()) {
            for (auto* p : params) {
                m_.push_back(MatX<S>::Zero(p->rows(), p->cols()));
                v_.push_back(MatX<S>::Zero(p->rows(), p->cols()));
            }
        }
        ++t_;
        const S b1 = static_cast<S>(cfg_.beta1), b2 = static_cast<S>(cfg_.beta2);
        const S corr = static_cast<S>(cfg_.lr * std::sqrt(1.0 - std::pow(cfg_.beta2, t_)) /
                                      (1.0 - std::pow(cfg_.beta1, t_)));
        const S eps = static_cast<S>(cfg_.eps);
        for (size_t i = 0; i < params.size(); ++i) {
            m_[i] = b1 * m_[i] + (S(1) - b1) * grads[i];
            v_[i] = b2 * v_[i] + (S(1) - b2) * grads[i].cwiseProduct(grads[i]);
            params[i]->array() -= corr * m_[i].array() / (v_[i].array().sqrt() + eps);
        }
        return true;
    }

    std::vector<MatX<S>>& moment1() { return m_; }
    std::vector<MatX<S>>& moment2() { return v_; }
    long& step_count() { return t_; }

private:
    void decay_only() {
        // a skipped step still ages the moments
        const S b1 = static_cast<S>(cfg_.beta1), b2 = static_cast<S>(cfg_.beta2);
        for (auto& m : m_) m *= b1;
        for (auto& v : v_) v *= b2;
    }

    Config cfg_;
    long t_ = 0;
    std::vector<MatX<S>> m_;
    std::vector<MatX<S>> v_;
};

}  // namespace ganno
