#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "ganno/batch.hpp"
#include "ganno/rng.hpp"

namespace ganno {

/// Handle to a value recorded on a Tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Reverse-mode tape over dense matrices. One tape records one forward
/// computation; backward() walks the recording in reverse creation order.
/// Nodes reachable only from constants carry no backward closure, so running
/// a frozen network through the tape costs the same as a plain forward pass.
template <class S>
class Tape {
public:
    /// Value that never needs a gradient.
    Var constant(MatX<S> v) { return push(std::move(v), false); }

    /// Differentiable input (parameter or probe).
    Var input(MatX<S> v) { return push(std::move(v), true); }

    const MatX<S>& val(Var x) const { return nodes_[x.id].value; }

    bool needs_grad(Var x) const { return nodes_[x.id].needs_grad; }

    /// Gradient of the last backward() root w.r.t. x. Zero matrix if x never
    /// received a contribution.
    MatX<S> grad(Var x) const {
        const Node& n = nodes_[x.id];
        if (n.grad.size() == 0) return MatX<S>::Zero(n.value.rows(), n.value.cols());
        return n.grad;
    }

    // --- ops -------------------------------------------------------------

    /// x*w + broadcast bias (bias is 1 x out).
    Var affine(Var x, Var w, Var b) {
        MatX<S> y = (val(x) * val(w)).rowwise() + Eigen::RowVectorX<S>(val(b).row(0));
        Var out = push(std::move(y), needs_grad(x) || needs_grad(w) || needs_grad(b));
        if (nodes_[out.id].needs_grad) {
            nodes_[out.id].backward = [x, w, b, out](Tape& t) {
                const MatX<S>& g = t.nodes_[out.id].grad;
                if (t.needs_grad(x)) t.acc(x, g * t.val(w).transpose());
                if (t.needs_grad(w)) t.acc(w, t.val(x).transpose() * g);
                if (t.needs_grad(b)) t.acc_rowsum(b, g);
            };
        }
        return out;
    }

    Var matmul(Var x, Var w) {
        Var out = push(val(x) * val(w), needs_grad(x) || needs_grad(w));
        if (nodes_[out.id].needs_grad) {
            nodes_[out.id].backward = [x, w, out](Tape& t) {
                const MatX<S>& g = t.nodes_[out.id].grad;
                if (t.needs_grad(x)) t.acc(x, g * t.val(w).transpose());
                if (t.needs_grad(w)) t.acc(w, t.val(x).transpose() * g);
            };
        }
        return out;
    }

    Var add(Var x, Var y) {
        Var out = push(val(x) + val(y), needs_grad(x) || needs_grad(y));
        if (nodes_[out.id].needs_grad) {
            nodes_[out.id].backward = [x, y, out](Tape& t) {
                const MatX<S>& g = t.nodes_[out.id].grad;
                if (t.needs_grad(x)) t.acc(x, g);
                if (t.needs_grad(y)) t.acc(y, g);
            };
        }
        return out;
    }

    Var sub(Var x, Var y) {
        Var out = push(val(x) - val(y), needs_grad(x) || needs_grad(y));
        if (nodes_[out.id].needs_grad) {
            nodes_[out.id].backward = [x, y, out](Tape& t) {
                const MatX<S>& g = t.nodes_[out.id].grad;
                if (t.needs_grad(x)) t.acc(x, g);
                if (t.needs_grad(y)) t.acc(y, -g);
            };
        }
        return out;
    }

    Var scale(Var x, S c) {
        Var out = push(val(x) * c, needs_grad(x));
        if (nodes_[out.id].needs_grad) {
            nodes_[out.id].backward = [x, c, out](Tape& t) {
                t.acc(x, t.nodes_[out.id].grad * c);
            };
        }
        return out;
    }

    /// CELU: max(0,x) + min(0, alpha*(exp(x/alpha)-1)).
    Var celu(Var x, S alpha = S(1)) {
        const MatX<S>& v = val(x);
        MatX<S> y = (v.array().max(S(0)) + (alpha * ((v.array() / alpha).exp() - S(1))).min(S(0))).matrix();
        Var out = push(std::move(y), needs_grad(x));
        if (nodes_[out.id].needs_grad) {
            nodes_[out.id].backward = [x, alpha, out](Tape& t) {
                const MatX<S>& v = t.val(x);
                const MatX<S>& g = t.nodes_[out.id].grad;
                // d/dx = 1 for x > 0, exp(x/alpha) otherwise
                MatX<S> d = (v.array() > S(0)).select(MatX<S>::Ones(v.rows(), v.cols()),
                                                      (v.array() / alpha).exp().matrix());
                t.acc(x, g.cwiseProduct(d));
            };
        }
        return out;
    }

    Var concat2(Var a, Var b) { return concat({a, b}); }
    Var concat3(Var a, Var b, Var c) { return concat({a, b, c}); }

    Var concat(std::vector<Var> parts) {
        Eigen::Index rows = val(parts[0]).rows(), cols = 0;
        bool ng = false;
        for (Var p : parts) {
            cols += val(p).cols();
            ng = ng || needs_grad(p);
        }
        MatX<S> y(rows, cols);
        Eigen::Index at = 0;
        for (Var p : parts) {
            y.middleCols(at, val(p).cols()) = val(p);
            at += val(p).cols();
        }
        Var out = push(std::move(y), ng);
        if (ng) {
            nodes_[out.id].backward = [parts = std::move(parts), out](Tape& t) {
                const MatX<S>& g = t.nodes_[out.id].grad;
                Eigen::Index at = 0;
                for (Var p : parts) {
                    const Eigen::Index w = t.val(p).cols();
                    if (t.needs_grad(p)) t.acc(p, g.middleCols(at, w));
                    at += w;
                }
            };
        }
        return out;
    }

    /// Row gather: out.row(k) = x.row(idx[k]).
    Var gather_rows(Var x, const std::vector<int>& idx) {
        const MatX<S>& v = val(x);
        MatX<S> y(static_cast<Eigen::Index>(idx.size()), v.cols());
        for (size_t k = 0; k < idx.size(); ++k) y.row(static_cast<Eigen::Index>(k)) = v.row(idx[k]);
        Var out = push(std::move(y), needs_grad(x));
        if (nodes_[out.id].needs_grad) {
            nodes_[out.id].backward = [x, &idx, out](Tape& t) {
                const MatX<S>& g = t.nodes_[out.id].grad;
                MatX<S>& gx = t.grad_buf(x);
                for (size_t k = 0; k < idx.size(); ++k)
                    gx.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
            };
        }
        return out;
    }

    /// Weighted scatter-add of gathered rows:
    ///   out.row(dst[k]) += coeff[k] * x.row(src_row[k])  for all k,
    /// with out having out_rows rows. This is the neighborhood aggregation:
    /// x holds one state row per undirected edge, src_row/dst walk the
    /// directed orientations, coeff carries the degree normalization.
    Var scatter_rows(Var x, const std::vector<int>& src_row, const std::vector<int>& dst,
                     const VecX<S>& coeff, int out_rows) {
        const MatX<S>& v = val(x);
        MatX<S> y = MatX<S>::Zero(out_rows, v.cols());
        for (size_t k = 0; k < src_row.size(); ++k)
            y.row(dst[k]) += coeff[static_cast<Eigen::Index>(k)] * v.row(src_row[k]);
        Var out = push(std::move(y), needs_grad(x));
        if (nodes_[out.id].needs_grad) {
            nodes_[out.id].backward = [x, &src_row, &dst, &coeff, out](Tape& t) {
                const MatX<S>& g = t.nodes_[out.id].grad;
                MatX<S>& gx = t.grad_buf(x);
                for (size_t k = 0; k < src_row.size(); ++k)
                    gx.row(src_row[k]) += coeff[static_cast<Eigen::Index>(k)] * g.row(dst[k]);
            };
        }
        return out;
    }

    /// Mean of x rows within each segment; empty segments yield zero rows.
    /// seg[k] in [0, nseg) assigns row k to a segment.
    Var segment_mean(Var x, const std::vector<int>& seg, int nseg) {
        const MatX<S>& v = val(x);
        MatX<S> y = MatX<S>::Zero(nseg, v.cols());
        VecX<S> cnt = VecX<S>::Zero(nseg);
        for (size_t k = 0; k < seg.size(); ++k) {
            y.row(seg[k]) += v.row(static_cast<Eigen::Index>(k));
            cnt[seg[k]] += S(1);
        }
        for (int s = 0; s < nseg; ++s)
            if (cnt[s] > S(0)) y.row(s) /= cnt[s];
        Var out = push(std::move(y), needs_grad(x));
        if (nodes_[out.id].needs_grad) {
            nodes_[out.id].backward = [x, &seg, cnt, out](Tape& t) {
                const MatX<S>& g = t.nodes_[out.id].grad;
                MatX<S>& gx = t.grad_buf(x);
                for (size_t k = 0; k < seg.size(); ++k)
                    gx.row(static_cast<Eigen::Index>(k)) += g.row(seg[k]) / cnt[seg[k]];
            };
        }
        return out;
    }

    /// Mean over all entries, as a 1x1 value.
    Var mean_all(Var x) {
        const MatX<S>& v = val(x);
        MatX<S> y(1, 1);
        const S inv = S(1) / static_cast<S>(v.size());
        y(0, 0) = v.sum() * inv;
        Var out = push(std::move(y), needs_grad(x));
        if (nodes_[out.id].needs_grad) {
            nodes_[out.id].backward = [x, inv, out](Tape& t) {
                const S g = t.nodes_[out.id].grad(0, 0);
                t.grad_buf(x).array() += g * inv;
            };
        }
        return out;
    }

    /// Straight-through Gumbel-Softmax. Forward emits exact one-hot rows at
    /// the perturbed argmax; backward routes gradients through the softmax
    /// relaxation at temperature tau. Gumbel noise comes from rng unless an
    /// explicit noise matrix is supplied (tests inject it for determinism
    /// under permutation).
    Var gumbel_softmax_st(Var logits, S tau, Rng* rng, const MatX<S>* noise = nullptr) {
        if (tau <= S(0)) throw DataError("gumbel_softmax_st: tau must be > 0");
        const MatX<S>& lg = val(logits);
        if (!lg.allFinite()) throw DataError("gumbel_softmax_st: non-finite logits");
        MatX<S> z(lg.rows(), lg.cols());
        if (noise) {
            z = (lg + *noise) / tau;
        } else {
            for (Eigen::Index r = 0; r < lg.rows(); ++r)
                for (Eigen::Index c = 0; c < lg.cols(); ++c)
                    z(r, c) = (lg(r, c) + static_cast<S>(rng->gumbel())) / tau;
        }
        // row-wise softmax (stable) and hard argmax
        MatX<S> soft(z.rows(), z.cols());
        MatX<S> hard = MatX<S>::Zero(z.rows(), z.cols());
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            Eigen::Index arg = 0;
            const S mx = z.row(r).maxCoeff(&arg);
            Eigen::Array<S, 1, Eigen::Dynamic> e = (z.row(r).array() - mx).exp();
            soft.row(r) = e / e.sum();
            hard(r, arg) = S(1);
        }
        Var out = push(std::move(hard), needs_grad(logits));
        if (nodes_[out.id].needs_grad) {
            nodes_[out.id].backward = [logits, soft = std::move(soft), tau, out](Tape& t) {
                const MatX<S>& g = t.nodes_[out.id].grad;
                MatX<S>& gx = t.grad_buf(logits);
                for (Eigen::Index r = 0; r < g.rows(); ++r) {
                    const S dot = g.row(r).cwiseProduct(soft.row(r)).sum();
                    gx.row(r) += (soft.row(r).cwiseProduct(g.row(r)).array() - soft.row(r).array() * dot).matrix() / tau;
                }
            };
        }
        return out;
    }

    /// w / sigma with sigma = u^T w v for fixed direction estimates u, v.
    /// If w is exactly zero the value passes through unchanged.
    Var spectral_scale(Var w, const VecX<S>& u, const VecX<S>& v) {
        const MatX<S>& W = val(w);
        if (W.isZero(S(0))) {
            Var out = push(W, needs_grad(w));
            if (nodes_[out.id].needs_grad) {
                nodes_[out.id].backward = [w, out](Tape& t) { t.acc(w, t.nodes_[out.id].grad); };
            }
            return out;
        }
        const S sigma = u.dot(W * v);
        Var out = push(W / sigma, needs_grad(w));
        if (nodes_[out.id].needs_grad) {
            nodes_[out.id].backward = [w, u, v, sigma, out](Tape& t) {
                const MatX<S>& g = t.nodes_[out.id].grad;
                const S gdotw = g.cwiseProduct(t.val(w)).sum();
                t.acc(w, g / sigma - (gdotw / (sigma * sigma)) * (u * v.transpose()));
            };
        }
        return out;
    }

    /// Runs reverse accumulation from a 1x1 root.
    void backward(Var root) {
        Node& r = nodes_[root.id];
        if (r.value.size() != 1) throw DataError("backward: root must be scalar");
        grad_buf(root)(0, 0) = S(1);
        for (int id = root.id; id >= 0; --id) {
            Node& n = nodes_[id];
            if (n.backward && n.grad.size() != 0) n.backward(*this);
        }
    }

    size_t num_nodes() const { return nodes_.size(); }

private:
    struct Node {
        MatX<S> value;
        MatX<S> grad;
        std::function<void(Tape&)> backward;
        bool needs_grad = false;
    };

    std::vector<Node> nodes_;

    Var push(MatX<S> v, bool needs_grad) {
        nodes_.push_back(Node{std::move(v), {}, nullptr, needs_grad});
        return Var{static_cast<int>(nodes_.size() - 1)};
    }

    MatX<S>& grad_buf(Var x) {
        Node& n = nodes_[x.id];
        if (n.grad.size() == 0) n.grad = MatX<S>::Zero(n.value.rows(), n.value.cols());
        return n.grad;
    }

    void acc(Var x, const MatX<S>& g) { grad_buf(x) += g; }

    void acc_rowsum(Var x, const MatX<S>& g) { grad_buf(x).row(0) += g.colwise().sum(); }
};

}  // namespace ganno
