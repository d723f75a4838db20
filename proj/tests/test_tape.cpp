#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "ganno/nn.hpp"
#include "ganno/tape.hpp"
#include "testutil.hpp"

using namespace ganno;
using Mat = MatX<double>;

namespace {

/// Central finite differences of a scalar function of one matrix input,
/// compared entrywise against the tape gradient.
void check_grad(const Mat& x0, const std::function<Var(Tape<double>&, Var)>& f,
                double step = 1e-5, double tol = 1e-6) {
    Tape<double> tape;
    Var x = tape.input(x0);
    Var y = f(tape, x);
    tape.backward(y);
    Mat analytic = tape.grad(x);

    for (int r = 0; r < x0.rows(); ++r) {
        for (int c = 0; c < x0.cols(); ++c) {
            Mat xp = x0, xm = x0;
            xp(r, c) += step;
            xm(r, c) -= step;
            Tape<double> tp, tm;
            const double fp = tp.val(f(tp, tp.input(xp)))(0, 0);
            const double fm = tm.val(f(tm, tm.input(xm)))(0, 0);
            const double numeric = (fp - fm) / (2 * step);
            const double denom = std::max({1.0, std::abs(numeric), std::abs(analytic(r, c))});
            CHECK(std::abs(numeric - analytic(r, c)) / denom < tol);
        }
    }
}

}  // namespace

TEST_CASE("matmul gradients") {
    Rng rng(1);
    Mat a = Mat::Random(3, 4), b = Mat::Random(4, 2);
    check_grad(a, [&](Tape<double>& t, Var x) { return t.mean_all(t.matmul(x, t.constant(b))); });
    check_grad(b, [&](Tape<double>& t, Var x) { return t.mean_all(t.matmul(t.constant(a), x)); });
}

TEST_CASE("affine gradients including bias") {
    Mat x = Mat::Random(5, 3), w = Mat::Random(3, 4), b = Mat::Random(1, 4);
    check_grad(w, [&](Tape<double>& t, Var v) {
        return t.mean_all(t.affine(t.constant(x), v, t.constant(b)));
    });
    check_grad(b, [&](Tape<double>& t, Var v) {
        return t.mean_all(t.affine(t.constant(x), t.constant(w), v));
    });
    check_grad(x, [&](Tape<double>& t, Var v) {
        return t.mean_all(t.affine(v, t.constant(w), t.constant(b)));
    });
}

TEST_CASE("celu gradient away from the origin") {
    Mat x = Mat::Random(4, 4) * 3;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            if (std::abs(x(r, c)) < 0.05) x(r, c) = 0.5;  // keep clear of the kink
    check_grad(x, [&](Tape<double>& t, Var v) { return t.mean_all(t.celu(v)); });
}

TEST_CASE("concat routes gradients to its parts") {
    Mat a = Mat::Random(3, 2), b = Mat::Random(3, 3), w = Mat::Random(5, 1);
    check_grad(a, [&](Tape<double>& t, Var v) {
        return t.mean_all(t.matmul(t.concat2(v, t.constant(b)), t.constant(w)));
    });
    check_grad(b, [&](Tape<double>& t, Var v) {
        return t.mean_all(t.matmul(t.concat2(t.constant(a), v), t.constant(w)));
    });
}

TEST_CASE("gather and scatter gradients") {
    const std::vector<int> gather_idx{2, 0, 0, 1};
    Mat x = Mat::Random(3, 2);
    check_grad(x, [&](Tape<double>& t, Var v) {
        return t.mean_all(t.gather_rows(v, gather_idx));
    });

    const std::vector<int> src{0, 1, 1, 0};
    const std::vector<int> dst{1, 0, 2, 2};
    VecX<double> coeff(4);
    coeff << 0.5, 2.0, -1.0, 0.25;
    Mat r = Mat::Random(2, 3);
    check_grad(r, [&](Tape<double>& t, Var v) {
        return t.mean_all(t.scatter_rows(v, src, dst, coeff, 3));
    });
}

TEST_CASE("segment mean with an empty segment") {
    const std::vector<int> seg{0, 0, 2, 2, 2};
    Mat x = Mat::Random(5, 1);
    Tape<double> t;
    Var y = t.segment_mean(t.input(x), seg, 3);
    CHECK(t.val(y)(1, 0) == 0.0);  // empty segment scores zero
    CHECK(t.val(y)(0, 0) == doctest::Approx(0.5 * (x(0, 0) + x(1, 0))));
    check_grad(x, [&](Tape<double>& tt, Var v) {
        return tt.mean_all(tt.segment_mean(v, seg, 3));
    });
}

TEST_CASE("add sub scale gradients") {
    Mat a = Mat::Random(3, 3), b = Mat::Random(3, 3);
    check_grad(a, [&](Tape<double>& t, Var v) {
        return t.mean_all(t.scale(t.sub(t.add(v, t.constant(b)), t.constant(a)), 2.5));
    });
}

TEST_CASE("spectral scale matches its derivative") {
    Rng rng(3);
    Mat w = Mat::Random(4, 3);
    VecX<double> u = VecX<double>::Random(4).normalized();
    VecX<double> v = VecX<double>::Random(3).normalized();
    Mat x = Mat::Random(5, 4);
    check_grad(w, [&](Tape<double>& t, Var ww) {
        return t.mean_all(t.matmul(t.constant(x), t.spectral_scale(ww, u, v)));
    });
}

TEST_CASE("zero weight passes through spectral scale unchanged") {
    Tape<double> t;
    Var w = t.input(Mat::Zero(3, 3));
    Var s = t.spectral_scale(w, VecX<double>::Ones(3).normalized(),
                             VecX<double>::Ones(3).normalized());
    CHECK(t.val(s).isZero());
}

TEST_CASE("gumbel ST backward equals the softmax relaxation gradient") {
    // 3-class example with an analytic softmax Jacobian
    Mat logits(1, 3);
    logits << 0.2, -0.4, 1.0;
    Mat gnoise(1, 3);
    gnoise << 0.3, 0.1, -0.2;
    const double tau = 0.7;

    Tape<double> t;
    Var lg = t.input(logits);
    Var y = t.gumbel_softmax_st(lg, tau, nullptr, &gnoise);
    // forward is one-hot
    CHECK(t.val(y).sum() == 1.0);
    CHECK(t.val(y).maxCoeff() == 1.0);

    Var loss = t.mean_all(t.matmul(y, t.constant(Mat::Random(3, 1))));
    t.backward(loss);

    // softmax Jacobian structure: the gradient sums to zero over classes
    Mat g = t.grad(lg);
    CHECK(std::abs(g.sum()) < 1e-12);
    CHECK(g.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("gumbel ST agrees with finite differences of the soft path") {
    // differentiate a pure softmax computed through the same backward rule:
    // replace the hard forward by evaluating loss on the soft value.
    Mat logits = Mat::Random(4, 3);
    Mat gnoise = Mat::Random(4, 3);
    const double tau = 1.3;
    Mat w = Mat::Random(3, 1);

    auto soft_loss = [&](const Mat& lg) {
        double total = 0;
        for (int r = 0; r < lg.rows(); ++r) {
            Eigen::RowVector3d z = (lg.row(r) + gnoise.row(r)) / tau;
            Eigen::RowVector3d p = (z.array() - z.maxCoeff()).exp();
            p /= p.sum();
            total += (p * w)(0, 0);
        }
        return total / (lg.rows() * 1.0);
    };

    Tape<double> t;
    Var lg = t.input(logits);
    Var y = t.gumbel_softmax_st(lg, tau, nullptr, &gnoise);
    Var loss = t.mean_all(t.matmul(y, t.constant(w)));
    t.backward(loss);
    Mat analytic = t.grad(lg);

    const double step = 1e-6;
    for (int r = 0; r < logits.rows(); ++r)
        for (int c = 0; c < logits.cols(); ++c) {
            Mat lp = logits, lm = logits;
            lp(r, c) += step;
            lm(r, c) -= step;
            const double numeric = (soft_loss(lp) - soft_loss(lm)) / (2 * step);
            CHECK(std::abs(numeric - analytic(r, c)) < 1e-6);
        }
}

TEST_CASE("constants record no backward work") {
    Tape<double> t;
    Var a = t.constant(Mat::Random(64, 64));
    Var b = t.constant(Mat::Random(64, 64));
    Var c = t.matmul(a, b);
    CHECK_FALSE(t.needs_grad(c));
}
