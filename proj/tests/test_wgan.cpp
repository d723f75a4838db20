#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ganno/wgan.hpp"
#include "testutil.hpp"

using namespace ganno;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("ganno_wgan_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

/// Tiny molecular dataset prepared in-memory.
Dataset tiny_dataset(std::uint64_t seed = 1) {
    TempDir td("ds");
    std::ofstream os(td.path / "m.smi");
    os << "CCO\nCC\nCCC\nC1CC1\nCCN\nCO\nCCCO\nNCC\nOCO\nC1CCC1\nCC(C)C\nOC=O\n";
    os.close();
    DatasetConfig cfg;
    cfg.format = DatasetFormat::Smiles;
    cfg.path = (td.path / "m.smi").string();
    cfg.seed = seed;
    cfg.split = {0.75, 0.25, 0.0};
    return prepare_dataset(cfg);
}

ModelOptions tiny_model() {
    ModelOptions opt;
    opt.hidden = 12;
    opt.noise_dim = 6;
    opt.gen_steps = 2;
    opt.critic_steps = 2;
    return opt;
}

TrainSettings tiny_settings(long steps, std::uint64_t seed = 5) {
    TrainSettings ts;
    ts.batch_size = 4;
    ts.n_critic = 2;
    ts.total_steps = steps;
    ts.lr = 1e-3;
    ts.seed = seed;
    ts.ckpt_every = 4;
    ts.val_batches = 1;
    return ts;
}

}  // namespace

TEST_CASE("wgan loss contracts") {
    Tape<double> t;
    // constant critic: both terms cancel
    Var c_real = t.constant(MatX<double>::Constant(5, 1, 3.25));
    Var c_fake = t.constant(MatX<double>::Constant(5, 1, 3.25));
    CHECK(t.val(critic_wgan_loss(t, c_fake, c_real))(0, 0) == 0.0);

    // reals score 1, fakes score 0: loss = 0 - 1 = -1
    Var ones = t.constant(MatX<double>::Ones(8, 1));
    Var zeros = t.constant(MatX<double>::Zero(8, 1));
    CHECK(t.val(critic_wgan_loss(t, zeros, ones))(0, 0) == -1.0);

    // anti-symmetry: swapping real and fake negates the loss
    Var a = t.constant(MatX<double>::Random(6, 1));
    Var b = t.constant(MatX<double>::Random(6, 1));
    CHECK(t.val(critic_wgan_loss(t, a, b))(0, 0) ==
          -t.val(critic_wgan_loss(t, b, a))(0, 0));

    // generator loss is the negated fake term
    CHECK(t.val(generator_wgan_loss(t, ones))(0, 0) == -1.0);
    CHECK(t.val(generator_wgan_loss(t, a))(0, 0) ==
          -t.val(t.mean_all(a))(0, 0));
}

TEST_CASE("constant critic gives zero generator gradient") {
    Dataset ds = tiny_dataset();
    auto [gen_cfg, critic_cfg] = phase_configs(Phase::Node, ds.meta, tiny_model());
    Rng init(3);
    auto gen = Mpnn<double>::make(gen_cfg, init);
    auto critic = Mpnn<double>::make(critic_cfg, init);
    // zero out the head so the critic is constant
    critic.critic_head->layers.back().w.setZero();
    critic.critic_head->layers.back().b.setConstant(2.0);

    std::vector<AnnotatedGraph> gs{ds.graphs[0], ds.graphs[1]};
    auto batch = make_batch<double>(gs);
    std::vector<const StructFeatures*> sf{&ds.sfeats[0], &ds.sfeats[1]};
    auto sfmat = batch_struct_feats<double>(batch, sf, ds.scaler());

    Tape<double> t;
    Binding<double> reg;
    auto bg = bind(t, gen, true, SnMode::Frozen, &reg);
    auto bc = bind(t, critic, false, SnMode::Frozen);
    Rng rng(7);
    auto noise = sample_noise<double>(batch.total_nodes, 6, rng);
    Var v = generator_nodes(t, bg, batch, noise, sfmat, &rng);
    Var loss = generator_wgan_loss(t, critic_nodes(t, bc, batch, v, sfmat));
    CHECK(t.val(loss)(0, 0) == -2.0);
    t.backward(loss);
    for (auto& [p, var] : reg.entries) CHECK(t.grad(var).isZero());
}

TEST_CASE("training is bitwise deterministic under a fixed seed") {
    Dataset ds = tiny_dataset();
    auto run = [&](Phase phase) {
        auto [g, c] = phase_configs(phase, ds.meta, tiny_model());
        PhaseTrainer<float> tr(phase, ds, g, c, tiny_settings(6));
        for (int i = 0; i < 6; ++i) tr.train_step();
        return tr.history();
    };
    for (Phase phase : {Phase::Node, Phase::Edge}) {
        auto h1 = run(phase), h2 = run(phase);
        REQUIRE(h1.size() == h2.size());
        for (size_t i = 0; i < h1.size(); ++i) {
            CHECK(h1[i].critic_loss == h2[i].critic_loss);
            CHECK(h1[i].gen_loss == h2[i].gen_loss);
            CHECK(h1[i].w_estimate == h2[i].w_estimate);
        }
    }
}

TEST_CASE("losses stay finite over a short run") {
    Dataset ds = tiny_dataset();
    auto [g, c] = phase_configs(Phase::Edge, ds.meta, tiny_model());
    PhaseTrainer<float> tr(Phase::Edge, ds, g, c, tiny_settings(10));
    for (int i = 0; i < 10; ++i) {
        auto row = tr.train_step();
        CHECK(std::isfinite(row.critic_loss));
        CHECK(std::isfinite(row.gen_loss));
    }
}

TEST_CASE("resume reproduces the uninterrupted loss stream") {
    Dataset ds = tiny_dataset();
    TempDir td("resume");
    auto [g, c] = phase_configs(Phase::Node, ds.meta, tiny_model());

    fs::create_directories(td.path / "full");
    fs::create_directories(td.path / "half");
    PhaseTrainer<float> full(Phase::Node, ds, g, c, tiny_settings(8));
    full.run((td.path / "full").string(), (td.path / "full.csv").string());

    PhaseTrainer<float> half(Phase::Node, ds, g, c, tiny_settings(4));
    half.run((td.path / "half").string(), (td.path / "half.csv").string());

    PhaseTrainer<float> resumed(Phase::Node, ds, g, c, tiny_settings(8));
    resumed.load_checkpoint((td.path / "half/latest.ckpt").string());
    CHECK(resumed.step() == 4);
    resumed.run("", (td.path / "half.csv").string());

    // compare the two CSV streams
    std::ifstream fa(td.path / "full.csv"), fb(td.path / "half.csv");
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(!sa.str().empty());
}

TEST_CASE("checkpoint round-trip preserves generation behavior") {
    Dataset ds = tiny_dataset();
    TempDir td("ckpt");
    auto [ng, nc] = phase_configs(Phase::Node, ds.meta, tiny_model());
    auto [eg, ec] = phase_configs(Phase::Edge, ds.meta, tiny_model());

    PhaseTrainer<float> tn(Phase::Node, ds, ng, nc, tiny_settings(3));
    for (int i = 0; i < 3; ++i) tn.train_step();
    tn.save_checkpoint((td.path / "node.ckpt").string());
    PhaseTrainer<float> te(Phase::Edge, ds, eg, ec, tiny_settings(3));
    for (int i = 0; i < 3; ++i) te.train_step();
    te.save_checkpoint((td.path / "edge.ckpt").string());

    auto pipe = Pipeline<float>::from_checkpoints((td.path / "node.ckpt").string(),
                                                  (td.path / "edge.ckpt").string(), ds, ng, eg);
    auto sks = sample_skeletons(ds.split_graphs(ds.meta.train_idx), 5, 77);
    auto out1 = pipe.generate(sks, 1234);
    auto out2 = pipe.generate(sks, 1234);
    REQUIRE(out1.size() == 5);
    for (size_t i = 0; i < out1.size(); ++i) {
        // generation never alters the skeleton
        CHECK(out1[i].skeleton == sks[i]);
        // deterministic under the seed
        CHECK(out1[i].node_feats == out2[i].node_feats);
        CHECK(out1[i].edge_feats == out2[i].edge_feats);
        // categorical outputs are one-hot
        for (int r = 0; r < out1[i].node_feats.rows(); ++r)
            CHECK(out1[i].node_feats.row(r).sum() == 1.0);
    }
    auto out3 = pipe.generate(sks, 999);
    bool any_diff = false;
    for (size_t i = 0; i < out1.size(); ++i)
        if (out1[i].node_feats != out3[i].node_feats || out1[i].edge_feats != out3[i].edge_feats)
            any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("phase mismatch and dataset mismatch are rejected") {
    Dataset ds = tiny_dataset();
    TempDir td("mismatch");
    auto [ng, nc] = phase_configs(Phase::Node, ds.meta, tiny_model());
    auto [eg, ec] = phase_configs(Phase::Edge, ds.meta, tiny_model());
    PhaseTrainer<float> tn(Phase::Node, ds, ng, nc, tiny_settings(1));
    tn.train_step();
    tn.save_checkpoint((td.path / "node.ckpt").string());
    // node checkpoint offered as the edge phase
    CHECK_THROWS_AS(Pipeline<float>::from_checkpoints((td.path / "node.ckpt").string(),
                                                      (td.path / "node.ckpt").string(), ds, ng, eg),
                    DataError);
}

TEST_CASE("divergence rolls back once, then aborts") {
    Dataset ds = tiny_dataset();
    auto [g, c] = phase_configs(Phase::Node, ds.meta, tiny_model());
    TrainSettings ts = tiny_settings(50);
    ts.lr = 1e30;  // guaranteed blow-up
    PhaseTrainer<float> tr(Phase::Node, ds, g, c, ts);
    CHECK_THROWS_AS(
        [&] {
            for (int i = 0; i < 50; ++i) tr.train_step();
        }(),
        TrainingDiverged);
}
