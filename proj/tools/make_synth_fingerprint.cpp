// Writes a synthetic TUDataset-format corpus of small graphs with continuous
// node/edge features; see ganno/synthdata.hpp.

#include <CLI11.hpp>
#include <iostream>

#include "ganno/synthdata.hpp"

int main(int argc, char** argv) {
    CLI::App app{"synthesize a TUDataset-format continuous-feature corpus"};
    std::string out_dir = "synth_fingerprint";
    int graphs = 8000;
    std::uint64_t seed = 7;
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--graphs", graphs, "number of graphs");
    app.add_option("--seed", seed, "random seed");
    CLI11_PARSE(app, argc, argv);

    ganno::write_synth_fingerprint(out_dir, graphs, seed);
    std::cout << "wrote " << graphs << " graphs to " << out_dir << "\n";
    return 0;
}
