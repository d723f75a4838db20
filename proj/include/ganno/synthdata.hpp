#pragma once

#include <string>

#include "ganno/rng.hpp"

namespace ganno {

/// Writes a synthetic TUDataset-format corpus of small graphs with 2
/// continuous node features (2d positions from a clipped random walk) and 2
/// continuous edge features (segment length, folded orientation). A stand-in
/// for position/orientation-annotated graph data in demos and tests.
void write_synth_fingerprint(const std::string& out_dir, int graphs, std::uint64_t seed);

}  // namespace ganno
