#pragma once

#include <string>
#include <vector>

#include "ganno/graph.hpp"

namespace ganno {

/// Molecular vocabulary: ordered element symbols with maximum valences, and
/// the fixed bond vocabulary {single, double, triple, aromatic} with orders
/// {1, 2, 3, 1.5}. One-hot widths of molecular graphs follow directly.
struct MolSpec {
    struct Atom {
        std::string symbol;
        double max_valence;
        bool aromatic_ok;  // may appear lowercase in SMILES
    };

    std::vector<Atom> atoms;
    static constexpr int kNumBonds = 4;  // single, double, triple, aromatic
    static constexpr double kBondOrder[kNumBonds] = {1.0, 2.0, 3.0, 1.5};

    int atom_dim() const { return static_cast<int>(atoms.size()); }
    int edge_dim() const { return kNumBonds; }
    int atom_index(const std::string& symbol) const;

    /// C, N, O, F (QM9-style organic subset).
    static MolSpec qm9();
    /// The 9-element vocabulary of ZINC-style corpora.
    static MolSpec zinc();
};

class SmilesError : public DataError {
public:
    SmilesError(const std::string& msg, size_t pos)
        : DataError(msg + " at position " + std::to_string(pos)), pos(pos) {}
    size_t pos;
};

/// Parses the supported SMILES subset: vocabulary element symbols (lowercase
/// for aromatic atoms), bonds - = #, ring closures (digit or %nn),
/// parenthesized branches. No brackets, charges, isotopes or stereo.
/// Unspecified bonds between two aromatic atoms resolve to aromatic when the
/// bond lies on a cycle, otherwise single. Hydrogens are implicit and never
/// become nodes.
AnnotatedGraph parse_smiles(const std::string& s, const MolSpec& spec);

/// Emits a SMILES string for a molecular graph (one-hot features over spec).
/// parse_smiles(write_smiles(g)) is graph-isomorphic to g. Requires a
/// connected graph whose aromatic bonds lie on cycles.
std::string write_smiles(const AnnotatedGraph& g, const MolSpec& spec);

/// Loads one molecule per line; returns graphs in file order.
/// Parse failures abort with the offending line number.
std::vector<AnnotatedGraph> read_smiles_file(const std::string& path, const MolSpec& spec);

}  // namespace ganno
