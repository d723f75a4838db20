#include "ganno/smiles.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>

namespace ganno {

int MolSpec::atom_index(const std::string& symbol) const {
    for (size_t i = 0; i < atoms.size(); ++i)
        if (atoms[i].symbol == symbol) return static_cast<int>(i);
    return -1;
}

MolSpec MolSpec::qm9() {
    return MolSpec{{{"C", 4, true}, {"N", 3, true}, {"O", 2, true}, {"F", 1, false}}};
}

MolSpec MolSpec::zinc() {
    return MolSpec{{{"C", 4, true},
                    {"N", 3, true},
                    {"O", 2, true},
                    {"F", 1, false},
                    {"P", 5, true},
                    {"S", 6, true},
                    {"Cl", 1, false},
                    {"Br", 1, false},
                    {"I", 1, false}}};
}

namespace {

// bond categories; kUnspecified is resolved after the graph is complete
enum Bond : int { kSingle = 0, kDouble = 1, kTriple = 2, kAromatic = 3, kUnspecified = -1 };

struct ParsedAtom {
    int type;       // index into spec.atoms
    bool aromatic;  // written lowercase
};

struct ParsedBond {
    int a, b;
    int kind;  // Bond
};

/// Bridges of the final skeleton: an edge lies on a cycle iff it is not a
/// bridge.
std::vector<bool> edge_on_cycle(int n, const std::vector<ParsedBond>& bonds) {
    std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbor, bond idx)
    for (size_t k = 0; k < bonds.size(); ++k) {
        adj[bonds[k].a].push_back({bonds[k].b, static_cast<int>(k)});
        adj[bonds[k].b].push_back({bonds[k].a, static_cast<int>(k)});
    }
    std::vector<int> disc(n, -1), low(n, 0);
    std::vector<bool> on_cycle(bonds.size(), true);
    int timer = 0;
    // iterative DFS to keep deep chains safe
    struct Frame {
        int v, parent_edge;
        size_t next = 0;
    };
    for (int start = 0; start < n; ++start) {
        if (disc[start] != -1) continue;
        std::vector<Frame> stack{{start, -1}};
        disc[start] = low[start] = timer++;
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next < adj[f.v].size()) {
                auto [u, ei] = adj[f.v][f.next++];
                if (ei == f.parent_edge) continue;
                if (disc[u] == -1) {
                    disc[u] = low[u] = timer++;
                    stack.push_back({u, ei});
                } else {
                    low[f.v] = std::min(low[f.v], disc[u]);
                }
            } else {
                const int v = f.v, pe = f.parent_edge;
                stack.pop_back();
                if (pe >= 0) {
                    const int p = stack.back().v;
                    low[p] = std::min(low[p], low[v]);
                    if (low[v] > disc[p]) on_cycle[pe] = false;  // bridge
                }
            }
        }
    }
    return on_cycle;
}

struct Parser {
    const std::string& s;
    const MolSpec& spec;
    size_t pos = 0;

    std::vector<ParsedAtom> atoms;
    std::vector<ParsedBond> bonds;

    [[noreturn]] void fail(const std::string& msg) const { throw SmilesError(msg, pos); }

    bool done() const { return pos >= s.size(); }
    char peek() const { return s[pos]; }

    std::optional<int> try_bond_symbol() {
        if (done()) return std::nullopt;
        switch (peek()) {
            case '-': ++pos; return kSingle;
            case '=': ++pos; return kDouble;
            case '#': ++pos; return kTriple;
            default: return std::nullopt;
        }
    }

    /// Returns atom index or -1 when the next token is not an atom.
    int try_atom() {
        if (done()) return -1;
        const char c = peek();
        if (c == '[') fail("bracket atoms are not supported");
        // two-letter symbols first (Cl, Br)
        if (pos + 1 < s.size() && std::isupper(c) && std::islower(s[pos + 1])) {
            const std::string two = s.substr(pos, 2);
            if (spec.atom_index(two) >= 0) {
                pos += 2;
                atoms.push_back({spec.atom_index(two), false});
                return static_cast<int>(atoms.size()) - 1;
            }
        }
        if (std::isupper(c)) {
            const std::string one(1, c);
            const int t = spec.atom_index(one);
            if (t < 0) fail("unknown element '" + one + "'");
            ++pos;
            atoms.push_back({t, false});
            return static_cast<int>(atoms.size()) - 1;
        }
        if (std::islower(c)) {
            const std::string up(1, static_cast<char>(std::toupper(c)));
            const int t = spec.atom_index(up);
            if (t < 0 || !spec.atoms[t].aromatic_ok)
                fail(std::string("unsupported aromatic atom '") + c + "'");
            ++pos;
            atoms.push_back({t, true});
            return static_cast<int>(atoms.size()) - 1;
        }
        return -1;
    }

    void add_bond(int a, int b, int kind) {
        if (a == b) fail("ring bond closes onto the same atom");
        for (const auto& bd : bonds)
            if ((bd.a == a && bd.b == b) || (bd.a == b && bd.b == a))
                fail("duplicate bond between atoms");
        bonds.push_back({a, b, kind});
    }

    void parse() {
        // ring closures: digit -> (atom, bond symbol or kUnspecified)
        std::map<int, std::pair<int, int>> rings;
        std::vector<int> branch_stack;
        int prev = -1;
        int pending = kUnspecified;
        bool have_pending = false;

        while (!done()) {
            const char c = peek();
            if (c == '(') {
                if (prev < 0) fail("branch before any atom");
                branch_stack.push_back(prev);
                ++pos;
                continue;
            }
            if (c == ')') {
                if (branch_stack.empty()) fail("unmatched ')'");
                prev = branch_stack.back();
                branch_stack.pop_back();
                ++pos;
                continue;
            }
            if (auto b = try_bond_symbol()) {
                if (have_pending) fail("two consecutive bond symbols");
                pending = *b;
                have_pending = true;
                continue;
            }
            if (std::isdigit(c) || c == '%') {
                if (prev < 0) fail("ring closure before any atom");
                int digit;
                if (c == '%') {
                    if (pos + 2 >= s.size() || !std::isdigit(s[pos + 1]) || !std::isdigit(s[pos + 2]))
                        fail("'%' must be followed by two digits");
                    digit = (s[pos + 1] - '0') * 10 + (s[pos + 2] - '0');
                    pos += 3;
                } else {
                    digit = c - '0';
                    ++pos;
                }
                const int sym = have_pending ? pending : kUnspecified;
                have_pending = false;
                pending = kUnspecified;
                auto it = rings.find(digit);
                if (it == rings.end()) {
                    rings[digit] = {prev, sym};
                } else {
                    auto [other, open_sym] = it->second;
                    rings.erase(it);
                    int kind = kUnspecified;
                    if (open_sym != kUnspecified && sym != kUnspecified && open_sym != sym)
                        fail("ring bond symbols disagree");
                    kind = open_sym != kUnspecified ? open_sym : sym;
                    add_bond(other, prev, kind);
                }
                continue;
            }
            const size_t atom_pos = pos;
            const int idx = try_atom();
            if (idx < 0) {
                pos = atom_pos;
                fail(std::string("unsupported token '") + c + "'");
            }
            if (prev >= 0) {
                add_bond(prev, idx, have_pending ? pending : kUnspecified);
            } else if (have_pending) {
                fail("bond symbol before first atom");
            }
            have_pending = false;
            pending = kUnspecified;
            prev = idx;
        }
        if (have_pending) fail("dangling bond symbol");
        if (!branch_stack.empty()) fail("unmatched '('");
        if (!rings.empty()) fail("unclosed ring bond " + std::to_string(rings.begin()->first));
        if (atoms.empty()) fail("no atoms");
    }
};

}  // namespace

AnnotatedGraph parse_smiles(const std::string& s, const MolSpec& spec) {
    Parser p{s, spec};
    p.parse();

    // resolve unspecified bonds: aromatic when both ends are aromatic atoms
    // and the bond lies on a cycle, otherwise single
    const auto on_cycle = edge_on_cycle(static_cast<int>(p.atoms.size()), p.bonds);
    for (size_t k = 0; k < p.bonds.size(); ++k) {
        auto& b = p.bonds[k];
        if (b.kind != kUnspecified) continue;
        const bool arom = p.atoms[b.a].aromatic && p.atoms[b.b].aromatic && on_cycle[k];
        b.kind = arom ? kAromatic : kSingle;
    }

    AnnotatedGraph g;
    std::vector<std::array<int, 2>> edges;
    edges.reserve(p.bonds.size());
    for (const auto& b : p.bonds) edges.push_back({b.a, b.b});
    g.skeleton = Skeleton::make(static_cast<int>(p.atoms.size()), std::move(edges));

    g.node_feats = Eigen::MatrixXd::Zero(g.skeleton.n, spec.atom_dim());
    for (size_t i = 0; i < p.atoms.size(); ++i) g.node_feats(static_cast<int>(i), p.atoms[i].type) = 1.0;

    g.edge_feats = Eigen::MatrixXd::Zero(g.skeleton.num_edges(), spec.edge_dim());
    for (const auto& b : p.bonds) {
        const int k = g.skeleton.edge_index(b.a, b.b);
        g.edge_feats(k, b.kind) = 1.0;
    }
    return g;
}

namespace {

int one_hot_index(const Eigen::MatrixXd& m, int row, const char* what) {
    int idx = -1;
    for (int c = 0; c < m.cols(); ++c) {
        const double v = m(row, c);
        if (v == 1.0) {
            if (idx >= 0) throw DataError(std::string(what) + ": row is not one-hot");
            idx = c;
        } else if (v != 0.0) {
            throw DataError(std::string(what) + ": row is not one-hot");
        }
    }
    if (idx < 0) throw DataError(std::string(what) + ": row is not one-hot");
    return idx;
}

struct Writer {
    const AnnotatedGraph& g;
    const MolSpec& spec;
    std::vector<int> atom_type;
    std::vector<int> bond_kind;       // per skeleton edge
    std::vector<bool> atom_aromatic;  // has an incident aromatic bond
    std::vector<bool> bond_cyclic;

    std::string out;
    std::vector<bool> visited;
    std::vector<std::map<int, int>> ring_digits;  // atom -> {neighbor: digit}
    int next_digit = 1;

    void emit_bond(int u, int v) {
        const int k = g.skeleton.edge_index(u, v);
        switch (bond_kind[k]) {
            case kDouble: out += '='; break;
            case kTriple: out += '#'; break;
            case kAromatic:
                if (!(atom_aromatic[u] && atom_aromatic[v] && bond_cyclic[k]))
                    throw DataError("write_smiles: aromatic bond off-cycle cannot be represented");
                break;  // implicit between two lowercase atoms on a ring
            case kSingle:
                // explicit when the default would resolve to aromatic
                if (atom_aromatic[u] && atom_aromatic[v] && bond_cyclic[k]) out += '-';
                break;
            default: break;
        }
    }

    void emit_atom(int v) {
        std::string sym = spec.atoms[atom_type[v]].symbol;
        if (atom_aromatic[v]) {
            for (auto& ch : sym) ch = static_cast<char>(std::tolower(ch));
        }
        out += sym;
    }

    void emit_ring_digit(int d) {
        if (d < 10) {
            out += static_cast<char>('0' + d);
        } else {
            out += '%';
            out += static_cast<char>('0' + d / 10);
            out += static_cast<char>('0' + d % 10);
        }
    }

    void dfs(int v, int parent) {
        visited[v] = true;
        emit_atom(v);
        // open/close ring closures attached to v
        for (auto& [u, d] : ring_digits[v]) {
            if (d == 0) {
                if (next_digit > 99) throw DataError("write_smiles: too many ring closures");
                d = next_digit++;
                ring_digits[u][v] = d;
                emit_ring_digit(d);
            } else {
                emit_bond(v, u);
                emit_ring_digit(d);
            }
        }
        std::vector<int> children;
        const auto adj = neighbors(v);
        for (int u : adj) {
            if (u == parent || visited[u]) continue;
            if (ring_digits[v].count(u)) continue;  // handled as ring closure
            children.push_back(u);
        }
        for (size_t i = 0; i < children.size(); ++i) {
            const int u = children[i];
            if (visited[u]) continue;  // became visited through a sibling? impossible with ring marks
            const bool last = (i + 1 == children.size());
            if (!last) out += '(';
            emit_bond(v, u);
            dfs(u, v);
            if (!last) out += ')';
        }
    }

    std::vector<int> neighbors(int v) const {
        std::vector<int> out;
        for (const auto& e : g.skeleton.edges) {
            if (e[0] == v) out.push_back(e[1]);
            if (e[1] == v) out.push_back(e[0]);
        }
        return out;
    }
};

}  // namespace

std::string write_smiles(const AnnotatedGraph& g, const MolSpec& spec) {
    const int n = g.skeleton.n;
    if (g.node_feats.cols() != spec.atom_dim() || g.edge_feats.cols() != spec.edge_dim())
        throw DataError("write_smiles: feature widths do not match the vocabulary");

    Writer w{g, spec};
    w.atom_type.resize(n);
    for (int i = 0; i < n; ++i) w.atom_type[i] = one_hot_index(g.node_feats, i, "node_feats");
    w.bond_kind.resize(g.skeleton.num_edges());
    w.atom_aromatic.assign(n, false);
    for (int k = 0; k < g.skeleton.num_edges(); ++k) {
        w.bond_kind[k] = one_hot_index(g.edge_feats, k, "edge_feats");
        if (w.bond_kind[k] == kAromatic) {
            w.atom_aromatic[g.skeleton.edges[k][0]] = true;
            w.atom_aromatic[g.skeleton.edges[k][1]] = true;
        }
    }
    {
        std::vector<ParsedBond> bonds;
        for (const auto& e : g.skeleton.edges) bonds.push_back({e[0], e[1], kSingle});
        w.bond_cyclic = edge_on_cycle(n, bonds);
    }

    // spanning DFS; non-tree edges become ring closures (marked before the walk)
    {
        std::vector<bool> seen(n, false);
        std::vector<int> order;
        std::vector<int> stack{0};
        std::vector<int> tree_parent(n, -1);
        seen[0] = true;
        w.ring_digits.resize(n);
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            order.push_back(v);
            for (int u : w.neighbors(v)) {
                if (!seen[u]) {
                    seen[u] = true;
                    tree_parent[u] = v;
                    stack.push_back(u);
                }
            }
        }
        if (static_cast<int>(order.size()) != n)
            throw DataError("write_smiles: graph is disconnected");
        for (const auto& e : g.skeleton.edges) {
            if (tree_parent[e[0]] == e[1] || tree_parent[e[1]] == e[0]) continue;
            w.ring_digits[e[0]][e[1]] = 0;  // digit assigned when first endpoint is written
            w.ring_digits[e[1]][e[0]] = 0;
        }
    }

    w.visited.assign(n, false);
    w.dfs(0, -1);
    return w.out;
}

std::vector<AnnotatedGraph> read_smiles_file(const std::string& path, const MolSpec& spec) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open: " + path);
    std::vector<AnnotatedGraph> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        try {
            out.push_back(parse_smiles(line, spec));
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace ganno
