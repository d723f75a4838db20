#!/usr/bin/env python3
"""Generates the bundled molecular corpus and its reference-count fixture.

Pure-stdlib implementation, fully independent of the C++ codec: molecules are
built as random graphs under the valence table (C:4, N:3, O:2, F:1; bond
orders 1, 2, 3, 1.5), serialized to SMILES by a Python writer, then re-read
by a Python parser. The fixture freezes this tool's atom/bond counts so the
C++ parser can be cross-checked against an independent implementation.

Usage: make_molecule_corpus.py [--count 5000] [--fixture-count 500]
                               [--out DIR] [--seed 20240501]
"""

import argparse
import json
import random
from collections import Counter

MAX_VALENCE = {"C": 4, "N": 3, "O": 2, "F": 1}
ELEMENTS = ["C", "N", "O", "F"]
ELEMENT_WEIGHTS = [0.72, 0.11, 0.15, 0.02]
AROMATIC_OK = {"C", "N", "O"}
BOND_ORDER = {"single": 1.0, "double": 2.0, "triple": 3.0, "aromatic": 1.5}
N_ATOM_WEIGHTS = {1: 0.5, 2: 1, 3: 2, 4: 4, 5: 8, 6: 12, 7: 18, 8: 26, 9: 28.5}


class Mol:
    def __init__(self):
        self.elements = []  # per atom
        self.bonds = {}  # (lo, hi) -> kind string

    @property
    def n(self):
        return len(self.elements)

    def add_bond(self, a, b, kind):
        self.bonds[(min(a, b), max(a, b))] = kind

    def neighbors(self, v):
        out = []
        for (a, b), kind in self.bonds.items():
            if a == v:
                out.append((b, kind))
            elif b == v:
                out.append((a, kind))
        return out

    def valence_sum(self, v):
        return sum(BOND_ORDER[kind] for _, kind in self.neighbors(v))

    def spare(self, v):
        return MAX_VALENCE[self.elements[v]] - self.valence_sum(v)


def bridges(n, edges):
    """Set of bridge edges (edges on no cycle)."""
    adj = {v: [] for v in range(n)}
    for i, (a, b) in enumerate(edges):
        adj[a].append((b, i))
        adj[b].append((a, i))
    disc, low = {}, {}
    out = set()
    timer = [0]

    def dfs(root):
        stack = [(root, -1, iter(adj[root]))]
        disc[root] = low[root] = timer[0]
        timer[0] += 1
        while stack:
            v, pe, it = stack[-1]
            advanced = False
            for u, ei in it:
                if ei == pe:
                    continue
                if u not in disc:
                    disc[u] = low[u] = timer[0]
                    timer[0] += 1
                    stack.append((u, ei, iter(adj[u])))
                    advanced = True
                    break
                low[v] = min(low[v], disc[u])
            if not advanced:
                stack.pop()
                if pe >= 0:
                    p = stack[-1][0]
                    low[p] = min(low[p], low[v])
                    if low[v] > disc[p]:
                        out.add(pe)
    for v in range(n):
        if v not in disc:
            dfs(v)
    return {edges[i] for i in out}


def tree_distance(mol, a, b):
    from collections import deque

    seen = {a: 0}
    q = deque([a])
    while q:
        v = q.popleft()
        for u, _ in mol.neighbors(v):
            if u not in seen:
                seen[u] = seen[v] + 1
                q.append(u)
    return seen.get(b, -1)


def random_molecule(rng):
    n = rng.choices(list(N_ATOM_WEIGHTS), weights=list(N_ATOM_WEIGHTS.values()))[0]
    mol = Mol()
    mol.elements = ["C"] * n  # assigned later; start permissive
    deg = [0] * n
    first_free = 0
    # ring-first growth for a fair share of cyclic (and aromatic) molecules
    if n >= 6 and rng.random() < 0.35:
        ring_len = rng.choice([5, 6]) if n >= 6 else 5
        ring_len = min(ring_len, n)
        for v in range(ring_len):
            u = (v + 1) % ring_len
            mol.add_bond(v, u, "single")
            deg[v] += 1
            deg[u] += 1
        first_free = ring_len
    # random spanning tree with degree cap 4 over the remaining atoms
    for v in range(max(1, first_free), n):
        candidates = [u for u in range(v) if deg[u] < 4]
        parent = rng.choice(candidates)
        mol.add_bond(parent, v, "single")
        deg[parent] += 1
        deg[v] += 1

    # optional ring-closing edges
    ring_attempts = rng.choices([0, 1, 2], weights=[45, 45, 10])[0]
    for _ in range(ring_attempts):
        if n < 3:
            break
        a, b = rng.randrange(n), rng.randrange(n)
        if a == b or (min(a, b), max(a, b)) in mol.bonds:
            continue
        if deg[a] >= 4 or deg[b] >= 4:
            continue
        d = tree_distance(mol, a, b)
        if d < 2 or d > 5:
            continue
        mol.add_bond(a, b, "single")
        deg[a] += 1
        deg[b] += 1

    # element assignment honoring degrees
    for v in range(n):
        choices, weights = [], []
        for el, w in zip(ELEMENTS, ELEMENT_WEIGHTS):
            if MAX_VALENCE[el] >= deg[v]:
                choices.append(el)
                weights.append(w)
        mol.elements[v] = rng.choices(choices, weights=weights)[0]

    # aromatize one 5/6-ring occasionally
    if rng.random() < 0.45:
        ring = find_small_ring(mol, rng)
        if ring is not None and all(
            mol.elements[v] in AROMATIC_OK for v in ring
        ):
            ring_edges = list(zip(ring, ring[1:] + ring[:1]))
            ok = True
            for v in ring:
                # two aromatic ring bonds cost 3.0, the rest stays single
                extra = sum(1 for u, _ in mol.neighbors(v) if u not in ring) + sum(
                    1
                    for a, b in ring_edges
                    if (v in (a, b)) and (min(a, b), max(a, b)) not in
                    {(min(x, y), max(x, y)) for x, y in ring_edges}
                )
                non_ring = sum(1 for u, _ in mol.neighbors(v) if
                               (min(u, v), max(u, v)) not in
                               {(min(x, y), max(x, y)) for x, y in ring_edges})
                if 3.0 + non_ring > MAX_VALENCE[mol.elements[v]]:
                    ok = False
            if ok:
                for a, b in ring_edges:
                    mol.add_bond(a, b, "aromatic")

    # upgrade some single bonds to double/triple where spare valence allows
    for (a, b), kind in list(mol.bonds.items()):
        if kind != "single":
            continue
        r = rng.random()
        if r < 0.12 and mol.spare(a) >= 1 and mol.spare(b) >= 1:
            mol.bonds[(a, b)] = "double"
        elif r < 0.14 and mol.spare(a) >= 2 and mol.spare(b) >= 2:
            mol.bonds[(a, b)] = "triple"

    # final validity check under the valence model
    for v in range(n):
        if mol.valence_sum(v) > MAX_VALENCE[mol.elements[v]] + 1e-9:
            return None
    arom = [e for e, k in mol.bonds.items() if k == "aromatic"]
    if arom:
        br = bridges(n, list(mol.bonds))
        if any(e in br for e in arom):
            return None
    return mol


def find_small_ring(mol, rng):
    """A random simple cycle of length 5 or 6, as an ordered vertex list."""
    edges = list(mol.bonds)
    rng.shuffle(edges)
    adj = {v: [u for u, _ in mol.neighbors(v)] for v in range(mol.n)}

    def dfs(path, target, length):
        v = path[-1]
        if len(path) == length:
            return path if target in adj[v] else None
        for u in adj[v]:
            if u in path:
                continue
            got = dfs(path + [u], target, length)
            if got:
                return got
        return None

    for a, b in edges:
        for length in rng.sample([5, 6], 2):
            got = dfs([a, b], a, length)
            if got:
                return got
    return None


# --- independent SMILES writer ------------------------------------------------


def to_smiles(mol):
    aromatic_atom = [False] * mol.n
    for (a, b), kind in mol.bonds.items():
        if kind == "aromatic":
            aromatic_atom[a] = aromatic_atom[b] = True
    br = bridges(mol.n, list(mol.bonds))
    on_cycle = {e: e not in br for e in mol.bonds}

    # spanning tree + ring closures
    visited = [False] * mol.n
    tree = set()
    stack = [0]
    visited[0] = True
    order = []
    parent = {0: None}
    while stack:
        v = stack.pop()
        order.append(v)
        for u, _ in sorted(mol.neighbors(v)):
            if not visited[u]:
                visited[u] = True
                parent[u] = v
                tree.add((min(u, v), max(u, v)))
                stack.append(u)
    assert all(visited), "molecule must be connected"
    ring_edges = [e for e in mol.bonds if e not in tree]
    ring_digit = {}
    digits = iter(range(1, 100))
    pieces = []

    def bond_sym(a, b):
        kind = mol.bonds[(min(a, b), max(a, b))]
        if kind == "double":
            return "="
        if kind == "triple":
            return "#"
        if kind == "aromatic":
            return ""
        # single: explicit when both ends are aromatic and the edge is cyclic
        if aromatic_atom[a] and aromatic_atom[b] and on_cycle[(min(a, b), max(a, b))]:
            return "-"
        return ""

    def atom_sym(v):
        s = mol.elements[v]
        return s.lower() if aromatic_atom[v] else s

    def emit(v, par):
        pieces.append(atom_sym(v))
        for a, b in ring_edges:
            if v in (a, b):
                other = b if v == a else a
                key = (a, b)
                if key not in ring_digit:
                    ring_digit[key] = next(digits)
                    pieces.append(str(ring_digit[key]) if ring_digit[key] < 10
                                  else "%%%02d" % ring_digit[key])
                else:
                    pieces.append(bond_sym(v, other))
                    pieces.append(str(ring_digit[key]) if ring_digit[key] < 10
                                  else "%%%02d" % ring_digit[key])
        kids = [u for u, _ in sorted(mol.neighbors(v))
                if u != par and (min(u, v), max(u, v)) in tree and parent.get(u) == v]
        for i, u in enumerate(kids):
            last = i + 1 == len(kids)
            if not last:
                pieces.append("(")
            pieces.append(bond_sym(v, u))
            emit(u, v)
            if not last:
                pieces.append(")")

    emit(0, None)
    return "".join(pieces)


# --- independent SMILES parser --------------------------------------------------


def parse_smiles(s):
    """Returns (elements, bonds dict) for the supported subset."""
    elements = []
    aromatic = []
    bonds = {}
    ring = {}
    stack = []
    prev = None
    pending = None
    i = 0

    def add_bond(a, b, kind):
        key = (min(a, b), max(a, b))
        if key in bonds:
            raise ValueError("duplicate bond")
        bonds[key] = kind

    while i < len(s):
        c = s[i]
        if c == "(":
            stack.append(prev)
            i += 1
        elif c == ")":
            prev = stack.pop()
            i += 1
        elif c in "-=#":
            pending = {"-": "single", "=": "double", "#": "triple"}[c]
            i += 1
        elif c.isdigit() or c == "%":
            if c == "%":
                digit = int(s[i + 1 : i + 3])
                i += 3
            else:
                digit = int(c)
                i += 1
            if digit in ring:
                other, osym = ring.pop(digit)
                sym = pending or osym
                add_bond(other, prev, sym)
            else:
                ring[digit] = (prev, pending)
            pending = None
        else:
            if c.isupper():
                sym = s[i : i + 2] if s[i : i + 2] in MAX_VALENCE else c
                arom = False
            else:
                sym = c.upper()
                arom = True
            if sym not in MAX_VALENCE:
                raise ValueError(f"unknown element at {i}")
            i += len(sym) if c.isupper() else 1
            elements.append(sym)
            aromatic.append(arom)
            idx = len(elements) - 1
            if prev is not None:
                add_bond(prev, idx, pending)  # None = unspecified
            pending = None
            prev = idx
    if ring:
        raise ValueError("unclosed ring")

    # resolve unspecified bonds
    br = bridges(len(elements), list(bonds))
    for key, kind in list(bonds.items()):
        if kind is None:
            a, b = key
            if aromatic[a] and aromatic[b] and key not in br:
                bonds[key] = "aromatic"
            else:
                bonds[key] = "single"
    return elements, bonds


def wl_key(elements, bonds):
    """Isomorphism-invariant key (WL refinement over element+bond colors)."""
    n = len(elements)
    adj = {v: [] for v in range(n)}
    for (a, b), kind in bonds.items():
        adj[a].append((b, kind))
        adj[b].append((a, kind))
    color = {v: hash((elements[v],)) for v in range(n)}
    for _ in range(n):
        color = {
            v: hash((color[v], tuple(sorted((kind, color[u]) for u, kind in adj[v]))))
            for v in range(n)
        }
    return hash((n, tuple(sorted(color.values())), tuple(sorted(Counter(bonds.values()).items()))))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=5000)
    ap.add_argument("--fixture-count", type=int, default=500)
    ap.add_argument("--out", default="data")
    ap.add_argument("--seed", type=int, default=20240501)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    seen = set()
    corpus = []
    attempts = 0
    while len(corpus) < args.count:
        attempts += 1
        mol = random_molecule(rng)
        if mol is None:
            continue
        smi = to_smiles(mol)
        elements, bonds = parse_smiles(smi)
        # self-check: the parsed molecule must match what was generated
        assert sorted(elements) == sorted(mol.elements), smi
        assert Counter(bonds.values()) == Counter(mol.bonds.values()), smi
        key = wl_key(elements, bonds)
        if key in seen:
            continue
        seen.add(key)
        corpus.append(smi)

    import os

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "qm9_like.smi"), "w") as f:
        f.write("\n".join(corpus) + "\n")

    fixture = []
    for smi in corpus[: args.fixture_count]:
        elements, bonds = parse_smiles(smi)
        fixture.append(
            {
                "smiles": smi,
                "n_atoms": len(elements),
                "n_bonds": len(bonds),
                "atoms": dict(Counter(elements)),
                "bonds": dict(Counter(bonds.values())),
            }
        )
    with open(os.path.join(args.out, "qm9_like_counts.json"), "w") as f:
        json.dump({"tool": "python-stdlib reference codec", "molecules": fixture}, f, indent=1)

    lens = Counter(len(parse_smiles(s)[0]) for s in corpus)
    print(f"wrote {len(corpus)} molecules ({attempts} attempts); size histogram: "
          f"{dict(sorted(lens.items()))}")


if __name__ == "__main__":
    main()
