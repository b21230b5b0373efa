"""Molecular graphs from a SMILES subset, and r-radius vertex typing.

Supported SMILES: organic-subset atoms ``B C N O P S F Cl Br I``, bracket
atoms ``[X]`` (optionally with an explicit H count, which is discarded),
bonds ``- = #``, branches and ring-closure digits 1-9. Aromatic atoms,
stereo marks, charges, isotopes and disconnected components are rejected.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from synergy.errors import FormatError, ParseError

SINGLE, DOUBLE, TRIPLE = 1, 2, 3
BOND_SYMBOLS = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE}
ORGANIC = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")

# Used only to validate bracket-atom symbols.
ELEMENTS = frozenset(
    """H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu
    Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba
    La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi
    Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg Bh Hs Mt Ds
    Rg Cn Nh Fl Mc Lv Ts Og""".split()
)

_BRACKET = re.compile(r"\[([A-Z][a-z]?)(H\d?)?\]")


@dataclass(frozen=True)
class MolecularGraph:
    atoms: tuple
    bonds: tuple  # (i, j, order) with i < j

    def __post_init__(self):
        atoms = tuple(self.atoms)
        n = len(atoms)
        if n == 0:
            raise ValueError("a molecule needs at least one atom")
        seen = set()
        bonds = []
        for i, j, order in self.bonds:
            i, j, order = int(i), int(j), int(order)
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ValueError(f"invalid bond ({i}, {j})")
            if order not in (SINGLE, DOUBLE, TRIPLE):
                raise ValueError(f"invalid bond order {order}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate bond {key}")
            seen.add(key)
            bonds.append((key[0], key[1], order))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "bonds", tuple(bonds))
        if not _connected(n, self.bonds):
            raise ValueError("molecule graph is not connected")

    @property
    def n_atoms(self):
        return len(self.atoms)

    def neighbors(self):
        """Adjacency list of (neighbor, bond order) per vertex."""
        adj = [[] for _ in self.atoms]
        for i, j, order in self.bonds:
            adj[i].append((j, order))
            adj[j].append((i, order))
        return adj

    def relabel(self, perm):
        """Graph with old vertex ``v`` moved to position ``perm[v]``."""
        atoms = [None] * self.n_atoms
        for old, new in enumerate(perm):
            atoms[new] = self.atoms[old]
        bonds = [(perm[i], perm[j], o) for i, j, o in self.bonds]
        return MolecularGraph(tuple(atoms), tuple(bonds))


def _connected(n, bonds):
    adj = [[] for _ in range(n)]
    for i, j, _ in bonds:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == n


def parse_smiles_subset(s: str) -> MolecularGraph:
    atoms = []
    bonds = {}
    stack = []
    prev = None
    pending = None  # explicit bond order waiting for its next atom
    pending_at = 0
    rings = {}  # digit -> (atom index, bond order or None, offset)
    pos = 0

    def add_bond(i, j, order, at):
        key = (min(i, j), max(i, j))
        if i == j or key in bonds:
            raise ParseError("ring closure creates an invalid bond", at)
        bonds[key] = order

    while pos < len(s):
        ch = s[pos]
        start = pos
        symbol = None
        if ch == "[":
            m = _BRACKET.match(s, pos)
            if m is None or m.group(1) not in ELEMENTS:
                raise ParseError("unsupported bracket atom", pos)
            symbol = m.group(1)
            pos = m.end()
        elif s.startswith(("Cl", "Br"), pos):
            symbol = s[pos:pos + 2]
            pos += 2
        elif ch in "BCNOPSFI":
            symbol = ch
            pos += 1
        if symbol is not None:
            idx = len(atoms)
            atoms.append(symbol)
            if prev is not None:
                add_bond(prev, idx, pending or SINGLE, start)
            elif pending is not None:
                raise ParseError("bond symbol without a preceding atom", pending_at)
            pending = None
            prev = idx
            continue
        if ch in BOND_SYMBOLS:
            if pending is not None:
                raise ParseError("consecutive bond symbols", pos)
            pending, pending_at = BOND_SYMBOLS[ch], pos
        elif ch == "(":
            if prev is None or pending is not None:
                raise ParseError("branch must follow an atom", pos)
            stack.append((prev, pos))
        elif ch == ")":
            if not stack:
                raise ParseError("unmatched ')'", pos)
            if pending is not None:
                raise ParseError("dangling bond symbol", pending_at)
            prev, _ = stack.pop()
        elif ch in "123456789":
            if prev is None:
                raise ParseError("ring-closure digit without a preceding atom", pos)
            if ch in rings:
                other, order, _ = rings.pop(ch)
                if order is not None and pending is not None and order != pending:
                    raise ParseError("conflicting ring-closure bond orders", pos)
                add_bond(other, prev, pending or order or SINGLE, pos)
            else:
                rings[ch] = (prev, pending, pos)
            pending = None
        else:
            raise ParseError(f"unsupported token {ch!r}", pos)
        pos += 1

    if stack:
        raise ParseError("unmatched '('", stack[-1][1])
    if rings:
        raise ParseError("unclosed ring-closure digit", min(r[2] for r in rings.values()))
    if pending is not None:
        raise ParseError("dangling bond symbol", pending_at)
    if not atoms:
        raise ParseError("empty SMILES", 0)
    edge_list = tuple((i, j, o) for (i, j), o in sorted(bonds.items()))
    return MolecularGraph(tuple(atoms), edge_list)


def load_structures(path) -> dict:
    """Read ``id,smiles`` rows into a mapping id -> SMILES text (unparsed)."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines or [c.strip() for c in lines[0].split(",")] != ["id", "smiles"]:
        raise FormatError(f"{path}: header must be id,smiles")
    out = {}
    for lineno, line in enumerate(lines[1:], start=2):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 2:
            raise FormatError(f"{path}:{lineno}: expected 2 fields")
        if cells[0] in out:
            raise FormatError(f"{path}:{lineno}: duplicate id {cells[0]!r}")
        out[cells[0]] = cells[1]
    return out


def parse_plain_graphs(text: str) -> list[MolecularGraph]:
    """Parse ``atom <index> <element>`` / ``bond <i> <j> <order>`` blocks."""
    graphs = []
    for block in re.split(r"\n\s*\n", text.strip()):
        if not block.strip():
            continue
        atoms = {}
        bonds = []
        for line in block.splitlines():
            parts = line.split()
            if not parts:
                continue
            try:
                if parts[0] == "atom" and len(parts) == 3:
                    atoms[int(parts[1])] = parts[2]
                elif parts[0] == "bond" and len(parts) == 4:
                    bonds.append((int(parts[1]), int(parts[2]), int(parts[3])))
                else:
                    raise FormatError(f"bad plain-graph line: {line!r}")
            except ValueError as exc:
                if isinstance(exc, FormatError):
                    raise
                raise FormatError(f"bad plain-graph line: {line!r}") from None
        if sorted(atoms) != list(range(len(atoms))):
            raise FormatError("atom indices must be 0..n-1")
        try:
            graphs.append(MolecularGraph(tuple(atoms[i] for i in range(len(atoms))), tuple(bonds)))
        except ValueError as exc:
            raise FormatError(str(exc)) from None
    return graphs


def format_plain_graph(graph: MolecularGraph) -> str:
    lines = [f"atom {i} {a}" for i, a in enumerate(graph.atoms)]
    lines += [f"bond {i} {j} {o}" for i, j, o in graph.bonds]
    return "\n".join(lines)


def parse_structure(text: str) -> MolecularGraph:
    """SMILES, or a single plain-graph block when the text starts with ``atom``."""
    if text.lstrip().startswith("atom"):
        graphs = parse_plain_graphs(text)
        if len(graphs) != 1:
            raise FormatError("expected exactly one plain-graph molecule")
        return graphs[0]
    return parse_smiles_subset(text)


def neighborhood_encoding(graph: MolecularGraph, vertex: int, radius: int, use_bond_order=True, adj=None):
    """Canonical nested-tuple form of the radius-limited unfolding around ``vertex``.

    Children are expanded without stepping straight back to the parent and are
    sorted by (bond order, atom label, encoding).
    """
    if adj is None:
        adj = graph.neighbors()

    def expand(v, parent, depth):
        if depth == 0:
            return (graph.atoms[v], ())
        children = []
        for u, order in adj[v]:
            if u == parent:
                continue
            sub = expand(u, v, depth - 1)
            children.append((order if use_bond_order else 0, sub[0], sub))
        children.sort()
        return (graph.atoms[v], tuple(children))

    return expand(vertex, -1, radius)


@dataclass
class SubgraphDictionary:
    radius: int
    use_bond_order: bool = True
    entries: dict = field(default_factory=dict)
    frozen: bool = False

    @property
    def unknown_id(self) -> int:
        return len(self.entries)

    @property
    def n_types(self) -> int:
        """Number of embedding rows needed, including the unknown row."""
        return len(self.entries) + 1

    def lookup(self, encoding) -> int:
        idx = self.entries.get(encoding)
        if idx is not None:
            return idx
        if self.frozen:
            return self.unknown_id
        idx = len(self.entries)
        self.entries[encoding] = idx
        return idx

    def freeze(self):
        self.frozen = True
        return self


def assign_r_radius_types(graph: MolecularGraph, r: int, dictionary: SubgraphDictionary) -> list[int]:
    if dictionary.radius != r:
        raise ValueError(f"dictionary radius {dictionary.radius} != {r}")
    adj = graph.neighbors()
    encodings = [
        neighborhood_encoding(graph, v, r, dictionary.use_bond_order, adj) for v in range(graph.n_atoms)
    ]
    return [dictionary.lookup(e) for e in encodings]
