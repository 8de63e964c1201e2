"""Layered alternating AND/OR circuits with literal leaves.

Layer 1 is the bottom layer (its gates read literals); layer ``depth`` holds
the single output gate. A gate is a tuple of child references: signed 1-based
variable indices (+k for x_k, -k for its negation) in layer 1, indices into
the layer below everywhere else. Gate kinds alternate, fixed by ``top``.
Size counts gates only; literals are free, zero-fanin constant gates count.
"""

from dataclasses import dataclass
from itertools import product
import re

import numpy as np

from .bits import lex_first_array, parity, point_to_str
from .errors import AlternationError, BadShape, BudgetExceeded, DanglingChild, ParseError
from .pointset import PointSet, _n_words, _valid_tail

KINDS = ("AND", "OR")
MAX_DEPTH = 6
ALL_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)
SWEEP_BUDGET = 1 << 27

_LOW_PATTERNS = [
    0xAAAAAAAAAAAAAAAA, 0xCCCCCCCCCCCCCCCC, 0xF0F0F0F0F0F0F0F0,
    0xFF00FF00FF00FF00, 0xFFFF0000FFFF0000, 0xFFFFFFFF00000000,
]


def other(kind):
    return "OR" if kind == "AND" else "AND"


@dataclass(frozen=True)
class Circuit:
    n: int
    top: str
    layers: tuple  # layers[0] is layer 1; each layer is a tuple of gates

    def __post_init__(self):
        if self.top not in KINDS:
            raise AlternationError(f"top kind must be AND or OR, got {self.top!r}")
        if not 1 <= len(self.layers) <= MAX_DEPTH:
            raise BadShape(f"depth must be in 1..{MAX_DEPTH}, got {len(self.layers)}")
        if len(self.layers[-1]) != 1:
            raise BadShape(f"top layer must hold exactly one gate, has {len(self.layers[-1])}")
        for gi, gate in enumerate(self.layers[0]):
            for lit in gate:
                if lit == 0 or abs(lit) > self.n:
                    raise DanglingChild(f"L1.{gi}", _lit_str(lit))
        for li in range(1, len(self.layers)):
            below = len(self.layers[li - 1])
            for gi, gate in enumerate(self.layers[li]):
                for ch in gate:
                    if not 0 <= ch < below:
                        raise DanglingChild(f"L{li + 1}.{gi}", f"L{li}.{ch}")

    @property
    def depth(self):
        return len(self.layers)

    def kind(self, layer):
        """Gate kind of a 1-based layer."""
        return self.top if (self.depth - layer) % 2 == 0 else other(self.top)

    def size(self):
        return sum(len(layer) for layer in self.layers)

    def gate(self, layer, idx):
        return self.layers[layer - 1][idx]

    def children(self, layer, idx):
        return self.layers[layer - 1][idx]

    def variables(self, layer, idx):
        """Variables (1-based) read by the subcircuit rooted at a gate."""
        if layer == 1:
            return frozenset(abs(l) for l in self.gate(1, idx))
        out = set()
        for ch in self.gate(layer, idx):
            out |= self.variables(layer - 1, ch)
        return frozenset(out)

    def evaluate(self, x):
        x = int(x)
        vals = [_apply(self.kind(1), [bool((x >> (abs(l) - 1)) & 1) == (l > 0) for l in g])
                for g in self.layers[0]]
        for li in range(1, self.depth):
            kind = self.kind(li + 1)
            vals = [_apply(kind, [vals[c] for c in g]) for g in self.layers[li]]
        return int(vals[0])

    # truth-table sweeps ---------------------------------------------------

    def sweep(self, budget=SWEEP_BUDGET):
        """Packed truth tables of every gate: one (gates, words) uint64 array per layer."""
        n = self.n
        if (1 << n) > budget:
            raise BudgetExceeded("circuit sweep", 1 << n, budget)
        var_words = variable_words(n)
        tail = _valid_tail(n)
        W = _n_words(n)
        out = []
        kind = self.kind(1)
        rows = np.empty((len(self.layers[0]), W), dtype=np.uint64)
        for gi, g in enumerate(self.layers[0]):
            lits = [var_words[abs(l) - 1] if l > 0 else ~var_words[abs(l) - 1] for l in g]
            rows[gi] = _reduce(kind, lits, W)
        rows[:, -1] &= tail
        out.append(rows)
        for li in range(1, self.depth):
            kind = self.kind(li + 1)
            below = out[-1]
            rows = np.empty((len(self.layers[li]), W), dtype=np.uint64)
            for gi, g in enumerate(self.layers[li]):
                rows[gi] = _reduce(kind, [below[c] for c in g], W)
            rows[:, -1] &= tail
            out.append(rows)
        return out

    def gate_sets(self, layer, tables=None):
        """Accepting set of every gate in a 1-based layer."""
        tables = self.sweep() if tables is None else tables
        return [PointSet(self.n, row) for row in tables[layer - 1]]


def _apply(kind, vals):
    return all(vals) if kind == "AND" else any(vals)


def _reduce(kind, rows, W):
    if not rows:
        return np.full(W, ALL_ONES if kind == "AND" else 0, dtype=np.uint64)
    stack = np.vstack(rows)
    return np.bitwise_and.reduce(stack, axis=0) if kind == "AND" else np.bitwise_or.reduce(stack, axis=0)


def _lit_str(lit):
    return f"+v{lit}" if lit > 0 else f"-v{-lit}"


def variable_words(n):
    """Packed truth table of each coordinate function x -> x_c."""
    W = _n_words(n)
    idx = np.arange(W, dtype=np.uint64)
    out = []
    for c in range(n):
        if c < 6:
            out.append(np.full(W, _LOW_PATTERNS[c], dtype=np.uint64))
        else:
            out.append(np.where((idx >> np.uint64(c - 6)) & np.uint64(1), ALL_ONES, np.uint64(0)).astype(np.uint64))
    return out


def parity_words(n):
    W = _n_words(n)
    acc = np.zeros(W, dtype=np.uint64)
    for w in variable_words(n):
        acc ^= w
    acc[-1] &= _valid_tail(n)
    return acc


def truth_set(c, budget=SWEEP_BUDGET):
    return PointSet(c.n, c.sweep(budget)[-1][0])


def reject_set(c, budget=SWEEP_BUDGET):
    return truth_set(c, budget).complement()


def computes_parity(c, budget=SWEEP_BUDGET):
    """(True, None) or (False, lexicographically first input where c differs from XOR)."""
    diff = PointSet(c.n, c.sweep(budget)[-1][0] ^ parity_words(c.n))
    if not diff:
        return True, None
    return False, lex_first_array(diff.members(), c.n)


# text format ------------------------------------------------------------

_HEADER = re.compile(r"circuit\s+n=(\d+)\s+depth=(\d+)\s+top=(AND|OR)\s*$")
_GATE = re.compile(r"L(\d+)\.(\d+):\s*(AND|OR)\b(.*)$")
_CHILD = re.compile(r"L(\d+)\.(\d+)$")
_LIT = re.compile(r"([+-])v(\d+)$")


def serialize(c):
    lines = [f"circuit n={c.n} depth={c.depth} top={c.top}"]
    for layer in range(c.depth, 0, -1):
        kind = c.kind(layer)
        for gi, g in enumerate(c.layers[layer - 1]):
            if layer == 1:
                kids = [_lit_str(l) for l in g]
            else:
                kids = [f"L{layer - 1}.{ch}" for ch in g]
            lines.append(" ".join([f"L{layer}.{gi}: {kind}"] + kids))
    return "\n".join(lines) + "\n"


def parse(text):
    lines = text.splitlines()
    header = None
    gates = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if header is None:
            m = _HEADER.match(line.strip())
            if not m:
                raise ParseError("expected 'circuit n=<n> depth=<d> top=<AND|OR>'", lineno, 1)
            header = (int(m.group(1)), int(m.group(2)), m.group(3))
            n, depth, top = header
            if not 1 <= depth <= MAX_DEPTH:
                raise ParseError(f"depth {depth} outside 1..{MAX_DEPTH}", lineno, line.index("depth") + 1)
            continue
        indent = len(line) - len(line.lstrip())
        m = _GATE.match(line.strip())
        if not m:
            raise ParseError("expected 'L<layer>.<idx>: <AND|OR> <children>'", lineno, indent + 1)
        layer, idx, kind = int(m.group(1)), int(m.group(2)), m.group(3)
        name = f"L{layer}.{idx}"
        if not 1 <= layer <= depth:
            raise ParseError(f"layer {layer} outside 1..{depth}", lineno, indent + 1)
        expected = top if (depth - layer) % 2 == 0 else other(top)
        if kind != expected:
            raise AlternationError(f"line {lineno}: {name} is {kind}, layer {layer} must be {expected}")
        if (layer, idx) in gates:
            raise ParseError(f"duplicate gate {name}", lineno, indent + 1)
        children = []
        rest = m.group(4)
        col0 = indent + m.start(4) + 1
        for tok_m in re.finditer(r"\S+", rest):
            tok = tok_m.group(0)
            col = col0 + tok_m.start()
            lm = _LIT.match(tok)
            cm = _CHILD.match(tok)
            if lm:
                if layer != 1:
                    raise ParseError(f"literal {tok} above the bottom layer", lineno, col)
                v = int(lm.group(2))
                if not 1 <= v <= n:
                    raise DanglingChild(name, tok)
                children.append(v if lm.group(1) == "+" else -v)
            elif cm:
                cl, ci = int(cm.group(1)), int(cm.group(2))
                if layer == 1 or cl != layer - 1:
                    raise ParseError(f"child {tok} must come from layer {layer - 1}", lineno, col)
                children.append(ci)
            else:
                raise ParseError(f"bad child token {tok!r}", lineno, col)
        gates[(layer, idx)] = (tuple(children), lineno)
    if header is None:
        raise ParseError("empty circuit file", max(len(lines), 1), 1)
    n, depth, top = header
    layers = []
    for layer in range(1, depth + 1):
        idxs = sorted(i for (l, i) in gates if l == layer)
        if idxs != list(range(len(idxs))):
            missing = next(i for i in range(len(idxs) + 1) if i not in idxs)
            raise ParseError(f"layer {layer} gate indices must be 0..k-1; L{layer}.{missing} missing",
                             gates[(layer, idxs[-1])][1] if idxs else 1, 1)
        layers.append(tuple(gates[(layer, i)][0] for i in idxs))
    for layer in range(2, depth + 1):
        below = len(layers[layer - 2])
        for gi, g in enumerate(layers[layer - 1]):
            for ch in g:
                if ch >= below:
                    raise DanglingChild(f"L{layer}.{gi}", f"L{layer - 1}.{ch}")
    if len(layers[-1]) != 1:
        raise ParseError(f"top layer must hold exactly one gate, has {len(layers[-1])}", 1, 1)
    return Circuit(n, top, tuple(layers))


def load(path):
    with open(path) as fh:
        return parse(fh.read())


def dump(c, path):
    with open(path, "w") as fh:
        fh.write(serialize(c))


# construction -------------------------------------------------------------
#
# Expressions are nested tuples: ("lit", +-v) or (kind, (child, ...)).


def compile_expr(expr, n, depth, top):
    """Layer an expression tree of exactly ``depth`` gate levels, sharing equal gates."""
    tables = [dict() for _ in range(depth)]
    layers = [[] for _ in range(depth)]

    def visit(e, layer):
        kind, kids = e
        expected = top if (depth - layer) % 2 == 0 else other(top)
        if kind != expected:
            raise AlternationError(f"expression has {kind} at layer {layer}, expected {expected}")
        if layer == 1:
            key = tuple(sorted(set(k[1] for k in kids), key=lambda l: (abs(l), l < 0)))
            if any(k[0] != "lit" for k in kids):
                raise BadShape("only literals may feed layer 1")
        else:
            key = tuple(sorted(set(visit(k, layer - 1) for k in kids)))
        if key not in tables[layer - 1]:
            tables[layer - 1][key] = len(layers[layer - 1])
            layers[layer - 1].append(key)
        return tables[layer - 1][key]

    visit(expr, depth)
    return Circuit(n, top, tuple(tuple(l) for l in layers))


def _parity_expr(vars_, target, depth, top):
    """Expression with ``depth`` gate levels (top kind ``top``) for XOR(vars) == target.

    The n = m^(depth-1) variables are split into m groups; the outer XOR of
    group parities is written as a DNF (OR top) or CNF (AND top) whose
    inner gates absorb the top gates of the group subcircuits. At depth 1 a
    group is a single variable and becomes a literal.
    """
    if depth == 1:
        (v,) = vars_
        return ("lit", v if target else -v)
    m = integer_root(len(vars_), depth - 1)
    size = len(vars_) // m
    groups = [vars_[j * size:(j + 1) * size] for j in range(m)]
    inner = other(top)
    terms = []
    for a in product((0, 1), repeat=m):
        if top == "OR":
            if sum(a) % 2 != target:
                continue
            subs = [_parity_expr(g, aj, depth - 1, inner) for g, aj in zip(groups, a)]
        else:
            if sum(a) % 2 == target:
                continue
            subs = [_parity_expr(g, 1 - aj, depth - 1, inner) for g, aj in zip(groups, a)]
        kids = []
        for sub in subs:
            if sub[0] == "lit":
                kids.append(sub)
            else:
                kids.extend(sub[1])
        terms.append((inner, tuple(kids)))
    return (top, tuple(terms))


def integer_root(n, k):
    m = round(n ** (1 / k))
    for cand in (m - 1, m, m + 1):
        if cand >= 1 and cand ** k == n:
            return cand
    return None


def parity_circuit(n, depth=None, top=None):
    """Layered circuit for n-bit parity by recursive block decomposition.

    ``n = m^2`` gives depth 3 (OR top), ``n = m^3`` depth 4 (AND top). With
    an explicit ``depth``, n must equal m^(depth-1).
    """
    if n == 1 and depth is None:
        return Circuit(1, top or "OR", (((1,),),))
    if depth is None:
        if integer_root(n, 2) is not None:
            depth = 3
        elif integer_root(n, 3) is not None:
            depth = 4
        else:
            raise BadShape(f"n={n} is neither a perfect square nor a perfect cube")
    if depth < 2:
        raise BadShape("parity needs depth >= 2 for n > 1")
    if integer_root(n, depth - 1) is None:
        raise BadShape(f"n={n} is not a perfect power m^{depth - 1}")
    top = top or ("OR" if depth % 2 else "AND")
    return compile_expr(_parity_expr(list(range(1, n + 1)), 1, depth, top), n, depth, top)


def const_shell(n, depth, value=1, top=None):
    """A circuit of the given shape computing a constant, built from x1 OR NOT x1."""
    top = top or ("OR" if depth % 2 else "AND")
    bottom = top if (depth - 1) % 2 == 0 else other(top)
    # OR(x1, -x1) = 1 and AND() = 1; AND(x1, -x1) = 0 and OR() = 0
    if bottom == "OR":
        leaf = (1, -1) if value else ()
    else:
        leaf = () if value else (1, -1)
    layers = [(leaf,)] + [((0,),) for _ in range(depth - 1)]
    return Circuit(n, top, tuple(layers))


def random_circuit(n, depth, fanins, seed, top=None, max_width=12):
    """Random layered circuit; ``fanins`` is an int or a per-layer list (top first)."""
    rng = np.random.default_rng(seed)
    if isinstance(fanins, int):
        fanins = [fanins] * depth
    if len(fanins) != depth or min(fanins) < 1:
        raise ValueError("need one fanin >= 1 per layer")
    top = top or ("OR" if depth % 2 else "AND")
    widths = [1]
    for f in fanins[:-1]:
        widths.append(min(max_width, widths[-1] * f))
    layers_top_down = []
    for li, (w, f) in enumerate(zip(widths, fanins)):
        gates = []
        bottom = li == depth - 1
        for _ in range(w):
            if bottom:
                vs = rng.choice(n, size=min(f, n), replace=False) + 1
                signs = rng.integers(0, 2, size=vs.size)
                gates.append(tuple(int(v) if s else -int(v) for v, s in zip(sorted(vs), signs)))
            else:
                below = widths[li + 1]
                kids = rng.choice(below, size=min(f, below), replace=False)
                gates.append(tuple(sorted(int(k) for k in kids)))
        layers_top_down.append(tuple(gates))
    return Circuit(n, top, tuple(reversed(layers_top_down)))


def delete_child(c, layer, idx, pos):
    layers = [list(l) for l in c.layers]
    g = list(layers[layer - 1][idx])
    del g[pos]
    layers[layer - 1][idx] = tuple(g)
    return Circuit(c.n, c.top, tuple(tuple(l) for l in layers))


def inject_fault(c, seed, min_layer=2):
    """Delete one random child edge from a random gate at layer >= min_layer."""
    rng = np.random.default_rng(seed)
    slots = [(li, gi, pi)
             for li in range(min_layer, c.depth + 1)
             for gi, g in enumerate(c.layers[li - 1])
             for pi in range(len(g))]
    if not slots:
        raise BadShape("no edge to delete")
    li, gi, pi = slots[int(rng.integers(len(slots)))]
    return delete_child(c, li, gi, pi), (li, gi, pi)


def xor_value(x):
    return parity(x)


def describe(c):
    return (f"depth-{c.depth} {'∘'.join(c.kind(l) for l in range(c.depth, 0, -1))} circuit, "
            f"n={c.n}, size={c.size()}")


def truth_table_strings(c):
    return {point_to_str(x, c.n): c.evaluate(x) for x in range(1 << c.n)}
