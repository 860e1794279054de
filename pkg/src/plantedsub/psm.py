"""The r-party single-round private evaluation protocol.

A public function table over [0, k)^r is written onto the cross
hyperedges of an r-partite template (one part per party, part i's
input x sitting at vertex i*k + x); all remaining template coordinates
are coins.  The template is hidden inside a published host graph by a
private injection.  Each party forwards its input vertex's host label,
and the evaluator reads the host coordinate at the r labels, which is
the function value by construction.

Security is simulation-based against input selectors that may read the
function table: the simulator fabricates a host and r distinct labels
forcing only the output coordinate, and a label-shuffling reduction
maps planted-vs-null ensembles onto real-vs-simulated transcripts.
Both directions of that map are exposed as exact ensemble enumerators
so the distributional identities can be checked outright at desk
scale.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import GuardExceeded, ValidationError
from .hypercore import (Embedding, Hypergraph, binom, bit_to_spin, rank_subset,
                        relabel, spin_to_bit, subset_table)
from .models import ModelParams, sample_embedding

PSM_STATE_GUARD = 5_000_000


@dataclass(frozen=True)
class FunctionTable:
    """Total function [0, k)^r -> {-1, +1}, stored row-major."""

    k: int
    r: int
    spins: tuple[int, ...]

    def __post_init__(self):
        if self.k < 1 or self.r < 2:
            raise ValidationError("need k >= 1 and r >= 2")
        if len(self.spins) != self.k ** self.r:
            raise ValidationError(f"table needs {self.k ** self.r} entries")
        if any(s not in (-1, 1) for s in self.spins):
            raise ValidationError("table values must be spins in {-1, +1}")

    def index(self, inputs) -> int:
        idx = 0
        for x in inputs:
            if not 0 <= x < self.k:
                raise ValidationError(f"input {x} out of range [0, {self.k})")
            idx = idx * self.k + x
        return idx

    def value(self, inputs) -> int:
        """The spin F(x_1, ..., x_r)."""
        if len(inputs) != self.r:
            raise ValidationError(f"expected {self.r} inputs")
        return self.spins[self.index(inputs)]

    def bit(self, inputs) -> int:
        return spin_to_bit(self.value(inputs))

    @classmethod
    def random(cls, k: int, r: int, rng) -> "FunctionTable":
        bits = rng.integers(0, 2, size=k ** r)
        return cls(k, r, tuple(bit_to_spin(int(b)) for b in bits))

    @classmethod
    def from_bits(cls, k: int, r: int, bits) -> "FunctionTable":
        return cls(k, r, tuple(bit_to_spin(int(b)) for b in bits))

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(spin_to_bit(s) for s in self.spins)

    def to_json_dict(self) -> dict:
        return {"k": self.k, "r": self.r, "bits": list(self.bits)}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "FunctionTable":
        try:
            return cls.from_bits(int(obj["k"]), int(obj["r"]), obj["bits"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed function table JSON: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "FunctionTable":
        return cls.from_json_dict(json.loads(text))


def part_vertex(x: int, i: int, k: int) -> int:
    """Vertex index of input x at party i: parts are consecutive blocks of k."""
    return i * k + x


def cross_set(inputs, k: int) -> tuple[int, ...]:
    """The hyperedge carrying F at one input tuple; already sorted by part."""
    return tuple(part_vertex(x, i, k) for i, x in enumerate(inputs))


def embed_function(f: FunctionTable, rng) -> Hypergraph:
    """Template on r*k vertices: cross hyperedges carry the table, all other
    coordinates are independent coins."""
    n_v = f.r * f.k
    bits = rng.integers(0, 2, size=binom(n_v, f.r), dtype=np.uint8)
    for inputs in itertools.product(range(f.k), repeat=f.r):
        bits[rank_subset(cross_set(inputs, f.k), n_v)] = f.bit(inputs)
    return Hypergraph.from_bits(n_v, f.r, bits)


def template_to_table(h: Hypergraph, k: int) -> FunctionTable:
    """Read the function table back off a template's cross hyperedges."""
    r = h.r
    if h.n != r * k:
        raise ValidationError(f"template has {h.n} vertices, expected r*k = {r * k}")
    spins = [
        h.spin(rank_subset(cross_set(inputs, k), h.n))
        for inputs in itertools.product(range(k), repeat=r)
    ]
    return FunctionTable(k, r, tuple(spins))


@dataclass(frozen=True)
class PsmInstance:
    """One protocol setup: the table, its template, the host, the private map."""

    f: FunctionTable
    fbar: Hypergraph
    g: Hypergraph
    phi: Embedding

    def __post_init__(self):
        if template_to_table(self.fbar, self.f.k) != self.f:
            raise ValidationError("template cross hyperedges disagree with the table")
        for j, sub in enumerate(subset_table(self.fbar.n, self.fbar.r)):
            if self.g.bit(rank_subset(self.phi.apply(sub), self.g.n)) != self.fbar.bit(j):
                raise ValidationError("host does not agree with the template under phi")

    def to_json_dict(self, public_only: bool = False) -> dict:
        out = {"f": self.f.to_json_dict(), "g": self.g.to_json_dict()}
        if not public_only:
            out["fbar"] = self.fbar.to_json_dict()
            out["phi"] = list(self.phi.targets)
        return out

    @classmethod
    def from_json_dict(cls, obj: dict) -> "PsmInstance":
        try:
            f = FunctionTable.from_json_dict(obj["f"])
            g = Hypergraph.from_json_dict(obj["g"])
            fbar = Hypergraph.from_json_dict(obj["fbar"])
            targets = tuple(int(v) for v in obj["phi"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed instance JSON: {exc}") from exc
        phi = Embedding(g.n, fbar.n, targets, frozenset())
        return cls(f=f, fbar=fbar, g=g, phi=phi)


def psm_setup(f: FunctionTable, n: int, rng) -> PsmInstance:
    """Setup phase: embed the (randomized) template into a host of size n."""
    n_v = f.r * f.k
    if n < n_v:
        raise ValidationError(f"host size n={n} must be at least r*k={n_v}")
    fbar = embed_function(f, rng)
    params = ModelParams(n=n, k=n_v, r=f.r)
    emb = sample_embedding(params, rng)
    bits = rng.integers(0, 2, size=binom(n, f.r), dtype=np.uint8)
    fbar_bits = fbar.bits
    for j, sub in enumerate(subset_table(n_v, f.r)):
        bits[rank_subset(emb.apply(sub), n)] = fbar_bits[j]
    return PsmInstance(f=f, fbar=fbar, g=Hypergraph.from_bits(n, f.r, bits), phi=emb)


def psm_message(inst: PsmInstance, party: int, x: int) -> int:
    """Party's single message: the host label of its input vertex."""
    if not 0 <= party < inst.f.r:
        raise ValidationError(f"party index {party} out of range [0, {inst.f.r})")
    if not 0 <= x < inst.f.k:
        raise ValidationError(f"input {x} out of range [0, {inst.f.k})")
    return inst.phi(part_vertex(x, party, inst.f.k))


def psm_evaluate(g: Hypergraph, messages) -> int:
    """The evaluator's output: the host bit at the r received labels."""
    labels = [int(u) for u in messages]
    if len(labels) != g.r:
        raise ValidationError(f"expected {g.r} messages, got {len(labels)}")
    if len(set(labels)) != len(labels):
        raise ValidationError("messages must be distinct vertices")
    return g.bit(rank_subset(sorted(labels), g.n))


@dataclass(frozen=True)
class Transcript:
    """What the evaluator sees in one run, plus its output."""

    messages: tuple[int, ...]
    output: int

    def to_json_dict(self) -> dict:
        return {"messages": list(self.messages), "output": self.output}


def run_protocol(inst: PsmInstance, inputs) -> Transcript:
    """Scripted three-role run: messages from every party, then evaluation."""
    xs = [int(x) for x in inputs]
    if len(xs) != inst.f.r:
        raise ValidationError(f"expected {inst.f.r} inputs")
    messages = tuple(psm_message(inst, i, x) for i, x in enumerate(xs))
    return Transcript(messages=messages, output=psm_evaluate(inst.g, messages))


def psm_simulate(f: FunctionTable, y: int, n: int, rng,
                 allow_collisions: bool = False):
    """Simulator: random labels, the output coordinate forced to y, coins elsewhere.

    Labels are drawn distinct by default, matching real transcripts whose
    private map is injective.  With ``allow_collisions`` the labels are
    drawn independently and no coordinate is forced when they collide.
    """
    if y not in (0, 1):
        raise ValidationError("output must be the bit 0 or 1")
    if n < f.r:
        raise ValidationError(f"need n >= r = {f.r}")
    if allow_collisions:
        labels = tuple(int(v) for v in rng.integers(0, n, size=f.r))
    else:
        labels = tuple(int(v) for v in rng.choice(n, size=f.r, replace=False))
    bits = rng.integers(0, 2, size=binom(n, f.r), dtype=np.uint8)
    if len(set(labels)) == f.r:
        bits[rank_subset(sorted(labels), n)] = y
    return Hypergraph.from_bits(n, f.r, bits), labels


def psm_reduction(h: Hypergraph, g: Hypergraph, leaked, rng):
    """Map a (template, host, leaked labels) triple to a transcript-shaped one.

    Reads the function table off the template's cross hyperedges and
    shuffles the host and labels by one uniform relabeling, which turns
    the identity-normalized leak into uniform protocol messages.
    """
    r = h.r
    if h.n % r:
        raise ValidationError(f"template vertex count {h.n} is not r*k")
    k = h.n // r
    f = template_to_table(h, k)
    labels = [int(u) for u in leaked]
    if len(labels) != r or len(set(labels)) != r:
        raise ValidationError(f"need {r} distinct leaked labels")
    if any(u < 0 or u >= g.n for u in labels):
        raise ValidationError("leaked label out of host range")
    pi = [int(v) for v in rng.permutation(g.n)]
    return f, relabel(g, pi), tuple(pi[u] for u in labels)


class UniformSelector:
    """Inputs drawn uniformly from [0, k)^r, ignoring the table."""

    name = "uniform"

    def distribution(self, f: FunctionTable):
        w = Fraction(1, f.k ** f.r)
        return [(xs, w) for xs in itertools.product(range(f.k), repeat=f.r)]

    def sample(self, f: FunctionTable, rng):
        return tuple(int(v) for v in rng.integers(0, f.k, size=f.r))


class ConstantSelector:
    """A fixed input tuple."""

    name = "constant"

    def __init__(self, inputs):
        self.inputs = tuple(int(x) for x in inputs)

    def distribution(self, f: FunctionTable):
        f.value(self.inputs)
        return [(self.inputs, Fraction(1))]

    def sample(self, f: FunctionTable, rng):
        f.value(self.inputs)
        return self.inputs


class TableSelector:
    """Adversarial selector: input tuple chosen by the table's bit string."""

    name = "table"

    def __init__(self, mapping, default=None):
        self.mapping = {tuple(key): tuple(val) for key, val in mapping.items()}
        self.default = None if default is None else tuple(default)

    def _pick(self, f: FunctionTable):
        choice = self.mapping.get(f.bits, self.default)
        if choice is None:
            raise ValidationError("selector table has no entry for this function")
        return choice

    def distribution(self, f: FunctionTable):
        xs = self._pick(f)
        f.value(xs)
        return [(xs, Fraction(1))]

    def sample(self, f: FunctionTable, rng):
        return self.distribution(f)[0][0]


def _accumulate(states: dict, key, weight: Fraction) -> None:
    states[key] = states.get(key, Fraction(0)) + weight


def _guard_states(count: int) -> None:
    if count > PSM_STATE_GUARD:
        raise GuardExceeded(f"{count} enumeration states exceed the guard {PSM_STATE_GUARD}")


def enumerate_real_ensemble(f: FunctionTable, selector, n: int) -> dict:
    """Exact law of (messages, host) for a fixed public table.

    Enumerates template coins x private injections x host coins, mixing
    inputs by the selector's distribution.
    """
    n_v = f.r * f.k
    m_t, m_n = binom(n_v, f.r), binom(n, f.r)
    cross = {rank_subset(cross_set(xs, f.k), n_v): f.bit(xs)
             for xs in itertools.product(range(f.k), repeat=f.r)}
    coin_pos = [j for j in range(m_t) if j not in cross]
    n_inj = math.perm(n, n_v)
    _guard_states((1 << len(coin_pos)) * n_inj * (1 << (m_n - m_t)))
    states: dict = {}
    tmpl_subsets = subset_table(n_v, f.r)
    atoms = selector.distribution(f)
    for pat in range(1 << len(coin_pos)):
        t_bits = {j: b for j, b in cross.items()}
        for idx, j in enumerate(coin_pos):
            t_bits[j] = (pat >> idx) & 1
        for targets in itertools.permutations(range(n), n_v):
            covered = {}
            for j in range(m_t):
                pos = rank_subset(sorted(targets[int(v)] for v in tmpl_subsets[j]), n)
                covered[pos] = t_bits[j]
            base = sum(b << pos for pos, b in covered.items())
            free = [pos for pos in range(m_n) if pos not in covered]
            for gpat in range(1 << len(free)):
                g_mask = base
                for idx, pos in enumerate(free):
                    if (gpat >> idx) & 1:
                        g_mask |= 1 << pos
                w = Fraction(1, (1 << len(coin_pos)) * n_inj * (1 << len(free)))
                for xs, sel_w in atoms:
                    u = tuple(targets[part_vertex(x, i, f.k)] for i, x in enumerate(xs))
                    _accumulate(states, (u, g_mask), w * sel_w)
    return states


def enumerate_simulated_ensemble(f: FunctionTable, selector, n: int) -> dict:
    """Exact law of the simulator's (labels, host) for a fixed public table."""
    m_n = binom(n, f.r)
    n_lab = math.perm(n, f.r)
    _guard_states(n_lab * (1 << (m_n - 1)))
    states: dict = {}
    atoms = selector.distribution(f)
    for xs, sel_w in atoms:
        y = f.bit(xs)
        for labels in itertools.permutations(range(n), f.r):
            forced = rank_subset(sorted(labels), n)
            free = [pos for pos in range(m_n) if pos != forced]
            base = y << forced
            for gpat in range(1 << len(free)):
                g_mask = base
                for idx, pos in enumerate(free):
                    if (gpat >> idx) & 1:
                        g_mask |= 1 << pos
                w = sel_w * Fraction(1, n_lab * (1 << len(free)))
                _accumulate(states, (labels, g_mask), w)
    return states


def real_vs_sim_tv(f: FunctionTable, selector, n: int) -> Fraction:
    """Exact total variation between real and simulated transcript ensembles."""
    from .models import tv_dict

    return tv_dict(enumerate_real_ensemble(f, selector, n),
                   enumerate_simulated_ensemble(f, selector, n))


def _leak_vertices(xs, k: int) -> tuple[int, ...]:
    return tuple(sorted(part_vertex(x, i, k) for i, x in enumerate(xs)))


def enumerate_reduction_pushforward(which: str, k: int, r: int, n: int, selector) -> dict:
    """Exact law of the reduction's output on one model ensemble.

    The input ensemble draws a uniform template on r*k vertices, fixes
    the leaked vertices chosen by the selector from the template's own
    table, then samples the host from the planted or the null model with
    that leaked set.  Keys are (table bits, labels, host mask).
    """
    if which not in ("planted", "null"):
        raise ValidationError("which must be 'planted' or 'null'")
    n_v = r * k
    m_t, m_n = binom(n_v, r), binom(n, r)
    n_perm = math.factorial(n)
    _guard_states((1 << m_t) * n_perm * (1 << (m_n - 1)))
    tmpl_subsets = subset_table(n_v, r)
    states: dict = {}
    for h_mask in range(1 << m_t):
        h = Hypergraph.from_mask(n_v, r, h_mask)
        f = template_to_table(h, k)
        for xs, sel_w in selector.distribution(f):
            leak = _leak_vertices(xs, k)
            if which == "planted":
                draws = []
                fixed = set(leak)
                avail = [v for v in range(n) if v not in fixed]
                free_src = [u for u in range(n_v) if u not in fixed]
                for sel in itertools.permutations(avail, len(free_src)):
                    targets = [0] * n_v
                    for u in leak:
                        targets[u] = u
                    for u, t in zip(free_src, sel):
                        targets[u] = t
                    covered = {}
                    for j in range(m_t):
                        pos = rank_subset(sorted(targets[int(v)] for v in tmpl_subsets[j]), n)
                        covered[pos] = h.bit(j)
                    draws.append(covered)
            else:
                covered = {rank_subset(leak, n): h.bit(rank_subset(leak, n_v))}
                draws = [covered]
            for covered in draws:
                base = sum(b << pos for pos, b in covered.items())
                free = [pos for pos in range(m_n) if pos not in covered]
                for gpat in range(1 << len(free)):
                    g_mask = base
                    for idx, pos in enumerate(free):
                        if (gpat >> idx) & 1:
                            g_mask |= 1 << pos
                    for pi in itertools.permutations(range(n)):
                        out_mask = _relabel_mask(g_mask, pi, n, r)
                        key = (f.bits, tuple(pi[u] for u in leak), out_mask)
                        w = sel_w * Fraction(
                            1, (1 << m_t) * len(draws) * (1 << len(free)) * n_perm)
                        _accumulate(states, key, w)
    return states


def enumerate_protocol_ensemble(k: int, r: int, n: int, selector) -> dict:
    """Exact law of (table bits, messages, host) over a uniform table."""
    states: dict = {}
    n_tables = 1 << (k ** r)
    for t_mask in range(n_tables):
        f = FunctionTable.from_bits(k, r, [(t_mask >> i) & 1 for i in range(k ** r)])
        inner = enumerate_real_ensemble(f, selector, n)
        for (u, g_mask), w in inner.items():
            _accumulate(states, (f.bits, u, g_mask), w / n_tables)
    return states


def enumerate_simulated_protocol_ensemble(k: int, r: int, n: int, selector) -> dict:
    """Exact law of (table bits, simulator labels, simulator host)."""
    states: dict = {}
    n_tables = 1 << (k ** r)
    for t_mask in range(n_tables):
        f = FunctionTable.from_bits(k, r, [(t_mask >> i) & 1 for i in range(k ** r)])
        inner = enumerate_simulated_ensemble(f, selector, n)
        for (u, g_mask), w in inner.items():
            _accumulate(states, (f.bits, u, g_mask), w / n_tables)
    return states


def _relabel_mask(g_mask: int, pi, n: int, r: int) -> int:
    """Apply a vertex permutation to a packed adjacency mask."""
    table = subset_table(n, r)
    out = 0
    for j in range(table.shape[0]):
        if (g_mask >> j) & 1:
            out |= 1 << rank_subset(sorted(pi[int(v)] for v in table[j]), n)
    return out
