"""Samplers and exact mass oracles for the planted and null ensembles.

The planted ensemble hides a k-vertex template inside an n-vertex
r-uniform hypergraph through a uniform injective embedding that fixes
every leaked vertex; coordinates not covered by the embedding are
independent uniform spins.  The null ensemble copies only the
template's restriction to the leaked set and is uniform elsewhere.  In
both, the marginal law of the big hypergraph is uniform; the template
and the leaked positions are what an observer gets to use.

Desk-scale instances admit exact enumeration of either ensemble in
rational arithmetic, which the rest of the package uses as the ground
truth oracle for advantages and total-variation distances.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import GuardExceeded, ValidationError
from .hypercore import Embedding, Hypergraph, binom, rank_subset, subset_table

PMF_COORD_GUARD = 20
EMBEDDING_GUARD = 10_000_000
STATE_GUARD = 30_000_000


@dataclass(frozen=True)
class ModelParams:
    """Instance shape: host size n, template size k, uniformity r, leakage L."""

    n: int
    k: int
    r: int
    L: tuple[int, ...] = ()
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "L", tuple(int(v) for v in self.L))
        if self.r < 2 or self.r > self.n:
            raise ValidationError(f"need 2 <= r <= n, got r={self.r}, n={self.n}")
        if not (0 <= self.ell <= self.k <= self.n):
            raise ValidationError(
                f"need ell <= k <= n, got ell={self.ell}, k={self.k}, n={self.n}"
            )
        if list(self.L) != sorted(set(self.L)) or any(
            v < 0 or v >= self.k for v in self.L
        ):
            raise ValidationError(f"L must be a sorted subset of [0, k), got {self.L}")

    @property
    def ell(self) -> int:
        return len(self.L)

    def to_json_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "r": self.r, "L": list(self.L), "seed": self.seed}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ModelParams":
        try:
            return cls(
                n=int(obj["n"]),
                k=int(obj["k"]),
                r=int(obj["r"]),
                L=tuple(obj.get("L", ())),
                seed=int(obj.get("seed", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed params JSON: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_json_dict(json.loads(text))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def trial_rng(seed: int, *path: int) -> np.random.Generator:
    """Substream for a trial or chunk: derived from (seed, *path), so parallel
    work is reproducible independent of scheduling."""
    return np.random.default_rng(np.random.SeedSequence((seed,) + path))


def sample_H(k: int, r: int, rng: np.random.Generator) -> Hypergraph:
    """Uniform template: each of the C(k, r) spins is an independent fair coin."""
    m = binom(k, r)
    return Hypergraph.from_bits(k, r, rng.integers(0, 2, size=m, dtype=np.uint8))


def sample_embedding(params: ModelParams, rng: np.random.Generator) -> Embedding:
    """Uniform injection [0, k) -> [0, n) with every leaked vertex fixed.

    Drawn as a uniform ordered sample of k - ell targets from the
    non-leaked vertices, assigned to the non-leaked sources in increasing
    order; this matches the subset-then-bijection decomposition.
    """
    leaked = set(params.L)
    avail = np.array([v for v in range(params.n) if v not in leaked], dtype=np.int64)
    free_src = [u for u in range(params.k) if u not in leaked]
    targets = [0] * params.k
    for u in params.L:
        targets[u] = u
    if free_src:
        chosen = rng.choice(avail, size=len(free_src), replace=False)
        for u, t in zip(free_src, chosen):
            targets[u] = int(t)
    return Embedding(params.n, params.k, tuple(targets), frozenset(params.L))


def _check_shapes(h: Hypergraph, params: ModelParams) -> None:
    if h.n != params.k or h.r != params.r:
        raise ValidationError(
            f"template shape ({h.n}, r={h.r}) does not match params (k={params.k}, r={params.r})"
        )


def sample_planted(h: Hypergraph, params: ModelParams, rng: np.random.Generator) -> Hypergraph:
    """One planted draw: embed the template, fill the rest with fair coins.

    Draw order: the embedding first, then all C(n, r) base coordinates in
    rank order (covered ones are then overwritten), so a fixed rng state
    yields a fixed output.
    """
    _check_shapes(h, params)
    emb = sample_embedding(params, rng)
    bits = rng.integers(0, 2, size=binom(params.n, params.r), dtype=np.uint8)
    h_bits = h.bits
    for j, f in enumerate(subset_table(params.k, params.r)):
        bits[rank_subset(emb.apply(f), params.n)] = h_bits[j]
    return Hypergraph.from_bits(params.n, params.r, bits)


def sample_null(h: Hypergraph, params: ModelParams, rng: np.random.Generator) -> Hypergraph:
    """One null draw: copy the template on leaked-internal subsets, coins elsewhere."""
    _check_shapes(h, params)
    bits = rng.integers(0, 2, size=binom(params.n, params.r), dtype=np.uint8)
    for f in itertools.combinations(params.L, params.r):
        bits[rank_subset(f, params.n)] = h.bit(rank_subset(f, params.k))
    return Hypergraph.from_bits(params.n, params.r, bits)


def sample_embedding_targets_batch(params: ModelParams, trials: int,
                                   rng: np.random.Generator) -> np.ndarray:
    """(trials, k) int64 matrix of embedding targets, one uniform constrained
    injection per row (random sort keys; first k - ell positions of each
    row's ordering give a uniform ordered sample)."""
    leaked = set(params.L)
    avail = np.array([v for v in range(params.n) if v not in leaked], dtype=np.int64)
    free_src = np.array([u for u in range(params.k) if u not in leaked], dtype=np.int64)
    phis = np.empty((trials, params.k), dtype=np.int64)
    for u in params.L:
        phis[:, u] = u
    if free_src.size:
        keys = rng.random((trials, avail.size))
        order = np.argsort(keys, axis=1, kind="stable")[:, : free_src.size]
        phis[:, free_src] = avail[order]
    return phis


def sample_planted_bits(h: Hypergraph, params: ModelParams, trials: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Batch planted sampler: (trials, C(n, r)) uint8 bit matrix.

    Embedding keys are drawn before the base coordinate matrix; batch
    draws are deterministic for a fixed rng state but follow their own
    draw order, distinct from repeated single-draw calls.
    """
    _check_shapes(h, params)
    phis = sample_embedding_targets_batch(params, trials, rng)
    bits = rng.integers(0, 2, size=(trials, binom(params.n, params.r)), dtype=np.uint8)
    kernels.plant_batch(bits, phis, np.asarray(subset_table(params.k, params.r)),
                        h.bits, params.n)
    return bits


def sample_null_bits(h: Hypergraph, params: ModelParams, trials: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Batch null sampler: (trials, C(n, r)) uint8 bit matrix."""
    _check_shapes(h, params)
    bits = rng.integers(0, 2, size=(trials, binom(params.n, params.r)), dtype=np.uint8)
    for f in itertools.combinations(params.L, params.r):
        bits[:, rank_subset(f, params.n)] = h.bit(rank_subset(f, params.k))
    return bits


@dataclass(frozen=True)
class Pmf:
    """Exact distribution over full spin vectors, keyed by the packed bit view.

    Key bit i is coordinate i's bit (1 = present).  Masses are Fractions in
    rational mode, floats otherwise.
    """

    n: int
    r: int
    mass: dict

    @property
    def num_coords(self) -> int:
        return binom(self.n, self.r)

    def total(self):
        return sum(self.mass.values())

    def prob(self, mask: int):
        return self.mass.get(mask, Fraction(0) if self.is_rational else 0.0)

    @property
    def is_rational(self) -> bool:
        return not self.mass or isinstance(next(iter(self.mass.values())), Fraction)


def _covered_assignment(h_bits, k_subsets, targets, n):
    """(base_mask, covered_positions) for one embedding's forced coordinates."""
    base = 0
    covered = []
    for j in range(k_subsets.shape[0]):
        pos = rank_subset(sorted(int(targets[u]) for u in k_subsets[j]), n)
        covered.append(pos)
        if h_bits[j]:
            base |= 1 << pos
    return base, covered


def exact_pmf(h: Hypergraph, params: ModelParams, which: str, rational: bool = True) -> Pmf:
    """Exhaustively enumerate one ensemble.

    Null mass is uniform over the spin vectors agreeing with the template
    on leaked-internal subsets; planted mass averages, over every
    constrained embedding, the uniform law on the free coordinates.
    """
    _check_shapes(h, params)
    m = binom(params.n, params.r)
    if m > PMF_COORD_GUARD:
        raise GuardExceeded(f"C(n, r) = {m} exceeds the enumeration guard {PMF_COORD_GUARD}")
    if which not in ("planted", "null"):
        raise ValidationError(f"which must be 'planted' or 'null', got {which!r}")

    one = Fraction(1) if rational else 1.0
    mass: dict = {}

    if which == "null":
        base = 0
        covered = []
        for f in itertools.combinations(params.L, params.r):
            pos = rank_subset(f, params.n)
            covered.append(pos)
            if h.bit(rank_subset(f, params.k)):
                base |= 1 << pos
        free = sorted(set(range(m)) - set(covered))
        weight = one / (1 << len(free))
        for pat in range(1 << len(free)):
            key = base
            for idx, pos in enumerate(free):
                if (pat >> idx) & 1:
                    key |= 1 << pos
            mass[key] = mass.get(key, 0) + weight
        return Pmf(params.n, params.r, mass)

    leaked = set(params.L)
    avail = [v for v in range(params.n) if v not in leaked]
    free_src = [u for u in range(params.k) if u not in leaked]
    n_emb = 1
    for i in range(len(free_src)):
        n_emb *= len(avail) - i
    if n_emb > EMBEDDING_GUARD:
        raise GuardExceeded(f"{n_emb} embeddings exceed the guard {EMBEDDING_GUARD}")
    n_free = m - binom(params.k, params.r)
    if n_emb * (1 << n_free) > STATE_GUARD:
        raise GuardExceeded("embedding x free-coordinate state space too large to enumerate")

    h_bits = h.bits
    k_subsets = np.asarray(subset_table(params.k, params.r))
    weight = one / (n_emb * (1 << n_free))
    targets = [0] * params.k
    for u in params.L:
        targets[u] = u
    for sel in itertools.permutations(avail, len(free_src)):
        for u, t in zip(free_src, sel):
            targets[u] = t
        base, covered = _covered_assignment(h_bits, k_subsets, targets, params.n)
        free = sorted(set(range(m)) - set(covered))
        for pat in range(1 << n_free):
            key = base
            for idx, pos in enumerate(free):
                if (pat >> idx) & 1:
                    key |= 1 << pos
            mass[key] = mass.get(key, 0) + weight
    return Pmf(params.n, params.r, mass)


def tv_distance(p: Pmf, q: Pmf):
    """(1/2) sum |p - q|; exact when both pmfs are rational."""
    if (p.n, p.r) != (q.n, q.r):
        raise ValidationError("pmf shapes differ")
    zero = Fraction(0) if p.is_rational and q.is_rational else 0.0
    acc = zero
    for key in p.mass.keys() | q.mass.keys():
        acc += abs(p.mass.get(key, zero) - q.mass.get(key, zero))
    return acc / 2


def tv_dict(p: dict, q: dict) -> Fraction:
    """Total variation between two Fraction-valued pmf dictionaries."""
    acc = Fraction(0)
    for key in p.keys() | q.keys():
        acc += abs(p.get(key, Fraction(0)) - q.get(key, Fraction(0)))
    return acc / 2


def chi_square(p: Pmf, q: Pmf):
    """chi^2(p || q) = sum p(x)^2 / q(x) - 1 over q's support.

    Requires p's support to lie inside q's.
    """
    if (p.n, p.r) != (q.n, q.r):
        raise ValidationError("pmf shapes differ")
    acc = Fraction(0) if p.is_rational and q.is_rational else 0.0
    for key, pk in p.mass.items():
        qk = q.mass.get(key)
        if qk is None or qk == 0:
            raise ValidationError("p has mass outside q's support; chi-square diverges")
        acc += pk * pk / qk
    return acc - 1
