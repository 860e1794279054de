"""Forbidden hypergraph secret sharing and the Csirmaz bound checker.

The dealer hides a uniform template hypergraph inside a public host
graph and publishes, alongside the host, a masked copy of the template:
on qualifying r-sets the template bit is XORed with the secret, and the
remaining published bits carry no information about it.  Each party's
share is its template vertex's location inside the host, so any
qualifying set can reconstruct by XORing its published bit with the
host bit sitting at its shares.

Secrecy for an unqualified coalition reduces to distinguishing the
planted ensemble from the null ensemble with the coalition as the
leaked set.  The executable form of that reduction is a masking map on
published templates together with exact ensemble enumerators, so the
distributional identities behind it can be checked bit for bit at desk
scale.

Everything here operates on the bit view; spins never appear on the
wire.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import GuardExceeded, ValidationError
from .hypercore import (Hypergraph, binom, encode_label, label_bit_width,
                        rank_subset, subset_table)
from .models import ModelParams, sample_H, sample_embedding

CSIRMAZ_GROUND_GUARD = 12
SECRECY_KEY_BITS_GUARD = 62
SECRECY_STATE_GUARD = 40_000_000


@dataclass(frozen=True)
class AccessStructure:
    """Qualifying sets R over parties [0, k); secrecy target threshold l.

    ``sets`` are the minimal qualifying subsets (each of size <= r).
    Unqualified coalitions are derived, never stored: the independent
    sets of R of size at most l.  ``public_parties`` lists auxiliary
    parties whose shares are published (nonempty only after lifting).
    """

    k: int
    r: int
    sets: frozenset[frozenset[int]]
    l: int
    public_parties: tuple[int, ...] = ()

    def __post_init__(self):
        if self.k < 1 or self.r < 2 or self.l < 0:
            raise ValidationError("need k >= 1, r >= 2, l >= 0")
        object.__setattr__(
            self, "sets", frozenset(frozenset(int(v) for v in a) for a in self.sets)
        )
        for a in self.sets:
            if not a or len(a) > self.r:
                raise ValidationError(f"qualifying set {sorted(a)} must have size in [1, r]")
            if any(v < 0 or v >= self.k for v in a):
                raise ValidationError(f"qualifying set {sorted(a)} out of party range")
        for a in self.sets:
            if any(b < a for b in self.sets):
                raise ValidationError(f"qualifying set {sorted(a)} is not minimal")

    @property
    def uniform(self) -> bool:
        return all(len(a) == self.r for a in self.sets)

    def qualifies(self, parties) -> bool:
        group = frozenset(parties)
        return any(a <= group for a in self.sets)

    def is_independent(self, parties) -> bool:
        return not self.qualifies(parties)

    def unqualified_sets(self):
        """All independent coalitions of size at most l, smallest first."""
        for size in range(self.l + 1):
            for combo in itertools.combinations(range(self.k), size):
                if self.is_independent(combo):
                    yield frozenset(combo)

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "r": self.r,
            "R": sorted(sorted(a) for a in self.sets),
            "l": self.l,
            "public_parties": list(self.public_parties),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "AccessStructure":
        try:
            return cls(
                k=int(obj["k"]), r=int(obj["r"]),
                sets=frozenset(frozenset(a) for a in obj["R"]),
                l=int(obj["l"]),
                public_parties=tuple(obj.get("public_parties", ())),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed access structure JSON: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "AccessStructure":
        return cls.from_json_dict(json.loads(text))


share_bit_width = label_bit_width
encode_share = encode_label


@dataclass(frozen=True)
class ShareBundle:
    """Public pair (masked template, host graph) plus per-party shares."""

    access: AccessStructure
    h_s: Hypergraph
    g: Hypergraph
    shares: tuple[int, ...]

    @property
    def public_shares(self) -> dict[int, int]:
        return {p: self.shares[p] for p in self.access.public_parties}

    def to_json_dict(self) -> dict:
        return {
            "access": self.access.to_json_dict(),
            "h_s": self.h_s.to_json_dict(),
            "g": self.g.to_json_dict(),
            "shares": list(self.shares),
            "share_bits": share_bit_width(self.g.n),
            "encoded_shares": [encode_share(v, self.g.n) for v in self.shares],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ShareBundle":
        try:
            return cls(
                access=AccessStructure.from_json_dict(obj["access"]),
                h_s=Hypergraph.from_json_dict(obj["h_s"]),
                g=Hypergraph.from_json_dict(obj["g"]),
                shares=tuple(int(v) for v in obj["shares"]),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed share bundle JSON: {exc}") from exc


def _r_ranks(access: AccessStructure) -> list[int]:
    return sorted(rank_subset(sorted(a), access.k) for a in access.sets)


def deal(access: AccessStructure, s: int, n: int, rng) -> ShareBundle:
    """Deal one secret bit.

    Requires every qualifying set to have size exactly r (apply
    :func:`lift` first otherwise).  Draw order is fixed so transcripts
    are reproducible: template, then embedding, then host coordinates,
    then the published bits outside the qualifying sets.
    """
    if s not in (0, 1):
        raise ValidationError("secret must be the bit 0 or 1")
    if not access.uniform:
        raise ValidationError("qualifying sets must all have size r; lift the structure first")
    if n < access.k:
        raise ValidationError(f"host size n={n} must be at least k={access.k}")
    k, r = access.k, access.r
    h = sample_H(k, r, rng)
    emb = sample_embedding(ModelParams(n=n, k=k, r=r), rng)
    g_bits = rng.integers(0, 2, size=binom(n, r), dtype=np.uint8)
    h_bits = h.bits
    for j, f in enumerate(subset_table(k, r)):
        g_bits[rank_subset(emb.apply(f), n)] = h_bits[j]
    in_r = set(_r_ranks(access))
    hs_bits = np.empty(binom(k, r), dtype=np.uint8)
    for j in range(hs_bits.size):
        if j in in_r:
            hs_bits[j] = h_bits[j] ^ s
        else:
            hs_bits[j] = rng.integers(0, 2)
    return ShareBundle(
        access=access,
        h_s=Hypergraph.from_bits(k, r, hs_bits),
        g=Hypergraph.from_bits(n, r, g_bits),
        shares=emb.targets,
    )


def reconstruct(h_s: Hypergraph, g: Hypergraph, parties, shares, access: AccessStructure) -> int:
    """XOR the published bit at a qualifying set with the host bit at its shares.

    Refuses non-qualifying sets: correctness is only guaranteed on R.
    """
    group = tuple(sorted(int(p) for p in parties))
    if frozenset(group) not in access.sets:
        raise ValidationError(f"{list(group)} is not a qualifying set; refusing to reconstruct")
    vals = [int(v) for v in shares]
    if len(vals) != access.r or len(set(vals)) != access.r:
        raise ValidationError("need the r distinct shares of the qualifying set")
    return h_s.bit(rank_subset(group, access.k)) ^ g.bit(rank_subset(sorted(vals), g.n))


def lift(access: AccessStructure) -> AccessStructure:
    """Pad sub-r qualifying sets with auxiliary public parties.

    Adds r - 1 parties k, ..., k + r - 2 whose shares are public; each
    qualifying set of size below r absorbs the first missing auxiliaries.
    Coalitions of real parties that were independent stay independent;
    the secrecy threshold effectively drops to l - r + 1 because a
    coalition can always adjoin the public auxiliaries.
    """
    aux = tuple(range(access.k, access.k + access.r - 1))
    lifted = frozenset(
        a | frozenset(aux[: access.r - len(a)]) for a in access.sets
    )
    return AccessStructure(
        k=access.k + access.r - 1,
        r=access.r,
        sets=lifted,
        l=access.l,
        public_parties=aux,
    )


def mask_template(h: Hypergraph, s: int, access: AccessStructure) -> Hypergraph:
    """Flip the bits on qualifying sets when s = 1; identity when s = 0."""
    if s not in (0, 1):
        raise ValidationError("secret must be the bit 0 or 1")
    if h.n != access.k or h.r != access.r:
        raise ValidationError("template does not live on the party set")
    if s == 0:
        return h
    bits = h.bits.copy()
    for j in _r_ranks(access):
        bits[j] ^= 1
    return Hypergraph.from_bits(h.n, h.r, bits)


def secrecy_reduction_map(h_prime: Hypergraph, g: Hypergraph, leaked, s: int,
                          access: AccessStructure):
    """The distinguisher-side map of the secrecy reduction.

    XORs the secret into the qualifying bits of the received template and
    passes the host graph and leaked positions through.  Only defined for
    independent leaked coalitions; on qualifying sets the reduction's
    premise fails.
    """
    group = tuple(sorted(int(p) for p in leaked))
    if access.qualifies(group):
        raise ValidationError(f"leaked set {list(group)} is qualified; reduction undefined")
    return mask_template(h_prime, s, access), g, group


def _iter_injections(n: int, k: int, fixed):
    """Target tuples of all injections [0, k) -> [0, n) fixing `fixed` pointwise."""
    fixed = set(fixed)
    avail = [v for v in range(n) if v not in fixed]
    free_src = [u for u in range(k) if u not in fixed]
    targets = [0] * k
    for u in fixed:
        targets[u] = u
    for sel in itertools.permutations(avail, len(free_src)):
        for u, t in zip(free_src, sel):
            targets[u] = t
        yield tuple(targets)


def _planted_states(access: AccessStructure, n: int, fixed):
    """Yield (h_mask, g_mask, targets) uniformly over template x embedding x coins."""
    k, r = access.k, access.r
    m_n, m_k = binom(n, r), binom(k, r)
    k_subsets = subset_table(k, r)
    for targets in _iter_injections(n, k, fixed):
        covered = [rank_subset(sorted(targets[int(v)] for v in k_subsets[j]), n)
                   for j in range(m_k)]
        free = sorted(set(range(m_n)) - set(covered))
        for h_mask in range(1 << m_k):
            base = 0
            for j, pos in enumerate(covered):
                if (h_mask >> j) & 1:
                    base |= 1 << pos
            for pat in range(1 << len(free)):
                g_mask = base
                for idx, pos in enumerate(free):
                    if (pat >> idx) & 1:
                        g_mask |= 1 << pos
                yield h_mask, g_mask, targets


def masked_planted_ensemble_pmf(access: AccessStructure, s: int, n: int, leaked) -> dict:
    """Pushforward of the planted ensemble (leaked set embedded identically)
    under the reduction map: keys (published mask, host mask, shares of I)."""
    group = tuple(sorted(leaked))
    states = {}
    count = 0
    for h_mask, g_mask, targets in _planted_states(access, n, group):
        h = Hypergraph.from_mask(access.k, access.r, h_mask)
        key = (mask_template(h, s, access).mask, g_mask,
               tuple(targets[i] for i in group))
        states[key] = states.get(key, 0) + 1
        count += 1
    return {key: Fraction(c, count) for key, c in states.items()}


def masked_null_ensemble_pmf(access: AccessStructure, s: int, n: int, leaked) -> dict:
    """Pushforward of the null ensemble under the reduction map."""
    group = tuple(sorted(leaked))
    k, r = access.k, access.r
    m_n, m_k = binom(n, r), binom(k, r)
    internal = [(rank_subset(f, n), rank_subset(f, k))
                for f in itertools.combinations(group, r)]
    free = sorted(set(range(m_n)) - {pos for pos, _ in internal})
    states = {}
    count = 0
    for h_mask in range(1 << m_k):
        h = Hypergraph.from_mask(k, r, h_mask)
        pub = mask_template(h, s, access).mask
        base = 0
        for pos, j in internal:
            if (h_mask >> j) & 1:
                base |= 1 << pos
        for pat in range(1 << len(free)):
            g_mask = base
            for idx, pos in enumerate(free):
                if (pat >> idx) & 1:
                    g_mask |= 1 << pos
            key = (pub, g_mask, group)
            states[key] = states.get(key, 0) + 1
            count += 1
    return {key: Fraction(c, count) for key, c in states.items()}


def published_template_ensemble_pmf(k: int, r: int, n: int, leaked) -> dict:
    """The hybrid the null pushforward must match: a fully published uniform
    template, a host copying it only inside the leaked set, identity leak."""
    group = tuple(sorted(leaked))
    m_n, m_k = binom(n, r), binom(k, r)
    internal = [(rank_subset(f, n), rank_subset(f, k))
                for f in itertools.combinations(group, r)]
    free = sorted(set(range(m_n)) - {pos for pos, _ in internal})
    states = {}
    count = 0
    for h_mask in range(1 << m_k):
        base = 0
        for pos, j in internal:
            if (h_mask >> j) & 1:
                base |= 1 << pos
        for pat in range(1 << len(free)):
            g_mask = base
            for idx, pos in enumerate(free):
                if (pat >> idx) & 1:
                    g_mask |= 1 << pos
            key = (h_mask, g_mask, group)
            states[key] = states.get(key, 0) + 1
            count += 1
    return {key: Fraction(c, count) for key, c in states.items()}


def deal_ensemble_pmf(access: AccessStructure, s: int, n: int, leaked, *,
                      tie_public: bool = False, fix_leaked: bool = True) -> dict:
    """Exact law of (published template, host, shares of the leaked set).

    ``tie_public=True`` publishes the template's own bits outside the
    qualifying sets instead of fresh coins; the fresh-coin scheme is the
    randomized post-processing of this one that overwrites those
    positions.  ``fix_leaked`` conditions the dealer's embedding on
    sending each leaked party to its own label, the normalization under
    which the reduction identities are stated.
    """
    if not access.uniform:
        raise ValidationError("qualifying sets must all have size r; lift the structure first")
    group = tuple(sorted(leaked))
    k, r = access.k, access.r
    m_k = binom(k, r)
    in_r = set(_r_ranks(access))
    non_r = [j for j in range(m_k) if j not in in_r]
    states = {}
    count = 0
    for h_mask, g_mask, targets in _planted_states(access, n, group if fix_leaked else ()):
        pub_base = 0
        for j in range(m_k):
            bit = (h_mask >> j) & 1
            if j in in_r:
                bit ^= s
            if bit:
                pub_base |= 1 << j
        shares = tuple(targets[i] for i in group)
        if tie_public:
            pubs = [pub_base]
        else:
            pubs = []
            for pat in range(1 << len(non_r)):
                pub = pub_base
                for idx, j in enumerate(non_r):
                    keep = (pat >> idx) & 1
                    if keep != ((pub >> j) & 1):
                        pub ^= 1 << j
                pubs.append(pub)
        for pub in pubs:
            key = (pub, g_mask, shares)
            states[key] = states.get(key, 0) + 1
            count += 1
    return {key: Fraction(c, count) for key, c in states.items()}


def secrecy_tv(access: AccessStructure, leaked, n: int) -> Fraction:
    """Exact total variation between the coalition's views under the two secrets.

    The view is (published template, host, shares of the coalition).
    Published bits outside the qualifying sets are fresh coins shared by
    both ensembles, so they are marginalized out; the distance is
    unchanged.  State enumeration is vectorized over the host's free
    coordinates.
    """
    if not access.uniform:
        raise ValidationError("qualifying sets must all have size r; lift the structure first")
    group = tuple(sorted(int(p) for p in leaked))
    if any(p < 0 or p >= access.k for p in group) or len(set(group)) != len(group):
        raise ValidationError(f"leaked coalition {list(group)} out of party range")
    k, r = access.k, access.r
    m_n, m_k = binom(n, r), binom(k, r)
    r_ranks = _r_ranks(access)
    share_bits = max(1, (n - 1).bit_length()) * len(group)
    key_bits = len(r_ranks) + m_n + share_bits
    if key_bits > SECRECY_KEY_BITS_GUARD:
        raise GuardExceeded(f"state key needs {key_bits} bits; instance too large")

    k_subsets = subset_table(k, r)
    n_free = m_n - m_k
    emb_targets = list(_iter_injections(n, k, ()))
    total = (1 << m_k) * len(emb_targets) * (1 << n_free)
    if total > SECRECY_STATE_GUARD:
        raise GuardExceeded(f"{total} dealer states exceed the enumeration guard")

    pattern = np.arange(1 << n_free, dtype=np.uint64)
    counts = []
    for s in (0, 1):
        chunks = []
        for targets in emb_targets:
            covered = [rank_subset(sorted(targets[int(v)] for v in k_subsets[j]), n)
                       for j in range(m_k)]
            free = sorted(set(range(m_n)) - set(covered))
            scatter = np.zeros(1 << n_free, dtype=np.uint64)
            for idx, pos in enumerate(free):
                scatter |= ((pattern >> np.uint64(idx)) & np.uint64(1)) << np.uint64(pos)
            share_code = 0
            for i in group:
                share_code = share_code * n + targets[i]
            for h_mask in range(1 << m_k):
                base = 0
                for j, pos in enumerate(covered):
                    if (h_mask >> j) & 1:
                        base |= 1 << pos
                pub = 0
                for idx, j in enumerate(r_ranks):
                    pub |= (((h_mask >> j) & 1) ^ s) << idx
                head = (share_code << (len(r_ranks) + m_n)) | (pub << m_n) | base
                chunks.append(np.uint64(head) | scatter)
        keys = np.concatenate(chunks)
        counts.append(dict(zip(*np.unique(keys, return_counts=True))))
    diff = 0
    for key in counts[0].keys() | counts[1].keys():
        diff += abs(int(counts[0].get(key, 0)) - int(counts[1].get(key, 0)))
    return Fraction(diff, 2 * total)


def csirmaz_f(a_size: int, l: int) -> int:
    """sum_{t=1}^{a} max(l - t + 1, 0): the entropy-profile witness function."""
    if a_size < 0 or l < 0:
        raise ValidationError("sizes must be nonnegative")
    return sum(max(l - t + 1, 0) for t in range(1, a_size + 1))


@dataclass(frozen=True)
class CsirmazReport:
    """Outcome of the exhaustive witness-function checks."""

    ground_size: int
    l: int
    monotone_ok: bool
    submodular_ok: bool
    extramodular_ok: bool
    minimal_ok: bool
    singleton_value: int
    pairs_checked: int
    violations: tuple = ()

    @property
    def passed(self) -> bool:
        return (self.monotone_ok and self.submodular_ok
                and self.extramodular_ok and self.minimal_ok)

    def to_json_dict(self) -> dict:
        return {
            "ground_size": self.ground_size, "l": self.l,
            "monotone_ok": self.monotone_ok, "submodular_ok": self.submodular_ok,
            "extramodular_ok": self.extramodular_ok, "minimal_ok": self.minimal_ok,
            "singleton_value": self.singleton_value,
            "pairs_checked": self.pairs_checked, "passed": self.passed,
            "violations": [list(map(list, v)) for v in self.violations],
        }


def csirmaz_check(ground_size: int, r_sets, l: int, s_sets=None) -> CsirmazReport:
    """Exhaustively verify the witness function over a partial access structure.

    Checks monotonicity and submodularity over all subset pairs of the
    ground set, the strengthened inequality on pairs of unqualified sets
    whose union qualifies, and the singleton cap with s = l.  Violating
    pairs are reported, not raised.
    """
    if ground_size < 1 or ground_size > CSIRMAZ_GROUND_GUARD:
        raise GuardExceeded(f"ground size must lie in [1, {CSIRMAZ_GROUND_GUARD}]")
    r_masks = []
    for a in r_sets:
        vs = sorted(int(v) for v in a)
        if any(v < 0 or v >= ground_size for v in vs):
            raise ValidationError(f"qualifying set {vs} outside the ground set")
        r_masks.append(sum(1 << v for v in vs))

    size = 1 << ground_size
    pop = np.zeros(size, dtype=np.int64)
    for m in range(1, size):
        pop[m] = pop[m >> 1] + (m & 1)
    ftab = np.array([csirmaz_f(int(a), l) for a in range(ground_size + 1)], dtype=np.int64)
    fval = ftab[pop]

    def qualifies(mask: int) -> bool:
        return any(mask & rm == rm for rm in r_masks)

    violations = []
    all_masks = np.arange(size, dtype=np.int64)
    monotone_ok = True
    submodular_ok = True
    pairs = 0
    for a in range(size):
        union = all_masks | a
        inter = all_masks & a
        bad = fval[a] + fval < fval[union] + fval[inter]
        mono_bad = (inter == a) & (fval[a] > fval)
        pairs += size
        if bad.any():
            submodular_ok = False
            b = int(np.nonzero(bad)[0][0])
            violations.append((_mask_to_set(a), _mask_to_set(b)))
        if mono_bad.any():
            monotone_ok = False
            b = int(np.nonzero(mono_bad)[0][0])
            violations.append((_mask_to_set(a), _mask_to_set(b)))

    if s_sets is None:
        s_masks = [m for m in range(size)
                   if pop[m] <= l and not qualifies(m)]
    else:
        s_masks = [sum(1 << int(v) for v in a) for a in s_sets]
    extramodular_ok = True
    for a in s_masks:
        for b in s_masks:
            if qualifies(a | b):
                pairs += 1
                if fval[a] + fval[b] < fval[a | b] + fval[a & b] + 1:
                    extramodular_ok = False
                    violations.append((_mask_to_set(a), _mask_to_set(b)))

    singleton = csirmaz_f(1, l)
    minimal_ok = singleton <= l
    return CsirmazReport(
        ground_size=ground_size, l=l, monotone_ok=monotone_ok,
        submodular_ok=submodular_ok, extramodular_ok=extramodular_ok,
        minimal_ok=minimal_ok, singleton_value=singleton,
        pairs_checked=pairs, violations=tuple(violations[:16]),
    )


def _mask_to_set(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if (mask >> i) & 1)
