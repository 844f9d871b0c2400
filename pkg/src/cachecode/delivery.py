"""XOR delivery for cyclic placement: codeword generation and rate formulas.

After cyclic placement each user still needs the K-i sub-packets of its
demanded file that it does not cache.  Delivery serves all K(K-i) of them
with XOR codewords combining up to ``arity`` sub-packets each, where every
user appearing in a codeword caches all companion sub-packets and can cancel
them instantly.

The generator seeds one structured codeword and then repeatedly advances
every term's user and packet index by one (mod K).  Advanced terms that were
already served are patched: first through a small replacement rule set, then
-- when the rules dead-end -- by re-seating the term on any still-owed
sub-packet compatible with the codeword under construction, and, when a
whole round has been consumed and exactly K sub-packets remain, through a
dedicated tail construction that spreads the last codewords evenly over the
ring.  A depth-first search over the replacement placements, pruned by
exact counting bounds, drives the transmission count to
ceil(K*(K-i)/arity), which beats splitting files into binom(K, i) pieces at
a rate cost that vanishes for large caches.

A few tightly budgeted instances admit no schedule under the sweeping
discipline (a kept term can wall off every compatible re-seat).  Those fall
back to equivalent constructions with the same transmission count: shift
orbits of one or a few base codewords when the counts allow them, and
otherwise a direct packing of the owed sub-packets into exactly the right
number of codewords, found by min-conflicts local search with an integer
program as the backstop.

A separate closed-form generator covers the small-cache regime
(1 < i <= K/2), where every codeword pairs at most two sub-packets.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Collection, Sequence

from .errors import (
    InstanceError,
    NoSeedTerm,
    RegimeError,
    ReplacementExhausted,
    ScheduleError,
)
from .model import (
    CacheLayout,
    SubpacketId,
    SystemParams,
    build_cache_layout,
    build_demand_list,
    validate_demand,
    wrap,
)

__all__ = [
    "Codeword",
    "SchemeConstants",
    "TransmissionSchedule",
    "scheme_constants",
    "rate",
    "mn_rate",
    "mn_subpacketization",
    "initial_codeword_terms",
    "tail_subroutine",
    "rule",
    "check",
    "update",
    "generate_schedule",
    "closed_form_pairs",
]

log = logging.getLogger(__name__)

# One broadcast transmission: the sub-packets XORed together.
Codeword = tuple[SubpacketId, ...]

# Replacement decisions the sweep search may spend before an instance is
# handed to the cyclic fallback construction.
_SWEEP_NODE_BUDGET = 20_000


@dataclass(frozen=True)
class SchemeConstants:
    """Derived delivery constants of an instance.

    stride           K - i + 1; the block offset between the seed codeword's
                     term groups (also one more than the packets each user
                     is missing).
    arity            largest number of sub-packets combined per transmission:
                     2 + floor(i/stride) + floor((i-1)/stride).
    n_transmissions  ceil(K*(K-i)/arity), the schedule length.
    """

    stride: int
    arity: int
    n_transmissions: int


def scheme_constants(params: SystemParams) -> SchemeConstants:
    """Compute (stride, arity, n_transmissions) for 1 <= i <= K-1."""
    K, i = params.n_users, params.cache_units
    if not 1 <= i <= K - 1:
        raise InstanceError(
            f"delivery constants need 1 <= i <= K-1; got i={i}, K={K} "
            "(nothing to send at i=K; i=0 is plain uncoded transmission)"
        )
    stride = K - i + 1
    arity = 2 + i // stride + (i - 1) // stride
    n_transmissions = -(-K * (K - i) // arity)
    return SchemeConstants(stride, arity, n_transmissions)


def rate(params: SystemParams) -> Fraction:
    """Worst-case delivery rate in file units: ceil(K(K-i)/arity) / K.

    The degenerate ends follow the usual conventions: an empty cache costs
    the whole library (rate K) and a full cache costs nothing (rate 0).
    """
    K, i = params.n_users, params.cache_units
    if i == 0:
        return Fraction(K)
    if i == K:
        return Fraction(0)
    return Fraction(scheme_constants(params).n_transmissions, K)


def mn_rate(params: SystemParams) -> Fraction:
    """Baseline rate (K-i)/(1+i) of the classic binomial-placement scheme."""
    K, i = params.n_users, params.cache_units
    return Fraction(K - i, 1 + i)


def mn_subpacketization(params: SystemParams) -> int:
    """Sub-packets per file the binomial-placement baseline needs: C(K, i)."""
    return math.comb(params.n_users, params.cache_units)


def initial_codeword_terms(params: SystemParams) -> list[SubpacketId]:
    """The seed codeword the generator advances from.

    Interleaves two term groups stepped by ``stride``: (1+b*stride,
    i+1+b*stride) for b = 0..floor(i/stride) and (2+b*stride, 1+b*stride)
    for b = 0..floor((i-1)/stride).  When the arity is odd and i < K-2 the
    trailing term's packet index is bumped by one; without the bump the
    advancing sequence collides with itself before the round completes.
    """
    consts = scheme_constants(params)
    K, i, g = params.n_users, params.cache_units, consts.stride
    n1, n2 = i // g, (i - 1) // g
    terms: list[SubpacketId] = []
    for b in range(n1 + 1):
        terms.append(SubpacketId(wrap(1 + b * g, K), wrap(i + 1 + b * g, K)))
        if b <= n2:
            terms.append(SubpacketId(wrap(2 + b * g, K), wrap(1 + b * g, K)))
    if consts.arity % 2 == 1 and i < K - 2:
        u, p = terms[-1]
        terms[-1] = SubpacketId(u, wrap(p + 1, K))
    return terms


def tail_subroutine(
    remaining: Collection[SubpacketId], params: SystemParams
) -> list[SubpacketId]:
    """Build a full codeword directly when exactly K sub-packets remain.

    At that point every user is missing one sub-packet and the survivors sit
    on a diagonal of the (user, packet) ring, so the codeword seeds at user
    1's leftover (smallest packet index if several) and places the other
    arity-1 terms at offsets floor(j*K/arity) along both coordinates.
    """
    consts = scheme_constants(params)
    K = params.n_users
    if len(remaining) != K:
        raise InstanceError(
            f"tail construction applies when exactly K={K} sub-packets "
            f"remain, got {len(remaining)}"
        )
    seeds = sorted(p for (u, p) in remaining if u == 1)
    if not seeds:
        raise NoSeedTerm("user 1 has no remaining demand to seed the tail")
    k = seeds[0]
    terms = [SubpacketId(1, k)]
    for j in range(1, consts.arity):
        off = j * K // consts.arity
        terms.append(SubpacketId(wrap(1 + off, K), wrap(k + off, K)))
    return terms


def rule(term: SubpacketId, flag: int, n_users: int) -> SubpacketId:
    """One of the four replacement moves for an already-served term.

    1: bump the packet, 2: bump the user, 3: drop the user, 4: drop the
    packet -- all cyclically.
    """
    u, p = term
    if flag == 1:
        return SubpacketId(u, wrap(p + 1, n_users))
    if flag == 2:
        return SubpacketId(wrap(u + 1, n_users), p)
    if flag == 3:
        return SubpacketId(wrap(u - 1, n_users), p)
    if flag == 4:
        return SubpacketId(u, wrap(p - 1, n_users))
    raise ValueError(f"replacement rule flag must be 1..4, got {flag}")


def _compatible(
    term: SubpacketId, others: Sequence[SubpacketId], layout: CacheLayout
) -> bool:
    """Mutual-caching test: XORing ``term`` with ``others`` stays decodable."""
    u, p = term
    for u2, p2 in others:
        if not (layout.knows(u2, p) and layout.knows(u, p2)):
            return False
    return True


def check(
    term: SubpacketId,
    layout: CacheLayout,
    remaining: Collection[SubpacketId],
    partial: Sequence[SubpacketId],
) -> bool:
    """Can ``term`` join the codeword built so far?

    It must still be owed, and it must be mutually cached with every term
    already present: each existing user caches the candidate packet and the
    candidate user caches each existing packet.  A term never caches its own
    packet, so a candidate equal to an existing term fails automatically.
    """
    return term in remaining and _compatible(term, partial, layout)


def update(
    term: SubpacketId,
    remaining: Collection[SubpacketId],
    layout: CacheLayout,
    partial: Sequence[SubpacketId],
    flag: int,
) -> tuple[SubpacketId, int]:
    """Replace a term that was already served in an earlier transmission.

    With flag 0 the four rules are tried in order and the first candidate
    that passes :func:`check` is returned together with its rule number;
    :class:`ReplacementExhausted` is raised when none fits.  Once a rule has
    fired, later replacements in the same codeword pair up with it: flags 1
    and 3 advance to their partner rule (2 and 4), flags 2 and 4 fall back
    to theirs (1 and 3), applied without re-checking.
    """
    K = layout.n_users
    if flag == 0:
        for k in (1, 2, 3, 4):
            candidate = rule(term, k, K)
            if check(candidate, layout, remaining, partial):
                return candidate, k
        raise ReplacementExhausted(f"no replacement rule fits dead term {term}")
    if flag in (1, 3):
        flag += 1
    elif flag in (2, 4):
        flag -= 1
    else:
        raise ValueError(f"replacement flag must be 0..4, got {flag}")
    return rule(term, flag, K), flag


@dataclass(frozen=True)
class TransmissionSchedule:
    """A complete delivery schedule for one instance.

    ``constants`` is None only for the degenerate full-cache instance
    (i = K), whose schedule is empty.
    """

    codewords: tuple[Codeword, ...]
    params: SystemParams
    constants: SchemeConstants | None
    rate: Fraction

    @property
    def n_transmissions(self) -> int:
        return len(self.codewords)

    @property
    def subpacketization(self) -> int:
        """Sub-packets each file is split into (always K here)."""
        return self.params.n_users

    def total_terms(self) -> int:
        return sum(len(cw) for cw in self.codewords)


def _require_schedule_inputs(
    params: SystemParams, demands: Sequence[int] | None
) -> None:
    if params.n_files < params.n_users:
        raise InstanceError(
            f"schedule generation covers the worst case and needs "
            f"N >= K; got N={params.n_files}, K={params.n_users}"
        )
    if demands is not None:
        validate_demand(params, demands)


def _assert_schedule_shape(schedule: TransmissionSchedule) -> None:
    params, consts = schedule.params, schedule.constants
    K, i = params.n_users, params.cache_units
    problems = []
    if consts is not None and len(schedule.codewords) != consts.n_transmissions:
        problems.append(
            f"{len(schedule.codewords)} transmissions instead of "
            f"{consts.n_transmissions}"
        )
    if schedule.total_terms() != K * (K - i):
        problems.append(
            f"{schedule.total_terms()} terms instead of {K * (K - i)}"
        )
    if consts is not None and any(
        not 1 <= len(cw) <= consts.arity for cw in schedule.codewords
    ):
        problems.append(f"codeword arity outside [1, {consts.arity}]")
    served = [term for cw in schedule.codewords for term in cw]
    if len(set(served)) != len(served) or set(served) != set(
        build_demand_list(params)
    ):
        problems.append("served sub-packets do not partition the demands")
    if problems:
        detail = "; ".join(problems)
        log.warning("schedule shape violated for K=%d, i=%d: %s", K, i, detail)
        raise ScheduleError(f"K={K}, i={i}: {detail}")


_PARTNER = {1: 2, 2: 1, 3: 4, 4: 3}


def _advance(term: SubpacketId, n_users: int) -> SubpacketId:
    return SubpacketId(
        wrap(term.user + 1, n_users), wrap(term.packet + 1, n_users)
    )


def _run_ahead(
    cell: SubpacketId,
    remaining: Collection[SubpacketId],
    claimed: Collection[SubpacketId],
    n_users: int,
) -> int:
    """Transmissions a term seated at ``cell`` survives before colliding."""
    run = 0
    cur = cell
    while run < n_users and cur in remaining and cur not in claimed:
        run += 1
        cur = _advance(cur, n_users)
    return run


def _replacement_choices(
    dead: SubpacketId,
    flag: int,
    layout: CacheLayout,
    remaining: set[SubpacketId],
    partial: Sequence[SubpacketId],
    steps_left: int,
) -> list[tuple[SubpacketId | None, int]]:
    """Ordered placement options for a term whose advance was already served.

    The four local rules come first (partner rule leading once a pairing
    flag is set), exactly what :func:`update` would try, so instances the
    rule set can finish come out move for move.  When the rules dead-end
    the term may re-seat on any still-owed sub-packet compatible with the
    codeword built so far; rescues prefer diagonals holding the most owed
    cells per committed term, then seats whose unobstructed run matches the
    transmissions left.  Abandoning the term is the final option.
    """
    K = layout.n_users
    choices: list[tuple[SubpacketId | None, int]] = []
    seen: set[SubpacketId] = set()
    if flag == 0:
        order: tuple[int, ...] = (1, 2, 3, 4)
    else:
        first = _PARTNER[flag]
        order = (first,) + tuple(k for k in (1, 2, 3, 4) if k != first)
    for k in order:
        cand = rule(dead, k, K)
        if cand not in seen and check(cand, layout, remaining, partial):
            choices.append((cand, k))
            seen.add(cand)
    claimed = frozenset(partial)
    owed: dict[int, int] = {}
    committed: dict[int, int] = {}
    for u, p in remaining:
        d = (p - u) % K
        owed[d] = owed.get(d, 0) + 1
    for u, p in partial:
        d = (p - u) % K
        committed[d] = committed.get(d, 0) + 1
    rescue: list[tuple[float, int, int, int, SubpacketId]] = []
    for cell in sorted(remaining):
        if cell in seen or cell in claimed:
            continue
        if not check(cell, layout, remaining, partial):
            continue
        d = (cell.packet - cell.user) % K
        need = owed[d] / (1 + committed.get(d, 0))
        fit = abs(_run_ahead(cell, remaining, claimed, K) - steps_left)
        rescue.append((-need, fit, cell.user, cell.packet, cell))
    rescue.sort()
    choices.extend((cell, 0) for _, _, _, _, cell in rescue)
    choices.append((None, flag))
    return choices


def _diagonals_feasible(
    cells: Collection[SubpacketId], steps: int, n_users: int, stride: int
) -> bool:
    """Necessary condition for finishing the owed cells in ``steps``.

    Codeword terms sharing a diagonal (packet minus user, mod K) must keep
    a pairwise circular distance of at least max(stride - gap, gap) where
    gap = K - diagonal, so one transmission ships at most K // distance of
    that diagonal's cells.
    """
    counts: dict[int, int] = {}
    for u, p in cells:
        d = (p - u) % n_users
        counts[d] = counts.get(d, 0) + 1
    for d, count in counts.items():
        gap = n_users - d
        team = n_users // max(stride - gap, gap)
        if -(-count // team) > steps:
            return False
    return True


def _checked_tail(
    remaining: set[SubpacketId], params: SystemParams, layout: CacheLayout
) -> list[SubpacketId] | None:
    """Tail codeword when it is well formed, else None to fall back."""
    try:
        terms = tail_subroutine(remaining, params)
    except NoSeedTerm:
        return None
    built: list[SubpacketId] = []
    for term in terms:
        if term in built or not check(term, layout, remaining, built):
            return None
        built.append(term)
    return built


def _transversal_clique(
    offsets: Sequence[int], layout: CacheLayout
) -> list[SubpacketId] | None:
    """Lexicographically least clique with one cell on each listed diagonal.

    A diagonal is the set of cells (u, u + offset mod K); advancing every
    term of a codeword by one step keeps mutual caching intact, so one
    such clique sweeps all its diagonals completely in K transmissions.
    """
    K = layout.n_users
    chosen: list[SubpacketId] = []

    def extend(idx: int) -> bool:
        if idx == len(offsets):
            return True
        off = offsets[idx]
        for u in range(1, K + 1):
            cell = SubpacketId(u, wrap(u + off, K))
            if _compatible(cell, chosen, layout):
                chosen.append(cell)
                if extend(idx + 1):
                    return True
                chosen.pop()
        return False

    return chosen if extend(0) else None


def _tile_minconf(
    cells: Collection[SubpacketId],
    n_cliques: int,
    arity: int,
    layout: CacheLayout,
    n_seeds: int = 50,
    n_moves: int = 12_000,
) -> list[Codeword] | None:
    """Partition ``cells`` into ``n_cliques`` codewords by local search.

    Deals the cells round-robin into the codeword slots, then repairs:
    each step picks a cell that conflicts with a slot-mate and applies the
    best conflict-reducing move or swap, breaking ties by seeded choice,
    with a one-percent chance of a random swap to shake loose of plateaus.
    A stalled pass restarts from a reshuffled deal with the next seed, so
    the whole procedure is reproducible.  Fast on the irregular instances
    that admit no shift structure; returns None when every pass stalls,
    which says nothing about feasibility.
    """
    order = sorted(set(cells))
    n = len(order)
    if not (0 < n_cliques <= n <= arity * n_cliques):
        return None
    adj = [0] * n
    for a in range(n):
        for b in range(a + 1, n):
            if not _compatible(order[a], (order[b],), layout):
                adj[a] |= 1 << b
                adj[b] |= 1 << a
    floor_size = max(1, n - arity * (n_cliques - 1))
    for seed in range(n_seeds):
        rng = random.Random(seed)
        deal = list(range(n))
        rng.shuffle(deal)
        assign = [0] * n
        slots = [0] * n_cliques
        sizes = [0] * n_cliques
        for pos, b in enumerate(deal):
            j = pos % n_cliques
            assign[b] = j
            slots[j] |= 1 << b
            sizes[j] += 1
        conflicted = {
            b for b in range(n) if adj[b] & slots[assign[b]]
        }

        def refresh(touched: set[int]) -> None:
            for x in touched:
                if adj[x] & slots[assign[x]]:
                    conflicted.add(x)
                else:
                    conflicted.discard(x)

        def occupants(j: int) -> list[int]:
            out = []
            mask = slots[j]
            while mask:
                out.append((mask & -mask).bit_length() - 1)
                mask &= mask - 1
            return out

        for _ in range(n_moves):
            if not conflicted:
                return [
                    tuple(sorted(order[b] for b in occupants(j)))
                    for j in range(n_cliques)
                ]
            pool = sorted(conflicted)
            cell = pool[rng.randrange(len(pool))]
            cur = assign[cell]
            target = -1
            partner = -1
            if rng.random() < 0.01:
                target = rng.randrange(n_cliques - 1)
                if target >= cur:
                    target += 1
                seats = occupants(target)
                partner = seats[rng.randrange(len(seats))] if seats else -1
                if partner < 0:
                    continue
            else:
                cur_cost = (adj[cell] & slots[cur]).bit_count()
                best: int | None = None
                moves: list[tuple[int, int]] = []
                for j in range(n_cliques):
                    if j == cur:
                        continue
                    if sizes[j] < arity and sizes[cur] > floor_size:
                        delta = (
                            adj[cell] & slots[j]
                        ).bit_count() - cur_cost
                        if best is None or delta <= best:
                            if best is None or delta < best:
                                moves = []
                            best = delta
                            moves.append((j, -1))
                    for b in occupants(j):
                        delta = (
                            (adj[cell] & (slots[j] & ~(1 << b))).bit_count()
                            - cur_cost
                            + (adj[b] & (slots[cur] & ~(1 << cell))).bit_count()
                            - (adj[b] & slots[j] & ~(1 << b)).bit_count()
                        )
                        if best is None or delta <= best:
                            if best is None or delta < best:
                                moves = []
                            best = delta
                            moves.append((j, b))
                if not moves:
                    break
                target, partner = moves[rng.randrange(len(moves))]
            slots[cur] &= ~(1 << cell)
            sizes[cur] -= 1
            if partner >= 0:
                slots[target] &= ~(1 << partner)
                sizes[target] -= 1
                slots[cur] |= 1 << partner
                sizes[cur] += 1
                assign[partner] = cur
            slots[target] |= 1 << cell
            sizes[target] += 1
            assign[cell] = target
            touched = {cell}
            if partner >= 0:
                touched.add(partner)
            near = adj[cell] | (adj[partner] if partner >= 0 else 0)
            mask = near & (slots[cur] | slots[target])
            while mask:
                touched.add((mask & -mask).bit_length() - 1)
                mask &= mask - 1
            refresh(touched)
    return None


def _spaced_run_cover(
    offsets: Sequence[int],
    n_cliques: int,
    arity: int,
    layout: CacheLayout,
) -> list[Codeword] | None:
    """Cover full diagonals with shifted runs of a common step d.

    With d coprime to K, the multiples of d walk through every user index,
    so a base codeword holding m consecutive d-multiples on each listed
    diagonal, shifted q times by m*d, covers the first m*q multiples on
    each diagonal exactly once.  The K - m*q cells left at the end of each
    walk become extras, placed one by one into spare codeword capacity or
    into fresh codewords until the total count lands exactly on
    ``n_cliques``.  Everything is tried in one fixed order, smallest m and
    largest q first, so the result is deterministic.
    """
    K = layout.n_users
    n_diag = len(offsets)
    if n_diag == 0 or arity < n_diag:
        return None
    bases: dict[tuple[int, int], list[SubpacketId] | None] = {}
    for m in range(1, arity // n_diag + 1):
        spare = arity - m * n_diag
        for q in range(min(K // m, n_cliques), 0, -1):
            rem = K - m * q
            n_extra = n_cliques - q
            extras_total = rem * n_diag
            if extras_total > 2 * arity:
                continue
            if extras_total == 0 and n_extra > 0:
                continue
            if extras_total > q * spare + n_extra * arity:
                continue
            if extras_total and not n_extra and not spare:
                continue
            for d in range(1, K):
                if math.gcd(d, K) != 1:
                    continue
                if (m, d) not in bases:
                    bases[m, d] = _spaced_base(offsets, m, d, layout)
                base = bases[m, d]
                if base is None:
                    continue
                built = _spaced_assemble(
                    base, offsets, m, q, d, rem, n_extra, spare,
                    arity, layout,
                )
                if built is not None:
                    return built
    return None


def _spaced_base(
    offsets: Sequence[int], m: int, d: int, layout: CacheLayout
) -> list[SubpacketId] | None:
    """Base codeword with m cells spaced d apart on each listed diagonal.

    The first diagonal is anchored at user 1: any shift of a full spaced
    run cover is another one, so nothing is lost.  Depth-first over the
    remaining anchors, keeping every partial choice mutually compatible.
    """
    K = layout.n_users
    chosen: list[SubpacketId] = []

    def block(anchor: int, off: int) -> list[SubpacketId] | None:
        cells = []
        for l in range(m):
            u = wrap(anchor + l * d, K)
            cell = SubpacketId(u, wrap(u + off, K))
            if not _compatible(cell, chosen, layout) or not _compatible(
                cell, cells, layout
            ):
                return None
            cells.append(cell)
        return cells

    def extend(idx: int) -> bool:
        if idx == len(offsets):
            return True
        anchors = [1] if idx == 0 else range(1, K + 1)
        for a in anchors:
            cells = block(a, offsets[idx])
            if cells is None:
                continue
            chosen.extend(cells)
            if extend(idx + 1):
                return True
            del chosen[-m:]
        return False

    return chosen if extend(0) else None


def _spaced_assemble(
    base: Sequence[SubpacketId],
    offsets: Sequence[int],
    m: int,
    q: int,
    d: int,
    rem: int,
    n_extra: int,
    spare: int,
    arity: int,
    layout: CacheLayout,
) -> list[Codeword] | None:
    """Shift the base q times and seat the leftover cells, exactly.

    Extras are the last ``rem`` d-multiples of each diagonal walk.  Each is
    placed into the first shifted codeword with room and full mutual
    caching, an already opened extra codeword, or a fresh one while any of
    the ``n_extra`` budgeted codewords remains unopened; the first
    depth-first assignment that uses the budget exactly wins.
    """
    K = layout.n_users
    cliques: list[list[SubpacketId]] = []
    for r in range(q):
        shift = r * m * d
        cliques.append(
            [SubpacketId(wrap(u + shift, K), wrap(p + shift, K))
             for u, p in base]
        )
    anchors = {off: base[idx * m].user for idx, off in enumerate(offsets)}
    extras = [
        SubpacketId(
            wrap(anchors[off] + (m * q + x) * d, K),
            wrap(anchors[off] + (m * q + x) * d + off, K),
        )
        for off in offsets
        for x in range(rem)
    ]
    extra_cliques: list[list[SubpacketId]] = []
    budget = 200_000

    def seat(idx: int) -> bool:
        nonlocal budget
        budget -= 1
        if budget < 0:
            return False
        if idx == len(extras):
            return len(extra_cliques) == n_extra
        if len(extra_cliques) + (len(extras) - idx) < n_extra:
            return False
        cell = extras[idx]
        for clique in cliques:
            if len(clique) - len(base) < spare and _compatible(
                cell, clique, layout
            ):
                clique.append(cell)
                if seat(idx + 1):
                    return True
                clique.pop()
        for clique in extra_cliques:
            if len(clique) < arity and _compatible(cell, clique, layout):
                clique.append(cell)
                if seat(idx + 1):
                    return True
                clique.pop()
        if len(extra_cliques) < n_extra:
            extra_cliques.append([cell])
            if seat(idx + 1):
                return True
            extra_cliques.pop()
        return False

    if not seat(0):
        return None
    return [tuple(sorted(c)) for c in cliques + extra_cliques]


def _tile_milp(
    cells: Collection[SubpacketId],
    n_cliques: int,
    arity: int,
    layout: CacheLayout,
) -> list[Codeword] | None:
    """Exact partition into compatible codewords via integer programming.

    One binary per (cell, codeword slot): every cell sits in exactly one
    slot, every slot holds between one and ``arity`` cells, and the two
    members of every incompatible cell pair exclude each other within each
    slot.  Slot-permutation symmetry would drown the solver, so the first
    cell is pinned to the first slot and precedence rows let a slot host a
    cell only when the previous slot hosts a lower-numbered one.  scipy's
    HiGHS backend solves the program single-threaded, so the returned
    partition is reproducible.
    """
    import numpy as np
    from scipy import sparse
    from scipy.optimize import Bounds, LinearConstraint, milp

    order = sorted(set(cells))
    n = len(order)
    n_vars = n * n_cliques
    if not n or arity * n_cliques < n or n_vars > 60_000:
        return None
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    row = 0
    lo: list[float] = []
    hi: list[float] = []

    def put(r: int, c: int, v: float) -> None:
        rows.append(r)
        cols.append(c)
        vals.append(v)

    for c in range(n):
        for j in range(n_cliques):
            put(row, c * n_cliques + j, 1.0)
        lo.append(1.0)
        hi.append(1.0)
        row += 1
    for j in range(n_cliques):
        for c in range(n):
            put(row, c * n_cliques + j, 1.0)
        lo.append(1.0)
        hi.append(float(arity))
        row += 1
    for a in range(n):
        for b in range(a + 1, n):
            if not _compatible(order[a], (order[b],), layout):
                for j in range(n_cliques):
                    put(row, a * n_cliques + j, 1.0)
                    put(row, b * n_cliques + j, 1.0)
                    lo.append(0.0)
                    hi.append(1.0)
                    row += 1
    for c in range(1, n):
        for j in range(1, n_cliques):
            put(row, c * n_cliques + j, 1.0)
            for earlier in range(c):
                put(row, earlier * n_cliques + j - 1, -1.0)
            lo.append(-float(n))
            hi.append(0.0)
            row += 1
    matrix = sparse.csc_array(
        (vals, (rows, cols)), shape=(row, n_vars)
    )
    lower = np.zeros(n_vars)
    upper = np.ones(n_vars)
    lower[0] = 1.0
    upper[1:n_cliques] = 0.0
    result = milp(
        c=np.zeros(n_vars),
        constraints=LinearConstraint(matrix, np.array(lo), np.array(hi)),
        integrality=np.ones(n_vars),
        bounds=Bounds(lower, upper),
    )
    if result.status != 0:
        return None
    chosen = np.round(result.x).astype(int)
    built = []
    for j in range(n_cliques):
        built.append(
            tuple(
                sorted(
                    order[c]
                    for c in range(n)
                    if chosen[c * n_cliques + j]
                )
            )
        )
    return built


def _tile_leftover(
    offsets: Sequence[int],
    n_cliques: int,
    arity: int,
    layout: CacheLayout,
    stride: int,
) -> list[Codeword] | None:
    """Tile a union of full diagonals into exactly ``n_cliques`` codewords.

    Tries the structured spaced-run cover first; most instances that reach
    this point have one.  The irregular rest usually falls to the
    min-conflicts local search within a few restarts, and whatever
    survives that goes to the integer-programming tiler, which is slower
    but complete.
    """
    K = layout.n_users

    def min_cliques(offs: Sequence[int]) -> int:
        lo = -(-len(offs) * K // arity)
        for off in offs:
            gap = K - off
            team = min(arity, K // max(stride - gap, gap))
            lo = max(lo, -(-K // team))
        return lo

    if not offsets:
        return [] if n_cliques == 0 else None
    if min_cliques(offsets) > n_cliques:
        return None
    built = _spaced_run_cover(offsets, n_cliques, arity, layout)
    if built is not None:
        return built
    cells = [
        SubpacketId(u, wrap(u + off, K))
        for off in offsets
        for u in range(1, K + 1)
    ]
    built = _tile_minconf(cells, n_cliques, arity, layout)
    if built is not None:
        return built
    return _tile_milp(cells, n_cliques, arity, layout)


def _block_clique(
    offsets: Sequence[int], mult: int, layout: CacheLayout
) -> list[SubpacketId] | None:
    """Base codeword holding ``mult`` evenly spaced cells per diagonal.

    Cells on diagonal ``off`` sit at users a, a+K/mult, a+2K/mult, ...; the
    K/mult distinct shifts of such a codeword cover every listed diagonal
    exactly once.  Depth-first over the per-diagonal anchors ``a``.
    """
    K = layout.n_users
    period = K // mult
    chosen: list[SubpacketId] = []

    def extend(idx: int) -> bool:
        if idx == len(offsets):
            return True
        off = offsets[idx]
        for a in range(1, period + 1):
            cells = [
                SubpacketId(wrap(a + j * period, K), wrap(a + j * period + off, K))
                for j in range(mult)
            ]
            if all(_compatible(c, chosen, layout) for c in cells):
                chosen.extend(cells)
                if extend(idx + 1):
                    return True
                del chosen[-mult:]
        return False

    return chosen if extend(0) else None


def _coset_cover(
    params: SystemParams, layout: CacheLayout, consts: SchemeConstants
) -> list[Codeword] | None:
    """Shift-orbit cover of all owed diagonals, when the counts allow one.

    Assigns each diagonal a multiplicity m (cells per codeword, a divisor
    of K, with coset spacing K/m no tighter than the diagonal's minimum),
    packs diagonals of equal multiplicity into blocks of at most
    floor(arity/m), and sweeps each block with the K/m shifts of one base
    codeword from :func:`_block_clique`.  A multiplicity profile is usable
    only when the block counts add up to exactly the required number of
    transmissions; all profiles are enumerated and the first that also
    admits base codewords wins.
    """
    K, i = params.n_users, params.cache_units
    arity, total, stride = consts.arity, consts.n_transmissions, consts.stride
    offsets = list(range(i, K))

    def cap(off: int) -> int:
        gap = K - off
        return K // max(stride - gap, gap)

    by_cap = sorted(offsets, key=lambda off: (cap(off), off))
    caps = [cap(off) for off in by_cap]
    divisors = [m for m in range(1, arity + 1) if K % m == 0]
    profiles: list[list[int]] = []

    def enumerate_profiles(
        idx: int, left: int, cws: int, profile: list[int]
    ) -> None:
        if cws > total:
            return
        if idx == len(divisors):
            if left == 0 and cws == total:
                profiles.append(profile.copy())
            return
        m = divisors[idx]
        width = arity // m
        for n in range(left + 1):
            blocks = -(-n // width) if n else 0
            add = blocks * (K // m)
            if cws + add > total:
                break
            profile.append(n)
            enumerate_profiles(idx + 1, left - n, cws + add, profile)
            profile.pop()

    enumerate_profiles(0, len(offsets), 0, [])
    for profile in profiles:
        # Loosest diagonals take the highest multiplicities; with nested
        # eligibility the sorted pairing is feasible whenever anything is.
        mults: list[int] = []
        for m, n in zip(divisors, profile):
            mults.extend([m] * n)
        mults.sort()
        if any(m > c for m, c in zip(mults, caps)):
            continue
        assigned: dict[int, list[int]] = {}
        for off, m in zip(by_cap, mults):
            assigned.setdefault(m, []).append(off)
        codewords: list[Codeword] = []
        feasible = True
        for m in sorted(assigned):
            group = sorted(assigned[m])
            width = arity // m
            for g in range(0, len(group), width):
                block = group[g : g + width]
                base = _block_clique(block, m, layout)
                if base is None:
                    feasible = False
                    break
                for s in range(K // m):
                    codewords.append(
                        tuple(
                            SubpacketId(wrap(u + s, K), wrap(p + s, K))
                            for u, p in base
                        )
                    )
            if not feasible:
                break
        if feasible:
            return codewords
    return None


def _orbit_schedule(
    params: SystemParams, layout: CacheLayout, consts: SchemeConstants
) -> list[Codeword] | None:
    """Cyclic construction for instances the sweep search cannot finish.

    The owed region is a union of K-i full diagonals.  Preferred shape: a
    pure shift-orbit cover (:func:`_coset_cover`).  When no multiplicity
    profile matches the transmission count -- unavoidable for prime K,
    whose cyclic group has no nontrivial tilings -- the diagonals are
    grouped by arity: full groups are swept by transversal codewords, and
    whatever is left over (the loosest-spaced diagonals, which pack into
    the fewest codewords) is tiled directly by :func:`_tile_leftover` with
    exactly the codeword count that lands the total on the closed form.
    When the transversal groupings fail, the whole region is tiled
    directly.
    """
    K, i = params.n_users, params.cache_units
    arity, total, stride = consts.arity, consts.n_transmissions, consts.stride
    codewords = _coset_cover(params, layout, consts)
    if codewords is not None:
        return codewords

    offsets = list(range(i, K))
    n_groups = len(offsets) // arity
    n_loose = len(offsets) % arity

    def min_spacing(off: int) -> int:
        gap = K - off
        return max(stride - gap, gap)

    by_spacing = sorted(offsets, key=lambda off: (min_spacing(off), off))
    loose = sorted(by_spacing[:n_loose])
    grouped = sorted(by_spacing[n_loose:])

    n_loose_cliques = total - n_groups * K
    if n_loose_cliques >= 0 and (loose or not n_loose_cliques):
        tiled = _tile_leftover(loose, n_loose_cliques, arity, layout, stride)
        if tiled is not None:
            groupings = []
            if n_groups:
                chunked = [
                    grouped[g * arity : (g + 1) * arity]
                    for g in range(n_groups)
                ]
                striped = [grouped[g::n_groups] for g in range(n_groups)]
                groupings = [chunked] + (
                    [striped] if striped != chunked else []
                )
            else:
                groupings = [[]]
            for groups in groupings:
                transversals = [
                    _transversal_clique(g, layout) for g in groups
                ]
                if any(t is None for t in transversals):
                    continue
                codewords = []
                for trans in transversals:
                    if trans is None:
                        continue
                    for s in range(K):
                        codewords.append(
                            tuple(
                                SubpacketId(wrap(u + s, K), wrap(p + s, K))
                                for u, p in trans
                            )
                        )
                codewords.extend(tiled)
                return codewords

    if not n_groups:
        return None
    return _tile_leftover(offsets, total, arity, layout, stride)


def _solve_schedule(
    params: SystemParams,
    layout: CacheLayout,
    consts: SchemeConstants,
    seed: Sequence[SubpacketId],
    demand_cells: Sequence[SubpacketId],
    node_budget: int | None = None,
) -> list[Codeword] | None:
    """Depth-first construction of an exact-length schedule by sweeping.

    Follows the advancing sweep greedily -- owed terms are kept, served
    terms patched through :func:`_replacement_choices` -- and backtracks
    over replacement placements whenever the counting bounds show the
    remainder cannot finish within budget.  Every appended term is checked
    against the whole codeword under construction, so the result is
    instantaneously decodable by construction.

    Returns None when the search space is exhausted or ``node_budget``
    replacement decisions were spent without completing a schedule.
    """
    K = params.n_users
    arity, budget, stride = consts.arity, consts.n_transmissions, consts.stride
    remaining: set[SubpacketId] = set(demand_cells)
    codewords: list[Codeword] = []
    queue: list[SubpacketId] = list(seed)
    partial: list[SubpacketId] = []
    flag = 0
    pos = 0
    # Untried options for each replacement decision, newest last.  Between
    # two commits only (partial, flag, pos) change, so a decision records
    # the commit count instead of copying the owed set; backtracking pops
    # committed codewords back into it.
    decisions: list[
        tuple[int, tuple[SubpacketId, ...], int, list[tuple[SubpacketId | None, int]]]
    ] = []
    nodes = 0

    def backtrack() -> bool:
        nonlocal queue, partial, flag, pos, nodes
        while decisions:
            n_committed, part, px, options = decisions[-1]
            if not options:
                decisions.pop()
                continue
            nodes += 1
            while len(codewords) > n_committed:
                remaining.update(codewords.pop())
            queue = (
                [_advance(term, K) for term in codewords[-1]]
                if codewords
                else list(seed)
            )
            partial = list(part)
            term, flag = options.pop(0)
            if term is not None:
                partial.append(term)
            pos = px + 1
            return True
        return False

    while True:
        if node_budget is not None and nodes > node_budget:
            log.debug(
                "sweep for K=%d, i=%d gave up after %d decisions",
                K,
                params.cache_units,
                nodes,
            )
            return None
        if pos == len(queue):
            if not partial:
                if backtrack():
                    continue
                return None
            done = len(codewords) + 1
            steps = budget - done
            left = len(remaining) - len(partial)
            # Without the tail construction (possible only while at least
            # K cells are owed) the term count can never grow again.
            cap = arity if left >= K else min(arity, len(partial))
            feasible = left <= cap * steps and (
                left == 0
                or _diagonals_feasible(
                    [c for c in remaining if c not in set(partial)],
                    steps,
                    K,
                    stride,
                )
            )
            if not feasible:
                if backtrack():
                    continue
                return None
            remaining.difference_update(partial)
            codewords.append(tuple(partial))
            if not remaining:
                log.debug(
                    "sweep for K=%d, i=%d done after %d decisions",
                    K,
                    params.cache_units,
                    nodes,
                )
                return codewords
            queue = [_advance(term, K) for term in partial]
            partial = []
            flag = 0
            pos = 0
            continue
        cand = queue[pos]
        if len(partial) >= arity or cand in partial:
            pos += 1
            continue
        if cand in remaining:
            if check(cand, layout, remaining, partial):
                partial.append(cand)
                pos += 1
                continue
            if backtrack():
                continue
            return None
        if not partial and len(remaining) == K:
            tail = _checked_tail(remaining, params, layout)
            if tail is not None:
                partial = tail
                pos += 1
                continue
        options = _replacement_choices(
            cand, flag, layout, remaining, partial, budget - len(codewords)
        )
        nodes += 1
        decisions.append((len(codewords), tuple(partial), pos, options))
        term, flag = options.pop(0)
        if term is not None:
            partial.append(term)
        pos += 1


def generate_schedule(
    params: SystemParams, demands: Sequence[int] | None = None
) -> TransmissionSchedule:
    """Generate the complete XOR schedule for an instance.

    Walks the seed codeword around the ring: each transmission keeps the
    advanced terms that are still owed, patches served ones (rule set
    first, compatible re-seating when the rules dead-end), and switches to
    :func:`tail_subroutine` when a transmission opens with a served term
    while exactly K sub-packets remain.  Backtracking over the patch
    placements makes the transmission count land on the closed form, and
    the shape is re-checked before the schedule is returned.

    The demand vector only matters for moving actual bytes; the schedule
    itself is keyed on user positions and is identical for all demands.
    """
    _require_schedule_inputs(params, demands)
    K, i = params.n_users, params.cache_units
    if i == K:
        return TransmissionSchedule((), params, None, Fraction(0))
    if i == 0:
        raise InstanceError(
            "i=0 leaves nothing cached; send the library uncoded instead"
        )
    consts = scheme_constants(params)
    layout = build_cache_layout(params)
    codewords = _solve_schedule(
        params,
        layout,
        consts,
        initial_codeword_terms(params),
        build_demand_list(params),
        node_budget=_SWEEP_NODE_BUDGET,
    )
    if codewords is None:
        codewords = _orbit_schedule(params, layout, consts)
    if codewords is None:
        raise ScheduleError(
            f"K={K}, i={i}: no schedule of {consts.n_transmissions} "
            "transmissions found"
        )
    schedule = TransmissionSchedule(
        tuple(codewords), params, consts, Fraction(len(codewords), K)
    )
    _assert_schedule_shape(schedule)
    return schedule


def closed_form_pairs(
    params: SystemParams, demands: Sequence[int] | None = None
) -> TransmissionSchedule:
    """Direct pairwise schedule for the small-cache regime 1 < i <= K/2.

    Emits the pairs (1+a, i+a+k) + (1+k+a, 1+a) for k = 1..floor((K-i)/2)
    and a = 0..K-1 (all indices wrapped).  When K-i is odd, one extra family
    (1+a, i+ceil((K-i)/2)+a) + (floor(K/2)+1+a, ceil(i/2)+a) finishes the
    job; its index range overshoots by construction, so terms that were
    already covered are skipped, which leaves exactly ceil(K(K-i)/2)
    transmissions (the last one a singleton when K is odd).
    """
    _require_schedule_inputs(params, demands)
    K, i = params.n_users, params.cache_units
    if not (1 < i and 2 * i <= K):
        raise RegimeError(
            f"pairwise closed form covers 1 < i <= K/2; got i={i}, K={K}"
        )
    consts = scheme_constants(params)
    covered: set[SubpacketId] = set()
    codewords: list[Codeword] = []
    for k in range(1, (K - i) // 2 + 1):
        for a in range(K):
            pair = (
                SubpacketId(wrap(1 + a, K), wrap(i + a + k, K)),
                SubpacketId(wrap(1 + k + a, K), wrap(1 + a, K)),
            )
            codewords.append(pair)
            covered.update(pair)
    if (K - i) % 2 == 1:
        half = (K - i + 1) // 2
        for a in range((K + 1) // 2 + 1):
            two = (
                SubpacketId(wrap(1 + a, K), wrap(i + half + a, K)),
                SubpacketId(wrap(K // 2 + 1 + a, K), wrap((i + 1) // 2 + a, K)),
            )
            fresh = tuple(s for s in two if s not in covered)
            if not fresh:
                continue
            codewords.append(fresh)
            covered.update(fresh)
    if covered != set(build_demand_list(params)):
        raise ScheduleError(
            f"K={K}, i={i}: pairwise closed form missed demanded sub-packets"
        )
    schedule = TransmissionSchedule(
        tuple(codewords), params, consts, Fraction(len(codewords), K)
    )
    _assert_schedule_shape(schedule)
    return schedule
