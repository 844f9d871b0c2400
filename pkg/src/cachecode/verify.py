"""Schedule validation, bit-exact delivery simulation, and a pairing oracle.

Three independent ways to gain confidence in a schedule:

* a structural check that every user appearing in a codeword caches all
  companion sub-packets (so each transmission is useful immediately) and
  that the codewords partition exactly the demanded sub-packets;
* an end-to-end simulation that XORs real bytes, decodes at every user from
  cache plus received transmissions only, and compares files bit for bit;
* an exact minimizer over schedules restricted to two-term codewords, built
  on maximum matching rather than on the generators it cross-checks.
"""

from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import networkx as nx

from .delivery import TransmissionSchedule, generate_schedule
from .errors import InstanceError, RegimeError, SimulationMismatch
from .model import (
    CacheLayout,
    SubpacketId,
    SystemParams,
    build_cache_layout,
    build_demand_list,
    validate_demand,
)

__all__ = [
    "FileStore",
    "Violation",
    "VerificationReport",
    "random_file_store",
    "verify_instantaneous_decodability",
    "simulate_end_to_end",
    "min_pair_transmissions",
]

log = logging.getLogger(__name__)


class Violation(NamedTuple):
    """One verifier finding.

    ``codeword_index`` is None for demands that never appeared at all.
    Reasons start with a category word: "undecodable", "duplicate",
    "not-demanded", or "missing".
    """

    codeword_index: int | None
    term: SubpacketId
    reason: str


@dataclass(frozen=True)
class VerificationReport:
    decodable: bool
    coverage_ok: bool
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return self.decodable and self.coverage_ok


def verify_instantaneous_decodability(
    schedule: TransmissionSchedule, layout: CacheLayout | None = None
) -> VerificationReport:
    """Check that a schedule is decodable on sight and covers every demand.

    For each codeword and each term (u, p) in it, every companion packet p'
    must sit in user u's cached set; otherwise user u cannot cancel it when
    the transmission arrives.  Coverage compares the multiset of all terms
    against the per-user complement of the layout: each demanded sub-packet
    must appear in exactly one codeword, and nothing else may appear.

    The layout defaults to the instance's own cyclic placement; passing an
    explicit one checks a schedule against a different cache topology (the
    multi-access view, for example).
    """
    if layout is None:
        layout = build_cache_layout(schedule.params)
    K = layout.n_users
    violations: list[Violation] = []
    for ci, cw in enumerate(schedule.codewords):
        for u, p in cw:
            for u2, p2 in cw:
                if (u2, p2) == (u, p):
                    continue
                if not layout.knows(u, p2):
                    violations.append(
                        Violation(
                            ci,
                            SubpacketId(u, p),
                            f"undecodable: user {u} does not cache packet "
                            f"{p2} of companion term ({u2},{p2})",
                        )
                    )
    expected = {
        SubpacketId(u, p) for u in range(1, K + 1) for p in layout.missing(u)
    }
    first_seen: dict[SubpacketId, int] = {}
    for ci, cw in enumerate(schedule.codewords):
        for term in cw:
            if term in first_seen:
                violations.append(
                    Violation(
                        ci,
                        term,
                        f"duplicate: already sent in transmission "
                        f"{first_seen[term]}",
                    )
                )
            elif term not in expected:
                violations.append(
                    Violation(
                        ci,
                        term,
                        f"not-demanded: user {term.user} already caches "
                        f"packet {term.packet}",
                    )
                )
            else:
                first_seen[term] = ci
    for term in sorted(expected - set(first_seen)):
        violations.append(
            Violation(None, term, "missing: demanded sub-packet never sent")
        )
    decodable = not any(v.reason.startswith("undecodable") for v in violations)
    coverage_ok = not any(
        v.reason.startswith(("duplicate", "not-demanded", "missing"))
        for v in violations
    )
    return VerificationReport(decodable, coverage_ok, tuple(violations))


@dataclass(frozen=True)
class FileStore:
    """The server library as concrete bytes.

    All files have the same length, divisible by ``n_subpackets`` so that
    sub-packet p of file n is a well-defined byte slice.
    """

    files: tuple[bytes, ...]
    n_subpackets: int

    def __post_init__(self) -> None:
        if not self.files:
            raise InstanceError("file store needs at least one file")
        size = len(self.files[0])
        if any(len(f) != size for f in self.files):
            raise InstanceError("all files must have equal length")
        if size == 0 or size % self.n_subpackets != 0:
            raise InstanceError(
                f"file length {size} is not a positive multiple of "
                f"{self.n_subpackets} sub-packets"
            )

    @property
    def subpacket_size(self) -> int:
        return len(self.files[0]) // self.n_subpackets

    def subpacket(self, file_index: int, packet: int) -> bytes:
        """Byte slice of 1-based packet ``packet`` of 1-based file."""
        size = self.subpacket_size
        return self.files[file_index - 1][(packet - 1) * size : packet * size]


def random_file_store(
    params: SystemParams, seed: int, subpacket_size: int = 1
) -> FileStore:
    """A deterministic random library: N files of K*subpacket_size bytes."""
    rng = random.Random(seed)
    size = params.n_users * subpacket_size
    files = tuple(rng.randbytes(size) for _ in range(params.n_files))
    return FileStore(files, params.n_users)


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b, strict=True))


def simulate_end_to_end(
    params: SystemParams,
    demands: Sequence[int],
    store: FileStore,
    seed: int = 0,
    *,
    layout: CacheLayout | None = None,
    schedule: TransmissionSchedule | None = None,
    strict: bool = False,
) -> bool:
    """Run placement, delivery, and decoding on real bytes.

    Caches are filled from the layout (packet slices of every file), each
    codeword becomes the XOR of the demanded slices it combines, and every
    user then decodes using only its cache and the broadcast payloads:
    whenever a codeword has exactly one slice the user does not know, the
    known ones are cancelled and the leftover is learned.  One pass suffices
    for a decodable schedule; needing more is logged as a warning because it
    signals a decodability violation.  Returns True iff every user's
    reassembled file equals its demanded file bit for bit.  With
    ``strict=True`` the first failure raises :class:`SimulationMismatch`
    naming the user and packet; ``seed`` is echoed in that message so runs
    can be reproduced.
    """
    demands = validate_demand(params, demands)
    K = params.n_users
    if store.n_subpackets != K:
        raise InstanceError(
            f"store splits files into {store.n_subpackets} sub-packets, "
            f"instance needs {K}"
        )
    if len(store.files) < params.n_files:
        raise InstanceError(
            f"store holds {len(store.files)} files, instance has "
            f"{params.n_files}"
        )
    if layout is None:
        layout = build_cache_layout(params)
    if schedule is None:
        schedule = generate_schedule(params, demands)
    payloads = []
    for cw in schedule.codewords:
        acc = bytes(store.subpacket_size)
        for u, p in cw:
            acc = _xor(acc, store.subpacket(demands[u - 1], p))
        payloads.append(acc)

    def fail(user: int, packet: int | None, why: str) -> bool:
        if strict:
            where = f"sub-packet {packet} of " if packet is not None else ""
            raise SimulationMismatch(
                f"user {user}: {where}file {demands[user - 1]} {why} "
                f"(seed={seed})"
            )
        return False

    for user in range(1, K + 1):
        known: dict[tuple[int, int], bytes] = {}
        for n in range(1, len(store.files) + 1):
            for p in layout.packets(user):
                known[(n, p)] = store.subpacket(n, p)
        want = demands[user - 1]
        passes = 0
        while any((want, p) not in known for p in range(1, K + 1)):
            passes += 1
            progress = False
            for cw, payload in zip(schedule.codewords, payloads):
                unknown = [
                    (u, p) for u, p in cw if (demands[u - 1], p) not in known
                ]
                if len(unknown) != 1:
                    continue
                u1, p1 = unknown[0]
                residual = payload
                for u2, p2 in cw:
                    if (u2, p2) == (u1, p1):
                        continue
                    residual = _xor(residual, known[(demands[u2 - 1], p2)])
                known[(demands[u1 - 1], p1)] = residual
                progress = True
            if not progress:
                hole = next(
                    p for p in range(1, K + 1) if (want, p) not in known
                )
                return fail(user, hole, "was never recovered")
        if passes > 1:
            log.warning(
                "user %d needed %d decoding passes; the schedule is not "
                "decodable on sight",
                user,
                passes,
            )
        rebuilt = b"".join(known[(want, p)] for p in range(1, K + 1))
        if rebuilt != store.files[want - 1]:
            return fail(user, None, "reassembled with wrong bytes")
    return True


def min_pair_transmissions(
    params: SystemParams, demands: Sequence[int] | None = None
) -> int:
    """Exact minimum schedule length using codewords of at most two terms.

    Two demanded sub-packets may share a transmission iff each owner caches
    the other's packet; singletons are always allowed.  The minimum count is
    therefore |demands| minus a maximum matching in the compatibility graph,
    computed here with a blossom matching -- deliberately independent of the
    schedule generators it serves as an oracle for.  Kept to K <= 8.
    """
    K, i = params.n_users, params.cache_units
    if K > 8:
        raise InstanceError(f"exact pair search is limited to K <= 8, got {K}")
    if not (1 < i and 2 * i <= K):
        raise RegimeError(
            f"pair schedules cover 1 < i <= K/2; got i={i}, K={K}"
        )
    if demands is not None:
        validate_demand(params, demands)
    layout = build_cache_layout(params)
    terms = build_demand_list(params)
    graph = nx.Graph()
    graph.add_nodes_from(terms)
    for x, y in itertools.combinations(terms, 2):
        if layout.knows(x.user, y.packet) and layout.knows(y.user, x.packet):
            graph.add_edge(x, y)
    matching = nx.max_weight_matching(graph, maxcardinality=True)
    return len(terms) - len(matching)
