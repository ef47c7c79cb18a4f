"""Spin configurations, chain topologies and reachable sectors.

A configuration of ``n`` spins is packed into one integer: bit ``k-1`` holds
site ``k`` and a set bit means spin up.  The flip rule lives in
:func:`flip_mask`, which is written with branch-free bit operations so that it
accepts a Python ``int`` as well as a ``numpy.uint64`` array.  Every other
module (sector Hamiltonians, the brute-force oracle) derives its matrix
elements from that single function.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractViolationError, SectorTooLargeError

MAX_SITES = 63
DEFAULT_SECTOR_CAP = 10**7


class TopologyKind(str, enum.Enum):
    OPEN = "open"
    RING_BOND = "ring-bond"
    RING_FULL = "ring-full"


class EndTerm(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"


def parse_end_terms(value: str | Iterable[EndTerm | str] | None) -> frozenset[EndTerm]:
    """Parse ``none``/``left``/``right``/``both`` or an iterable of names."""
    if value is None:
        return frozenset()
    if isinstance(value, str):
        key = value.strip().lower()
        table = {
            "none": (),
            "": (),
            "left": (EndTerm.LEFT,),
            "right": (EndTerm.RIGHT,),
            "both": (EndTerm.LEFT, EndTerm.RIGHT),
            "left,right": (EndTerm.LEFT, EndTerm.RIGHT),
        }
        if key not in table:
            raise ContractViolationError(f"unknown end-term set {value!r}")
        return frozenset(table[key])
    try:
        return frozenset(EndTerm(v) for v in value)
    except ValueError as exc:
        raise ContractViolationError(str(exc)) from None


def format_end_terms(end_terms: Iterable[EndTerm]) -> str:
    names = sorted(e.value for e in end_terms)
    return ",".join(names) if names else "none"


@dataclass(frozen=True, order=True)
class SpinConfiguration:
    """One classical basis state; ``bits`` has bit ``k-1`` set when site ``k`` is up."""

    n: int
    bits: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_SITES:
            raise ContractViolationError(f"n must lie in [1, {MAX_SITES}], got {self.n}")
        if self.bits < 0 or self.bits >> self.n:
            raise ContractViolationError(f"bits {self.bits:#x} do not fit in {self.n} sites")

    @classmethod
    def from_string(cls, text: str) -> SpinConfiguration:
        """Parse ``u``/``d`` characters, site 1 leftmost."""
        text = text.strip().lower()
        if not text or set(text) - {"u", "d"}:
            raise ContractViolationError(f"seed must be a string of 'u'/'d', got {text!r}")
        bits = sum(1 << k for k, c in enumerate(text) if c == "u")
        return cls(len(text), bits)

    @classmethod
    def all_down(cls, n: int) -> SpinConfiguration:
        return cls(n, 0)

    @classmethod
    def all_up(cls, n: int) -> SpinConfiguration:
        return cls(n, (1 << n) - 1)

    @classmethod
    def single_flip(cls, n: int) -> SpinConfiguration:
        """The amplification input: site 1 up, all others down."""
        return cls(n, 1)

    @classmethod
    def staircase(cls, n: int, k: int) -> SpinConfiguration:
        """Sites ``1..k`` up, the rest down."""
        if not 0 <= k <= n:
            raise ContractViolationError(f"staircase height {k} outside [0, {n}]")
        return cls(n, (1 << k) - 1)

    def spin(self, site: int) -> int:
        """Return +1 (up) or -1 (down) for a 1-indexed site."""
        return 1 if (self.bits >> (site - 1)) & 1 else -1

    def flip(self, site: int) -> SpinConfiguration:
        return SpinConfiguration(self.n, self.bits ^ (1 << (site - 1)))

    @property
    def n_up(self) -> int:
        return self.bits.bit_count()

    def __str__(self) -> str:
        return "".join("u" if (self.bits >> k) & 1 else "d" for k in range(self.n))


@dataclass(frozen=True)
class Topology:
    """Chain adjacency plus boundary treatment.

    ``OPEN`` has ``n-1`` bonds.  ``RING_BOND`` keeps the open-chain end terms
    and additionally applies the bulk rule with cyclic neighbours at sites 1
    and ``n``.  ``RING_FULL`` applies the bulk rule with cyclic neighbours
    everywhere and carries no end terms.
    """

    n: int
    kind: TopologyKind = TopologyKind.OPEN
    end_terms: frozenset[EndTerm] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "kind", TopologyKind(self.kind))
        object.__setattr__(self, "end_terms", parse_end_terms(self.end_terms))
        if not 2 <= self.n <= MAX_SITES:
            raise ContractViolationError(f"n must lie in [2, {MAX_SITES}], got {self.n}")
        if self.is_ring and self.n < 3:
            raise ContractViolationError(f"{self.kind.value} needs n >= 3, got {self.n}")
        if self.kind is TopologyKind.RING_FULL and self.end_terms:
            raise ContractViolationError("ring-full takes no end terms")

    @classmethod
    def open(cls, n: int, end_terms="right") -> Topology:
        return cls(n, TopologyKind.OPEN, parse_end_terms(end_terms))

    @classmethod
    def ring_bond(cls, n: int, end_terms="right") -> Topology:
        return cls(n, TopologyKind.RING_BOND, parse_end_terms(end_terms))

    @classmethod
    def ring_full(cls, n: int) -> Topology:
        return cls(n, TopologyKind.RING_FULL)

    @property
    def is_ring(self) -> bool:
        return self.kind is not TopologyKind.OPEN

    @cached_property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    @cached_property
    def _interior_mask(self) -> int:
        return self.full_mask & ~1 & ~(1 << (self.n - 1))

    def describe(self) -> str:
        return f"{self.kind.value}[{format_end_terms(self.end_terms)}]"


def _rotate_left(bits, n: int, full: int):
    # bit j of the result holds bit j-1 (cyclic): the left neighbour of site j+1
    return ((bits << 1) | (bits >> (n - 1))) & full


def _rotate_right(bits, n: int):
    return (bits >> 1) | ((bits & 1) << (n - 1))


def flip_mask(bits, topology: Topology):
    """Bit mask of the sites whose spin may flip.

    Bulk rule: a site with two neighbours flips when those neighbours are
    antiparallel.  End-term rule: a listed end site flips when its unique
    open-chain neighbour is up.  ``bits`` may be an ``int`` or a ``uint64``
    array.
    """
    n = topology.n
    if topology.is_ring:
        mask = _rotate_left(bits, n, topology.full_mask) ^ _rotate_right(bits, n)
    else:
        mask = ((bits << 1) ^ (bits >> 1)) & topology._interior_mask
    if EndTerm.LEFT in topology.end_terms:
        mask = mask | ((bits >> 1) & 1)
    if EndTerm.RIGHT in topology.end_terms:
        mask = mask | (((bits >> (n - 2)) & 1) << (n - 1))
    return mask


def _check_size(config: SpinConfiguration, topology: Topology):
    if config.n != topology.n:
        raise ContractViolationError(
            f"configuration has {config.n} sites, topology has {topology.n}"
        )


def wall_count(config: SpinConfiguration, topology: Topology) -> int:
    """Number of antiparallel bonds under the topology's adjacency."""
    _check_size(config, topology)
    b, n = config.bits, topology.n
    if topology.is_ring:
        return (b ^ _rotate_right(b, n)).bit_count()
    return ((b ^ (b >> 1)) & ((1 << (n - 1)) - 1)).bit_count()


def _mask_sites(mask: int) -> list[int]:
    sites = []
    k = 1
    while mask:
        if mask & 1:
            sites.append(k)
        mask >>= 1
        k += 1
    return sites


def allowed_flips(config: SpinConfiguration, topology: Topology) -> list[int]:
    """Ascending 1-indexed sites that the flip rule allows to flip."""
    _check_size(config, topology)
    return _mask_sites(flip_mask(config.bits, topology))


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """Ordered reachable configurations and their inverse index.

    ``codes`` holds the packed configurations in breadth-first discovery
    order (ties inside a layer broken by ascending bits).
    """

    topology: Topology
    seed: SpinConfiguration
    codes: np.ndarray
    index: dict[int, int]

    def __len__(self) -> int:
        return len(self.codes)

    @property
    def dimension(self) -> int:
        return len(self.codes)

    @property
    def n(self) -> int:
        return self.topology.n

    @cached_property
    def states(self) -> tuple[SpinConfiguration, ...]:
        n = self.topology.n
        return tuple(SpinConfiguration(n, int(c)) for c in self.codes)

    def __contains__(self, config: SpinConfiguration) -> bool:
        return config.n == self.n and config.bits in self.index

    def index_of(self, config: SpinConfiguration) -> int:
        try:
            return self.index[config.bits]
        except KeyError:
            raise KeyError(f"configuration {config} not in sector") from None

    @cached_property
    def spins(self) -> np.ndarray:
        """``(D, n)`` int8 array of site spins (+1 up, -1 down)."""
        shifts = np.arange(self.n, dtype=np.uint64)
        up = (self.codes[:, None] >> shifts) & np.uint64(1)
        return (2 * up.astype(np.int8) - 1).astype(np.int8)

    def ordering_hash(self) -> str:
        """SHA-256 of the ordered codes; identifies a matrix layout."""
        return hashlib.sha256(self.codes.astype("<u8").tobytes()).hexdigest()


def _bfs(seed_bits: int, topology: Topology, states: list[int], index: dict[int, int], cap: int):
    if seed_bits in index:
        return
    index[seed_bits] = len(states)
    states.append(seed_bits)
    frontier = [seed_bits]
    while frontier:
        found = set()
        for b in frontier:
            mask = flip_mask(b, topology)
            while mask:
                low = mask & -mask
                c = b ^ low
                if c not in index:
                    found.add(c)
                mask ^= low
        frontier = sorted(found)
        if len(states) + len(frontier) > cap:
            raise SectorTooLargeError(cap)
        for c in frontier:
            index[c] = len(states)
            states.append(c)


def enumerate_sector(
    seed: SpinConfiguration,
    topology: Topology,
    cap: int = DEFAULT_SECTOR_CAP,
    extra_seeds: Sequence[SpinConfiguration] = (),
) -> SectorBasis:
    """Breadth-first closure of ``{seed}`` under :func:`allowed_flips`.

    ``extra_seeds`` are closed over afterwards, in order, and their states
    appended; this builds unions of dynamically disconnected sectors.
    """
    _check_size(seed, topology)
    states: list[int] = []
    index: dict[int, int] = {}
    if cap < 1:
        raise SectorTooLargeError(cap)
    for s in (seed, *extra_seeds):
        _check_size(s, topology)
        _bfs(s.bits, topology, states, index, cap)
    codes = np.array(states, dtype=np.uint64)
    return SectorBasis(topology, seed, codes, index)


def amplification_sector(
    topology: Topology,
    excited: SpinConfiguration | None = None,
    cap: int = DEFAULT_SECTOR_CAP,
) -> SectorBasis:
    """Sector of the excited input joined with the all-down state."""
    n = topology.n
    excited = SpinConfiguration.single_flip(n) if excited is None else excited
    return enumerate_sector(excited, topology, cap, extra_seeds=(SpinConfiguration.all_down(n),))


def sector_dimension_scan(
    kind: TopologyKind | str,
    end_terms,
    n_list: Iterable[int],
    cap: int = DEFAULT_SECTOR_CAP,
) -> list[tuple[int, int]]:
    """Sector dimension for seed ``u d^(n-1)`` at each ``n``."""
    out = []
    for n in n_list:
        topo = Topology(n, TopologyKind(kind), parse_end_terms(end_terms))
        out.append((n, enumerate_sector(SpinConfiguration.single_flip(n), topo, cap).dimension))
    return out


def format_sector(basis: SectorBasis) -> str:
    """Text listing: header line, then one ``u``/``d`` string per state."""
    topo = basis.topology
    lines = [
        f"n={topo.n} dim={basis.dimension} topology={topo.kind.value} "
        f"endterms={format_end_terms(topo.end_terms)}"
    ]
    lines.extend(str(s) for s in basis.states)
    return "\n".join(lines) + "\n"


def parse_sector(text: str) -> list[SpinConfiguration]:
    """Read back the states of a :func:`format_sector` listing."""
    lines = [l for l in text.splitlines() if l.strip()]
    return [SpinConfiguration.from_string(l) for l in lines[1:]]
