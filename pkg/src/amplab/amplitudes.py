"""Amplitude assignment for setups: sum rule, product rule, consistency.

Every setup gets a complex amplitude.  The production evaluator threads a
source vector through the one-step kernel, applying each filter as a 0/1
diagonal mask at its time; the detector-site component of the final vector is
the amplitude.  That evaluation is mathematically identical to a sum over all
hole-threading paths weighted by products of single-step kernel entries, and
``amplitude_bruteforce`` computes that sum literally as an independent oracle.

``consistency_check`` evaluates one setup by several independent strategies
(transfer matrix, brute-force path sum, decomposition at single-hole filters
via the product rule, insertion of all-holes sigma filters) and reports the
maximal pairwise deviation.  Agreement across strategies is the package's
headline correctness alarm.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .lattice import Kernel, mask_vector
from .setups import Setup, SetupError, decompose_at, insert_sigma

DEFAULT_PATH_GUARD = 10_000_000

NEAR_ZERO = 1e-14


class PathExplosionError(RuntimeError):
    """Brute-force path enumeration would exceed the path guard."""


@dataclass(frozen=True)
class TransferMatrix:
    """Evaluate by masked matrix-vector products (the production path)."""

    label: str = "transfer_matrix"


@dataclass(frozen=True)
class BruteForcePaths:
    """Evaluate by literal enumeration of every hole-threading path."""

    max_paths: int = DEFAULT_PATH_GUARD
    label: str = "brute_force"


@dataclass(frozen=True)
class RecursiveDecompose:
    """Evaluate by splitting at single-hole filters and multiplying the parts.

    ``split_times`` lists the filter times to split at; an empty tuple means
    every single-hole filter in the setup.
    """

    split_times: tuple[int, ...] = ()

    @property
    def label(self) -> str:
        if not self.split_times:
            return "decompose_all"
        return "decompose@" + ",".join(str(t) for t in self.split_times)


@dataclass(frozen=True)
class SigmaInsert:
    """Evaluate after inserting all-holes filters at free interior times.

    ``times`` lists where to insert; an empty tuple means every admissible
    interior time.  The inserted filters are physically inert, so the value
    must match the plain evaluation.
    """

    times: tuple[int, ...] = ()

    @property
    def label(self) -> str:
        if not self.times:
            return "sigma_all"
        return "sigma@" + ",".join(str(t) for t in self.times)


EvalStrategy = TransferMatrix | BruteForcePaths | RecursiveDecompose | SigmaInsert


def _check_compatible(setup: Setup, kernel: Kernel) -> None:
    num_sites = kernel.num_sites
    for event, name in ((setup.source, "source"), (setup.detector, "detector")):
        if not 0 <= event.site < num_sites:
            raise SetupError(
                f"{name} site {event.site} outside kernel lattice [0, {num_sites})"
            )
    for f in setup.filters:
        if any(not 0 <= h < num_sites for h in f.holes):
            raise SetupError(
                f"filter at time {f.time} has holes outside [0, {num_sites})"
            )


def amplitude(setup: Setup, kernel: Kernel) -> complex:
    """Amplitude of ``setup`` by masked transfer-matrix evolution."""
    _check_compatible(setup, kernel)
    num_sites = kernel.num_sites
    by_time = {f.time: f for f in setup.filters}
    psi = np.zeros(num_sites, dtype=complex)
    psi[setup.source.site] = 1.0
    for t in range(setup.source.time + 1, setup.detector.time + 1):
        psi = kernel.step @ psi
        f = by_time.get(t)
        if f is not None:
            psi = psi * mask_vector(num_sites, f.holes)
    return complex(psi[setup.detector.site])


def amplitude_bruteforce(
    setup: Setup, kernel: Kernel, max_paths: int = DEFAULT_PATH_GUARD
) -> complex:
    """Amplitude as a literal sum over every path threading the filter holes.

    Exponentially expensive; guarded by ``max_paths``.  This is the oracle
    that every other evaluation strategy is checked against.
    """
    _check_compatible(setup, kernel)
    num_sites = kernel.num_sites
    by_time = {f.time: f for f in setup.filters}
    allowed: list[tuple[int, ...]] = []
    n_paths = 1
    for t in range(setup.source.time + 1, setup.detector.time):
        f = by_time.get(t)
        sites = f.holes if f is not None else tuple(range(num_sites))
        allowed.append(sites)
        n_paths *= len(sites)
        if n_paths > max_paths:
            raise PathExplosionError(
                f"path count exceeds guard of {max_paths} paths"
            )
    if n_paths == 0:
        return 0.0 + 0.0j  # a blocking filter kills every path
    paths = np.array(list(itertools.product(*allowed)), dtype=np.intp)
    paths = paths.reshape(n_paths, len(allowed))
    step = kernel.step
    amps = np.ones(n_paths, dtype=complex)
    prev = np.full(n_paths, setup.source.site, dtype=np.intp)
    for col in range(paths.shape[1]):
        cur = paths[:, col]
        amps *= step[cur, prev]
        prev = cur
    amps *= step[setup.detector.site, prev]
    return complex(amps.sum())


def _amplitude_decomposed(
    setup: Setup, kernel: Kernel, split_times: tuple[int, ...]
) -> complex:
    if not split_times:
        split_times = tuple(
            f.time for f in setup.filters if len(f.holes) == 1
        )
    if not split_times:
        return amplitude(setup, kernel)
    remaining = sorted(split_times)
    earlier, later = decompose_at(setup, remaining[0])
    value = amplitude(earlier, kernel)
    return value * _amplitude_decomposed(later, kernel, tuple(remaining[1:]))


def _amplitude_sigma(setup: Setup, kernel: Kernel, times: tuple[int, ...]) -> complex:
    if not times:
        occupied = set(setup.filter_times)
        times = tuple(
            t
            for t in range(setup.source.time + 1, setup.detector.time)
            if t not in occupied
        )
    widened = setup
    for t in times:
        widened = insert_sigma(widened, t, kernel.num_sites)
    return amplitude(widened, kernel)


def evaluate(setup: Setup, kernel: Kernel, strategy: EvalStrategy) -> complex:
    """Amplitude of ``setup`` under one evaluation strategy."""
    if isinstance(strategy, TransferMatrix):
        return amplitude(setup, kernel)
    if isinstance(strategy, BruteForcePaths):
        return amplitude_bruteforce(setup, kernel, strategy.max_paths)
    if isinstance(strategy, RecursiveDecompose):
        return _amplitude_decomposed(setup, kernel, strategy.split_times)
    if isinstance(strategy, SigmaInsert):
        return _amplitude_sigma(setup, kernel, strategy.times)
    raise TypeError(f"unknown strategy {strategy!r}")


def relative_deviation(z1: complex, z2: complex) -> float:
    """|z1 - z2| scaled by the larger magnitude; absolute for near-zero pairs.

    Amplitudes can vanish by interference, so two values whose magnitudes are
    both below 1e-14 are compared absolutely instead of relatively.
    """
    m = max(abs(z1), abs(z2))
    if m <= NEAR_ZERO:
        return abs(z1 - z2)
    return abs(z1 - z2) / max(m, 1e-300)


@dataclass(frozen=True)
class ConsistencyReport:
    """Per-strategy amplitudes and all pairwise deviations for one setup."""

    values: tuple[tuple[str, complex], ...]
    pair_deviations: tuple[tuple[str, str, float], ...]
    max_deviation: float

    def value(self, label: str) -> complex:
        for name, v in self.values:
            if name == label:
                return v
        raise KeyError(label)


def consistency_check(
    setup: Setup,
    kernel: Kernel,
    strategies: tuple[EvalStrategy, ...] | list[EvalStrategy],
) -> ConsistencyReport:
    """Evaluate ``setup`` under every strategy and report pairwise deviations."""
    if len(strategies) < 2:
        raise ValueError("consistency check needs at least two strategies")
    values = tuple(
        (strategy.label, evaluate(setup, kernel, strategy))
        for strategy in strategies
    )
    pairs = []
    worst = 0.0
    for (name_a, val_a), (name_b, val_b) in itertools.combinations(values, 2):
        dev = relative_deviation(val_a, val_b)
        pairs.append((name_a, name_b, dev))
        worst = max(worst, dev)
    return ConsistencyReport(values, tuple(pairs), worst)
