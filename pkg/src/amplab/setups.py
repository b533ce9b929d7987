"""Setups (testable propositions) and their composition algebra.

A setup is an idealized experiment: a particle is prepared at a source event,
passes a time-ordered sequence of instantaneous filters, and may fire a
detector at a final event.  Each filter blocks the whole lattice except a set
of "holes".  Two setups are equal exactly when they have the same source,
detector, and distribution of filters and holes.

Two composition operations build complex setups from simpler ones, and both
are deliberately partial:

* ``and_compose(earlier, later)`` concatenates two setups in immediate
  succession.  It is allowed only when the earlier detector coincides with
  the later source; the junction event becomes an explicit single-hole
  filter in the merged setup.  The operation is never commutative: if
  ``ab`` is allowed, ``ba`` is not.
* ``or_compose(a, b)`` merges two setups that are identical except at one
  single filter where their hole sets are disjoint and non-empty; the merged
  filter carries the union of the holes.  The operation is commutative.

A filter with holes everywhere (a "sigma" filter) is physically equivalent to
no filter at all and may be inserted freely; ``insert_sigma`` does this.  A
filter with an empty hole set blocks everything.  It is representable as a
degenerate test case (its amplitude is zero) but is rejected as an operand of
``or_compose`` and never produced by ``insert_sigma`` or ``random_setup``.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .lattice import Event, LatticeConfig, validate_event


class SetupError(ValueError):
    """A setup or a composition of setups is not allowed."""


class NonConsecutiveError(SetupError):
    """and-composition attempted on setups that are not consecutive."""


class NotCombinableError(SetupError):
    """or-composition attempted on setups that do not differ at exactly
    one filter with disjoint, non-empty hole sets."""


@dataclass(frozen=True)
class FilterSpec:
    """An instantaneous filter: open hole sites at one time index.

    Holes are stored sorted and duplicate-free so that structural equality
    matches physical equality.  An empty hole tuple means "block everything".
    """

    time: int
    holes: tuple[int, ...]

    def __post_init__(self) -> None:
        normalized = tuple(sorted(set(int(h) for h in self.holes)))
        if any(h < 0 for h in normalized):
            raise SetupError("hole sites must be non-negative")
        object.__setattr__(self, "holes", normalized)

    @property
    def is_blocking(self) -> bool:
        return len(self.holes) == 0


@dataclass(frozen=True)
class Setup:
    """Source event, time-ordered filters, detector event."""

    source: Event
    detector: Event
    filters: tuple[FilterSpec, ...] = ()

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.filters, key=lambda f: f.time))
        if self.source.time >= self.detector.time:
            raise SetupError("detector must be strictly later than source")
        times = [f.time for f in ordered]
        if len(set(times)) != len(times):
            raise SetupError("at most one filter per time index")
        for f in ordered:
            if not self.source.time < f.time < self.detector.time:
                raise SetupError(
                    f"filter time {f.time} not strictly between source and detector"
                )
        object.__setattr__(self, "filters", ordered)

    def filter_at(self, time: int) -> FilterSpec | None:
        for f in self.filters:
            if f.time == time:
                return f
        return None

    @property
    def filter_times(self) -> tuple[int, ...]:
        return tuple(f.time for f in self.filters)


def equals(a: Setup, b: Setup) -> bool:
    """True iff the two setups have the same distribution of filters and holes."""
    return a == b


def validate_setup(setup: Setup, config: LatticeConfig) -> None:
    """Raise if any event or hole falls outside the config's lattice."""
    validate_event(setup.source, config)
    validate_event(setup.detector, config)
    for f in setup.filters:
        for hole in f.holes:
            if not 0 <= hole < config.num_sites:
                raise SetupError(
                    f"hole {hole} at time {f.time} outside [0, {config.num_sites})"
                )


def and_compose(earlier: Setup, later: Setup) -> Setup:
    """Concatenate two consecutive setups; the junction becomes a single-hole filter.

    Allowed only when ``earlier.detector == later.source`` (same site and
    time).  ``decompose_at`` at the junction time inverts the operation.
    """
    if earlier.detector != later.source:
        raise NonConsecutiveError(
            f"not consecutive: earlier detector {earlier.detector} != "
            f"later source {later.source}"
        )
    junction = earlier.detector
    merged = (
        earlier.filters
        + (FilterSpec(junction.time, (junction.site,)),)
        + later.filters
    )
    return Setup(earlier.source, later.detector, merged)


def or_compose(a: Setup, b: Setup) -> Setup:
    """Merge two setups differing at exactly one filter with disjoint holes."""
    if a.source != b.source or a.detector != b.detector:
        raise NotCombinableError("setups have different source or detector")
    if a.filter_times != b.filter_times:
        raise NotCombinableError("setups have filters at different times")
    diffs = [
        i for i, (fa, fb) in enumerate(zip(a.filters, b.filters)) if fa != fb
    ]
    if len(diffs) != 1:
        raise NotCombinableError(
            f"setups must differ at exactly one filter, found {len(diffs)} differences"
        )
    i = diffs[0]
    holes_a, holes_b = set(a.filters[i].holes), set(b.filters[i].holes)
    if not holes_a or not holes_b:
        raise NotCombinableError("blocking filters cannot be or-combined")
    if holes_a & holes_b:
        raise NotCombinableError(f"overlapping holes {sorted(holes_a & holes_b)}")
    merged = FilterSpec(a.filters[i].time, tuple(holes_a | holes_b))
    new_filters = a.filters[:i] + (merged,) + a.filters[i + 1 :]
    return Setup(a.source, a.detector, new_filters)


def insert_sigma(setup: Setup, time: int, num_sites: int) -> Setup:
    """Insert a filter with holes everywhere (equivalent to no filter) at ``time``."""
    if not setup.source.time < time < setup.detector.time:
        raise SetupError(
            f"sigma time {time} not strictly between source and detector"
        )
    if setup.filter_at(time) is not None:
        raise SetupError(f"a filter already exists at time {time}")
    sigma = FilterSpec(time, tuple(range(num_sites)))
    return Setup(setup.source, setup.detector, setup.filters + (sigma,))


def decompose_at(setup: Setup, time: int) -> tuple[Setup, Setup]:
    """Split at a single-hole filter into (earlier, later); inverse of and_compose."""
    f = setup.filter_at(time)
    if f is None:
        raise SetupError(f"no filter at time {time}")
    if len(f.holes) != 1:
        raise SetupError(
            f"filter at time {time} has {len(f.holes)} holes; decomposition "
            "needs exactly one"
        )
    junction = Event(f.holes[0], time)
    earlier = Setup(
        setup.source, junction, tuple(g for g in setup.filters if g.time < time)
    )
    later = Setup(
        junction, setup.detector, tuple(g for g in setup.filters if g.time > time)
    )
    return earlier, later


def random_setup(
    config: LatticeConfig,
    rng_seed: int | random.Random,
    max_filters: int,
) -> Setup:
    """Deterministic random setup spanning the full time range of ``config``.

    Source sits at time 0 and the detector at time ``num_steps``; between one
    and all sites are opened on each of up to ``max_filters`` filters.  The
    same seed always yields the same setup.
    """
    rng = random.Random(rng_seed) if isinstance(rng_seed, int) else rng_seed
    num_sites, num_steps = config.num_sites, config.num_steps
    if max_filters < 0 or max_filters > num_steps - 1:
        raise SetupError(
            f"max_filters must lie in [0, {num_steps - 1}] for {num_steps} steps"
        )
    source = Event(rng.randrange(num_sites), 0)
    detector = Event(rng.randrange(num_sites), num_steps)
    count = rng.randint(0, max_filters)
    times = sorted(rng.sample(range(1, num_steps), count))
    filters = []
    for t in times:
        n_holes = rng.randint(1, num_sites)
        filters.append(FilterSpec(t, tuple(rng.sample(range(num_sites), n_holes))))
    return Setup(source, detector, tuple(filters))


def setup_to_dict(setup: Setup) -> dict:
    return {
        "source": {"site": setup.source.site, "time": setup.source.time},
        "detector": {"site": setup.detector.site, "time": setup.detector.time},
        "filters": [{"time": f.time, "holes": list(f.holes)} for f in setup.filters],
    }


def setup_from_dict(data: dict) -> Setup:
    try:
        source = Event(int(data["source"]["site"]), int(data["source"]["time"]))
        detector = Event(int(data["detector"]["site"]), int(data["detector"]["time"]))
        filters = tuple(
            FilterSpec(int(f["time"]), tuple(int(h) for h in f["holes"]))
            for f in data.get("filters", [])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SetupError(f"malformed setup object: {exc}") from exc
    return Setup(source, detector, filters)


def save_setup(setup: Setup, path: str | Path) -> None:
    Path(path).write_text(json.dumps(setup_to_dict(setup)))


def load_setup(path: str | Path) -> Setup:
    return setup_from_dict(json.loads(Path(path).read_text()))
