"""Certified partitions and the equivariant spectral flow of operator paths.

A partition certificate is a list of parameter knots and positive levels such
that on each segment no block eigenvalue can touch the level band, by a
Lipschitz perturbation bound checked on endpoint and midpoint samples. The
flow is then the telescoping sum of the classes of the eigenspaces in
[0, level] at consecutive knots, an integer vector of irrep multiplicities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    CertificationFailed,
    DimMismatch,
    EndpointNotInvertible,
    NotEquivariant,
    OutOfRange,
    WrongGroup,
)
from .groups import (
    OrthogonalAction,
    RealCharacterTable,
    VirtualRep,
    character_of_subspace,
    forgetful_F,
    multiplicity_vector,
)
from .operators import (
    CPS,
    OperatorPath,
    Spectrum,
    block_spectrum,
    check_equivariance,
    compress,
    morse_class,
    spectral_interval_frame,
)

MARGIN_FLOOR = 1e-7
MAX_DEPTH = 40


@dataclass(frozen=True)
class FlowOptions:
    """Tolerances and depth budget for certification and class extraction.

    tol_cluster and tol_invert are relative factors, applied as
    factor * (1 + ||block||). min_depth forces that many bisection levels
    before a segment may be accepted, which is how independence of the result
    from the partition is exercised.
    """

    tol_cluster: float = 1e-8
    tol_invert: float = 1e-10
    tol_equivariance: float = 1e-8
    tol_invariance: float = 1e-7
    margin_floor: float = MARGIN_FLOOR
    max_depth: int = MAX_DEPTH
    min_depth: int = 0

    def __post_init__(self) -> None:
        if self.min_depth > self.max_depth:
            raise OutOfRange(
                f"min_depth {self.min_depth} exceeds max_depth {self.max_depth}")
        if self.max_depth < 0 or self.min_depth < 0:
            raise OutOfRange("depths must be nonnegative")


@dataclass(frozen=True)
class CertifiedPartition:
    """Knots 0 = k_0 < ... < k_N = 1 with one level and one certified margin
    per segment. The margin is the distance kept between the level band and
    every eigenvalue envelope on that segment."""

    knots: tuple[float, ...]
    levels: tuple[float, ...]
    margins: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.knots) < 2 or self.knots[0] != 0.0 or self.knots[-1] != 1.0:
            raise OutOfRange(f"knots must run from 0 to 1, got {self.knots}")
        if any(b <= a for a, b in zip(self.knots, self.knots[1:])):
            raise OutOfRange("knots must be strictly increasing")
        if len(self.levels) != len(self.knots) - 1:
            raise OutOfRange(f"{len(self.levels)} levels for "
                             f"{len(self.knots) - 1} segments")
        if len(self.margins) != len(self.levels):
            raise OutOfRange("one margin per level required")
        if any(a <= 0.0 for a in self.levels):
            raise OutOfRange("levels must be positive")
        if any(m <= 0.0 for m in self.margins):
            raise OutOfRange("margins must be positive")

    @property
    def n_segments(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class Crossing:
    """One segment whose eigenspace class changed, with the change itself."""

    interval: tuple[float, float]
    segment: int
    klass: VirtualRep


@dataclass(frozen=True)
class SflReport:
    """Flow result: the virtual class, its plain integer shadow, the
    certificate it was computed on, and the per-segment contributions."""

    sfl_G: VirtualRep
    sfl: int
    partition: CertifiedPartition
    segment_contributions: tuple[VirtualRep, ...]
    crossings: tuple[Crossing, ...]
    certified: bool = True


class _SpectraCache:
    """Memoized block spectra along one path at one cluster tolerance."""

    def __init__(self, path: OperatorPath, tol_cluster: float):
        self.path = path
        self.tol_cluster = tol_cluster
        self._ops: dict[float, CPS] = {}
        self._spectra: dict[float, Spectrum] = {}

    def op(self, lam: float) -> CPS:
        if lam not in self._ops:
            self._ops[lam] = self.path.at(lam)
        return self._ops[lam]

    def spectrum(self, lam: float) -> Spectrum:
        if lam not in self._spectra:
            self._spectra[lam] = block_spectrum(self.op(lam), self.tol_cluster)
        return self._spectra[lam]


def _fold(lo: float, hi: float) -> tuple[float, float]:
    # image of [lo, hi] under absolute value
    if hi <= 0.0:
        return (-hi, -lo)
    if lo >= 0.0:
        return (lo, hi)
    return (0.0, max(-lo, hi))


def _merge(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    if not intervals:
        return []
    intervals.sort()
    merged = [intervals[0]]
    for lo, hi in intervals[1:]:
        mlo, mhi = merged[-1]
        if lo <= mhi:
            merged[-1] = (mlo, max(mhi, hi))
        else:
            merged.append((lo, hi))
    return merged


def _try_certify(cache: _SpectraCache, opts: FlowOptions, left: float,
                 right: float) -> tuple[float, float] | None:
    """Look for one admissible level on [left, right]. Returns (level, margin)
    or None if the sampled eigenvalue envelopes leave no wide enough gap."""
    path = cache.path
    mid = (left + right) / 2.0
    wl = cache.spectrum(left).eigenvalues
    wm = cache.spectrum(mid).eigenvalues
    wr = cache.spectrum(right).eigenvalues
    rad = path.lipschitz * (right - left) / 2.0
    has_tails = path.plus_tail or path.minus_tail

    folded: list[tuple[float, float]] = []
    for k in range(wl.size):
        # envelope of the k-th eigenvalue over the segment: inside the
        # midpoint tube and inside the union of the endpoint tubes
        lo = max(wm[k], min(wl[k], wr[k])) - rad
        hi = min(wm[k], max(wl[k], wr[k])) + rad
        if lo > hi:
            lo, hi = wm[k] - rad, wm[k] + rad
        folded.append(_fold(lo, hi))
    forbidden = _merge(folded)

    if has_tails:
        cap = 1.0
    elif forbidden:
        cap = forbidden[-1][1] + 1.0
    else:
        cap = 1.0

    norm_bound = 0.0
    for w in (wl, wm, wr):
        if w.size:
            norm_bound = max(norm_bound, float(np.max(np.abs(w))))
    norm_bound += rad
    required = max(opts.margin_floor,
                   2.0 * opts.tol_cluster * (1.0 + norm_bound))

    best: tuple[float, float] | None = None  # (width, level)
    prev = 0.0
    pieces = [p for p in forbidden if p[0] < cap]
    for lo, hi in pieces + [(cap, cap)]:
        gap_lo, gap_hi = prev, min(lo, cap)
        if gap_hi > gap_lo:
            width = gap_hi - gap_lo
            if best is None or width > best[0]:
                best = (width, (gap_lo + gap_hi) / 2.0)
        prev = max(prev, min(hi, cap))
    if best is None:
        return None
    width, level = best
    margin = width / 2.0
    if margin <= required:
        return None
    counts = {int(np.count_nonzero(np.abs(w) <= level)) for w in (wl, wm, wr)}
    if len(counts) != 1:
        return None
    return level, margin


def _require_invertible_ends(cache: _SpectraCache, opts: FlowOptions) -> None:
    for lam in (0.0, 1.0):
        spec = cache.spectrum(lam)
        threshold = opts.tol_invert * (1.0 + spec.block_norm)
        if spec.min_abs() <= threshold:
            raise EndpointNotInvertible(
                f"eigenvalue {spec.min_abs():.3e} at endpoint {lam} within "
                f"threshold {threshold:.3e}")


def find_partition(path: OperatorPath, opts: FlowOptions | None = None, *,
                   cache: _SpectraCache | None = None) -> CertifiedPartition:
    """Certify a partition of [0, 1] with one spectral level per segment.

    Bisects recursively; a segment is accepted once the Lipschitz eigenvalue
    envelopes leave a gap whose half width clears the margin floor and the
    cluster tolerance, and the rank inside the level band is constant across
    its three samples. Fails once a segment would need more than max_depth
    bisections.
    """
    opts = opts or FlowOptions()
    cache = cache or _SpectraCache(path, opts.tol_cluster)
    _require_invertible_ends(cache, opts)

    knots: list[float] = [0.0]
    levels: list[float] = []
    margins: list[float] = []

    def descend(left: float, right: float, depth: int) -> None:
        if depth >= opts.min_depth:
            found = _try_certify(cache, opts, left, right)
            if found is not None:
                level, margin = found
                knots.append(right)
                levels.append(float(level))
                margins.append(float(margin))
                return
            if depth >= opts.max_depth:
                raise CertificationFailed(
                    f"no certified level on [{left}, {right}] at depth {depth}")
        mid = (left + right) / 2.0
        descend(left, mid, depth + 1)
        descend(mid, right, depth + 1)

    descend(0.0, 1.0, 0)
    return CertifiedPartition(tuple(knots), tuple(levels), tuple(margins))


def _interval_class(cache: _SpectraCache, lam: float, level: float,
                    action: OrthogonalAction, table: RealCharacterTable,
                    opts: FlowOptions) -> VirtualRep:
    op = cache.op(lam)
    spec = cache.spectrum(lam)
    frame = spectral_interval_frame(op, 0.0, level, spectrum=spec,
                                    closed_left_tol=spec.tol)
    chi = character_of_subspace(action, frame, tol_inv=opts.tol_invariance)
    return multiplicity_vector(chi, table)


def _check_equivariance_along(cache: _SpectraCache, action: OrthogonalAction,
                              partition: CertifiedPartition,
                              opts: FlowOptions) -> None:
    lams = list(partition.knots)
    lams += [(a + b) / 2.0 for a, b in zip(partition.knots, partition.knots[1:])]
    for lam in lams:
        op = cache.op(lam)
        defect = check_equivariance(op, action)
        scale = 1.0 + cache.spectrum(lam).block_norm
        if defect > opts.tol_equivariance * scale:
            raise NotEquivariant(
                f"commutator norm {defect:.3e} at parameter {lam} exceeds "
                f"{opts.tol_equivariance * scale:.3e}")


def sfl_G(path: OperatorPath, action: OrthogonalAction,
          table: RealCharacterTable, opts: FlowOptions | None = None, *,
          partition: CertifiedPartition | None = None) -> SflReport:
    """Equivariant spectral flow of an equivariant path with invertible ends.

    Returns the virtual class together with the certificate. The plain
    integer flow is the forgetful image of the class.
    """
    opts = opts or FlowOptions()
    if action.dim != path.dim:
        raise DimMismatch(
            f"action dimension {action.dim} vs path dimension {path.dim}")
    if table.group != action.group:
        raise WrongGroup("character table and action belong to different groups")
    cache = _SpectraCache(path, opts.tol_cluster)
    if partition is None:
        partition = find_partition(path, opts, cache=cache)
    else:
        _require_invertible_ends(cache, opts)
    _check_equivariance_along(cache, action, partition, opts)

    contributions: list[VirtualRep] = []
    total = VirtualRep.zero(table)
    for i in range(partition.n_segments):
        level = partition.levels[i]
        left = _interval_class(cache, partition.knots[i], level, action, table, opts)
        right = _interval_class(cache, partition.knots[i + 1], level, action,
                                table, opts)
        change = right - left
        contributions.append(change)
        total = total + change

    crossings = tuple(
        Crossing((partition.knots[i], partition.knots[i + 1]), i, c)
        for i, c in enumerate(contributions) if not c.is_zero())
    return SflReport(sfl_G=total, sfl=forgetful_F(total), partition=partition,
                     segment_contributions=tuple(contributions), crossings=crossings)


def morse_oracle_sfl_G(path: OperatorPath, action: OrthogonalAction,
                       table: RealCharacterTable, m: int = 0,
                       opts: FlowOptions | None = None) -> VirtualRep:
    """Endpoint-only evaluation of the flow through negative-space classes.

    Equals sfl_G for every admissible path in this model, independently of the
    truncation size m; tail copies contribute equally at both ends and cancel.
    """
    opts = opts or FlowOptions()
    finite = compress(path, m)
    extra = m * (int(path.plus_tail) + int(path.minus_tail))
    act = action.extended(extra)
    kwargs = dict(tol_cluster=opts.tol_cluster, tol_invert=opts.tol_invert,
                  tol_equivariance=opts.tol_equivariance,
                  tol_invariance=opts.tol_invariance)
    start = morse_class(finite.at(0.0), act, table, **kwargs)
    end = morse_class(finite.at(1.0), act, table, **kwargs)
    return start - end


# --- axiom suites ---------------------------------------------------------


@dataclass(frozen=True)
class AxiomResult:
    name: str
    instances: int
    failures: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass(frozen=True)
class AxiomSuiteReport:
    results: tuple[AxiomResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def by_name(self, name: str) -> AxiomResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)


def verify_axioms(action: OrthogonalAction, table: RealCharacterTable, *,
                  seed: int = 0, instances: int = 20,
                  opts: FlowOptions | None = None) -> AxiomSuiteReport:
    """Randomized checks of the characterizing properties of the flow.

    Suites: vanishing on invertible paths, additivity under concatenation
    (including closed loops), additivity under direct sums, invariance under
    reparametrization, and invariance under equivariant conjugation. Each
    suite runs `instances` randomized cases; failures carry a witness string.
    """
    from . import sampling
    from .groups import direct_sum_action
    from .operators import concatenate, direct_sum_paths, reverse

    opts = opts or FlowOptions()
    rng = np.random.default_rng(seed)
    tail_cycle = [(False, False), (True, False), (False, True), (True, True)]

    def flow(p: OperatorPath, act: OrthogonalAction = action) -> VirtualRep:
        return sfl_G(p, act, table, opts).sfl_G

    results = []

    failures: list[str] = []
    for i in range(instances):
        tails = tail_cycle[i % 4]
        p = sampling.random_invertible_path(action, rng, plus_tail=tails[0],
                                            minus_tail=tails[1])
        got = flow(p)
        if not got.is_zero():
            failures.append(f"instance {i}: invertible path has flow {got}")
    results.append(AxiomResult("vanishing", instances, tuple(failures)))

    failures = []
    for i in range(instances):
        tails = tail_cycle[i % 4]
        p = sampling.random_equivariant_path(action, rng, plus_tail=tails[0],
                                             minus_tail=tails[1])
        q = sampling.random_equivariant_path(action, rng, plus_tail=tails[0],
                                             minus_tail=tails[1],
                                             start_block=p.block_at(1.0))
        joined = concatenate(p, q)
        lhs = flow(joined)
        rhs = flow(p) + flow(q)
        if lhs != rhs:
            failures.append(f"instance {i}: concatenation {lhs} != {rhs}")
        loop = flow(concatenate(p, reverse(p)))
        if not loop.is_zero():
            failures.append(f"instance {i}: closed loop has flow {loop}")
    results.append(AxiomResult("concatenation", instances, tuple(failures)))

    failures = []
    double = direct_sum_action(action, action)
    for i in range(instances):
        tails_p = tail_cycle[i % 4]
        tails_q = tail_cycle[(i + 1) % 4]
        p = sampling.random_equivariant_path(action, rng, plus_tail=tails_p[0],
                                             minus_tail=tails_p[1])
        q = sampling.random_equivariant_path(action, rng, plus_tail=tails_q[0],
                                             minus_tail=tails_q[1])
        lhs = flow(direct_sum_paths(p, q), double)
        rhs = flow(p) + flow(q)
        if lhs != rhs:
            failures.append(f"instance {i}: direct sum {lhs} != {rhs}")
    results.append(AxiomResult("direct_sum", instances, tuple(failures)))

    failures = []
    for i in range(instances):
        tails = tail_cycle[i % 4]
        p = sampling.random_equivariant_path(action, rng, plus_tail=tails[0],
                                             minus_tail=tails[1], kind="affine")
        q = sampling.reparametrize(p, rng)
        lhs, rhs = flow(q), flow(p)
        if lhs != rhs:
            failures.append(f"instance {i}: reparametrization {lhs} != {rhs}")
    results.append(AxiomResult("reparametrization", instances, tuple(failures)))

    failures = []
    for i in range(instances):
        tails = tail_cycle[i % 4]
        p = sampling.random_equivariant_path(action, rng, plus_tail=tails[0],
                                             minus_tail=tails[1])
        u = sampling.random_equivariant_orthogonal(action, rng)
        lhs = flow(sampling.conjugate_path(p, u))
        rhs = flow(p)
        if lhs != rhs:
            failures.append(f"instance {i}: conjugation {lhs} != {rhs}")
    results.append(AxiomResult("conjugation", instances, tuple(failures)))

    return AxiomSuiteReport(tuple(results))
