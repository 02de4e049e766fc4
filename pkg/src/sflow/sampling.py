"""Randomized generators for equivariant blocks, paths, and group actions.

Equivariance is produced by group averaging, never by rejection, so every
draw is exactly invariant up to roundoff. Invertible endpoints come from
spectral clamping away from zero, which preserves equivariance because it is
a spectral function of an equivariant matrix.
"""

from __future__ import annotations

import numpy as np

from ._eig import jacobi_eigh, spectral_norm_sym
from .errors import OutOfRange
from .groups import (
    FiniteGroup,
    OrthogonalAction,
    RealCharacterTable,
    build_group,
)
from .operators import OperatorPath

CLAMP_DELTA = 0.3


def haar_orthogonal(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal matrix drawn from the Haar measure via sign-fixed QR."""
    if dim == 0:
        return np.zeros((0, 0))
    z = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    return q * np.sign(np.diag(r))


def reynolds_symmetric(action: OrthogonalAction, x: np.ndarray) -> np.ndarray:
    """Group average of x, symmetrized. Lands in the commutant exactly."""
    avg = np.zeros_like(x, dtype=float)
    for g in range(action.group.order):
        rho = action.matrix(g)
        avg += rho @ x @ rho.T
    avg /= action.group.order
    return (avg + avg.T) / 2.0


def _reynolds(action: OrthogonalAction, x: np.ndarray) -> np.ndarray:
    avg = np.zeros_like(x, dtype=float)
    for g in range(action.group.order):
        rho = action.matrix(g)
        avg += rho @ x @ rho.T
    return avg / action.group.order


def random_equivariant_symmetric(action: OrthogonalAction,
                                 rng: np.random.Generator) -> np.ndarray:
    return reynolds_symmetric(action, rng.standard_normal((action.dim,) * 2))


def clamp_spectrum(action: OrthogonalAction, block: np.ndarray,
                   delta: float = CLAMP_DELTA) -> np.ndarray:
    """Push eigenvalues in (-delta, delta) out to +-delta, zeros to +delta,
    then re-average to scrub roundoff from the reconstruction."""
    w, v = jacobi_eigh(block)
    clamped = np.where(np.abs(w) >= delta, w, np.where(w >= 0.0, delta, -delta))
    out = (v * clamped) @ v.T
    return reynolds_symmetric(action, out)


def random_equivariant_invertible(action: OrthogonalAction,
                                  rng: np.random.Generator,
                                  delta: float = CLAMP_DELTA) -> np.ndarray:
    return clamp_spectrum(action, random_equivariant_symmetric(action, rng), delta)


def random_equivariant_path(action: OrthogonalAction,
                            rng: np.random.Generator, *,
                            plus_tail: bool = False, minus_tail: bool = False,
                            kind: str | None = None,
                            start_block: np.ndarray | None = None,
                            delta: float = CLAMP_DELTA) -> OperatorPath:
    """Random equivariant path with invertible, well separated endpoints.

    kind is "affine", "pl", or None for a coin flip. start_block pins the
    initial block exactly, for building concatenation chains; it is trusted
    to be equivariant and invertible.
    """
    if kind is None:
        kind = "affine" if rng.random() < 0.5 else "pl"
    start = (start_block if start_block is not None
             else random_equivariant_invertible(action, rng, delta))
    end = random_equivariant_invertible(action, rng, delta)
    if kind == "affine":
        return OperatorPath.affine(start, end - start, plus_tail=plus_tail,
                                   minus_tail=minus_tail)
    if kind != "pl":
        raise OutOfRange(f"unknown path kind {kind!r}")
    n_interior = int(rng.integers(1, 4))
    knots = np.linspace(0.0, 1.0, n_interior + 2)
    samples = [start]
    samples += [random_equivariant_symmetric(action, rng)
                for _ in range(n_interior)]
    samples.append(end)
    return OperatorPath.piecewise_linear(knots, samples, plus_tail=plus_tail,
                                         minus_tail=minus_tail)


def random_invertible_path(action: OrthogonalAction,
                           rng: np.random.Generator, *,
                           plus_tail: bool = False, minus_tail: bool = False,
                           delta: float = CLAMP_DELTA) -> OperatorPath:
    """Path invertible at every parameter: a clamped base plus a perturbation
    kept strictly inside the spectral gap, so no eigenvalue can reach zero."""
    base = random_equivariant_invertible(action, rng, delta)
    if action.dim == 0:
        return OperatorPath.affine(base, np.zeros_like(base),
                                   plus_tail=plus_tail, minus_tail=minus_tail)
    bump = random_equivariant_symmetric(action, rng)
    norm = spectral_norm_sym(bump)
    if norm > 0.0:
        bump *= (0.4 * delta) / norm
    if rng.random() < 0.5:
        return OperatorPath.affine(base, bump, plus_tail=plus_tail,
                                   minus_tail=minus_tail)
    n_interior = int(rng.integers(1, 4))
    knots = np.linspace(0.0, 1.0, n_interior + 2)
    scales = rng.uniform(-1.0, 1.0, size=n_interior + 2)
    samples = [base + s * bump for s in scales]
    return OperatorPath.piecewise_linear(knots, samples, plus_tail=plus_tail,
                                         minus_tail=minus_tail)


def reparametrize(path: OperatorPath, rng: np.random.Generator,
                  n_interior: int = 3) -> OperatorPath:
    """Run an affine path through a random monotone piecewise-linear change
    of parameter fixing 0 and 1. The image is the same operator family."""
    if path.kind != "affine":
        raise OutOfRange("only affine paths are reparametrized here")
    gaps_t = rng.uniform(0.2, 1.0, size=n_interior + 1)
    knots = np.concatenate(([0.0], np.cumsum(gaps_t))) / np.sum(gaps_t)
    gaps_v = rng.uniform(0.2, 1.0, size=n_interior + 1)
    values = np.concatenate(([0.0], np.cumsum(gaps_v))) / np.sum(gaps_v)
    a, b = path.mat_a, path.mat_b
    samples = [a + v * b for v in values]
    return OperatorPath.piecewise_linear(knots, samples,
                                         plus_tail=path.plus_tail,
                                         minus_tail=path.minus_tail)


def random_equivariant_orthogonal(action: OrthogonalAction,
                                  rng: np.random.Generator) -> np.ndarray:
    """Orthogonal matrix commuting with the action: polar factor of a group
    averaged random matrix. Falls back to the identity if the average is
    numerically singular, which only happens on measure-zero draws."""
    dim = action.dim
    if dim == 0:
        return np.zeros((0, 0))
    for _ in range(8):
        avg = _reynolds(action, rng.standard_normal((dim, dim)))
        u, s, vt = np.linalg.svd(avg)
        if s[-1] > 1e-10 * (1.0 + s[0]):
            return u @ vt
    return np.eye(dim)


def conjugate_path(path: OperatorPath, u: np.ndarray) -> OperatorPath:
    """Transport a path by an orthogonal change of frame on the block part."""
    if path.kind == "affine":
        return OperatorPath.affine(u.T @ path.mat_a @ u,
                                   u.T @ path.mat_b @ u,
                                   plus_tail=path.plus_tail,
                                   minus_tail=path.minus_tail)
    samples = [u.T @ s @ u for s in path.samples]
    return OperatorPath.piecewise_linear(path.knots, samples,
                                         plus_tail=path.plus_tail,
                                         minus_tail=path.minus_tail)


# --- concrete actions for the preset groups --------------------------------


def _rot(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


_FLIP = np.array([[1.0, 0.0], [0.0, -1.0]])


def _cyclic_irrep_matrices(n: int, name: str) -> list[np.ndarray]:
    if name == "trivial":
        return [np.eye(1) for _ in range(n)]
    if name == "sign":
        return [np.array([[(-1.0) ** j]]) for j in range(n)]
    k = int(name.split("_")[1])
    return [_rot(2.0 * np.pi * k * j / n) for j in range(n)]


def _dihedral_irrep_matrices(n: int, name: str) -> list[np.ndarray]:
    # elements indexed f * n + t
    out = []
    for f in (0, 1):
        for t in range(n):
            if name == "trivial":
                m = np.eye(1)
            elif name == "sign":
                m = np.array([[(-1.0) ** f]])
            elif name == "alt":
                m = np.array([[(-1.0) ** t]])
            elif name == "alt_sign":
                m = np.array([[(-1.0) ** (t + f)]])
            else:
                k = int(name.split("_")[1])
                m = _rot(2.0 * np.pi * k * t / n)
                if f:
                    m = _FLIP @ m
            out.append(m)
    return out


def _irrep_matrices(preset: str, n: int, name: str) -> list[np.ndarray]:
    if preset == "trivial":
        return [np.eye(1)]
    if preset == "cyclic":
        return _cyclic_irrep_matrices(n, name)
    if preset == "dihedral":
        return _dihedral_irrep_matrices(n, name)
    raise OutOfRange(f"no irrep realizations for preset {preset!r}")


def identity_action(group: FiniteGroup, dim: int) -> OrthogonalAction:
    return OrthogonalAction(group, [np.eye(dim)] * group.order)


def preset_action(preset: str, n: int, dim: int,
                  rng: np.random.Generator | None = None, *,
                  conjugate: bool = False
                  ) -> tuple[RealCharacterTable, OrthogonalAction]:
    """Character table plus a dim-dimensional orthogonal action for one of
    the preset groups, assembled as a random direct sum of irreducible
    realizations. conjugate hides the block structure behind a Haar change
    of basis."""
    rng = rng or np.random.default_rng(0)
    group, table = build_group(preset, n)
    degrees = [irr.degree for irr in table.irreps]
    blocks: list[str] = []
    remaining = dim
    while remaining > 0:
        options = [irr.name for irr in table.irreps if irr.degree <= remaining]
        pick = options[int(rng.integers(len(options)))]
        blocks.append(pick)
        remaining -= degrees[table.index_of(pick)]

    mats = []
    for g in range(group.order):
        parts = [_irrep_matrices(preset, n, name)[g] for name in blocks]
        full = np.zeros((dim, dim))
        row = 0
        for p in parts:
            d = p.shape[0]
            full[row:row + d, row:row + d] = p
            row += d
        mats.append(full)
    if conjugate and dim > 0:
        c = haar_orthogonal(dim, rng)
        mats = [c.T @ m @ c for m in mats]
    return table, OrthogonalAction(group, mats)
