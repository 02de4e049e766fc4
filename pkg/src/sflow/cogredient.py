"""Constructive normal forms for one-sided and two-sided Fredholm models.

For a path with positive essential spectrum, a congruence by inverse square
roots brings every operator to identity plus finite rank, continuously in the
parameter. The finite-rank corrections are frozen on an anchor grid and
blended with hat functions, which keeps the positive part positive as long as
each frozen correction stays admissible across its hat support; that is what
the cover check certifies. Operators with essential spectrum on both sides get
the pointwise symmetry factorization instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._eig import jacobi_eigh, spectral_norm_sym
from .errors import (
    CoverFailure,
    NotFSi,
    NotFSplus,
    NotPositive,
    OutOfRange,
    ResidualTooLarge,
)
from .operators import CPS, FSComponent, OperatorPath, negate

POSITIVITY_MARGIN = 1e-8
RESIDUAL_FACTOR = 1e-9
MIN_SINGULAR = 1e-10
COVER_SUBSTEPS = 8


def _op_norm(op: CPS) -> float:
    norm = spectral_norm_sym(op.block) if op.dim else 0.0
    if op.plus_tail or op.minus_tail:
        norm = max(norm, 1.0)
    return norm


def _split_blocks(block: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Blocks of S = P+ L P+ + P0- and K = P0- (L - I) P0- for one operator."""
    w, v = jacobi_eigh(block)
    pos = w > tol
    s_eigs = np.where(pos, w, 1.0)
    k_eigs = np.where(pos, 0.0, w - 1.0)
    s = (v * s_eigs) @ v.T
    k = (v * k_eigs) @ v.T
    return (s + s.T) / 2.0, (k + k.T) / 2.0


def split_positive(op: CPS, tol_cluster: float = 1e-8) -> tuple[CPS, CPS]:
    """Split an operator with positive essential spectrum as S + K with S
    positive definite and K symmetric of finite rank.

    S keeps the strictly positive spectral part and is the identity on the
    rest; K carries the nonpositive part shifted by the identity. Eigenvalues
    within tol_cluster * (1 + norm) of zero count as kernel and go into K.
    """
    if op.component not in (FSComponent.FS_PLUS, FSComponent.FINITE):
        raise NotFSplus(f"component {op.component.name} has nonpositive "
                        "essential spectrum")
    w, _ = jacobi_eigh(op.block)
    norm = float(np.max(np.abs(w))) if w.size else 0.0
    tol = tol_cluster * (1.0 + norm)
    s_block, k_block = _split_blocks(op.block, tol)
    ws, _ = jacobi_eigh(s_block)
    if ws.size and float(ws[0]) <= tol:
        raise NotPositive(f"split left eigenvalue {float(ws[0]):.3e} in S")
    s = CPS(s_block, plus_tail=op.plus_tail, minus_tail=False)
    k = CPS(k_block)
    return s, k


def _inv_sqrt(block: np.ndarray, margin: float) -> np.ndarray:
    w, v = jacobi_eigh(block)
    if w.size and float(w[0]) <= margin:
        raise NotPositive(f"eigenvalue {float(w[0]):.3e} at or below margin "
                          f"{margin:.3e}")
    out = (v / np.sqrt(w)) @ v.T
    return (out + out.T) / 2.0


@dataclass(frozen=True)
class Parametrix:
    """Sampled congruence data along a path: at sample lambdas[j] the
    invertible block M[j] satisfies M' L M = sign * I + K[j] up to the
    residual bound, with K[j] symmetric of finite rank. anchors and
    anchor_corrections hold the frozen splits the blend is built from; the
    source path is kept for mid-sample evaluation."""

    sign: int
    lambdas: tuple[float, ...]
    M: tuple[np.ndarray, ...]
    K: tuple[np.ndarray, ...]
    anchors: tuple[float, ...]
    anchor_corrections: tuple[np.ndarray, ...]
    path: OperatorPath

    def _hat_blend(self, lam: float) -> np.ndarray:
        grid = self.anchors
        j = int(np.searchsorted(grid, lam, side="right")) - 1
        j = min(max(j, 0), len(grid) - 2)
        t = (lam - grid[j]) / (grid[j + 1] - grid[j])
        return ((1.0 - t) * self.anchor_corrections[j]
                + t * self.anchor_corrections[j + 1])

    def at(self, lam: float) -> tuple[np.ndarray, np.ndarray]:
        """(M, K) at any parameter, from the frozen blend."""
        if not 0.0 <= lam <= 1.0:
            raise OutOfRange(f"parameter {lam} outside [0, 1]")
        sgn = float(self.sign)
        block = sgn * self.path.block_at(lam)
        k_blend = self._hat_blend(lam)
        m = _inv_sqrt(block - k_blend, POSITIVITY_MARGIN)
        k = m.T @ k_blend @ m
        k = sgn * (k + k.T) / 2.0
        return m, k

    def transformed_block(self, lam: float) -> np.ndarray:
        m, _ = self.at(lam)
        block = self.path.block_at(lam)
        out = m.T @ block @ m
        return (out + out.T) / 2.0

    def transformed_path(self) -> OperatorPath:
        """Piecewise-linear path through sign * I + K at the samples. Its
        endpoints are the exact congruence images of the path's endpoints,
        which is all the flow of a one-sided path depends on."""
        d = self.path.dim
        samples = [self.sign * np.eye(d) + k for k in self.K]
        return OperatorPath.piecewise_linear(self.lambdas, samples,
                                             plus_tail=self.path.plus_tail,
                                             minus_tail=self.path.minus_tail)

    def max_residual(self) -> float:
        worst = 0.0
        for lam, m, k in zip(self.lambdas, self.M, self.K):
            block = self.path.block_at(lam)
            target = self.sign * np.eye(self.path.dim) + k
            worst = max(worst, spectral_norm_sym(m.T @ block @ m - target))
        return worst


def _check_cover(path: OperatorPath, anchors: np.ndarray,
                 corrections: list[np.ndarray]) -> None:
    """Certify L_lam - K_j positive definite with Weyl slack across the hat
    support of every anchor j. Positivity of both frozen neighbours on a
    segment makes every hat blend on it positive too."""
    lip = path.lipschitz
    for j, k_j in enumerate(corrections):
        lo = anchors[max(j - 1, 0)]
        hi = anchors[min(j + 1, len(anchors) - 1)]
        step = (hi - lo) / COVER_SUBSTEPS
        slack = lip * step / 2.0
        for i in range(COVER_SUBSTEPS + 1):
            lam = lo + i * step
            w, _ = jacobi_eigh(path.block_at(lam) - k_j)
            low = float(w[0]) if w.size else 1.0
            if low - slack <= POSITIVITY_MARGIN:
                raise CoverFailure(
                    f"frozen split at anchor {anchors[j]:.6g} loses "
                    f"positivity near {lam:.6g} (eigenvalue {low:.3e}, "
                    f"slack {slack:.3e}); refine samples")


def parametrix_fs_plus(path: OperatorPath, samples: int = 17) -> Parametrix:
    """Congruence normal form M' L M = I + K along a path with positive
    essential spectrum.

    Splits the operator at each of `samples` uniform anchors, certifies that
    every frozen finite-rank correction stays admissible across its hat
    support, and returns the blended family. Raises CoverFailure when the
    grid is too coarse for the certificate.
    """
    if path.minus_tail:
        raise NotFSplus("path must have positive essential spectrum")
    if samples < 2:
        raise OutOfRange("need at least 2 samples")
    anchors = np.linspace(0.0, 1.0, samples)
    spacing = 1.0 / (samples - 1)
    corrections = []
    for lam in anchors:
        block = path.block_at(lam)
        w, _ = jacobi_eigh(block)
        norm = float(np.max(np.abs(w))) if w.size else 0.0
        # absorb a near-zero band wide enough that eigenvalues entering it
        # between anchors cannot drag the frozen positive part below zero
        cut = max(2.0 * 1e-8 * (1.0 + norm), 4.0 * path.lipschitz * spacing)
        _, k_block = _split_blocks(block, cut)
        corrections.append(k_block)
    _check_cover(path, anchors, corrections)

    ms, ks = [], []
    for lam, k_blend in zip(anchors, corrections):
        m = _inv_sqrt(path.block_at(lam) - k_blend, POSITIVITY_MARGIN)
        k = m.T @ k_blend @ m
        ms.append(m)
        ks.append((k + k.T) / 2.0)
    px = Parametrix(sign=1, lambdas=tuple(float(a) for a in anchors),
                    M=tuple(ms), K=tuple(ks),
                    anchors=tuple(float(a) for a in anchors),
                    anchor_corrections=tuple(corrections), path=path)
    _check_residual(px)
    return px


def _check_residual(px: Parametrix) -> None:
    for lam, m, k in zip(px.lambdas, px.M, px.K):
        op = px.path.at(lam)
        target = px.sign * np.eye(px.path.dim) + k
        res = spectral_norm_sym(m.T @ op.block @ m - target)
        bound = RESIDUAL_FACTOR * (1.0 + _op_norm(op))
        if res > bound:
            raise ResidualTooLarge(
                f"residual {res:.3e} at sample {lam} exceeds {bound:.3e}")
        sv = np.linalg.svd(m, compute_uv=False)
        if float(sv[-1]) <= MIN_SINGULAR:
            raise NotPositive(f"M at sample {lam} has singular value "
                              f"{float(sv[-1]):.3e}")


def parametrix(path: OperatorPath, samples: int = 17) -> Parametrix:
    """Normal form for a one-sided path: direct for positive essential
    spectrum, through negation with flipped sign for negative."""
    plus, minus = path.plus_tail, path.minus_tail
    if minus and not plus:
        flipped = parametrix_fs_plus(negate(path), samples)
        return Parametrix(sign=-1, lambdas=flipped.lambdas, M=flipped.M,
                          K=tuple(-k for k in flipped.K),
                          anchors=flipped.anchors,
                          anchor_corrections=flipped.anchor_corrections,
                          path=path)
    if plus and not minus:
        return parametrix_fs_plus(path, samples)
    if not plus and not minus:
        return parametrix_fs_plus(path, samples)
    raise NotFSplus("two-sided essential spectrum has no one-sided parametrix")


@dataclass(frozen=True)
class PointwiseSection:
    """Symmetry factorization S = M Q M' + K of a single operator."""

    Q: CPS
    M: np.ndarray
    K: np.ndarray
    kernel_dim: int


def pointwise_section(op: CPS, tol_cluster: float = 1e-8) -> PointwiseSection:
    """Factor a two-sided operator as M Q M' + K with Q a symmetry, M an
    invertible block map acting as the identity on the tails, and K symmetric
    of rank equal to the kernel dimension.

    The kernel projection fills the gap: V = S + ker-projection is invertible,
    Q is its sign, M its absolute-value square root, and K comes out as minus
    the kernel projection.
    """
    if op.component is not FSComponent.FS_I:
        raise NotFSi(f"component {op.component.name}, need essential spectrum "
                     "on both sides")
    w, v = jacobi_eigh(op.block)
    norm = float(np.max(np.abs(w))) if w.size else 0.0
    tol = tol_cluster * (1.0 + norm)
    in_kernel = np.abs(w) <= tol
    kernel_dim = int(np.count_nonzero(in_kernel))

    w_v = np.where(in_kernel, 1.0, w)
    q_eigs = np.where(w_v > 0.0, 1.0, -1.0)
    q_block = (v * q_eigs) @ v.T
    m_block = (v * np.sqrt(np.abs(w_v))) @ v.T
    q_block = (q_block + q_block.T) / 2.0
    m_block = (m_block + m_block.T) / 2.0

    k_block = op.block - m_block @ q_block @ m_block.T
    k_block = (k_block + k_block.T) / 2.0
    res = spectral_norm_sym(op.block - (m_block @ q_block @ m_block.T + k_block))
    bound = RESIDUAL_FACTOR * (1.0 + _op_norm(op))
    k0 = (v * np.where(in_kernel, 1.0, 0.0)) @ v.T
    drift = spectral_norm_sym(k_block + k0)
    if max(res, drift) > bound:
        raise ResidualTooLarge(f"factorization residual {max(res, drift):.3e} "
                               f"exceeds {bound:.3e}")
    q = CPS(q_block, plus_tail=True, minus_tail=True)
    return PointwiseSection(Q=q, M=m_block, K=k_block, kernel_dim=kernel_dim)
