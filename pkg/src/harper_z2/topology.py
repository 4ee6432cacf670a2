"""Berry phases on the (k_x, phi) torus, Chern numbers and the Z2 index.

Chern numbers use the lattice field-strength construction: link variables
``U = det(<frame(x)|frame(x + e)>)`` between neighbouring grid points and
one plaquette phase per cell, which sums to an exact multiple of 2*pi as
long as the band group stays gapped.  Multi-band groups are handled by the
determinant, so no gauge fixing is needed.

Orientation: plaquettes are traversed so that beta = 1/3, spin up gives
band Chern numbers (1, -2, 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ._parallel import parallel_map
from .errors import (DegeneracyError, GridRefinementError, InconsistencyError,
                     ParameterError)
from .model import (HoppingDisorder, LatticeParams, as_flux, build_bloch_hamiltonian,
                    build_twisted_ring, spin_sign)

SINGULAR_LINK = 1e-12


@dataclass(frozen=True)
class BerryField:
    n_k: int
    n_phi: int
    phases: np.ndarray  # (n_k, n_phi), each in (-pi, pi]
    bands: Tuple[int, ...]
    spin: str

    @property
    def total(self) -> float:
        """Sum of plaquette phases over 2*pi."""
        return float(self.phases.sum() / (2 * np.pi))

    @property
    def chern(self) -> int:
        return int(round(self.total))


@dataclass(frozen=True)
class ChernReport:
    band_cherns: Tuple[int, ...]
    raw: Tuple[float, ...]
    spin: str
    grid: Tuple[int, int]
    gap_status: str = "open"
    min_gap: float = float("nan")

    @property
    def gap_cherns(self) -> Tuple[int, ...]:
        """Chern number of all bands below gap r, for r = 1..q-1."""
        return tuple(int(c) for c in np.cumsum(self.band_cherns)[:-1])

    @property
    def max_deviation(self) -> float:
        return float(max((abs(r - round(r)) for r in self.raw), default=0.0))


@dataclass(frozen=True)
class Z2Report:
    gap: int
    c_up: int
    c_down: int
    difference: int  # C_up - C_down, kept raw for the odd/out-of-range cases
    spin_chern: float
    nu: int


def plaquette_phases(frames: np.ndarray, left: Optional[np.ndarray] = None) -> np.ndarray:
    """Berry phase of every plaquette of a periodic 2D grid of frames.

    ``frames`` has shape ``(n1, n2, dim, nb)``: an orthonormal (or, for
    non-Hermitian input, normalised right) basis of the band group at each
    grid point.  With ``left`` given, links use ``left^dagger @ right``
    (biorthogonal convention).  Phases are returned in (-pi, pi].
    """
    frames = np.asarray(frames)
    bra = frames if left is None else np.asarray(left)
    links = []
    for axis in (0, 1):
        M = np.einsum("...ij,...ik->...jk", bra.conj(), np.roll(frames, -1, axis=axis))
        U = np.linalg.det(M)
        bad = np.abs(U) < SINGULAR_LINK
        if np.any(bad):
            i, j = (int(v) for v in np.argwhere(bad)[0])
            raise GridRefinementError(
                f"singular link overlap along axis {axis} at grid point ({i}, {j}); refine the grid"
            )
        links.append(U)
    U1, U2 = links
    loop = U1 * np.roll(U2, -1, axis=0) * np.conj(np.roll(U1, -1, axis=1)) * np.conj(U2)
    F = -np.angle(loop)
    F[F <= -np.pi] = np.pi
    return F


def _torus(n1: int, n2: int, span1: float):
    if n1 < 6 or n2 < 6:
        raise ParameterError(f"torus grid must be at least 6x6, got {n1}x{n2}")
    return span1 * np.arange(n1) / n1, 2 * np.pi * np.arange(n2) / n2


def _group_bounds(bands: Sequence[int], n_states: int, group: int = 1):
    bands = sorted(int(b) for b in bands)
    if not bands or bands != list(range(bands[0], bands[-1] + 1)):
        raise ParameterError(f"band set {bands} must be a non-empty contiguous range")
    if bands[0] < 0 or (bands[-1] + 1) * group > n_states:
        raise ParameterError(f"band set {bands} out of range")
    return bands[0] * group, (bands[-1] + 1) * group


def _check_separation(E, lo, hi, gap_tol, coords, what="band"):
    """Raise when the state window [lo, hi) touches the rest of the spectrum."""
    gaps = []
    if lo > 0:
        gaps.append(E[..., lo] - E[..., lo - 1])
    if hi < E.shape[-1]:
        gaps.append(E[..., hi] - E[..., hi - 1])
    if not gaps:
        return float("inf")
    g = np.minimum.reduce(gaps)
    i, j = np.unravel_index(int(np.argmin(g)), g.shape)
    if g[i, j] < gap_tol:
        point = (float(coords[0][i]), float(coords[1][j]))
        raise DegeneracyError(
            f"{what} window {lo}..{hi - 1} touches its complement (gap {g[i, j]:.3g}) "
            f"at grid point {point}",
            point=point,
        )
    return float(g.min())


# -- Bloch torus -------------------------------------------------------------------


def _bloch_row(task):
    beta, lam, t, kx, phis, spin, decay = task
    Hs = np.array([build_bloch_hamiltonian(beta, lam, t, kx, phi, spin) for phi in phis])
    if decay is None:
        E, V = np.linalg.eigh(Hs)
        return E, V, None, None
    Hs = Hs - 0.5j * np.diag(decay)
    E, V = np.linalg.eig(Hs)
    order = np.lexsort((E.imag, E.real), axis=-1)
    E = np.take_along_axis(E, order, axis=-1)
    V = np.take_along_axis(V, order[:, None, :], axis=-1)
    V = V / np.linalg.norm(V, axis=-2, keepdims=True)
    L = np.linalg.inv(V).conj().swapaxes(-1, -2)  # rows of V^-1 are the left vectors
    cond = np.linalg.cond(V)
    return E, V, L, cond


def _bloch_grid(beta, lam, t, spin, n_k, n_phi, decay=None, workers=1):
    beta = as_flux(beta)
    spin_sign(spin)
    q = beta.denominator
    kxs, phis = _torus(n_k, n_phi, 2 * np.pi / q)
    tasks = [(beta, lam, t, float(kx), phis, spin, decay) for kx in kxs]
    rows = parallel_map(_bloch_row, tasks, workers)
    E = np.array([r[0] for r in rows])
    V = np.array([r[1] for r in rows])
    if decay is None:
        return (kxs, phis), E, V, None, None
    return (kxs, phis), E, V, np.array([r[2] for r in rows]), np.array([r[3] for r in rows])


def berry_field(beta, lam: float, t: float, spin: str, bands: Sequence[int],
                n_k: int = 30, n_phi: int = 30, gap_tol: float = 1e-8,
                workers: int = 1) -> BerryField:
    """Plaquette Berry phases of a contiguous band set (0-based indices)."""
    coords, E, V, _, _ = _bloch_grid(beta, lam, t, spin, n_k, n_phi, workers=workers)
    lo, hi = _group_bounds(bands, E.shape[-1])
    _check_separation(E, lo, hi, gap_tol, coords)
    F = plaquette_phases(V[..., lo:hi])
    return BerryField(n_k, n_phi, F, tuple(range(lo, hi)), spin)


def _report(frames_E, V, groups, group_size, coords, gap_tol, left=None,
            real_parts=False):
    raw, min_gap = [], float("inf")
    E = frames_E.real if real_parts else frames_E
    for b in groups:
        lo, hi = b * group_size, (b + 1) * group_size
        if not real_parts:
            min_gap = min(min_gap, _check_separation(E, lo, hi, gap_tol, coords))
        F = plaquette_phases(V[..., lo:hi], None if left is None else left[..., lo:hi])
        raw.append(float(F.sum() / (2 * np.pi)))
    return raw, min_gap


def chern_numbers(beta, lam: float, t: float, spin: str, n_k: int = 30, n_phi: int = 30,
                  gap_tol: float = 1e-8, workers: int = 1) -> ChernReport:
    """Chern number of every magnetic band on the (k_x, phi) torus."""
    coords, E, V, _, _ = _bloch_grid(beta, lam, t, spin, n_k, n_phi, workers=workers)
    q = E.shape[-1]
    raw, min_gap = _report(E, V, range(q), 1, coords, gap_tol)
    return ChernReport(tuple(int(round(r)) for r in raw), tuple(raw), spin, (n_k, n_phi),
                       "open", min_gap)


def z2_index(report_up: ChernReport, report_down: ChernReport, gap: int) -> Z2Report:
    """nu = ((C_up - C_down)/2) mod 2 for the bands below ``gap`` (1-based)."""
    if report_up.spin != "up" or report_down.spin != "down":
        raise ParameterError("z2_index expects an up report and a down report")
    if len(report_up.band_cherns) != len(report_down.band_cherns):
        raise ParameterError("reports cover different band counts")
    if not 1 <= gap <= len(report_up.band_cherns) - 1:
        raise ParameterError(f"gap {gap} outside 1..{len(report_up.band_cherns) - 1}")
    c_up = report_up.gap_cherns[gap - 1]
    c_down = report_down.gap_cherns[gap - 1]
    diff = c_up - c_down
    if diff % 2:
        raise InconsistencyError(
            f"C_up - C_down = {diff} is odd in gap {gap}; the spins do not decouple"
        )
    return Z2Report(gap, c_up, c_down, diff, diff / 2, (diff // 2) % 2)


# -- twisted ring ------------------------------------------------------------------


def _ring_row(task):
    params, disorder, theta, phis = task
    Hs = np.array([build_twisted_ring(params.with_(theta=theta, phi=phi), disorder)
                   for phi in phis])
    return np.linalg.eigh(Hs)


def twisted_chern(params: LatticeParams, disorder: Optional[HoppingDisorder] = None,
                  bands: Optional[Sequence[int]] = None, n_theta: int = 24,
                  n_phi: int = 24, gap_tol: float = 1e-6, workers: int = 1) -> ChernReport:
    """Chern numbers of the N/q-state band groups over the (theta, phi) torus.

    The twist angle of the closing bond replaces k_x, so hopping disorder
    (which breaks translation symmetry) is allowed.  Raises
    DegeneracyError when a group touches its neighbour anywhere on the grid.
    """
    params = params.with_(boundary="twisted")
    q = params.q
    group = params.N // q
    groups = range(q) if bands is None else sorted(int(b) for b in bands)
    thetas, phis = _torus(n_theta, n_phi, 2 * np.pi)
    tasks = [(params, disorder, float(th), phis) for th in thetas]
    rows = parallel_map(_ring_row, tasks, workers)
    E = np.array([r[0] for r in rows])
    V = np.array([r[1] for r in rows])
    for b in groups:
        if not 0 <= b < q:
            raise ParameterError(f"band group {b} outside 0..{q - 1}")
    raw, min_gap = _report(E, V, groups, group, (thetas, phis), gap_tol)
    return ChernReport(tuple(int(round(r)) for r in raw), tuple(raw), params.spin,
                       (n_theta, n_phi), "open", min_gap)


# -- dissipation ---------------------------------------------------------------------


def decay_profile(q: int, kappa, pattern: Optional[Sequence[float]] = None) -> np.ndarray:
    """Per-site decay rates inside the magnetic cell.

    ``pattern=None`` gives the uniform profile ``kappa`` on every site;
    otherwise ``kappa * pattern`` (length q).
    """
    if pattern is None:
        return np.full(q, float(kappa))
    pattern = np.asarray(pattern, dtype=float)
    if pattern.shape != (q,):
        raise ParameterError(f"decay pattern needs {q} entries, got {pattern.shape}")
    return float(kappa) * pattern


def dissipative_chern(beta, lam: float, t: float, spin: str, kappa_profile,
                      n_k: int = 30, n_phi: int = 30, biorthogonal: bool = False,
                      cond_max: float = 1e8, real_gap_tol: float = 1e-8,
                      gap_tol: float = 1e-8, workers: int = 1) -> ChernReport:
    """Band Chern numbers of ``H_bloch - (i/2) diag(kappa_profile)``.

    Bands are ordered by real part.  Right eigenvectors are used for the
    links unless ``biorthogonal`` is set.  An eigenvector matrix with
    condition number above ``cond_max`` means an exceptional point and
    raises DegeneracyError, as do two eigenvalues closer than ``gap_tol``
    in the complex plane.  A closed real-part gap is only reported in
    ``gap_status`` because the bands may still be separated there.
    """
    beta = as_flux(beta)
    q = beta.denominator
    decay = np.broadcast_to(np.asarray(kappa_profile, dtype=float), (q,)).copy()
    if np.any(decay < 0):
        raise ParameterError("decay rates must be non-negative")
    if not np.any(decay):
        return chern_numbers(beta, lam, t, spin, n_k, n_phi, workers=workers)
    coords, E, V, L, cond = _bloch_grid(beta, lam, t, spin, n_k, n_phi, decay, workers)
    if np.max(cond) > cond_max:
        i, j = np.unravel_index(int(np.argmax(cond)), cond.shape)
        point = (float(coords[0][i]), float(coords[1][j]))
        raise DegeneracyError(
            f"exceptional point: eigenvector condition number {cond[i, j]:.3g} at grid point {point}",
            point=point,
        )
    dist = np.abs(E[..., :, None] - E[..., None, :])
    dist[..., np.arange(q), np.arange(q)] = np.inf
    closest = dist.min(axis=(-2, -1))
    i, j = np.unravel_index(int(np.argmin(closest)), closest.shape)
    if closest[i, j] < gap_tol:
        point = (float(coords[0][i]), float(coords[1][j]))
        raise DegeneracyError(
            f"coinciding eigenvalues (distance {closest[i, j]:.3g}) at grid point {point}",
            point=point,
        )
    sep = np.diff(E.real, axis=-1)
    min_gap = float(sep.min()) if sep.size else float("inf")
    status = "open"
    if min_gap < real_gap_tol:
        i, j, _ = np.unravel_index(int(np.argmin(sep)), sep.shape)
        status = f"real-gap-closed at ({coords[0][i]:.6g}, {coords[1][j]:.6g})"
    raw, _ = _report(E, V, range(q), 1, coords, 0.0,
                     left=L if biorthogonal else None, real_parts=True)
    return ChernReport(tuple(int(round(r)) for r in raw), tuple(raw), spin, (n_k, n_phi),
                       status, min_gap)
