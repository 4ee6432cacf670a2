"""Eigen-decomposition, phi sweeps, gaps, edge localization and pumping."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ._parallel import parallel_map
from .errors import NoGapError, NumericError, ParameterError, ShapeError, SolverError
from .model import HoppingDisorder, LatticeParams, build_chain, spin_sign

LEFT, RIGHT, BULK = "left-edge", "right-edge", "bulk"


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (ascending; by real part for non-Hermitian input) and unit-norm columns."""

    values: np.ndarray
    vectors: np.ndarray
    hermitian: bool

    def __len__(self):
        return self.values.size

    def residual(self, H) -> float:
        """max_mu ||H psi_mu - E_mu psi_mu||."""
        R = np.asarray(H) @ self.vectors - self.vectors * self.values
        return float(np.max(np.linalg.norm(R, axis=0))) if self.values.size else 0.0


def is_hermitian(H, rtol=1e-12) -> bool:
    scale = max(1.0, float(np.max(np.abs(H)))) if H.size else 1.0
    return bool(np.max(np.abs(H - H.conj().T), initial=0.0) <= rtol * scale)


def diagonalize(H, hermitian: Optional[bool] = None) -> Spectrum:
    """Full eigen-decomposition with deterministic ordering.

    Hermitian input goes through ``eigh`` (orthonormal vectors even inside
    degenerate subspaces).  Otherwise ``eig`` is used, eigenvalues are
    ordered by real part and then imaginary part, and right eigenvectors
    are normalised.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise NumericError("matrix has non-finite entries")
    if hermitian is None:
        hermitian = is_hermitian(H)
    try:
        if hermitian:
            values, vectors = np.linalg.eigh(H)
        else:
            values, vectors = np.linalg.eig(H)
            order = np.lexsort((values.imag, values.real))
            values, vectors = values[order], vectors[:, order]
            vectors = vectors / np.linalg.norm(vectors, axis=0)
    except np.linalg.LinAlgError as exc:
        raise SolverError(
            f"eigensolver failed on {H.shape[0]}x{H.shape[0]} matrix "
            f"(max|H|={np.max(np.abs(H)):.3g}, hermitian={hermitian}): {exc}"
        ) from exc
    return Spectrum(values, vectors, bool(hermitian))


# -- phi sweeps ----------------------------------------------------------------


@dataclass(frozen=True)
class BandStructure:
    phi_grid: np.ndarray
    energies: np.ndarray  # (n_phi, N)
    spin: str
    params: LatticeParams
    vectors: Optional[np.ndarray] = None  # (n_phi, N, N), columns are states

    def __post_init__(self):
        phi = np.asarray(self.phi_grid, dtype=float)
        if phi.size > 1 and np.any(np.diff(phi) <= 0):
            raise ParameterError("phi grid must be strictly increasing")
        if phi.size and (phi[0] < -1e-12 or phi[-1] > 2 * np.pi + 1e-12):
            raise ParameterError("phi grid must lie within [0, 2*pi]")


def _solve_at_phi(task):
    params, phi, keep, disorder = task
    try:
        spec = diagonalize(build_chain(params.with_(phi=phi), disorder), hermitian=True)
    except (SolverError, NumericError) as exc:
        raise type(exc)(f"at phi={phi!r}: {exc}") from exc
    return spec.values, (spec.vectors if keep else None)


def sweep_phi(params: LatticeParams, phi_grid: Sequence[float], keep_vectors: bool = False,
              workers: int = 1, disorder: Optional[HoppingDisorder] = None) -> BandStructure:
    """Diagonalize the chain of ``params`` at every phi of the grid."""
    phi_grid = np.asarray(phi_grid, dtype=float)
    if phi_grid.size == 0:
        raise ParameterError("phi grid is empty")
    tasks = [(params, float(phi), keep_vectors, disorder) for phi in phi_grid]
    results = parallel_map(_solve_at_phi, tasks, workers)
    energies = np.array([r[0] for r in results])
    vectors = np.array([r[1] for r in results]) if keep_vectors else None
    return BandStructure(phi_grid, energies, params.spin, params, vectors)


def default_edge_width(N: int) -> int:
    return max(1, math.ceil(N / 10))


def edge_weights(vectors: np.ndarray, m: int):
    """Left/right edge weights of every column of ``vectors``."""
    dens = np.abs(vectors) ** 2
    return dens[:m].sum(axis=0), dens[-m:].sum(axis=0)


def classify(w_left, w_right, threshold=0.5):
    w_left, w_right = np.atleast_1d(w_left), np.atleast_1d(w_right)
    out = np.full(w_left.shape, BULK, dtype=object)
    out[w_right > threshold] = RIGHT
    out[w_left > threshold] = LEFT
    return out


def edge_weight(state, m: Optional[int] = None, threshold: float = 0.5):
    """Weight of ``state`` on the first and last ``m`` sites, plus its class.

    Returns ``(w_left, w_right, cls)`` with ``cls`` one of ``"left-edge"``,
    ``"right-edge"`` or ``"bulk"``.
    """
    psi = np.asarray(state).ravel()
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise NumericError("zero vector has no edge weight")
    if abs(norm - 1.0) > 1e-8:
        warnings.warn(f"state norm {norm:.6g} != 1; normalising", RuntimeWarning, stacklevel=2)
        psi = psi / norm
    m = default_edge_width(psi.size) if m is None else int(m)
    if not 1 <= m <= psi.size // 2:
        raise ParameterError(f"edge width m={m} must be in 1..{psi.size // 2}")
    dens = np.abs(psi) ** 2
    wl, wr = float(dens[:m].sum()), float(dens[-m:].sum())
    return wl, wr, str(classify(wl, wr, threshold)[0])


def center_of_mass(vectors) -> np.ndarray:
    """<n> with sites counted from 1, per column."""
    dens = np.abs(np.asarray(vectors)) ** 2
    n = np.arange(1, dens.shape[0] + 1)
    return n @ dens / dens.sum(axis=0)


# -- gaps ----------------------------------------------------------------------


@dataclass(frozen=True)
class GapInfo:
    filling: int
    width: float
    phi_at_min: float
    energy_at_min: float  # mid-gap energy where the width is smallest
    gapless: bool


@dataclass(frozen=True)
class GapReport:
    gaps: Tuple[GapInfo, ...]

    def __iter__(self):
        return iter(self.gaps)

    def __getitem__(self, i):
        return self.gaps[i]


def _default_window(params: LatticeParams) -> int:
    # an open chain may hold one band state more or less per end than the ring
    return 1 if params.boundary == "open" else 0


def _bulk_gap_at(E, bulk_mask, filling, window):
    """(lower, upper) bulk band edges around ``filling`` states.

    Excluded (edge) states are removed first; the split position then
    floats by ``window`` bulk states and the widest spacing wins.
    """
    N = E.size
    eb = E[bulk_mask]
    nb = eb.size
    if nb < 2:
        return float("nan"), float("nan")
    centre = filling - int(np.count_nonzero(~bulk_mask[:filling]))
    lo_k = max(1, centre - window)
    hi_k = min(nb - 1, centre + window)
    if lo_k > hi_k:
        lo_k = hi_k = min(max(centre, 1), nb - 1)
    ks = np.arange(lo_k, hi_k + 1)
    spacing = eb[ks] - eb[ks - 1]
    k = ks[int(np.argmax(spacing))]
    return float(eb[k - 1]), float(eb[k])


def gap_profile(bs: BandStructure, filling: int, window: Optional[int] = None,
                edge_threshold: float = 0.5, edge_width: Optional[int] = None):
    """Bulk gap edges at every phi of ``bs`` for the given band filling.

    Returns ``(lower, upper)`` arrays.  When eigenvectors are stored,
    states whose edge weight exceeds ``edge_threshold`` are left out so
    in-gap edge branches do not close the bulk gap.
    """
    N = bs.energies.shape[1]
    if not 0 < filling < N:
        raise ParameterError(f"filling {filling} must satisfy 0 < m < {N}")
    window = _default_window(bs.params) if window is None else window
    m = default_edge_width(N) if edge_width is None else edge_width
    lower = np.empty(len(bs.phi_grid))
    upper = np.empty(len(bs.phi_grid))
    for i, E in enumerate(bs.energies):
        if bs.vectors is not None:
            wl, wr = edge_weights(bs.vectors[i], m)
            mask = (wl <= edge_threshold) & (wr <= edge_threshold)
        else:
            mask = np.ones(N, dtype=bool)
        lower[i], upper[i] = _bulk_gap_at(E, mask, filling, window)
    return lower, upper


def find_gaps(bs: BandStructure, fillings: Sequence[int], tol: float = 1e-3,
              window: Optional[int] = None, edge_threshold: float = 0.5,
              edge_width: Optional[int] = None) -> GapReport:
    """Minimum bulk gap over phi for each filling (number of states below the gap)."""
    infos = []
    single_band = bs.params.lam == 0 or bs.params.q == 1
    for m in fillings:
        if single_band:
            # one band: level spacings inside it are not gaps
            N = bs.energies.shape[1]
            if not 0 < m < N:
                raise ParameterError(f"filling {m} must satisfy 0 < m < {N}")
            E = bs.energies[0]
            infos.append(GapInfo(int(m), 0.0, float(bs.phi_grid[0]),
                                 float(0.5 * (E[m - 1] + E[m])), True))
            continue
        lo, hi = gap_profile(bs, int(m), window, edge_threshold, edge_width)
        width = np.maximum(hi - lo, 0.0)
        i = int(np.nanargmin(width))
        infos.append(GapInfo(int(m), float(width[i]), float(bs.phi_grid[i]),
                             float(0.5 * (lo[i] + hi[i])), bool(width[i] < tol)))
    return GapReport(tuple(infos))


def find_dirac_points(bs: BandStructure, filling: int, tol: float = 1e-3,
                      window: Optional[int] = None, steps=(2, 4),
                      slope_rtol: float = 0.2) -> List[Tuple[float, float]]:
    """Gap-closing points with locally linear dispersion.

    Every run of grid points with gap below ``tol`` contributes its
    minimum, which is kept only if the symmetric slope
    ``(gap(phi+h) + gap(phi-h)) / 2h`` is positive and agrees within
    ``slope_rtol`` for the two offsets in ``steps`` (in grid steps).
    """
    lo, hi = gap_profile(bs, filling, window)
    gap = np.maximum(hi - lo, 0.0)
    phi = np.asarray(bs.phi_grid)
    n = phi.size
    periodic = n > 2 and abs(phi[-1] - phi[0] - 2 * np.pi) < 1e-9
    period = n - 1 if periodic else n

    def at(i):
        if periodic:
            return gap[i % period], True
        if 0 <= i < n:
            return gap[i], True
        return 0.0, False

    below = gap < tol
    points = []
    i = 0
    while i < n:
        if not below[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and below[j + 1]:
            j += 1
        k = i + int(np.argmin(gap[i: j + 1]))
        i = j + 1
        if periodic and k == n - 1:
            continue  # same point as phi[0]
        slopes = []
        for s in steps:
            (gp, okp), (gm, okm) = at(k + s), at(k - s)
            if not (okp and okm):
                break
            h = s * (phi[1] - phi[0])
            slopes.append((gp + gm - 2 * gap[k]) / (2 * h))
        if len(slopes) != len(steps) or min(slopes) <= 0:
            continue
        if (max(slopes) - min(slopes)) > slope_rtol * max(slopes):
            continue
        points.append((float(phi[k]), float(0.5 * (lo[k] + hi[k]))))
    return points


# -- edge branches and pumping ---------------------------------------------------


def edge_branch_crossings(bs: BandStructure, filling: int, window: Optional[int] = None,
                          edge_width: Optional[int] = None) -> dict:
    """Signed mid-gap crossings of edge-localized branches along the sweep.

    An in-gap edge state at step i+1 is matched to its maximal-overlap
    state at step i; a change of side relative to mid-gap counts +1
    (upward) or -1 (downward) for the edge it sits on.
    """
    if bs.vectors is None:
        raise ParameterError("edge_branch_crossings needs a sweep with keep_vectors=True")
    N = bs.energies.shape[1]
    m = default_edge_width(N) if edge_width is None else edge_width
    lo, hi = gap_profile(bs, filling, window, edge_width=m)
    mid = 0.5 * (lo + hi)
    counts = {LEFT: 0, RIGHT: 0}
    for i in range(len(bs.phi_grid) - 1):
        E0, E1 = bs.energies[i], bs.energies[i + 1]
        V0, V1 = bs.vectors[i], bs.vectors[i + 1]
        wl, wr = edge_weights(V1, m)
        cls = classify(wl, wr)
        for j in np.flatnonzero((E1 > lo[i + 1]) & (E1 < hi[i + 1])):
            if cls[j] == BULK:
                continue
            prev = int(np.argmax(np.abs(V0.conj().T @ V1[:, j])))
            before = E0[prev] - mid[i]
            after = E1[j] - mid[i + 1]
            if before < 0 <= after:
                counts[cls[j]] += 1
            elif before >= 0 > after:
                counts[cls[j]] -= 1
    return counts


@dataclass(frozen=True)
class PumpTrajectory:
    phi: np.ndarray
    energy: np.ndarray
    center_of_mass: np.ndarray
    w_left: np.ndarray
    w_right: np.ndarray
    classes: Tuple[str, ...]
    overlap: np.ndarray  # |<psi_prev|psi>| with the neighbouring step; nan at the seed step
    flagged: np.ndarray
    in_gap: np.ndarray
    spin: str
    gap: int

    def phases(self, start: int = 0, stop: Optional[int] = None) -> List[str]:
        """Classification sequence with consecutive repeats collapsed."""
        out: List[str] = []
        for c in self.classes[start:stop]:
            if not out or out[-1] != c:
                out.append(c)
        return out


def _filling_for_gap(params: LatticeParams, gap: int) -> int:
    if not 1 <= gap <= params.q - 1:
        if params.q == 1 or params.lam == 0:
            raise NoGapError("no gap: the chain has a single band")
        raise ParameterError(f"gap index {gap} outside 1..{params.q - 1}")
    return int(round(gap * params.N / params.q))


def track_pump(params: LatticeParams, phi_path: Sequence[float], gap: int = 1,
               spin: Optional[str] = None, edge_width: Optional[int] = None,
               min_gap: Optional[float] = None) -> PumpTrajectory:
    """Follow one in-gap state adiabatically along ``phi_path``.

    The seed is the in-gap state closest to mid-gap at the first path
    point that has one.  From there the state is followed forwards (and
    backwards to the path start) by maximal overlap, restricted to the
    in-gap states whenever any exist.  A step is flagged when the best
    overlap is below 0.5 or a runner-up comes within 10% of it.

    Raises NoGapError when the bulk gap along the path is not wider than
    ``min_gap`` (default: four mean level spacings).
    """
    spin = spin or params.spin
    spin_sign(spin)
    params = params.with_(spin=spin)
    filling = _filling_for_gap(params, gap)
    phi_path = np.asarray(phi_path, dtype=float)
    if phi_path.size < 2:
        raise ParameterError("pump path needs at least two points")
    N = params.N
    m = default_edge_width(N) if edge_width is None else edge_width
    window = _default_window(params)

    E_all, V_all, lo, hi = [], [], np.empty(phi_path.size), np.empty(phi_path.size)
    spread = 0.0
    for i, phi in enumerate(phi_path):
        spec = diagonalize(build_chain(params.with_(phi=float(phi))), hermitian=True)
        wl, wr = edge_weights(spec.vectors, m)
        mask = (wl <= 0.5) & (wr <= 0.5)
        lo[i], hi[i] = _bulk_gap_at(spec.values, mask, filling, window)
        spread = max(spread, spec.values[-1] - spec.values[0])
        E_all.append(spec.values)
        V_all.append(spec.vectors)
    if min_gap is None:
        min_gap = 4.0 * spread / (N - 1)
    if not np.all(hi - lo > min_gap):
        i = int(np.nanargmin(hi - lo))
        raise NoGapError(
            f"no gap: bulk gap {gap} narrows to {hi[i] - lo[i]:.3g} at phi={phi_path[i]:.6g} "
            f"(needs > {min_gap:.3g})"
        )

    ingap = [np.flatnonzero((E > a) & (E < b)) for E, a, b in zip(E_all, lo, hi)]
    starts = [i for i, c in enumerate(ingap) if c.size]
    if not starts:
        raise NoGapError(f"no in-gap state in gap {gap} anywhere on the path")
    i0 = starts[0]
    mid0 = 0.5 * (lo[i0] + hi[i0])
    pick = np.empty(phi_path.size, dtype=int)
    overlap = np.full(phi_path.size, np.nan)
    flagged = np.zeros(phi_path.size, dtype=bool)
    chosen_in_gap = np.zeros(phi_path.size, dtype=bool)
    pick[i0] = ingap[i0][np.argmin(np.abs(E_all[i0][ingap[i0]] - mid0))]
    chosen_in_gap[i0] = True

    def follow(i, j):
        prev = V_all[j][:, pick[j]]
        cand = ingap[i] if ingap[i].size else np.arange(N)
        ov = np.abs(V_all[i][:, cand].conj().T @ prev)
        order = np.argsort(ov)[::-1]
        best = ov[order[0]]
        pick[i] = cand[order[0]]
        overlap[i] = best
        chosen_in_gap[i] = bool(ingap[i].size)
        runner_up = ov[order[1]] if ov.size > 1 else 0.0
        flagged[i] = best < 0.5 or runner_up >= 0.9 * best

    for i in range(i0 + 1, phi_path.size):
        follow(i, i - 1)
    for i in range(i0 - 1, -1, -1):
        follow(i, i + 1)

    states = np.stack([V_all[i][:, pick[i]] for i in range(phi_path.size)], axis=1)
    wl, wr = edge_weights(states, m)
    return PumpTrajectory(
        phi=phi_path,
        energy=np.array([E_all[i][pick[i]] for i in range(phi_path.size)]),
        center_of_mass=center_of_mass(states),
        w_left=wl,
        w_right=wr,
        classes=tuple(str(c) for c in classify(wl, wr)),
        overlap=overlap,
        flagged=flagged,
        in_gap=chosen_in_gap,
        spin=spin,
        gap=gap,
    )


@dataclass(frozen=True)
class GapState:
    energy: float
    vector: np.ndarray
    in_gap: bool
    w_left: float
    w_right: float
    cls: str
    gap_edges: Tuple[float, float]


def gap_state(params: LatticeParams, gap: int = 1,
              edge_width: Optional[int] = None) -> GapState:
    """The eigenstate of the chain closest to the middle of bulk gap ``gap``.

    Prefers states inside the bulk gap; ``in_gap`` is False when the gap
    is empty and the nearest bulk state was returned instead.  A chain
    with a single band falls back to the middle of the spectrum.
    """
    spec = diagonalize(build_chain(params), hermitian=True)
    N = params.N
    m = default_edge_width(N) if edge_width is None else edge_width
    wl, wr = edge_weights(spec.vectors, m)
    try:
        filling = _filling_for_gap(params, gap)
    except NoGapError:
        filling = None
    if filling is None or not 0 < filling < N:
        k = N // 2
        lo = hi = float(spec.values[k])
        inside = np.array([], dtype=int)
    else:
        mask = (wl <= 0.5) & (wr <= 0.5)
        lo, hi = _bulk_gap_at(spec.values, mask, filling, _default_window(params))
        inside = np.flatnonzero((spec.values > lo) & (spec.values < hi))
        mid = 0.5 * (lo + hi)
        pool = inside if inside.size else np.arange(N)
        k = int(pool[np.argmin(np.abs(spec.values[pool] - mid))])
    return GapState(float(spec.values[k]), spec.vectors[:, k].copy(), bool(inside.size),
                    float(wl[k]), float(wr[k]), str(classify(wl[k], wr[k])[0]),
                    (float(lo), float(hi)))
