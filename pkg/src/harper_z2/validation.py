"""Checks on the reduction from the coupled photon-phonon array to two Harper chains.

The rotation ``A_n = (a_n + b_n)/sqrt(2)``, ``B_n = (a_n - b_n)/sqrt(2)``
is exact for the on-site and beam-splitter terms.  Cavity hopping ``J``
splits into intra-chain hopping ``J/2`` plus a cross term ``J/2`` that
couples ``A_n`` to ``B_{n+1}`` (and ``B_n`` to ``A_{n+1}``).  Dropping that
cross term is the approximation tested here.

Note that for odd q the dropped bond is exactly resonant on every site with
``beta*(2n + 1)`` integer, because ``cos(2*pi*beta*n + phi)`` then equals
``cos(2*pi*beta*(n + 1) - phi)``.  ``resonant_bonds`` lists those sites;
near them the two spectra differ at first order in ``J``, whatever the
size of ``G_n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .model import (LatticeParams, _phase, apply_mode_transform, build_coupled_pair,
                    onsite_energies, site_arrays)

SIN_ZERO = 1e-12


@dataclass(frozen=True)
class MappingReport:
    phi: float
    J: float
    cross_block_max: float
    min_2g: float  # min |2 G_n| over sites where sin(2*pi*beta*n) != 0
    rwa_ratio: float  # J / min_2g
    deviation: float = float("nan")  # max_mu |E_full - E_chains|, sorted matching
    bound: float = float("nan")  # c * J**2 / (2 * min_2g)
    status: str = "n/a"  # pass | fail | rwa-invalid | n/a
    resonant_bonds: Tuple[int, ...] = ()

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def modulated_sites(params: LatticeParams) -> np.ndarray:
    """Boolean mask of sites whose coupling amplitude sin(2*pi*beta*n) is nonzero."""
    n = np.arange(1, params.N + 1)
    return np.abs(np.sin(_phase(params.beta, n))) > SIN_ZERO


def _coupled(params: LatticeParams, J: float) -> np.ndarray:
    H = build_coupled_pair(params.with_(boundary="open"))
    a = 2 * np.arange(params.N)
    H[a[:-1], a[1:]] = J
    H[a[1:], a[:-1]] = J
    return H


def _chains(params: LatticeParams, J: float):
    # the decoupled chains, assembled directly rather than through the rotation
    N = params.N
    off = 0.5 * J * (np.eye(N, k=1) + np.eye(N, k=-1))
    up = np.diag(onsite_energies(params, "up")) + off
    down = np.diag(onsite_energies(params, "down")) + off
    return up, down


def _min_2g(params: LatticeParams) -> float:
    _, G, _, _ = site_arrays(params)
    mask = modulated_sites(params)
    return float(np.min(np.abs(2 * G[mask]))) if mask.any() else 0.0


def resonant_bonds(params: LatticeParams, J: Optional[float] = None) -> Tuple[int, ...]:
    """Sites n whose dropped cross bond to n+1 is detuned by less than J/2."""
    J = 2 * params.t if J is None else J
    _, _, wa, wb = site_arrays(params)
    d1 = np.abs(wa[:-1] - wb[1:])
    d2 = np.abs(wb[:-1] - wa[1:])
    hit = np.minimum(d1, d2) < 0.5 * J
    return tuple(int(n) for n in np.flatnonzero(hit) + 1)


def decoupling_residual(params: LatticeParams, J: Optional[float] = None) -> MappingReport:
    """Largest entry of the (A, B) cross block after the mode rotation."""
    J = 2 * params.t if J is None else float(J)
    _, _, H_AB = apply_mode_transform(_coupled(params, J))
    min_2g = _min_2g(params)
    return MappingReport(
        phi=params.phi,
        J=J,
        cross_block_max=float(np.max(np.abs(H_AB))),
        min_2g=min_2g,
        rwa_ratio=J / min_2g if min_2g > 0 else math.inf,
        resonant_bonds=resonant_bonds(params, J),
    )


def spectral_equivalence(params: LatticeParams, c: float = 4.0,
                         J: Optional[float] = None) -> MappingReport:
    """Compare the 2N coupled spectrum with the union of the two N-site chains.

    Passes iff ``max |E_full - E_chains| <= c*J**2/(2*min_2g)``.  When
    ``min_2g <= J`` the status is ``"rwa-invalid"`` and no verdict is given.
    """
    rep = decoupling_residual(params, J)
    J = rep.J
    full = np.linalg.eigvalsh(_coupled(params, J))
    up, down = _chains(params, J)
    eff = np.sort(np.concatenate([np.linalg.eigvalsh(up), np.linalg.eigvalsh(down)]))
    dev = float(np.max(np.abs(full - eff)))
    if rep.min_2g <= J and J > 0:
        bound, status = math.inf, "rwa-invalid"
    else:
        bound = c * J ** 2 / (2 * rep.min_2g) if rep.min_2g > 0 else 0.0
        # eigensolver round-off floor
        floor = 1e-10 * max(1.0, params.lam, J)
        status = "pass" if dev <= bound + floor else "fail"
    return MappingReport(rep.phi, J, rep.cross_block_max, rep.min_2g, rep.rwa_ratio,
                         dev, bound, status, rep.resonant_bonds)


@dataclass(frozen=True)
class RwaReport:
    lambda_ratio: float  # lam / (2*sqrt(2)*t)
    min_ratio: float  # min over grid and modulated sites of |2 G_n| / J
    worst_phi: float
    valid: bool
    reason: str


def rwa_validity(params: LatticeParams, phi_grid: Sequence[float],
                 safety: float = 5.0) -> RwaReport:
    """Flag parameter sets that violate ``lam >= 2*sqrt(2)*t*safety``.

    A flux whose coupling vanishes on every site (e.g. beta = 1/2) is
    always invalid.
    """
    J = 2 * params.t
    lambda_ratio = params.lam / (2 * math.sqrt(2) * params.t)
    mask = modulated_sites(params)
    worst, worst_phi = math.inf, float("nan")
    for phi in phi_grid:
        _, G, _, _ = site_arrays(params.with_(phi=float(phi)))
        r = float(np.min(np.abs(2 * G[mask]))) / J if mask.any() else 0.0
        if r < worst:
            worst, worst_phi = r, float(phi)
    if not mask.any():
        return RwaReport(lambda_ratio, 0.0, worst_phi, False,
                         "G_n vanishes on every site for this flux")
    if lambda_ratio < safety:
        return RwaReport(lambda_ratio, worst, worst_phi, False,
                         f"lam/(2*sqrt(2)*t) = {lambda_ratio:.3g} < {safety:g}")
    return RwaReport(lambda_ratio, worst, worst_phi, True, "ok")
