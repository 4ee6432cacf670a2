"""Hamiltonian builders.

Everything here is a pure function of its inputs.  Sites are numbered
``n = 1..N`` and the modulation phase is ``2*pi*beta*n``, so the first
array row is site 1.  Matrices are dense ``complex128`` arrays.

The two effective chains are labelled by spin: ``"up"`` is the
``A_n = (a_n + b_n)/sqrt(2)`` chain with on-site energy
``lam*cos(2*pi*beta*n + phi)``; ``"down"`` is the ``B_n`` chain with
``lam*cos(2*pi*beta*n - phi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Tuple, Union

import numpy as np

from .errors import ParameterError, ShapeError

SPINS = ("up", "down")
BOUNDARIES = ("open", "periodic", "twisted")

FluxLike = Union[Fraction, int, str, Tuple[int, int]]


def as_flux(beta: FluxLike) -> Fraction:
    """Normalise a rational flux given as Fraction, int, ``"p/q"`` or ``(p, q)``.

    A tuple is taken literally, so a non-coprime pair is rejected rather
    than silently reduced.
    """
    if isinstance(beta, Fraction):
        return beta
    if isinstance(beta, bool):
        raise ParameterError(f"flux must be rational, got {beta!r}")
    if isinstance(beta, int):
        return Fraction(beta)
    if isinstance(beta, tuple):
        if len(beta) != 2:
            raise ParameterError(f"flux tuple must be (p, q), got {beta!r}")
        p, q = (int(v) for v in beta)
        if q < 1:
            raise ParameterError(f"flux denominator must be >= 1, got {q}")
        if math.gcd(p, q) != 1:
            raise ParameterError(f"p={p} and q={q} are not coprime")
        return Fraction(p, q)
    if isinstance(beta, str):
        try:
            return Fraction(beta.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParameterError(f"cannot parse flux {beta!r}") from exc
    raise ParameterError(f"flux must be rational p/q, got {type(beta).__name__}")


def spin_sign(spin: str) -> int:
    if spin == "up":
        return 1
    if spin == "down":
        return -1
    raise ParameterError(f"spin must be 'up' or 'down', got {spin!r}")


def _phase(beta: Fraction, n) -> np.ndarray:
    # reduce p*n mod q before scaling so 2*pi*beta*n stays exact on the lattice
    n = np.asarray(n)
    return 2.0 * np.pi * ((beta.numerator * n) % beta.denominator) / beta.denominator


@dataclass(frozen=True)
class LatticeParams:
    """Parameters of one generalized Harper chain.

    ``lam`` is the modulation strength, ``t`` the hopping (energy unit),
    ``phi`` the synthetic momentum and ``theta`` the twist angle used when
    ``boundary == "twisted"``.
    """

    N: int
    beta: FluxLike
    lam: float
    t: float = 1.0
    phi: float = 0.0
    boundary: str = "open"
    theta: float = 0.0
    spin: str = "up"

    def __post_init__(self):
        object.__setattr__(self, "beta", as_flux(self.beta))
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if not self.t > 0:
            raise ParameterError(f"hopping t must be positive, got {self.t}")
        if not self.lam >= 0:
            raise ParameterError(f"modulation lambda must be >= 0, got {self.lam}")
        if self.boundary not in BOUNDARIES:
            raise ParameterError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        spin_sign(self.spin)
        if self.boundary != "open" and self.N % self.q:
            raise ParameterError(
                f"N={self.N} must be a multiple of q={self.q} for a {self.boundary} ring"
            )

    @property
    def p(self) -> int:
        return self.beta.numerator

    @property
    def q(self) -> int:
        return self.beta.denominator

    def with_(self, **changes) -> "LatticeParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class SiteModulation:
    n: int
    delta_n: float
    g_n: float
    omega_a_site: float
    omega_b_site: float


def site_arrays(params: LatticeParams):
    """Detuning, effective coupling and the two chain energies for n = 1..N."""
    n = np.arange(1, params.N + 1)
    ph = _phase(params.beta, n)
    delta = -params.lam * np.cos(ph) * math.cos(params.phi)
    g = params.lam * np.sin(ph) * math.sin(params.phi)
    return delta, g, -delta - g, -delta + g


def modulation_profile(params: LatticeParams, n: int) -> SiteModulation:
    if not 1 <= n <= params.N:
        raise IndexError(f"site index {n} outside 1..{params.N}")
    ph = float(_phase(params.beta, n))
    delta = -params.lam * math.cos(ph) * math.cos(params.phi)
    g = params.lam * math.sin(ph) * math.sin(params.phi)
    return SiteModulation(n, delta, g, -delta - g, -delta + g)


def onsite_energies(params: LatticeParams, spin: Optional[str] = None) -> np.ndarray:
    """``lam*cos(2*pi*beta*n +/- phi)`` for the chosen spin (defaults to params.spin)."""
    s = spin_sign(spin or params.spin)
    n = np.arange(1, params.N + 1)
    return params.lam * np.cos(_phase(params.beta, n) + s * params.phi)


def hermiticity_residual(H: np.ndarray) -> float:
    H = np.asarray(H)
    return float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0


def build_harper_chain(params: LatticeParams) -> np.ndarray:
    """Open N-site chain with modulated on-site energies and uniform hopping t."""
    if params.N < 2:
        raise ParameterError(f"open chain needs N >= 2, got {params.N}")
    N = params.N
    H = np.zeros((N, N), dtype=complex)
    H[np.diag_indices(N)] = onsite_energies(params)
    idx = np.arange(N - 1)
    H[idx, idx + 1] = params.t
    H[idx + 1, idx] = params.t
    return H


def build_bloch_hamiltonian(beta: FluxLike, lam: float, t: float, kx: float,
                            phi: float, spin: str = "up") -> np.ndarray:
    """q x q magnetic Bloch matrix; ``kx`` lives in the reduced zone [0, 2*pi/q)."""
    beta = as_flux(beta)
    q = beta.denominator
    s = spin_sign(spin)
    m = np.arange(1, q + 1)
    diag = lam * np.cos(_phase(beta, m) + s * phi)
    if q == 1:
        return np.array([[diag[0] + 2.0 * t * math.cos(kx)]], dtype=complex)
    H = np.zeros((q, q), dtype=complex)
    H[np.diag_indices(q)] = diag
    idx = np.arange(q - 1)
    H[idx, idx + 1] = t
    H[idx + 1, idx] = t
    # for q == 2 the corner bond lands on the same entries and adds up
    corner = t * np.exp(1j * q * kx)
    H[q - 1, 0] += corner
    H[0, q - 1] += np.conj(corner)
    return H


@dataclass(frozen=True)
class HoppingDisorder:
    """Multiplicative bond disorder ``t_n = t*(1 + delta*u_n)``, ``u_n ~ U[-1, 1]``."""

    delta: float = 0.0
    seed: Optional[int] = None

    def __post_init__(self):
        if not abs(self.delta) < 1.0:
            raise ParameterError(f"|delta| must be < 1 (no hopping sign flips), got {self.delta}")

    def hoppings(self, N: int, t: float) -> np.ndarray:
        if self.delta == 0.0:
            return np.full(N, float(t))
        u = np.random.default_rng(self.seed).uniform(-1.0, 1.0, N)
        return t * (1.0 + self.delta * u)


def build_twisted_ring(params: LatticeParams,
                       disorder: Optional[HoppingDisorder] = None) -> np.ndarray:
    """N-site ring; the bond from site N back to site 1 carries ``exp(i*theta)``.

    ``boundary="periodic"`` is the ``theta = 0`` case.  Bond ``n -> n+1`` uses
    the n-th disorder draw and the closing bond uses the N-th.
    """
    if params.boundary == "open":
        raise ParameterError("build_twisted_ring needs boundary 'periodic' or 'twisted'")
    N = params.N
    theta = params.theta if params.boundary == "twisted" else 0.0
    bonds = (disorder or HoppingDisorder()).hoppings(N, params.t)
    H = np.zeros((N, N), dtype=complex)
    H[np.diag_indices(N)] = onsite_energies(params)
    idx = np.arange(N - 1)
    H[idx, idx + 1] += bonds[:-1]
    H[idx + 1, idx] += bonds[:-1]
    closing = bonds[-1] * np.exp(1j * theta)
    H[N - 1, 0] += closing
    H[0, N - 1] += np.conj(closing)
    return H


def build_chain(params: LatticeParams, disorder: Optional[HoppingDisorder] = None) -> np.ndarray:
    """Dispatch on ``params.boundary``."""
    if params.boundary == "open":
        if disorder is not None and disorder.delta:
            N = params.N
            H = build_harper_chain(params)
            bonds = disorder.hoppings(N, params.t)[:-1]
            idx = np.arange(N - 1)
            H[idx, idx + 1] = bonds
            H[idx + 1, idx] = bonds
            return H
        return build_harper_chain(params)
    return build_twisted_ring(params, disorder)


# -- optomechanical array ------------------------------------------------------


@dataclass(frozen=True)
class OptomechParams:
    """Per-site optomechanical inputs of the linearized array.

    ``alpha`` is the steady-state cavity amplitude; it is supplied, not
    solved for.  Only real amplitudes are accepted because the sign of
    ``G_n = g_n*alpha_n`` carries the modulation.
    """

    omega_a: np.ndarray
    omega_b: np.ndarray
    omega_p: np.ndarray
    g: np.ndarray
    alpha: np.ndarray
    J: np.ndarray
    kappa: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        arrays = {}
        for name in ("omega_a", "omega_b", "omega_p", "g", "alpha"):
            arrays[name] = np.atleast_1d(np.asarray(getattr(self, name)))
        N = arrays["omega_a"].size
        for name, a in arrays.items():
            if a.size != N:
                raise ParameterError(f"{name} has {a.size} entries, expected {N}")
        alpha = arrays["alpha"]
        if np.iscomplexobj(alpha):
            if np.max(np.abs(alpha.imag), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(alpha))):
                raise ParameterError("complex alpha_n needs a gauge choice for b_n; pass real amplitudes")
            arrays["alpha"] = alpha.real
        J = np.atleast_1d(np.asarray(self.J, dtype=float))
        if J.size == 1:
            J = np.full(max(N - 1, 0), float(J[0]))
        if J.size not in (N - 1, N):
            raise ParameterError(f"J needs N-1 bonds (or N for a ring), got {J.size}")
        if np.any(J <= 0):
            raise ParameterError("inter-cavity hopping J_n must be positive")
        for name, a in arrays.items():
            object.__setattr__(self, name, a.astype(float))
        object.__setattr__(self, "J", J)
        if self.kappa < 0 or self.gamma < 0:
            raise ParameterError("decay rates must be non-negative")

    @property
    def N(self) -> int:
        return self.omega_a.size

    @property
    def detuning(self) -> np.ndarray:
        """Delta_n with ``-Delta_n = omega_a - omega_p``."""
        return self.omega_p - self.omega_a

    @property
    def coupling(self) -> np.ndarray:
        """Effective coupling G_n = g_n * alpha_n."""
        return self.g * self.alpha

    def red_detuning_mismatch(self) -> float:
        """max |(-Delta_n) - omega_b^n|; zero on exact red-sideband resonance."""
        return float(np.max(np.abs(-self.detuning - self.omega_b)))


def optomech_from_lattice(params: LatticeParams, g: float = 1.0, omega_p: float = 0.0,
                          kappa: float = 0.0, gamma: float = 0.0) -> OptomechParams:
    """Optomechanical inputs that realise the Harper modulation with J_n = 2t."""
    delta, G, _, _ = site_arrays(params)
    N = params.N
    bonds = N if params.boundary != "open" else N - 1
    return OptomechParams(
        omega_a=omega_p - delta,
        omega_b=-delta,
        omega_p=np.full(N, float(omega_p)),
        g=np.full(N, float(g)),
        alpha=G / g,
        J=np.full(bonds, 2.0 * params.t),
        kappa=kappa,
        gamma=gamma,
    )


def coupled_pair_from_optomech(opt: OptomechParams, dissipation: bool = False,
                               theta: Optional[float] = None) -> np.ndarray:
    """2N x 2N red-detuned beam-splitter matrix, basis (a_1, b_1, a_2, b_2, ...).

    Both modes of a cell sit at ``-Delta_n`` (red-sideband resonance), the
    pair is coupled by ``-G_n`` and cavities hop with ``J_n``.  A ring is
    closed when ``opt.J`` has N entries; ``theta`` twists the closing bond.
    """
    N = opt.N
    H = np.zeros((2 * N, 2 * N), dtype=complex)
    a = 2 * np.arange(N)
    b = a + 1
    onsite = -opt.detuning
    H[a, a] = onsite
    H[b, b] = onsite
    H[a, b] = -opt.coupling
    H[b, a] = -opt.coupling
    H[a[:-1], a[1:]] = opt.J[: N - 1]
    H[a[1:], a[:-1]] = opt.J[: N - 1]
    if opt.J.size == N and N > 1:
        closing = opt.J[-1] * np.exp(1j * (theta or 0.0))
        H[a[-1], a[0]] += closing
        H[a[0], a[-1]] += np.conj(closing)
    if dissipation:
        H[a, a] += -0.5j * opt.kappa
        H[b, b] += -0.5j * opt.gamma
    return H


def build_coupled_pair(params: LatticeParams, dissipation: bool = False,
                       kappa: float = 0.0, gamma: float = 0.0) -> np.ndarray:
    """Coupled photon-phonon chain whose modulation is set by ``params``.

    With ``dissipation=True`` the cavities get ``-i*kappa/2`` and the
    oscillators ``-i*gamma/2`` on the diagonal.
    """
    opt = optomech_from_lattice(params, kappa=kappa, gamma=gamma)
    theta = params.theta if params.boundary == "twisted" else None
    return coupled_pair_from_optomech(opt, dissipation=dissipation, theta=theta)


def mode_transform_matrix(N: int) -> np.ndarray:
    """Orthogonal U with columns (A_1..A_N, B_1..B_N) in the interleaved basis."""
    U = np.zeros((2 * N, 2 * N))
    r = 1.0 / math.sqrt(2.0)
    a = 2 * np.arange(N)
    cols = np.arange(N)
    U[a, cols] = r
    U[a + 1, cols] = r
    U[a, N + cols] = r
    U[a + 1, N + cols] = -r
    return U


def apply_mode_transform(H: np.ndarray):
    """Rotate an interleaved 2N matrix into the (A, B) basis.

    Returns ``(H_AA, H_BB, H_AB)``; the full rotated matrix is
    ``[[H_AA, H_AB], [H_BA, H_BB]]``.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {H.shape}")
    if H.shape[0] % 2:
        raise ShapeError(f"dimension {H.shape[0]} is odd; expected interleaved (a, b) pairs")
    # same as U.T @ H @ U, written with block sums so exact cancellations stay exact
    aa, ab = H[0::2, 0::2], H[0::2, 1::2]
    ba, bb = H[1::2, 0::2], H[1::2, 1::2]
    H_AA = ((aa + bb) + (ab + ba)) / 2
    H_BB = ((aa + bb) - (ab + ba)) / 2
    H_AB = ((aa - bb) + (ba - ab)) / 2
    return H_AA, H_BB, H_AB
