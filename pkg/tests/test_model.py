import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harper_z2.errors import ParameterError, ShapeError
from harper_z2.model import (HoppingDisorder, LatticeParams, OptomechParams,
                             apply_mode_transform, as_flux, build_bloch_hamiltonian,
                             build_chain, build_coupled_pair, build_harper_chain,
                             build_twisted_ring, coupled_pair_from_optomech,
                             hermiticity_residual, mode_transform_matrix, modulation_profile,
                             onsite_energies, optomech_from_lattice, site_arrays)

FLUXES = st.sampled_from(["1/2", "1/3", "2/3", "1/4", "3/4", "1/5", "2/5", "3/7"])


def fig4(**kw):
    base = dict(N=80, beta="1/3", lam=15.0, t=1.0)
    base.update(kw)
    return LatticeParams(**base)


# -- parameters -----------------------------------------------------------------


class TestParams:
    def test_flux_forms(self):
        assert as_flux("2/6") == Fraction(1, 3)
        assert as_flux((2, 5)) == Fraction(2, 5)
        assert as_flux(Fraction(1, 3)) == Fraction(1, 3)
        assert as_flux(1) == Fraction(1)

    @pytest.mark.parametrize("bad", [(2, 4), (1, 0), "x/y", 0.3, True, (1, 2, 3)])
    def test_flux_rejects(self, bad):
        with pytest.raises(ParameterError):
            as_flux(bad)

    @pytest.mark.parametrize("kw", [dict(t=0.0), dict(t=-1.0), dict(lam=-0.1), dict(N=0),
                                    dict(spin="sideways"), dict(boundary="mobius"),
                                    dict(N=31, boundary="periodic")])
    def test_invalid(self, kw):
        with pytest.raises(ParameterError):
            fig4(**kw)

    def test_open_chain_any_length(self):
        assert fig4(N=31).N == 31

    def test_frozen(self):
        p = fig4()
        with pytest.raises(AttributeError):
            p.N = 3
        assert p.with_(phi=1.0).phi == 1.0 and p.phi == 0.0


# -- site modulation ------------------------------------------------------------


class TestModulation:
    def test_phi_zero_has_no_coupling(self):
        p = fig4(phi=0.0)
        for n in (1, 2, 3, 17):
            s = modulation_profile(p, n)
            assert s.g_n == 0.0
            assert s.omega_a_site == pytest.approx(15 * math.cos(2 * math.pi * n / 3), abs=1e-12)
            assert s.omega_a_site == s.omega_b_site

    def test_quarter_period_site_one(self):
        s = modulation_profile(fig4(phi=math.pi / 2), 1)
        assert s.delta_n == pytest.approx(0.0, abs=1e-12)
        assert s.g_n == pytest.approx(12.990381056766578, abs=1e-9)
        assert s.omega_a_site == pytest.approx(-12.990381056766578, abs=1e-9)

    @pytest.mark.parametrize("n", [0, 81, -1])
    def test_out_of_range(self, n):
        with pytest.raises(IndexError):
            modulation_profile(fig4(), n)

    @settings(max_examples=60, deadline=None)
    @given(beta=FLUXES, lam=st.floats(0, 40), phi=st.floats(0, 2 * math.pi),
           n=st.integers(1, 60))
    def test_closed_forms(self, beta, lam, phi, n):
        p = LatticeParams(60, beta, lam, phi=phi)
        s = modulation_profile(p, n)
        arg = 2 * math.pi * float(as_flux(beta)) * n
        assert abs(s.omega_a_site - lam * math.cos(arg + phi)) < 1e-12 * max(1, lam)
        assert abs(s.omega_b_site - lam * math.cos(arg - phi)) < 1e-12 * max(1, lam)
        assert s.omega_a_site + s.omega_b_site == pytest.approx(-2 * s.delta_n, abs=1e-12 * max(1, lam))
        assert s.omega_b_site - s.omega_a_site == pytest.approx(2 * s.g_n, abs=1e-12 * max(1, lam))

    def test_arrays_match_profile(self):
        p = fig4(phi=0.37)
        d, g, wa, wb = site_arrays(p)
        for n in (1, 5, 80):
            s = modulation_profile(p, n)
            assert (d[n - 1], g[n - 1], wa[n - 1], wb[n - 1]) == pytest.approx(
                (s.delta_n, s.g_n, s.omega_a_site, s.omega_b_site), abs=1e-12)
        assert wa == pytest.approx(onsite_energies(p, "up"), abs=1e-12)
        assert wb == pytest.approx(onsite_energies(p, "down"), abs=1e-12)


# -- chains -------------------------------------------------------------------------


class TestHarperChain:
    def test_dimer(self):
        H = build_harper_chain(LatticeParams(2, "1/3", 0.0, t=1.5))
        assert np.linalg.eigvalsh(H) == pytest.approx([-1.5, 1.5])

    def test_too_short(self):
        with pytest.raises(ParameterError):
            build_harper_chain(LatticeParams(1, "1/3", 1.0))

    def test_structure(self):
        H = build_harper_chain(fig4(phi=0.5 * math.pi))
        assert H.shape == (80, 80)
        assert H[2, 2].real == pytest.approx(0.0, abs=1e-12)
        assert np.all(np.diag(H, 1) == 1.0) and np.all(np.diag(H, -1) == 1.0)
        off = H - np.diag(np.diag(H)) - np.diag(np.diag(H, 1), 1) - np.diag(np.diag(H, -1), -1)
        assert not off.any()

    @pytest.mark.parametrize("phi", [0.0, 0.3, 1.7, 4.0])
    def test_half_flux_spins_identical(self, phi):
        up = build_harper_chain(LatticeParams(80, "1/2", 15, phi=phi, spin="up"))
        down = build_harper_chain(LatticeParams(80, "1/2", 15, phi=phi, spin="down"))
        assert np.max(np.abs(up - down)) < 1e-12

    @settings(max_examples=30, deadline=None)
    @given(beta=FLUXES, phi=st.floats(0, 2 * math.pi))
    def test_time_reversal_pairing(self, beta, phi):
        up = build_harper_chain(LatticeParams(40, beta, 7.0, phi=phi, spin="up"))
        down = build_harper_chain(LatticeParams(40, beta, 7.0, phi=-phi, spin="down"))
        assert np.max(np.abs(up - down)) < 1e-12

    def test_hermitian(self):
        assert hermiticity_residual(build_harper_chain(fig4(phi=1.1))) < 1e-12


class TestBloch:
    def test_free_band(self):
        for k in np.linspace(0, 2 * np.pi, 7):
            H = build_bloch_hamiltonian(1, 0.0, 1.0, k, 0.3)
            assert H.shape == (1, 1)
            assert H[0, 0].real == pytest.approx(2 * math.cos(k))

    def test_q1_value(self):
        H = build_bloch_hamiltonian(1, 2.0, 1.0, 0.4, 0.9, spin="down")
        assert H[0, 0].real == pytest.approx(2 * math.cos(-0.9) + 2 * math.cos(0.4))

    def test_q2_corner_adds(self):
        k = 0.7
        H = build_bloch_hamiltonian("1/2", 0.0, 1.0, k, 0.0)
        assert H[0, 1] == pytest.approx(1 + np.exp(-2j * k))
        E = np.linalg.eigvalsh(H)
        assert sorted(E) == pytest.approx(sorted([2 * math.cos(k), -2 * math.cos(k)]))

    def test_noncoprime(self):
        with pytest.raises(ParameterError):
            build_bloch_hamiltonian((2, 6), 1.0, 1.0, 0.0, 0.0)

    @settings(max_examples=40, deadline=None)
    @given(k=st.floats(0, 2 * math.pi / 3), phi=st.floats(0, 2 * math.pi),
           spin=st.sampled_from(["up", "down"]))
    def test_hermitian_and_periodic(self, k, phi, spin):
        H = build_bloch_hamiltonian("1/3", 15, 1, k, phi, spin)
        assert hermiticity_residual(H) < 1e-12
        E = np.linalg.eigvalsh(H)
        assert np.linalg.eigvalsh(build_bloch_hamiltonian("1/3", 15, 1, k, phi + 2 * np.pi, spin)) \
            == pytest.approx(E, abs=1e-12)
        assert np.linalg.eigvalsh(build_bloch_hamiltonian("1/3", 15, 1, k + 2 * np.pi / 3, phi, spin)) \
            == pytest.approx(E, abs=1e-12)

    def test_bulk_matches_open_chain(self):
        # bands from the magnetic Bloch matrix vs a long open chain
        phi = 0.4
        ks = np.linspace(0, 2 * np.pi / 3, 64, endpoint=False)
        bloch = np.array([np.linalg.eigvalsh(build_bloch_hamiltonian("1/3", 15, 1, k, phi))
                          for k in ks])
        E = np.linalg.eigvalsh(build_harper_chain(LatticeParams(240, "1/3", 15, phi=phi)))
        # open-chain standing waves stop short of the band edge by O(1/N^2)
        assert E.min() - 1e-4 <= bloch.min() and bloch.max() <= E.max() + 1e-4
        lo, hi = bloch.min(axis=0), bloch.max(axis=0)
        in_band = np.any((E[:, None] >= lo - 1e-2) & (E[:, None] <= hi + 1e-2), axis=1)
        # at most one edge branch per gap and edge
        assert np.count_nonzero(~in_band) <= 4

    def test_ring_spectrum_is_bloch_union(self):
        # a periodic N-site ring samples the Bloch bands at k = 2 pi j / N
        N, phi = 30, 1.3
        ring = np.linalg.eigvalsh(build_chain(LatticeParams(N, "1/3", 15, phi=phi,
                                                            boundary="periodic")))
        ks = 2 * np.pi * np.arange(N // 3) / N
        bloch = np.sort(np.concatenate([np.linalg.eigvalsh(
            build_bloch_hamiltonian("1/3", 15, 1, k, phi)) for k in ks]))
        assert ring == pytest.approx(bloch, abs=1e-10)


class TestTwistedRing:
    def test_periodic_is_chain_plus_corner(self):
        p = LatticeParams(30, "1/3", 15, phi=0.8, boundary="periodic")
        H = build_twisted_ring(p)
        H0 = build_harper_chain(p.with_(boundary="open"))
        H0[0, -1] += 1.0
        H0[-1, 0] += 1.0
        assert np.array_equal(H, H0)

    def test_large_gauge(self):
        p = LatticeParams(30, "1/3", 15, phi=0.8, boundary="twisted", theta=0.0)
        d = HoppingDisorder(0.1, seed=3)
        E0 = np.linalg.eigvalsh(build_twisted_ring(p, d))
        E1 = np.linalg.eigvalsh(build_twisted_ring(p.with_(theta=2 * np.pi), d))
        assert E0 == pytest.approx(E1, abs=1e-10)

    def test_twist_enters_closing_bond(self):
        p = LatticeParams(6, "1/3", 1, boundary="twisted", theta=0.9)
        H = build_twisted_ring(p)
        assert H[5, 0] == pytest.approx(np.exp(0.9j))
        assert hermiticity_residual(H) < 1e-12

    def test_open_rejected(self):
        with pytest.raises(ParameterError):
            build_twisted_ring(fig4())

    def test_disorder_reproducible(self):
        a = HoppingDisorder(0.3, seed=7).hoppings(30, 2.0)
        b = HoppingDisorder(0.3, seed=7).hoppings(30, 2.0)
        assert np.array_equal(a, b)
        assert np.all(np.abs(a / 2.0 - 1) <= 0.3)
        assert not np.array_equal(a, HoppingDisorder(0.3, seed=8).hoppings(30, 2.0))

    @pytest.mark.parametrize("delta", [1.0, -1.0, 1.5])
    def test_disorder_range(self, delta):
        with pytest.raises(ParameterError):
            HoppingDisorder(delta)

    def test_disordered_open_chain(self):
        p = LatticeParams(12, "1/3", 3)
        d = HoppingDisorder(0.2, seed=1)
        H = build_chain(p, d)
        assert np.diag(H, 1).real == pytest.approx(d.hoppings(12, 1.0)[:-1])


# -- coupled array and mode transform ----------------------------------------------------


class TestCoupledPair:
    def test_single_cell(self):
        p = LatticeParams(1, "1/3", 15, phi=0.9)
        s = modulation_profile(p, 1)
        E = np.linalg.eigvalsh(build_coupled_pair(p))
        assert sorted(E) == pytest.approx(sorted([-s.delta_n + s.g_n, -s.delta_n - s.g_n]), abs=1e-12)

    def test_layout(self):
        p = fig4(N=6, phi=0.7 * np.pi)
        H = build_coupled_pair(p)
        d, g, _, _ = site_arrays(p)
        assert np.diag(H)[0::2].real == pytest.approx(-d)
        assert np.diag(H)[1::2].real == pytest.approx(-d)
        assert H[0, 1].real == pytest.approx(-g[0])
        assert H[0, 2] == 2.0 and H[1, 3] == 0.0
        assert hermiticity_residual(H) < 1e-12

    def test_dissipation(self):
        p = fig4(N=10, phi=0.7 * np.pi)
        H = build_coupled_pair(p, dissipation=True, kappa=0.1, gamma=0.1)
        anti = (H - H.conj().T) / 2
        assert anti == pytest.approx(-0.05j * np.eye(20), abs=1e-15)

    def test_unequal_decay_couples_spins(self):
        p = fig4(N=4, phi=0.7 * np.pi, lam=0.0)
        H = build_coupled_pair(p, dissipation=True, kappa=0.3, gamma=0.1)
        _, _, H_AB = apply_mode_transform(H)
        assert np.diag(H_AB) == pytest.approx(np.full(4, 1j * (0.1 - 0.3) / 4))

    def test_optomech_inputs(self):
        p = fig4(N=9, phi=1.1)
        opt = optomech_from_lattice(p, g=0.5, omega_p=3.0)
        d, g, _, _ = site_arrays(p)
        assert opt.detuning == pytest.approx(d)
        assert opt.coupling == pytest.approx(g)
        assert opt.red_detuning_mismatch() == pytest.approx(0.0, abs=1e-12)
        assert np.all(opt.J == 2.0)

    def test_optomech_validation(self):
        ok = dict(omega_a=[1, 2], omega_b=[1, 1], omega_p=[0, 0], g=[1, 1], alpha=[1, 1], J=1.0)
        OptomechParams(**ok)
        with pytest.raises(ParameterError):
            OptomechParams(**{**ok, "alpha": [1 + 1j, 1]})
        with pytest.raises(ParameterError):
            OptomechParams(**{**ok, "J": -1.0})
        with pytest.raises(ParameterError):
            OptomechParams(**{**ok, "g": [1, 1, 1]})
        with pytest.raises(ParameterError):
            OptomechParams(**{**ok, "kappa": -0.1})

    def test_ring_closure(self):
        p = LatticeParams(6, "1/3", 4.0, phi=0.3, boundary="twisted", theta=0.5)
        H = build_coupled_pair(p)
        assert H[10, 0] == pytest.approx(2 * np.exp(0.5j))
        opt = optomech_from_lattice(p)
        assert np.array_equal(coupled_pair_from_optomech(opt, theta=0.5), H)


class TestModeTransform:
    def test_orthogonal(self):
        U = mode_transform_matrix(7)
        assert np.max(np.abs(U @ U.T - np.eye(14))) < 1e-12

    def test_no_hopping_decouples(self):
        p = fig4(N=12, phi=0.7 * np.pi)
        H = build_coupled_pair(p)
        a = 2 * np.arange(12)
        H[a[:-1], a[1:]] = 0
        H[a[1:], a[:-1]] = 0
        H_AA, H_BB, H_AB = apply_mode_transform(H)
        d, g, _, _ = site_arrays(p)
        assert not H_AB.any()
        assert np.diag(H_AA).real == pytest.approx(-d - g, abs=1e-12)
        assert np.diag(H_BB).real == pytest.approx(-d + g, abs=1e-12)

    def test_matches_explicit_rotation(self):
        H = build_coupled_pair(fig4(N=9, phi=1.3), dissipation=True, kappa=0.2, gamma=0.05)
        U = mode_transform_matrix(9)
        R = U.T @ H @ U
        H_AA, H_BB, H_AB = apply_mode_transform(H)
        assert np.max(np.abs(R - np.block([[H_AA, H_AB], [R[9:, :9], H_BB]]))) < 1e-12

    def test_blocks_are_chains(self):
        p = fig4(phi=0.7 * np.pi)
        H_AA, H_BB, H_AB = apply_mode_transform(build_coupled_pair(p))
        assert np.max(np.abs(H_AB)) == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(H_AA - build_harper_chain(p))) < 1e-12
        assert np.max(np.abs(H_BB - build_harper_chain(p.with_(spin="down")))) < 1e-12
        # the cross block only lives on nearest-neighbour bonds
        assert not np.any(np.triu(H_AB, 2)) and not np.any(np.tril(H_AB, -2))
        assert np.max(np.abs(np.diag(H_AB))) < 1e-12

    def test_spectrum_preserved(self):
        H = build_coupled_pair(fig4(N=20, phi=0.7 * np.pi))
        H_AA, H_BB, H_AB = apply_mode_transform(H)
        R = np.block([[H_AA, H_AB], [H_AB.conj().T, H_BB]])
        assert np.linalg.eigvalsh(R) == pytest.approx(np.linalg.eigvalsh(H), abs=1e-10)

    @pytest.mark.parametrize("shape", [(3, 3), (4, 2), (5,)])
    def test_shape_errors(self, shape):
        with pytest.raises(ShapeError):
            apply_mode_transform(np.zeros(shape))
