import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harper_z2.errors import (DegeneracyError, GridRefinementError, InconsistencyError,
                              ParameterError)
from harper_z2.model import HoppingDisorder, LatticeParams, build_bloch_hamiltonian
from harper_z2.topology import (ChernReport, berry_field, chern_numbers, decay_profile,
                                dissipative_chern, plaquette_phases, twisted_chern, z2_index)

from oracles import diophantine_band_cherns, diophantine_gap_cherns


# -- independent oracles -------------------------------------------------------------


def naive_band_cherns(beta, lam, spin, n=24):
    """Single-band U(1) plaquette sum written out with explicit loops."""
    beta = Fraction(beta)
    q = beta.denominator
    ks = [2 * math.pi / q * i / n for i in range(n)]
    ps = [2 * math.pi * j / n for j in range(n)]
    vecs = [[np.linalg.eigh(build_bloch_hamiltonian(beta, lam, 1.0, k, ph, spin))[1]
             for ph in ps] for k in ks]
    out = []
    for b in range(q):
        total = 0.0
        for i in range(n):
            for j in range(n):
                u = [vecs[i][j][:, b], vecs[(i + 1) % n][j][:, b],
                     vecs[(i + 1) % n][(j + 1) % n][:, b], vecs[i][(j + 1) % n][:, b]]
                loop = 1.0 + 0j
                for a in range(4):
                    loop *= np.vdot(u[a], u[(a + 1) % 4])
                total += -np.angle(loop)
        out.append(int(round(total / (2 * math.pi))))
    return tuple(out)


# -- Bloch Chern numbers ------------------------------------------------------------------


@pytest.fixture(scope="module")
def third():
    return {s: chern_numbers("1/3", 15, 1, s) for s in ("up", "down")}


class TestBlochChern:
    def test_third_flux(self, third):
        assert third["up"].band_cherns == (1, -2, 1)
        assert third["down"].band_cherns == (-1, 2, -1)
        assert third["up"].gap_cherns == (1, -1)
        assert third["down"].gap_cherns == (-1, 1)
        assert third["up"].max_deviation < 1e-6
        assert third["up"].grid == (30, 30) and third["up"].gap_status == "open"
        assert third["up"].min_gap == pytest.approx(1.907, abs=1e-2)

    def test_berry_field_band_one(self):
        bf = berry_field("1/3", 15, 1, "up", [0])
        assert bf.total == pytest.approx(1.0, abs=1e-6)
        assert bf.chern == 1
        assert np.all(bf.phases > -np.pi) and np.all(bf.phases <= np.pi)
        assert bf.phases.shape == (30, 30)

    def test_multiband_group_matches_sum(self):
        bf = berry_field("1/3", 15, 1, "up", [0, 1])
        assert bf.chern == 1 - 2

    def test_free_band(self):
        bf = berry_field(1, 0.0, 1.0, "up", [0], n_k=8, n_phi=8)
        assert np.all(bf.phases == 0) and bf.total == 0

    def test_matches_naive_oracle(self):
        for beta in ("1/3", "2/5"):
            for spin in ("up", "down"):
                assert chern_numbers(beta, 15, 1, spin).band_cherns == \
                    naive_band_cherns(beta, 15, spin)

    @pytest.mark.parametrize("p,q", [(1, 3), (2, 3), (1, 5), (2, 5), (3, 5), (1, 7), (2, 7), (3, 7)])
    def test_diophantine(self, p, q):
        rep = chern_numbers(Fraction(p, q), 15, 1, "up")
        assert rep.band_cherns == diophantine_band_cherns(p, q)
        assert list(rep.gap_cherns) == diophantine_gap_cherns(p, q)

    def test_fifth_flux(self):
        assert chern_numbers("1/5", 15, 1, "up").band_cherns == (1, 1, -4, 1, 1)

    @pytest.mark.parametrize("beta", ["1/3", "1/5", "2/5"])
    def test_sum_zero_and_spin_flip(self, beta):
        up = chern_numbers(beta, 15, 1, "up")
        down = chern_numbers(beta, 15, 1, "down")
        assert sum(up.band_cherns) == 0
        assert down.band_cherns == tuple(-c for c in up.band_cherns)

    def test_grid_doubling(self, third):
        fine = chern_numbers("1/3", 15, 1, "up", n_k=60, n_phi=60)
        assert fine.band_cherns == third["up"].band_cherns
        assert fine.max_deviation < 1e-6

    def test_workers_identical(self, third):
        par = chern_numbers("1/3", 15, 1, "up", workers=3)
        assert par.raw == third["up"].raw

    def test_small_modulation_same_phase(self):
        # the gaps never close along lambda > 0 for q = 3
        assert chern_numbers("1/3", 1.0, 1, "up").band_cherns == (1, -2, 1)

    def test_touching_bands(self):
        with pytest.raises(DegeneracyError) as err:
            chern_numbers("1/3", 0.0, 1, "up")
        assert err.value.point is not None and "grid point" in str(err.value)

    def test_grid_too_small(self):
        with pytest.raises(ParameterError):
            chern_numbers("1/3", 15, 1, "up", n_k=5)

    def test_band_set_validation(self):
        with pytest.raises(ParameterError):
            berry_field("1/3", 15, 1, "up", [0, 2])
        with pytest.raises(ParameterError):
            berry_field("1/3", 15, 1, "up", [3])


# -- plaquette kernel ----------------------------------------------------------------------


def _frames(beta="1/3", n=12, bands=slice(0, 1)):
    q = Fraction(beta).denominator
    ks = 2 * np.pi / q * np.arange(n) / n
    ps = 2 * np.pi * np.arange(n) / n
    return np.array([[np.linalg.eigh(build_bloch_hamiltonian(beta, 15, 1, k, p))[1][:, bands]
                      for p in ps] for k in ks])


class TestPlaquettes:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_gauge_invariance(self, seed):
        V = _frames(bands=slice(0, 2))
        rng = np.random.default_rng(seed)
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, V.shape[:2] + (1, V.shape[-1])))
        F0 = plaquette_phases(V)
        F1 = plaquette_phases(V * phases)
        assert np.max(np.abs(F1 - F0)) < 1e-10

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_unitary_mixing_inside_group(self, seed):
        V = _frames(bands=slice(0, 2))
        rng = np.random.default_rng(seed)
        Z = rng.normal(size=V.shape[:2] + (2, 2)) + 1j * rng.normal(size=V.shape[:2] + (2, 2))
        Q, _ = np.linalg.qr(Z)
        F0 = plaquette_phases(V)
        F1 = plaquette_phases(V @ Q)
        assert np.max(np.abs(np.angle(np.exp(1j * (F1 - F0))))) < 1e-10

    def test_branch(self):
        F = plaquette_phases(_frames())
        assert np.all(F > -np.pi) and np.all(F <= np.pi)

    def test_singular_link(self):
        frames = np.zeros((6, 6, 2, 1), dtype=complex)
        frames[::2, :, 0, 0] = 1
        frames[1::2, :, 1, 0] = 1
        with pytest.raises(GridRefinementError):
            plaquette_phases(frames)


# -- Z2 -------------------------------------------------------------------------------


def _report(spin, cherns):
    return ChernReport(tuple(cherns), tuple(float(c) for c in cherns), spin, (30, 30))


class TestZ2:
    def test_third_flux(self, third):
        g1 = z2_index(third["up"], third["down"], 1)
        g2 = z2_index(third["up"], third["down"], 2)
        assert (g1.c_up, g1.c_down, g1.spin_chern, g1.nu) == (1, -1, 1, 1)
        assert (g2.c_up, g2.c_down, g2.spin_chern, g2.nu) == (-1, 1, -1, 1)

    def test_trivial(self):
        z = z2_index(_report("up", [0, 0, 0]), _report("down", [0, 0, 0]), 1)
        assert z.nu == 0 and z.spin_chern == 0

    def test_even_spin_chern_is_trivial(self):
        # spin Chern 2 keeps the raw difference but has nu = 0
        z = z2_index(_report("up", [2, -4, 2]), _report("down", [-2, 4, -2]), 1)
        assert z.difference == 4 and z.spin_chern == 2 and z.nu == 0

    def test_odd_difference(self):
        with pytest.raises(InconsistencyError):
            z2_index(_report("up", [1, -1, 0]), _report("down", [0, 0, 0]), 1)

    def test_argument_checks(self):
        up, down = _report("up", [1, -2, 1]), _report("down", [-1, 2, -1])
        with pytest.raises(ParameterError):
            z2_index(down, up, 1)
        with pytest.raises(ParameterError):
            z2_index(up, down, 3)
        with pytest.raises(ParameterError):
            z2_index(up, _report("down", [0, 0]), 1)


# -- twisted boundary -------------------------------------------------------------------


def ring(spin="up", **kw):
    return LatticeParams(30, "1/3", 15, boundary="twisted", spin=spin).with_(**kw)


class TestTwisted:
    def test_clean_matches_bloch(self, third):
        for spin in ("up", "down"):
            rep = twisted_chern(ring(spin))
            assert rep.band_cherns == third[spin].band_cherns
            assert rep.max_deviation < 1e-6

    @pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
    def test_weak_disorder(self, seed):
        rep = twisted_chern(ring(), HoppingDisorder(0.1, seed))
        assert rep.band_cherns == (1, -2, 1)
        assert rep.min_gap > 1.0

    def test_strong_disorder_keeps_quantization(self):
        # near-maximal disorder shrinks the gap a lot without closing it
        rep = twisted_chern(ring(), HoppingDisorder(0.99, 1))
        assert rep.band_cherns == (1, -2, 1)
        assert 0 < rep.min_gap < 0.5

    def test_degeneracy_reported(self):
        with pytest.raises(DegeneracyError) as err:
            twisted_chern(ring(lam=0.0))
        theta, phi = err.value.point
        assert theta == 0.0 and 0 <= phi < 2 * np.pi

    def test_subset_of_groups(self):
        assert twisted_chern(ring(), bands=[1]).band_cherns == (-2,)
        with pytest.raises(ParameterError):
            twisted_chern(ring(), bands=[3])

    def test_workers_identical(self):
        d = HoppingDisorder(0.1, 2)
        assert twisted_chern(ring(), d).raw == twisted_chern(ring(), d, workers=4).raw


# -- dissipation ------------------------------------------------------------------------


class TestDissipation:
    def test_profiles(self):
        assert decay_profile(3, 0.5) == pytest.approx([0.5, 0.5, 0.5])
        assert decay_profile(3, 2.0, [1, 0, 0.5]) == pytest.approx([2, 0, 1])
        with pytest.raises(ParameterError):
            decay_profile(3, 1.0, [1, 0])

    def test_zero_limit(self, third):
        rep = dissipative_chern("1/3", 15, 1, "up", decay_profile(3, 0.0))
        assert rep.band_cherns == third["up"].band_cherns

    def test_uniform_loss_keeps_touching_bands_degenerate(self):
        # a uniform shift leaves eigenvectors well conditioned, so only the
        # complex distance catches the coincidence
        with pytest.raises(DegeneracyError, match="coinciding eigenvalues"):
            dissipative_chern("1/3", 0.0, 1, "up", decay_profile(3, 1.0), n_k=10, n_phi=10)

    @pytest.mark.parametrize("kappa", [0.1, 1.0, 10.0])
    @pytest.mark.parametrize("spin", ["up", "down"])
    def test_uniform_shift(self, third, kappa, spin):
        rep = dissipative_chern("1/3", 15, 1, spin, decay_profile(3, kappa))
        assert rep.band_cherns == third[spin].band_cherns
        assert rep.max_deviation < 1e-6

    @pytest.mark.parametrize("kappa", [1.0, 5.0, 20.0])
    def test_staggered_scan(self, kappa):
        for bi in (False, True):
            rep = dissipative_chern("1/3", 15, 1, "up", decay_profile(3, kappa, [1, 0, 0]),
                                    biorthogonal=bi)
            assert rep.band_cherns == (1, -2, 1)

    def test_real_gap_narrows(self):
        rep = dissipative_chern("1/3", 15, 1, "up", decay_profile(3, 5.0, [1, 0, 0]))
        assert rep.min_gap < 1e-3

    def test_real_gap_closure_reported(self):
        rep = dissipative_chern("1/3", 15, 1, "up", decay_profile(3, 5.0, [1, 0, 0]),
                                real_gap_tol=1e-3)
        assert rep.gap_status.startswith("real-gap-closed at (")

    def test_exceptional_point_threshold(self):
        with pytest.raises(DegeneracyError, match="exceptional point") as err:
            dissipative_chern("1/3", 15, 1, "up", decay_profile(3, 1.0, [1, 0, 0]),
                              cond_max=1.0001)
        assert len(err.value.point) == 2

    def test_negative_decay(self):
        with pytest.raises(ParameterError):
            dissipative_chern("1/3", 15, 1, "up", [-1.0, 0, 0])
