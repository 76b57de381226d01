"""Operator assembly: oracle, reduced formulas, diagonal path, averaging."""

import io
import math

import numpy as np
import pytest

from toepblocks import (
    Partition,
    QuadratureSpec,
    assemble_diagonal,
    average_operator,
    constant_symbol,
    dim_P,
    enumerate_basis,
    enumerate_kappas,
    gamma_quasi_radial,
    haar_uk_sample,
    mblock_f,
    monomial_norm_sq,
    noncommuting_pair,
    operator_from_json,
    operator_to_json,
    phi_factor,
    pseudo_factor,
    radial_poly,
    sphere_monomial_integral,
    substream,
    toeplitz_block_f,
    toeplitz_block_g,
    toeplitz_block_oracle,
    toeplitz_operator,
    unitary_action_matrix,
    xi_monomial,
)
from toepblocks.quad import SIGMA_BAND
from toepblocks.toeplitz import block_to_csv, load_operator, save_operator

P22 = Partition((2, 2))
P12 = Partition((1, 2))
FAST = QuadratureSpec(ball_samples=40_000, radial_nodes=16, sphere_nodes=16,
                      torus_nodes=10)


def sigma_close(G, SE, target, band=SIGMA_BAND):
    return np.all(np.abs(G - target) <= band * np.maximum(SE, 1e-300))


class TestMonomialNorms:
    def test_values(self):
        assert monomial_norm_sq(1, 0.0, (0,)) == pytest.approx(1.0)
        assert monomial_norm_sq(1, 0.0, (2,)) == pytest.approx(1 / 3)
        assert monomial_norm_sq(2, 0.0, (1, 0)) == pytest.approx(1 / 3)

    def test_oracle_orthonormality(self):
        # a == 1 gives the identity within the sampling band
        a = constant_symbol(P12)
        rng = substream(0, "orth")
        G, SE = toeplitz_block_oracle(a, (1, 1), 0.0, FAST, rng)
        assert sigma_close(G, SE, np.eye(2))


class TestOraclePath:
    def test_radial_scalar_on_disk(self):
        # n = 1, lam = 0, a = |z|^2: scalar (kap+1)/(kap+2) on each slice
        p = Partition((1,))
        a = radial_poly(p, [(1.0, (1,))])
        rng = substream(0, "disk")
        for kap in (0, 1, 3):
            G, SE = toeplitz_block_oracle(a, (kap,), 0.0, FAST, rng)
            assert sigma_close(G, SE, (kap + 1) / (kap + 2))

    def test_hermitian_for_real_symbol(self):
        a = phi_factor(P22, 1, (1, 1), (1, 1))  # |xi1 xi2|^2 is real
        rng = substream(0, "herm")
        G, SE = toeplitz_block_oracle(a, (1, 1), 0.0, FAST, rng)
        assert np.max(np.abs(G - G.conj().T)) <= 2 * SIGMA_BAND * np.max(SE)

    def test_positive_symbol_gives_psd_block(self):
        a = phi_factor(P22, 1, (1, 1), (1, 1))
        rng = substream(0, "psd")
        G, _ = toeplitz_block_oracle(a, (2, 1), 0.0, FAST, rng)
        w = np.linalg.eigvalsh((G + G.conj().T) / 2)
        assert w.min() > -1e-3


class TestReducedFormulas:
    @pytest.mark.parametrize("kappa", [(0, 0), (1, 1), (2, 1)])
    def test_f_identity(self, kappa):
        a = phi_factor(P22, 1, (0, 0), (0, 0))  # f == 1 through the phi family
        B = toeplitz_block_f(a, 1, kappa, 0.0, FAST)
        assert np.max(np.abs(B - np.eye(B.shape[0]))) < 1e-8

    @pytest.mark.parametrize("kappa", [(1, 1), (0, 2)])
    def test_g_identity(self, kappa):
        a = pseudo_factor(P22, 2, (0, 0), (0, 0))
        B = toeplitz_block_g(a, 2, kappa, 2.5, FAST)
        assert np.max(np.abs(B - np.eye(B.shape[0]))) < 1e-8

    def test_single_block_entries_against_sphere_oracle(self):
        # m=1: the full block IS the single-block matrix; check one entry
        # against the exact sphere moments and the radial Beta integral
        p = Partition((2,))
        a = phi_factor(p, 1, (1, 0), (0, 1))
        spec = QuadratureSpec(radial_nodes=20, sphere_nodes=20, torus_nodes=10)
        B = toeplitz_block_f(a, 1, (1,), 0.0, spec)
        basis = enumerate_basis(p, (1,))
        i10, i01 = basis.index((1, 0)), basis.index((0, 1))
        # <T e_(0,1), e_(1,0)>: the sphere factor is the exact moment of
        # |xi1|^2 |xi2|^2, the radial factor int_0^1 r^5 dr = 1/6, and the
        # prefactor Gamma(4)/pi^2; the product collapses to 1/3
        sphere = sphere_monomial_integral(2, (1, 1), (1, 1))
        expected = (math.gamma(4.0) / math.pi**2) * sphere * (1.0 / 6.0)
        assert expected == pytest.approx(1 / 3, abs=1e-15)
        assert B[i10, i01] == pytest.approx(expected, abs=1e-10)
        assert abs(B[i01, i10]) < 1e-12
        assert abs(B[i10, i10]) < 1e-12

    def test_offslice_entries_exactly_zero(self):
        a = phi_factor(P22, 1, (1, 0), (0, 1))
        B = toeplitz_block_f(a, 1, (1, 1), 0.0, FAST)
        basis = enumerate_basis(P22, (1, 1))
        from toepblocks import split_alpha
        for r, be in enumerate(basis):
            for c, al in enumerate(basis):
                if split_alpha(al, P22, 1)[1] != split_alpha(be, P22, 1)[1]:
                    assert B[r, c] == 0.0

    @pytest.mark.parametrize("kappa", [(1, 0), (1, 1), (2, 1)])
    def test_f_equals_g_on_phi_symbols(self, kappa):
        af = phi_factor(P22, 1, (1, 0), (0, 1))
        ag = pseudo_factor(P22, 1, (1, 1), (1, -1))
        Bf = toeplitz_block_f(af, 1, kappa, 1.5, FAST)
        Bg = toeplitz_block_g(ag, 1, kappa, 1.5, FAST)
        assert np.max(np.abs(Bf - Bg)) < 1e-8

    @pytest.mark.parametrize("lam", [0.0, 1.5])
    def test_f_matches_oracle(self, lam):
        a = phi_factor(P22, 2, (1, 0), (0, 1),
                       radial_terms=[(1.0, (0, 0)), (0.5, (1, 0))])
        B = toeplitz_block_f(a, 2, (1, 1), lam, FAST)
        rng = substream(0, "f-oracle")
        G, SE = toeplitz_block_oracle(a, (1, 1), lam, FAST, rng)
        assert sigma_close(G, SE, B)

    def test_wrong_class_rejected(self):
        a = xi_monomial(P22, 1, (1, 0), (0, 0))
        with pytest.raises(ValueError):
            toeplitz_block_f(a, 1, (1, 1), 0.0, FAST)
        b = phi_factor(P22, 1, (1, 0), (0, 1))
        with pytest.raises(ValueError):
            toeplitz_block_g(b, 1, (1, 1), 0.0, FAST)  # no g payload


class TestGammaPath:
    def test_profile_one_gives_one(self):
        for k in [(1, 2), (2, 2)]:
            p = Partition(k)
            for kappa in enumerate_kappas(p, 3):
                g = gamma_quasi_radial(
                    lambda r: np.ones(np.atleast_2d(r).shape[0]), kappa, 2.5,
                    p, FAST)
                assert g == pytest.approx(1.0, abs=1e-12)

    def test_disk_formula(self):
        p = Partition((1,))
        for kap in range(8):
            g = gamma_quasi_radial(lambda r: np.atleast_2d(r)[:, 0] ** 2,
                                   (kap,), 0.0, p, FAST)
            assert g == pytest.approx((kap + 1) / (kap + 2), abs=1e-10)

    def test_linearity_in_constants(self):
        p = P12
        g = gamma_quasi_radial(
            lambda r: np.full(np.atleast_2d(r).shape[0], 3.25), (1, 2), 0.5,
            p, FAST)
        assert g == pytest.approx(3.25, abs=1e-10)

    def test_assemble_diagonal_matches_oracle_diag(self):
        p = P12
        a = radial_poly(p, [(1.0, (0, 1))])
        T = assemble_diagonal(
            lambda kappa: gamma_quasi_radial(a.radial_profile, kappa, 0.0, p,
                                             FAST), p, 2, 0.0)
        rng = substream(0, "diag-oracle")
        for kappa in [(1, 0), (1, 1)]:
            G, SE = toeplitz_block_oracle(a, kappa, 0.0, FAST, rng)
            assert sigma_close(G, SE, T.blocks[kappa])


class TestUnitaryAction:
    def test_identity(self):
        R = unitary_action_matrix(np.eye(4, dtype=complex), P22, (2, 1))
        assert np.array_equal(R, np.eye(R.shape[0]))

    def test_diagonal_torus_characters(self):
        t = np.exp(2j * math.pi * substream(0, "torus-act").random(4))
        R = unitary_action_matrix(np.diag(t), P22, (1, 2))
        basis = enumerate_basis(P22, (1, 2))
        want = np.diag([np.prod(t ** (-np.asarray(al))) for al in basis])
        assert np.max(np.abs(R - want)) < 1e-12

    def test_unitarity_and_homomorphism(self):
        rng = substream(0, "rep-test")
        A, B = haar_uk_sample(P22, rng), haar_uk_sample(P22, rng)
        for kappa in [(1, 1), (2, 1)]:
            RA = unitary_action_matrix(A, P22, kappa)
            RB = unitary_action_matrix(B, P22, kappa)
            RAB = unitary_action_matrix(A @ B, P22, kappa)
            assert np.max(np.abs(RA.conj().T @ RA - np.eye(RA.shape[0]))) < 1e-10
            assert np.max(np.abs(RA @ RB - RAB)) < 1e-10

    def test_rejects_general_unitary(self):
        from toepblocks import haar_unitary
        A = haar_unitary(4, substream(0, "rej"))
        with pytest.raises(ValueError, match="block diagonal"):
            unitary_action_matrix(A, P22, (1, 1))


class TestAveraging:
    def test_scalar_blocks_fixed(self):
        T = assemble_diagonal(lambda kappa: 1.0 + 0.5 * sum(kappa), P22, 2, 0.0)
        avg = average_operator(T, P22, 5, substream(0, "avg-fix"))
        for kappa in T.kappas():
            assert np.max(np.abs(avg.blocks[kappa] - T.blocks[kappa])) < 1e-12

    def test_trace_preserved(self):
        a, _ = noncommuting_pair(P22, 1)
        T = toeplitz_operator(a, P22, 2, 0.0, FAST)
        avg = average_operator(T, P22, 37, substream(0, "avg-tr"))
        for kappa in T.kappas():
            tr0 = np.trace(T.blocks[kappa])
            tr1 = np.trace(avg.blocks[kappa])
            assert abs(tr1 - tr0) <= 1e-12 * (1 + abs(tr0))

    def test_deviation_from_scalar_shrinks(self):
        p = Partition((2,))
        a, _ = noncommuting_pair(p, 1)
        T = toeplitz_operator(a, p, 2, 0.0, FAST)
        dev = {}
        for n in (40, 4000):
            avg = average_operator(T, p, n, substream(0, "avg-dec", ))
            dev[n] = avg.block_errors[(2,)]
        assert dev[4000] < dev[40] / 3


class TestDispatchAndSerialization:
    def test_identity_symbol_all_paths(self):
        one = constant_symbol(P12)
        T = toeplitz_operator(one, P12, 3, 0.0, FAST)
        assert T.provenance == "diagonal-gamma"
        for kappa in T.kappas():
            d = dim_P(P12, kappa)
            assert np.max(np.abs(T.blocks[kappa] - np.eye(d))) < 1e-10

    def test_dispatch_provenances(self):
        spec = QuadratureSpec(ball_samples=5000, radial_nodes=8,
                              sphere_nodes=8, torus_nodes=6)
        assert toeplitz_operator(radial_poly(P22, [(1.0, (1, 0))]), P22, 1,
                                 0.0, spec).provenance == "diagonal-gamma"
        assert toeplitz_operator(phi_factor(P22, 1, (1, 0), (0, 1)), P22, 1,
                                 0.0, spec).provenance == "f-form"
        assert toeplitz_operator(pseudo_factor(P22, 1, (1, 1), (1, -1)), P22,
                                 1, 0.0, spec).provenance == "g-form"
        T = toeplitz_operator(xi_monomial(P22, 1, (1, 0), (0, 0)), P22, 1,
                              0.0, spec)
        assert T.provenance == "oracle"
        assert T.meta["warnings"]

    def test_quasi_radial_oracle_agreement(self):
        a = radial_poly(P22, [(1.0, (1, 0)), (-0.25, (0, 1))])
        T = toeplitz_operator(a, P22, 2, 1.5, FAST)
        rng = substream(0, "qr-agree")
        for kappa in [(1, 0), (1, 1)]:
            G, SE = toeplitz_block_oracle(a, kappa, 1.5, FAST, rng)
            assert sigma_close(G, SE, T.blocks[kappa])

    def test_json_round_trip(self, tmp_path):
        a = phi_factor(P22, 1, (1, 0), (0, 1))
        T = toeplitz_operator(a, P22, 2, 0.5, FAST)
        doc = operator_to_json(T)
        T2 = operator_from_json(doc)
        assert T2.partition == T.partition
        assert T2.lam == T.lam and T2.degree == T.degree
        for kappa in T.kappas():
            assert np.array_equal(T2.blocks[kappa], T.blocks[kappa])
        path = tmp_path / "op.json"
        save_operator(T, path)
        T3 = load_operator(path)
        for kappa in T.kappas():
            assert np.array_equal(T3.blocks[kappa], T.blocks[kappa])

    def test_csv_export_shape(self):
        a = phi_factor(P22, 1, (1, 0), (0, 1))
        T = toeplitz_operator(a, P22, 2, 0.0, FAST)
        buf = io.StringIO()
        block_to_csv(T, (1, 1), buf)
        lines = buf.getvalue().strip().splitlines()
        d = dim_P(P22, (1, 1))
        assert len(lines) == d + 1
        assert lines[0].startswith("alpha\\beta,")
        assert len(lines[0].split(",")) == d + 1


def test_gamma_real_profile_has_negligible_imaginary_part():
    p = Partition((2, 2))
    prof = lambda r: np.atleast_2d(r)[:, 0] ** 2 + 0.5
    for kappa in [(0, 0), (2, 1), (3, 3)]:
        g = gamma_quasi_radial(prof, kappa, 1.5, p, FAST)
        assert abs(g.imag) <= 1e-12


def test_real_symbol_deterministic_blocks_hermitian():
    a, b = noncommuting_pair(P22, 1)  # both real valued
    for sym in (a, b):
        T = toeplitz_operator(sym, P22, 3, 0.5, FAST)
        for kappa in T.kappas():
            B = T.blocks[kappa]
            assert np.max(np.abs(B - B.conj().T)) < 1e-12
