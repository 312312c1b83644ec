import numpy as np
import pytest

from conftest import bsc_pair, hamming, hamming_spec, random_binary_instance
from rdsi.errors import AssumptionError, InvalidInstanceError
from rdsi.extended import (
    ExtSolveConfig,
    check_zero_distortion_assumption_ext,
    constraints_depending_on_xhat_e,
    ext_expected_distortion_k,
    ext_rate_objective,
    solve_rate_ext,
    verify_u_reduction,
)
from rdsi.model import (
    ExtendedInstance,
    TestChannel as Channel,
    conditional_entropy_x_given_y,
)
from rdsi.solver import SolveConfig, expected_distortions, r_wz, rate_objective, solve_rate


def embed_base_instance(dd, de, targets):
    """K = 2 tables d_1 = d_d(x, xhat_d), d_2 = d_e(xhat_d, xhat_e)."""
    nx, nd = dd.shape
    ne = de.shape[1]
    dk = np.zeros((2, nx, nd, ne))
    dk[0] = np.repeat(dd[:, :, np.newaxis], ne, axis=2)
    dk[1] = np.tile(de[np.newaxis, :, :], (nx, 1, 1))
    return ExtendedInstance(xhat_d_size=nd, xhat_e_size=ne, k=2, dk=dk, targets=targets)


def random_ext_witness(rng, src, nz, nu):
    pz = rng.random((src.x_size, nz)) + 0.05
    pz /= pz.sum(axis=1, keepdims=True)
    pu = rng.random((src.x_size, nz, nu)) + 0.05
    pu /= pu.sum(axis=2, keepdims=True)
    phi = rng.integers(0, 2, size=(src.y_size, nz))
    psi3 = rng.integers(0, 2, size=(src.x_size, nz, nu))
    return pz, pu, phi, psi3


def joint_from(pz, pu):
    return pz[:, None, :] * pu.transpose(0, 2, 1)  # (X, U, Z)


class TestExtRateObjective:
    def test_constant_pair_is_free(self):
        src = bsc_pair(0.2)
        p = np.zeros((2, 2, 2))
        p[:, 0, 0] = 1.0
        assert ext_rate_objective(src, p) == 0.0

    def test_copy_channel(self):
        src = bsc_pair(0.2)
        p = np.zeros((2, 1, 2))
        p[0, 0, 0] = 1.0
        p[1, 0, 1] = 1.0
        # Z = X: I(X;Z) - I(Y;Z) = H(X) - I(X;Y) = H(X|Y)
        assert ext_rate_objective(src, p) == pytest.approx(
            conditional_entropy_x_given_y(src), abs=1e-12
        )

    def test_marginal_agreement_with_base(self, rng):
        for _ in range(10):
            src, _ = random_binary_instance(rng)
            p = rng.random((2, 3, 2)) + 0.01
            p /= p.reshape(2, -1).sum(axis=1)[:, None, None]
            marg = p.sum(axis=1)
            ch = Channel(
                z_size=2,
                pz_given_x=marg / marg.sum(axis=1, keepdims=True),
                phi=np.zeros((2, 2), dtype=int),
                psi=np.zeros((2, 2), dtype=int),
            )
            assert ext_rate_objective(src, p) == pytest.approx(
                rate_objective(src, ch), abs=1e-9
            )

    def test_bad_rows_rejected(self):
        src = bsc_pair(0.2)
        with pytest.raises(InvalidInstanceError):
            ext_rate_objective(src, np.full((2, 2, 2), 0.3))


class TestExtExpectedDistortion:
    def test_zero_table(self, rng):
        src = bsc_pair(0.2)
        ext = ExtendedInstance(2, 2, 1, np.zeros((1, 2, 2, 2)), targets=[0.0])
        pz, pu, phi, psi3 = random_ext_witness(rng, src, 2, 2)
        assert ext_expected_distortion_k(src, ext, joint_from(pz, pu), phi, psi3, 0) == 0.0

    def test_degenerate_u_reduces_to_base_decoder_distortion(self, rng):
        src, spec = random_binary_instance(rng)
        ext = embed_base_instance(spec.dd, spec.de, [1.0, 1.0])
        pz = rng.random((2, 3)) + 0.05
        pz /= pz.sum(axis=1, keepdims=True)
        phi = rng.integers(0, 2, size=(2, 3))
        psi = rng.integers(0, 2, size=(2, 3))
        ch = Channel(z_size=3, pz_given_x=pz, phi=phi, psi=psi)
        edd, ede = expected_distortions(src, spec, ch)
        p = pz[:, None, :]  # U degenerate
        psi3 = psi[:, :, None]
        assert ext_expected_distortion_k(src, ext, p, phi, psi3, 0) == pytest.approx(
            edd, abs=1e-12
        )
        assert ext_expected_distortion_k(src, ext, p, phi, psi3, 1) == pytest.approx(
            ede, abs=1e-12
        )

    def test_matches_direct_atom_sum(self, rng):
        src, _ = random_binary_instance(rng)
        dk = rng.random((2, 2, 2, 2))
        ext = ExtendedInstance(2, 2, 2, dk, targets=[1.0, 1.0])
        pz, pu, phi, psi3 = random_ext_witness(rng, src, 2, 2)
        pagg = joint_from(pz, pu)
        for k in range(2):
            direct = 0.0
            for x in range(2):
                for y in range(2):
                    for z in range(2):
                        for u in range(2):
                            direct += (
                                src.pxy[x, y]
                                * pz[x, z]
                                * pu[x, z, u]
                                * dk[k, x, phi[y, z], psi3[x, z, u]]
                            )
            assert ext_expected_distortion_k(
                src, ext, pagg, phi, psi3, k
            ) == pytest.approx(direct, abs=1e-12)


class TestSolveRateExt:
    def test_loose_targets_are_free(self, rng):
        src, _ = random_binary_instance(rng)
        dk = rng.random((2, 2, 2, 2))
        dk[:, :, 0, 0] = 0.0  # zero-distortion witness
        ext = ExtendedInstance(2, 2, 2, dk, targets=[dk[0].max() + 1, dk[1].max() + 1])
        point = solve_rate_ext(src, ext)
        assert point.rate == 0.0
        assert np.all(point.achieved <= ext.targets + 1e-12)

    def test_k1_decoder_only_matches_wyner_ziv(self):
        src = bsc_pair(0.25)
        dd = hamming(2)
        dk = np.repeat(dd[np.newaxis, :, :, np.newaxis], 2, axis=3)
        ext = ExtendedInstance(2, 2, 1, dk, targets=[0.1])
        point = solve_rate_ext(src, ext, ExtSolveConfig(z_size=3))
        assert point.rate == pytest.approx(r_wz(src, dd, 0.1), abs=5e-3)

    def test_k2_embedding_matches_base_solver(self):
        src = bsc_pair(0.25)
        spec = hamming_spec()
        ext = embed_base_instance(spec.dd, spec.de, [0.1, 0.02])
        point = solve_rate_ext(src, ext, ExtSolveConfig(z_size=5))
        base = solve_rate(src, spec, 0.1, 0.02, SolveConfig(z_size=5))
        assert point.rate == pytest.approx(base.rate, abs=5e-3)

    def test_automatic_u_reduction(self):
        src = bsc_pair(0.25)
        spec = hamming_spec()
        ext = embed_base_instance(spec.dd, spec.de, [0.1, 0.02])
        assert constraints_depending_on_xhat_e(ext) == 1
        point = solve_rate_ext(src, ext, ExtSolveConfig(z_size=3))
        assert point.p_uz_given_x.shape[1] == 1  # |U| reduced to 1

    def test_assumption_violated(self):
        src = bsc_pair(0.25)
        dk = np.ones((1, 2, 2, 2))
        ext = ExtendedInstance(2, 2, 1, dk, targets=[0.5])
        assert not check_zero_distortion_assumption_ext(ext)
        with pytest.raises(AssumptionError):
            solve_rate_ext(src, ext)

    def test_bounded_by_conditional_entropy(self, rng):
        for _ in range(3):
            src, spec = random_binary_instance(rng)
            ext = embed_base_instance(
                spec.dd, spec.de, [rng.uniform(0.05, 0.3), rng.uniform(0.02, 0.3)]
            )
            point = solve_rate_ext(src, ext, ExtSolveConfig(z_size=3))
            assert 0.0 <= point.rate <= conditional_entropy_x_given_y(src) + 1e-6

    def test_monotone_in_targets(self):
        src = bsc_pair(0.25)
        spec = hamming_spec()
        cfg = ExtSolveConfig(z_size=3)
        r1 = solve_rate_ext(src, embed_base_instance(spec.dd, spec.de, [0.08, 0.05]), cfg).rate
        r2 = solve_rate_ext(src, embed_base_instance(spec.dd, spec.de, [0.16, 0.05]), cfg).rate
        r3 = solve_rate_ext(src, embed_base_instance(spec.dd, spec.de, [0.08, 0.15]), cfg).rate
        assert r2 <= r1 + 1e-3
        assert r3 <= r1 + 1e-3

    def test_enlarging_u_beyond_k_changes_nothing(self, rng):
        src = bsc_pair(0.3)
        dk = rng.random((2, 2, 2, 2))
        dk[:, :, 1, 1] = 0.0
        ext = ExtendedInstance(2, 2, 2, dk, targets=[0.25, 0.25])
        r_k = solve_rate_ext(src, ext, ExtSolveConfig(u_size=2, z_size=2)).rate
        r_big = solve_rate_ext(src, ext, ExtSolveConfig(u_size=3, z_size=2)).rate
        assert r_big >= r_k - 1e-3

    def test_achieved_meet_targets(self, rng):
        src, spec = random_binary_instance(rng)
        ext = embed_base_instance(spec.dd, spec.de, [0.2, 0.2])
        point = solve_rate_ext(src, ext, ExtSolveConfig(z_size=3))
        assert np.all(point.achieved <= np.asarray(ext.targets) + 1e-6)


class TestVerifyUReduction:
    def test_degenerate_u_trivially_true(self, rng):
        src = bsc_pair(0.2)
        dk = rng.random((2, 2, 2, 2))
        ext = ExtendedInstance(2, 2, 2, dk, targets=[dk[0].max(), dk[1].max()])
        pz, pu, phi, psi3 = random_ext_witness(rng, src, 2, 1)
        assert verify_u_reduction(src, ext, pz, pu, phi, psi3) is True

    def test_random_feasible_witness(self, rng):
        src = bsc_pair(0.25)
        for _ in range(5):
            dk = rng.random((2, 2, 2, 2))
            pz, pu, phi, psi3 = random_ext_witness(rng, src, 2, 4)
            # set the targets at the witness's own achieved values: feasible
            joint = joint_from(pz, pu)
            ext_wide = ExtendedInstance(2, 2, 2, dk, targets=[1e3, 1e3])
            achieved = [
                ext_expected_distortion_k(src, ext_wide, joint, phi, psi3, k)
                for k in range(2)
            ]
            ext = ExtendedInstance(2, 2, 2, dk, targets=np.asarray(achieved) + 1e-12)
            assert verify_u_reduction(src, ext, pz, pu, phi, psi3) is True

    def test_structurally_infeasible_witness_stays_false(self, rng):
        src = bsc_pair(0.25)
        dk = rng.random((2, 2, 2, 2)) + 0.5  # strictly positive: floor > 0
        ext = ExtendedInstance(2, 2, 2, dk, targets=[1e-6, 1e-6])
        pz, pu, phi, psi3 = random_ext_witness(rng, src, 2, 4)
        assert verify_u_reduction(src, ext, pz, pu, phi, psi3) is False
