import numpy as np
import pytest

from bmcouple import smallmat as sm
from bmcouple.errors import (
    CouplingConstraintError,
    DegenerateInputError,
    DomainError,
    InfeasibleRateError,
)

E1, E2, E3 = np.eye(3)


def random_unit(rng, dim=3):
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


class TestRodrigues:
    def test_parallel_gives_identity(self):
        assert np.array_equal(sm.rodrigues_rotation(E1, E1), np.eye(3))

    def test_antiparallel_gives_minus_identity(self):
        assert np.array_equal(sm.rodrigues_rotation(E1, -E1), -np.eye(3))

    def test_quarter_turn(self):
        expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        assert np.allclose(sm.rodrigues_rotation(E1, E2), expected, atol=1e-15)

    def test_non_unit_input_rejected(self):
        with pytest.raises(DomainError):
            sm.rodrigues_rotation([2.0, 0.0, 0.0], E2)

    def test_random_pairs_orthogonal_and_mapping(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            x, y = random_unit(rng), random_unit(rng)
            rot = sm.rodrigues_rotation(x, y)
            assert np.max(np.abs(rot.T @ rot - np.eye(3))) < 1e-12
            assert np.max(np.abs(rot @ x - y)) < 1e-12
            axis = np.cross(x, y)
            assert np.max(np.abs(rot @ axis - axis)) < 1e-12


class TestFrameAlign:
    def test_canonical_pair_is_identity(self):
        assert np.allclose(sm.frame_align(E1, E2), np.eye(3), atol=1e-15)

    def test_shifted_pair_permutes(self):
        out = sm.frame_align(E2, E3)
        assert np.allclose(out[:, 0], E2)
        assert np.allclose(out[:, 1], E3)
        assert np.allclose(out[:, 2], E1)

    def test_near_parallel_rejected(self):
        with pytest.raises(DegenerateInputError):
            sm.frame_align(E1, E1)

    def test_random_pairs_column_identities(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            x, y = random_unit(rng), random_unit(rng)
            if abs(x @ y) > 1.0 - 1e-6:
                continue
            out = sm.frame_align(x, y)
            c = x @ y
            assert np.max(np.abs(out.T @ out - np.eye(3))) < 1e-12
            assert np.allclose(out[:, 0], x, atol=1e-12)
            assert np.allclose(out @ np.array([c, np.sqrt(1 - c * c), 0.0]), y, atol=1e-12)
            assert np.allclose(out[:, 2], np.cross(x, y) / np.sqrt(1 - c * c), atol=1e-12)


class TestFixedDistanceMatrices:
    def test_perpendicular_blocks(self):
        jt, kt = sm.fixed_distance_blocks(0.0)
        assert np.array_equal(jt, np.array([[0, -1, 0], [0, 0, 0], [0, 0, 0]], dtype=float))
        assert np.array_equal(kt, np.array([[0, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float))

    def test_residuals_and_norm_on_random_pairs(self):
        rng = np.random.default_rng(23)
        for _ in range(1000):
            x, y = random_unit(rng), random_unit(rng)
            if abs(x @ y) > 1.0 - 1e-6:
                continue
            j, k = sm.fixed_distance_matrices(x, y)
            r1, r2, r3 = sm.fixed_distance_residuals(x, y, j, k)
            assert max(r1, r2, r3) < 1e-10
            assert np.linalg.norm(j, 2) <= 1.0 + 1e-12

    def test_degenerate_pair_rejected(self):
        with pytest.raises(DegenerateInputError):
            sm.fixed_distance_matrices(E1, -E1)

    def test_driver_pair_check(self):
        with pytest.raises(CouplingConstraintError):
            sm.check_driver_pair(np.eye(3), np.eye(3))


class TestSolveAlpha:
    def test_known_value(self):
        assert sm.solve_alpha(-2.0, 0.0, -1.0) == pytest.approx(5 * np.pi / 3, abs=1e-12)

    def test_boundary_case_residual(self):
        # a == c forces cos(alpha) = 1
        alpha = sm.solve_alpha(-1.0, 0.0, -1.0)
        assert abs(-np.cos(alpha) + 1.0) < 1e-12

    def test_single_case_residual(self):
        alpha = sm.solve_alpha(-1.0, 1.0, -0.5)
        assert abs(-np.cos(alpha) + np.sin(alpha) + 0.5) < 1e-12

    def test_residual_grid(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            a = -rng.uniform(0.2, 5.0)
            c = rng.uniform(0.999 * a, -1e-6)
            b = rng.uniform(-4.0, 4.0)
            alpha = sm.solve_alpha(a, b, c)
            assert 0.0 <= alpha < 2 * np.pi
            assert abs(a * np.cos(alpha) + b * np.sin(alpha) - c) < 1e-12

    def test_infeasible_rejected(self):
        with pytest.raises(InfeasibleRateError):
            sm.solve_alpha(-1.0, 0.0, -3.0)


class TestBlockRotation:
    def test_zero_angle(self):
        assert np.array_equal(sm.block_rotation(2, 0.0), np.eye(3))

    def test_quarter_angle_block(self):
        expected = np.array([[1, 0, 0], [0, 0, 1], [0, -1, 0]], dtype=float)
        assert np.allclose(sm.block_rotation(2, np.pi / 2), expected, atol=1e-15)

    @pytest.mark.parametrize("n,alpha", [(2, 0.3), (4, 1.2), (6, -2.0), (4, np.pi)])
    def test_orthogonality(self, n, alpha):
        b = sm.block_rotation(n, alpha)
        assert np.max(np.abs(b @ b.T - np.eye(n + 1))) < 1e-15
        assert np.allclose(b[:, 0], np.eye(n + 1)[:, 0])

    def test_without_fixed_first(self):
        b = sm.block_rotation(4, 0.7, fixed_first=False)
        assert b.shape == (4, 4)
        assert np.max(np.abs(b @ b.T - np.eye(4))) < 1e-15

    def test_odd_count_rejected(self):
        with pytest.raises(DomainError):
            sm.block_rotation(3, 0.1)


class TestCompleteFrame:
    def test_standard_pair(self):
        assert np.allclose(sm.complete_frame(np.eye(3)[:2]), E3)

    def test_shifted_pair_orientation(self):
        assert np.allclose(sm.complete_frame(np.eye(3)[1:]), E1)

    def test_random_frames(self):
        rng = np.random.default_rng(3)
        for dim in (2, 3, 4):
            for _ in range(200):
                mat = np.linalg.qr(rng.standard_normal((dim + 1, dim + 1)))[0]
                vs = mat[:, :dim].T
                out = sm.complete_frame(vs)
                assert abs(np.linalg.norm(out) - 1.0) < 1e-12
                assert np.max(np.abs(vs @ out)) < 1e-12
                assert np.linalg.det(np.column_stack([vs.T, out])) > 0.0

    def test_rotation_equivariance(self):
        rng = np.random.default_rng(17)
        vs = np.linalg.qr(rng.standard_normal((4, 4)))[0][:, :3].T
        rot = np.linalg.qr(rng.standard_normal((4, 4)))[0]
        if np.linalg.det(rot) < 0:
            rot[:, 0] = -rot[:, 0]
        direct = sm.complete_frame(vs @ rot.T)
        rotated = rot @ sm.complete_frame(vs)
        assert np.allclose(direct, rotated, atol=1e-10)

    def test_rank_deficient_rejected(self):
        with pytest.raises(DegenerateInputError):
            sm.complete_frame(np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]))


class TestNFrame:
    def test_invariant_enforced(self):
        with pytest.raises(DomainError):
            sm.NFrame(base=np.zeros(3), mat=np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_square_alignment_is_transpose(self):
        rng = np.random.default_rng(2)
        mat = np.linalg.qr(rng.standard_normal((3, 3)))[0]
        frame = sm.NFrame(base=np.zeros(4), mat=mat)
        assert np.allclose(sm.frame_alignment_matrix(frame), mat.T)

    def test_rectangular_alignment_orthogonal(self):
        rng = np.random.default_rng(4)
        q = np.linalg.qr(rng.standard_normal((4, 4)))[0]
        frame = sm.NFrame(base=np.zeros(4), mat=q[:3].copy())
        align = sm.frame_alignment_matrix(frame)
        assert align.shape == (4, 4)
        assert np.max(np.abs(align.T @ align - np.eye(4))) < 1e-12
        for j in range(3):
            assert np.allclose(align[:, j], frame.mat[j])

    def test_frame_reconstructs_vectors(self):
        # sum_i <xi, X_i> X_i = xi for the frame vectors X_i = U e_i
        rng = np.random.default_rng(6)
        for n_drive in (3, 4, 5):
            q = np.linalg.qr(rng.standard_normal((n_drive, n_drive)))[0]
            frame = sm.NFrame(base=np.zeros(4), mat=q[:3].copy())
            xi = rng.standard_normal(3)
            rebuilt = sum(
                (xi @ frame.mat[:, i]) * frame.mat[:, i] for i in range(frame.drive_dim)
            )
            assert np.allclose(rebuilt, xi, atol=1e-12)
