import json

import numpy as np
import pytest

from bmcouple.couplings import make_strategy
from bmcouple.errors import DomainError
from bmcouple.spaces import ModelSpace
from bmcouple.verify import (
    CheckConfig,
    cap_gradient_norm,
    cap_harmonic,
    convergence_order_fit,
    distance_law_check,
    drift_identity_check,
    field_index_form_check,
    law_chordal_contract,
    law_chordal_expand,
    law_eval,
    law_exponential_rate,
    law_fixed,
    law_perverse,
    law_synchronous,
    marginal_check,
    max_principle_demo,
    report_json,
    validate_law,
)

S2 = ModelSpace.sphere(2)


class TestLaws:
    def test_all_laws_pass_ode_oracle(self):
        laws = [
            (law_fixed(1.0), 1.0),
            (law_exponential_rate(1.0, 1.0), 3.0),
            (law_synchronous(S2, 1.0), 3.0),
            (law_synchronous(ModelSpace.hyperbolic(3), 1.0), 1.0),
            (law_synchronous(ModelSpace.euclidean(2), 1.0), 1.0),
            (law_perverse(S2, 1.0), 1.0),
            (law_perverse(ModelSpace.euclidean(2), 1.0), 1.0),
            (law_perverse(ModelSpace.hyperbolic(2), 1.0), 1.0),
            (law_chordal_contract(0.9), 3.0),
            (law_chordal_expand(1.7), 1.0),
        ]
        for law, t_final in laws:
            assert validate_law(law, t_final) < 1e-8, law.law_id

    def test_initial_values(self):
        for law in (
            law_fixed(0.7),
            law_synchronous(S2, 0.7),
            law_perverse(ModelSpace.hyperbolic(2), 0.7),
        ):
            assert law_eval(law, 0.0) == pytest.approx(0.7, abs=1e-14)

    def test_sphere_synchronous_value(self):
        # d=2, rho0=pi/2 at t = 2 ln 2: the decay factor is exactly 1/2
        law = law_synchronous(S2, np.pi / 2)
        expected = 2.0 * np.arcsin(np.sqrt(2.0) / 4.0)
        assert law_eval(law, 2.0 * np.log(2.0)) == pytest.approx(expected, abs=1e-14)
        assert expected == pytest.approx(0.72273, abs=5e-6)

    def test_flat_perverse_value(self):
        law = law_perverse(ModelSpace.euclidean(2), 1.0)
        assert law_eval(law, 1.0) == pytest.approx(np.sqrt(5.0), abs=1e-14)

    def test_perverse_monotone_increasing(self):
        for space in (S2, ModelSpace.euclidean(2), ModelSpace.hyperbolic(2)):
            law = law_perverse(space, 0.5)
            values = law_eval(law, np.linspace(0, 1, 50))
            assert np.all(np.diff(values) > 0)


class TestOrderFit:
    def test_exact_linear(self):
        pairs = [(h, h) for h in (4e-3, 2e-3, 1e-3)]
        assert convergence_order_fit(pairs) == pytest.approx(1.0, abs=1e-12)

    def test_exact_sqrt(self):
        pairs = [(h, np.sqrt(h)) for h in (4e-3, 2e-3, 1e-3)]
        assert convergence_order_fit(pairs) == pytest.approx(0.5, abs=1e-12)

    def test_noisy_recovery(self):
        rng = np.random.default_rng(0)
        hs = np.logspace(-3.5, -2, 8)
        errs = 3.0 * hs**0.8 * np.exp(rng.normal(0.0, 0.02, hs.size))
        assert convergence_order_fit(list(zip(hs, errs))) == pytest.approx(0.8, abs=0.1)

    def test_needs_three_points(self):
        with pytest.raises(DomainError):
            convergence_order_fit([(1e-3, 1e-3), (2e-3, 2e-3)])


class TestDistanceLawCheck:
    def test_translation_is_exact(self):
        flat = ModelSpace.euclidean(2)
        strategy = make_strategy("translation", flat)
        config = CheckConfig(h_ladder=(4e-3, 2e-3, 1e-3), t_final=0.5, n_paths=20, seed=3)
        report = distance_law_check(
            strategy, flat.base_point(), flat.point_at_distance(1.0), law_fixed(1.0), config
        )
        assert max(report["sup_err"]) < 1e-12
        assert report["pass"] is True

    def test_report_schema_and_determinism(self):
        strategy = make_strategy("fixed-s2", S2)
        config = CheckConfig(h_ladder=(8e-3, 4e-3, 2e-3), t_final=0.25, n_paths=40, seed=9)
        a = distance_law_check(strategy, S2.base_point(), S2.point_at_distance(1.0), law_fixed(1.0), config)
        b = distance_law_check(strategy, S2.base_point(), S2.point_at_distance(1.0), law_fixed(1.0), config)
        assert report_json(a) == report_json(b)
        parsed = json.loads(report_json(a))
        assert set(parsed) == {
            "strategy", "law", "n_paths", "h_ladder", "sup_err", "fitted_order", "z_scores", "pass",
        }


class TestDriftIdentity:
    def test_small_grid(self):
        report = drift_identity_check(
            curvatures=(-1, 0, 1), dims=(2, 3), rho_grid=[0.3, 1.0, 2.2], quad_steps=1024
        )
        assert report["max_rel_err"] < 1e-6
        assert report["special_identity_err"] < 1e-9
        assert report["pass"]


class TestIndexLemmaCheck:
    def test_jacobi_always_below_competitors(self):
        report = field_index_form_check(n_cases=50, seed=1)
        assert report["pass"]
        assert report["worst_margin"] > -1e-9


class TestMarginalCheck:
    def test_independent_passes(self):
        strategy = make_strategy("independent", S2)
        report = marginal_check(
            strategy, S2.base_point(), S2.point_at_distance(1.0),
            coordinate="X", times=(0.25, 0.5), h=2e-3, n_paths=2000, seed=4,
        )
        assert report["max_abs_z"] < 4.0
        assert {"t", "direction", "z"} <= set(report["rows"][0])

    def test_negative_control_fails(self):
        strategy = make_strategy("broken-marginal", S2)
        report = marginal_check(
            strategy, S2.base_point(), S2.point_at_distance(1.0),
            coordinate="Y", times=(0.5, 1.0), h=2e-3, n_paths=4000, seed=4,
        )
        assert report["max_abs_z"] > 5.0
        assert not report["pass"]

    def test_bad_coordinate_rejected(self):
        strategy = make_strategy("independent", S2)
        with pytest.raises(DomainError):
            marginal_check(strategy, S2.base_point(), S2.point_at_distance(1.0), coordinate="Z")


class TestCapHarmonic:
    def test_constant_harmonic_trivial(self):
        u, grad = cap_harmonic(0)
        x = np.array([0.1, 0.2, np.sqrt(1 - 0.05)])
        assert u(x) == pytest.approx(1.0)
        assert np.allclose(grad(x), 0.0)

    def test_gradient_matches_norm_formula(self):
        for n in (1, 2, 3):
            u, grad = cap_harmonic(n)
            for polar in (0.2, 0.5, 0.9):
                x = np.array([np.sin(polar), 0.0, np.cos(polar)])
                assert np.linalg.norm(grad(x)) == pytest.approx(
                    float(cap_gradient_norm(n, polar)), rel=1e-12
                )

    def test_gradient_matches_finite_differences(self):
        u, grad = cap_harmonic(2)
        rng = np.random.default_rng(2)
        for _ in range(20):
            polar, azimuth = rng.uniform(0.1, 1.2), rng.uniform(0, 2 * np.pi)
            x = np.array(
                [np.sin(polar) * np.cos(azimuth), np.sin(polar) * np.sin(azimuth), np.cos(polar)]
            )
            frame = S2.reference_frame(x)
            eps = 1e-6
            for direction in frame:
                fd = (u(S2.exp_map(x, direction, eps)) - u(S2.exp_map(x, direction, -eps))) / (
                    2 * eps
                )
                assert fd == pytest.approx(float(grad(x) @ direction), abs=1e-6)

    def test_harmonicity_by_discrete_laplacian(self):
        u, _ = cap_harmonic(2)
        eps = 1e-4
        for polar in (0.3, 0.7, 1.1):
            x = np.array([np.sin(polar), 0.0, np.cos(polar)])
            frame = S2.reference_frame(x)
            lap = sum(
                (u(S2.exp_map(x, d, eps)) + u(S2.exp_map(x, d, -eps)) - 2 * u(x)) / eps**2
                for d in frame
            )
            assert abs(lap) < 1e-4

    def test_gradient_monotone_to_boundary(self):
        # |grad u| grows with the polar angle, so the max sits on the cap rim
        for n in (1, 2):
            angles = np.linspace(0.0, 1.2, 25)
            values = cap_gradient_norm(n, angles)
            assert np.all(np.diff(values) >= 0.0)

    def test_demo_rejects_bad_inputs(self):
        with pytest.raises(DomainError):
            max_principle_demo(2.0, 1, n_paths=10)
        with pytest.raises(DomainError):
            max_principle_demo(0.8, 0, n_paths=10)

    def test_demo_smoke(self):
        report = max_principle_demo(0.8, 1, h=2e-3, n_paths=400, seed=6, t_max=6.0)
        assert set(report) >= {"martingale_z", "boundary_gradient_max", "gradient_rows", "pass"}
        assert abs(report["martingale_z"]) < 6.0
        assert report["gradient_rows"][0]["estimate"] == pytest.approx(0.5, abs=0.1)
