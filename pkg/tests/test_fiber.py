import math

import numpy as np
import pytest

from oracles import monte_carlo_average
from spherebundle.errors import (ConstantHError, DegenerateRatioError,
                                 ModelSpecError, NotEinsteinError,
                                 NotNormalizedError)
from spherebundle.fiber import (avg_max_ratio_check, berger_average_check,
                                einstein_fiber_checks, fiber_max, h_stats,
                                rayleigh_check, sphere_laplacian_identity_check,
                                variance_identity_check)
from spherebundle.geometry import point
from spherebundle.hermitian import hermitian_data
from spherebundle.models import catalog_model
from spherebundle.moments import fiber_average, integrate_fiber
from spherebundle.polynomials import SymPoly


class TestFiberIntegralValues:
    def test_space_form_quartic_integrates_to_volume(self, cp2, rng):
        hd = hermitian_data(cp2, cp2.sample_point(rng))
        assert integrate_fiber(hd.quartic.poly()) == pytest.approx(2 * math.pi**2, rel=1e-12)

    def test_product_average_two_thirds_with_mc_oracle(self, cp1xcp1, rng):
        hd = hermitian_data(cp1xcp1, cp1xcp1.sample_point(rng))
        poly = hd.quartic.poly()
        assert integrate_fiber(poly) == pytest.approx((2.0 / 3.0) * 2 * math.pi**2, rel=1e-12)
        mean, stderr = monte_carlo_average(poly, 4, 100_000, rng)
        assert abs(mean - 2.0 / 3.0) < 4 * stderr


class TestBergerAverages:
    # expected averages derived from s = N(N+1)c and the product split
    @pytest.mark.parametrize("name,expected", [
        ("cp1", 1.0), ("cp2", 1.0), ("cp3", 1.0), ("ch2", -1.0), ("cp1xcp1", 2.0 / 3.0),
    ])
    def test_kaehler_models(self, name, expected):
        model = catalog_model(name)
        rng = np.random.default_rng(1)
        for _ in range(3):
            reports = berger_average_check(model, pt=model.sample_point(rng), tol=1e-9, rng=rng)
            assert len(reports) == 2
            for r in reports:
                assert r.passed, r
                assert r.lhs == pytest.approx(expected, abs=1e-9)

    def test_conformal_model_star_form(self, conformal_model, rng):
        # the almost-Hermitian identity, with s* genuinely different from s
        saw_different = False
        for _ in range(10):
            reports = berger_average_check(conformal_model,
                                           pt=conformal_model.sample_point(rng),
                                           tol=1e-8, rng=rng)
            assert len(reports) == 1
            assert reports[0].passed, reports[0]
            sstar = float(reports[0].note.split("s*=")[1])
            s = float(reports[0].note.split("s=")[1].split()[0])
            if abs(sstar - s) > 1e-3:
                saw_different = True
        assert saw_different

    def test_rejects_models_without_j(self, s4):
        with pytest.raises(ModelSpecError):
            berger_average_check(s4)


class TestSphereLaplacianIdentity:
    def test_degree_one_both_sides_zero(self):
        p = SymPoly.variable(4, 0)
        r = sphere_laplacian_identity_check(p, 1, 4)
        assert r.lhs == 0.0 and r.rhs == 0.0 and r.passed

    def test_quartic_power_known_value(self):
        # f = v1^4 on S^3: both sides equal 6 pi^2
        p = SymPoly(4, {(0, 0, 0, 0): 1.0})
        r = sphere_laplacian_identity_check(p, 4, 4)
        assert r.lhs == pytest.approx(6 * math.pi**2, rel=1e-12)
        assert r.rhs == pytest.approx(6 * math.pi**2, rel=1e-12)
        assert r.passed

    def test_random_degree_six(self, rng):
        p = SymPoly.random_homogeneous(6, 6, rng)
        r = sphere_laplacian_identity_check(p, 6, 6, tol=1e-9)
        assert r.passed

    @pytest.mark.parametrize("degree", range(1, 7))
    @pytest.mark.parametrize("n", [2, 4, 6])
    def test_property_fuzz(self, degree, n):
        rng = np.random.default_rng(1000 * n + degree)
        for _ in range(50):
            p = SymPoly.random_homogeneous(n, degree, rng)
            r = sphere_laplacian_identity_check(p, degree, n, tol=1e-9)
            assert r.passed, (degree, n, r.abs_error)

    def test_non_homogeneous_rejected(self):
        p = SymPoly(4, {(0,): 1.0, (0, 0): 1.0})
        with pytest.raises(ValueError):
            sphere_laplacian_identity_check(p, 2, 4)


class TestHStats:
    def test_cp2_constant_fiber(self, cp2, rng):
        st = h_stats(cp2, cp2.sample_point(rng), rng=rng)
        assert st.h_av == pytest.approx(1.0, abs=1e-10)
        assert st.variance == pytest.approx(0.0, abs=1e-12)
        assert st.h_max == pytest.approx(1.0, abs=1e-10)
        assert st.gradv_sq_integral == pytest.approx(0.0, abs=1e-10)

    def test_product_values(self, cp1xcp1, rng):
        st = h_stats(cp1xcp1, cp1xcp1.sample_point(rng), rng=rng)
        assert st.h_av == pytest.approx(2.0 / 3.0, abs=1e-10)
        assert st.variance == pytest.approx(1.0 / 45.0, abs=1e-10)
        assert st.h_max == pytest.approx(1.0, abs=1e-9)
        assert st.gradv_sq_integral == pytest.approx(8.0 / 15.0, abs=1e-9)

    def test_product_gradv_mc_oracle(self, cp1xcp1, rng):
        # |grad^v H|^2 at x equals the squared great-circle differential;
        # estimate its average by Monte Carlo as an independent oracle
        hd = hermitian_data(cp1xcp1, cp1xcp1.sample_point(rng))

        def gv_sq(x):
            g = hd.quartic.gradient(x)
            g = g - (g @ x) * x
            return g @ g

        mean, stderr = monte_carlo_average(gv_sq, 4, 60_000, rng)
        assert abs(mean - 8.0 / 15.0) < 4 * stderr

    def test_invariants(self, conformal_model, rng):
        st = h_stats(conformal_model, conformal_model.sample_point(rng), rng=rng)
        assert st.variance >= 0.0
        assert st.h_max >= st.h_av - 1e-12


class TestEinsteinFiberChecks:
    @pytest.mark.parametrize("name,lam", [
        ("cp1", 1.0), ("cp2", 1.5), ("cp3", 2.0), ("ch2", -1.5),
        ("cp1xcp1", 1.0), ("torus4", 0.0),
    ])
    def test_average_and_laplacian(self, name, lam):
        model = catalog_model(name)
        rng = np.random.default_rng(9)
        reports = einstein_fiber_checks(model, pt=model.sample_point(rng), tol=1e-9, rng=rng)
        by_name = {r.identity: r for r in reports}
        avg = by_name["fiber-average-vs-einstein"]
        assert avg.passed and avg.rhs == pytest.approx(4 * lam / (model.dim + 2))
        lap = by_name["ambient-laplacian-vs-einstein"]
        assert lap.passed and lap.rhs == pytest.approx(16 * lam)

    def test_not_einstein_raises(self, conformal_model):
        with pytest.raises(NotEinsteinError):
            einstein_fiber_checks(conformal_model)


class TestVarianceIdentity:
    @pytest.mark.parametrize("name", ["cp2", "ch2", "cp1xcp1"])
    def test_kaehler_einstein_models(self, name):
        model = catalog_model(name)
        rng = np.random.default_rng(21)
        for _ in range(3):
            r = variance_identity_check(model, pt=model.sample_point(rng), tol=1e-9, rng=rng)
            assert r.passed, r
        if name == "cp1xcp1":
            assert r.lhs == pytest.approx(1.0 / 45.0, abs=1e-10)
            assert r.rhs == pytest.approx((1.0 / 24.0) * (8.0 / 15.0), abs=1e-10)


class TestFiberMax:
    def test_cp2_constant(self, cp2, rng):
        hd = hermitian_data(cp2, cp2.sample_point(rng))
        assert fiber_max(hd.quartic, rng=rng) == pytest.approx(1.0, abs=1e-10)

    def test_product_maximum_at_factor_pure(self, cp1xcp1, rng):
        hd = hermitian_data(cp1xcp1, cp1xcp1.sample_point(rng))
        val, xstar = fiber_max(hd.quartic, rng=rng, return_argmax=True)
        assert val == pytest.approx(1.0, abs=1e-9)
        t = xstar[0] ** 2 + xstar[1] ** 2
        assert min(t, 1 - t) < 1e-4  # factor-pure direction
        # dense-sampling oracle: no sampled direction beats the ascent
        v = rng.standard_normal((20000, 4))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        sampled = max(hd.quartic(v[k]) for k in range(0, 20000, 1))
        assert val >= sampled - 1e-9

    def test_flat_torus_zero(self, torus4, rng):
        hd = hermitian_data(torus4, point([0, 0, 0, 0]))
        assert fiber_max(hd.quartic, rng=rng) == pytest.approx(0.0, abs=1e-12)


class TestRayleigh:
    def test_product_quotient_and_bound(self, cp1xcp1):
        reports = rayleigh_check(cp1xcp1, tol=1e-8)
        by_name = {r.identity: r for r in reports}
        q = by_name["rayleigh-quotient"]
        assert q.passed and q.lhs == pytest.approx(24.0, abs=1e-8)
        assert by_name["rayleigh-bound"].passed
        assert by_name["rayleigh-step-horizontal"].passed
        sv = by_name["rayleigh-step-variance"]
        assert sv.passed
        assert sv.lhs == pytest.approx(1.0 / 45.0, abs=1e-10)

    def test_space_form_rejected(self, cp2):
        with pytest.raises(ConstantHError):
            rayleigh_check(cp2)

    def test_unnormalized_rejected(self):
        with pytest.raises(NotNormalizedError):
            rayleigh_check(catalog_model("cp1xcp1_c2"))

    def test_not_einstein_rejected(self, conformal_model):
        with pytest.raises(NotEinsteinError):
            rayleigh_check(conformal_model)


class TestAvgMaxRatio:
    def test_product_two_thirds(self, cp1xcp1):
        reports = avg_max_ratio_check(cp1xcp1, points=5, tol=1e-6)
        for r in reports:
            assert r.passed
            assert r.lhs == pytest.approx(2.0 / 3.0, abs=1e-9)

    def test_cp2_reports_honest_ratio(self, cp2):
        reports = avg_max_ratio_check(cp2, points=3, tol=1e-6)
        for r in reports:
            assert not r.passed  # equality with 2/3 genuinely fails
            assert r.lhs == pytest.approx(1.0, abs=1e-9)

    def test_flat_torus_degenerate(self, torus4):
        with pytest.raises(DegenerateRatioError):
            avg_max_ratio_check(torus4, points=1)

    def test_negative_einstein_rejected(self, ch2):
        with pytest.raises(ModelSpecError):
            avg_max_ratio_check(ch2, points=1)


def test_kaehler_einstein_average_relation_all_models():
    # H_av = 4 Lambda / (n+2), equivalent to the scalar-curvature form
    # through s = n Lambda
    for name, lam in [("cp1", 1.0), ("cp2", 1.5), ("cp3", 2.0),
                      ("ch2", -1.5), ("cp1xcp1", 1.0)]:
        model = catalog_model(name)
        rng = np.random.default_rng(33)
        hd = hermitian_data(model, model.sample_point(rng))
        h_av = fiber_average(hd.quartic.poly())
        assert h_av == pytest.approx(4 * lam / (model.dim + 2), abs=1e-9), name
