import numpy as np
import pytest

from oracles import space_form_tensor
from spherebundle.errors import (ChartDomainError, DegeneratePlaneError,
                                 FlatModelError, FrameError, JetOrderError,
                                 NotEinsteinError)
from spherebundle.geometry import (build_frame, chart_curvature, curvature,
                                   einstein_constant, finite_difference_metric_jet,
                                   frame_j, max_abs_sec, metric_jet, point,
                                   sectional, standard_j)
from spherebundle.models import catalog_model, fubini_study, normalize, scaled


# ---------------------------------------------------------------------------
# metric jets
# ---------------------------------------------------------------------------

class TestMetricJet:
    def test_flat_torus_all_derivatives_zero(self, torus4):
        mj = metric_jet(torus4, point([0.3, 1.0, -2.0, 0.5]), 2)
        assert np.array_equal(mj.g, np.eye(4))
        assert not mj.derivs[1].any()
        assert not mj.derivs[2].any()

    def test_unit_sphere_origin_value(self, s2):
        mj = metric_jet(s2, point([0.0, 0.0]), 0)
        assert np.allclose(mj.g, 4.0 * np.eye(2))

    def test_sphere_closed_form_off_origin(self, s2):
        u = np.array([0.3, -0.4])
        mj = metric_jet(s2, point(u), 0)
        expect = 4.0 / (1 + u @ u) ** 2 * np.eye(2)
        assert np.allclose(mj.g, expect, atol=1e-14)

    def test_fs_first_derivatives_vanish_at_origin(self, cp1):
        mj = metric_jet(cp1, point([0.0, 0.0]), 1)
        assert np.max(np.abs(mj.derivs[1])) == 0.0
        # cross-check with the finite-difference fallback
        fd = finite_difference_metric_jet(
            lambda x: cp1.metric_value(point(x)), np.zeros(2), 1)
        assert np.max(np.abs(fd.derivs[1])) < 1e-10

    def test_fd_fallback_matches_jets_to_second_order(self, cp2):
        coords = np.array([0.2, -0.1, 0.3, 0.05])
        mj = metric_jet(cp2, point(coords), 2)
        fd = finite_difference_metric_jet(
            lambda x: cp2.metric_value(point(x)), coords, 2)
        assert np.max(np.abs(fd.g - mj.g)) < 1e-14
        assert np.max(np.abs(fd.derivs[1] - mj.derivs[1])) < 1e-10
        assert np.max(np.abs(fd.derivs[2] - mj.derivs[2])) < 1e-6

    def test_derivative_index_symmetry(self, cp2, rng):
        mj = metric_jet(cp2, point(rng.normal(size=4) * 0.3), 2)
        d2 = mj.derivs[2]
        assert np.allclose(d2, d2.transpose(0, 1, 3, 2))
        assert np.allclose(mj.g, mj.g.T)

    def test_order_cap_and_chart_domain(self, ch2):
        with pytest.raises(JetOrderError):
            metric_jet(ch2, point([0.0, 0.0, 0.0, 0.0]), 5)
        with pytest.raises(ChartDomainError):
            metric_jet(ch2, point([0.99, 0.0, 0.0, 0.0]), 0)


# ---------------------------------------------------------------------------
# frames
# ---------------------------------------------------------------------------

class TestFrames:
    def test_torus_adapted_frame_from_seed(self, torus4):
        fr = build_frame(torus4, point([0.0, 0.0, 0.0, 0.0]), seed_vector=[1, 0, 0, 0])
        assert np.allclose(fr.vectors[:, 0], [1, 0, 0, 0])
        assert np.allclose(fr.vectors[:, 1], [0, 1, 0, 0])
        assert fr.adapted

    def test_cp2_frame_orthonormality(self, cp2, rng):
        pt = cp2.sample_point(rng)
        fr = build_frame(cp2, pt)
        g = cp2.metric_value(pt)
        gram = fr.vectors.T @ g @ fr.vectors
        assert np.max(np.abs(gram - np.eye(4))) < 1e-12

    def test_cp2_seed_normalization(self, cp2):
        # g = 4 I at the origin, so a chart vector with g(v,v) = 4 halves
        fr = build_frame(cp2, point([0, 0, 0, 0]), seed_vector=[1, 0, 0, 0])
        assert np.allclose(fr.vectors[:, 0], [0.5, 0, 0, 0])

    def test_adaptation_e2_is_J_e1(self, cp2, rng):
        for _ in range(5):
            pt = cp2.sample_point(rng)
            fr = build_frame(cp2, pt, seed_vector=rng.normal(size=4))
            J = cp2.j_value(pt)
            assert np.max(np.abs(J @ fr.vectors[:, 0] - fr.vectors[:, 1])) < 1e-12
            assert np.max(np.abs(J @ fr.vectors[:, 2] - fr.vectors[:, 3])) < 1e-12

    def test_frame_j_is_standard_block(self, cp1xcp1, rng):
        pt = cp1xcp1.sample_point(rng)
        fr = build_frame(cp1xcp1, pt)
        assert np.max(np.abs(frame_j(cp1xcp1, pt, fr) - standard_j(4))) < 1e-12

    def test_zero_seed_rejected(self, torus4):
        with pytest.raises(FrameError):
            build_frame(torus4, point([0, 0, 0, 0]), seed_vector=[0, 0, 0, 1e-15])

    def test_degenerate_metric_rejected(self):
        from spherebundle.errors import DegenerateMetricError
        from spherebundle.models import Chart, ModelManifold

        sick = ModelManifold(
            name="degenerate", dim=2, charts=[Chart(0, 10.0)],
            metric_fn=lambda x, chart_id=0: [[x[0] * 0.0 + 1.0, 0.0], [0.0, 0.0]],
            sample_fn=lambda rng: np.zeros(2))
        with pytest.raises(DegenerateMetricError):
            build_frame(sick, point([0.0, 0.0]))
        with pytest.raises(DegenerateMetricError):
            metric_jet(sick, point([0.0, 0.0]), 0)


# ---------------------------------------------------------------------------
# curvature values
# ---------------------------------------------------------------------------

class TestCurvature:
    def test_flat_torus_curvature_zero(self, torus4):
        c = curvature(torus4, point([0.1, 0.2, 0.3, 0.4]), 1)
        assert np.max(np.abs(c.R)) == 0.0
        assert np.max(np.abs(c.dR)) == 0.0

    def test_unit_sphere_anchor(self, s4, rng):
        # normative sign anchor: every sectional curvature is exactly +1
        for _ in range(3):
            pt = s4.sample_point(rng)
            c = curvature(s4, pt, 0)
            for a in range(4):
                for b in range(a + 1, 4):
                    assert abs(c.R[a, b, a, b] - 1.0) < 1e-12

    def test_cp2_matches_closed_form(self, cp2, rng):
        # max componentwise error against the constant-holomorphic-curvature
        # tensor, written independently from its closed form
        for _ in range(4):
            pt = cp2.sample_point(rng)
            c = curvature(cp2, pt, 0)
            jf = frame_j(cp2, pt, c.frame)
            assert np.max(np.abs(c.R - space_form_tensor(4, 1.0, jf))) < 1e-9

    def test_cp2_component_pattern(self, cp2):
        # adapted frame (e1, Je1, e2, Je2): totally real plane curvatures 1/4
        c = curvature(cp2, point([0, 0, 0, 0]), 0)
        assert c.R[0, 2, 0, 2] == pytest.approx(0.25, abs=1e-12)   # R_1212 in line labels
        assert c.R[0, 2, 1, 3] == pytest.approx(0.25, abs=1e-12)   # R_121*2*
        assert c.R[0, 1, 0, 1] == pytest.approx(1.0, abs=1e-12)    # holomorphic plane

    def test_ricci_trace_is_scalar(self, cp1xcp1, rng):
        c = curvature(cp1xcp1, cp1xcp1.sample_point(rng), 0)
        assert np.trace(c.ricci) == pytest.approx(c.scalar, rel=1e-12)

    @pytest.mark.parametrize("name,npts", [
        ("cp2", 20), ("cp1xcp1", 20), ("ch2", 20), ("s4", 20),
        ("conformal_cp1xcp1", 100),
    ])
    def test_symmetries_and_first_bianchi(self, name, npts):
        model = catalog_model(name)
        rng = np.random.default_rng(11)
        for _ in range(npts):
            c = curvature(model, model.sample_point(rng), 0)
            R = c.R
            assert np.max(np.abs(R + R.transpose(1, 0, 2, 3))) < 1e-8
            assert np.max(np.abs(R + R.transpose(0, 1, 3, 2))) < 1e-8
            assert np.max(np.abs(R - R.transpose(2, 3, 0, 1))) < 1e-8
            b1 = R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)
            assert np.max(np.abs(b1)) < 1e-8

    @pytest.mark.parametrize("name", ["cp2", "conformal_cp1xcp1"])
    def test_second_bianchi(self, name):
        model = catalog_model(name)
        rng = np.random.default_rng(3)
        for _ in range(5):
            c = curvature(model, model.sample_point(rng), 1)
            b2 = (c.dR + np.einsum("becda->abcde", c.dR)
                  + np.einsum("eacdb->abcde", c.dR))
            assert np.max(np.abs(b2)) < 1e-6

    def test_kaehler_j_invariance(self, cp2, rng):
        pt = cp2.sample_point(rng)
        c = curvature(cp2, pt, 0)
        jf = frame_j(cp2, pt, c.frame)
        RJ = np.einsum("abcd,ax,by->xycd", c.R, jf, jf)
        assert np.max(np.abs(RJ - c.R)) < 1e-8

    @pytest.mark.parametrize("name", ["cp1", "cp2", "ch2", "cp1xcp1", "torus4", "s2", "s4"])
    def test_symmetric_models_have_parallel_curvature(self, name):
        model = catalog_model(name)
        rng = np.random.default_rng(5)
        c = curvature(model, model.sample_point(rng), 2)
        assert np.max(np.abs(c.dR)) < 1e-6
        assert np.max(np.abs(c.d2R)) < 1e-6

    @pytest.mark.slow
    def test_cp3_parallel_curvature(self, cp3):
        rng = np.random.default_rng(5)
        c = curvature(cp3, cp3.sample_point(rng), 2)
        assert np.max(np.abs(c.dR)) < 1e-6
        assert np.max(np.abs(c.d2R)) < 1e-6

    def test_ricci_commutation_identity(self, conformal_model):
        # couples d2R to R (x) R: strong independent check of the assembly
        rng = np.random.default_rng(7)
        pt = point([0.2, 0.1, -0.1, 0.15])
        c = curvature(conformal_model, pt, 2)
        R, d2R = c.R, c.d2R
        comm = d2R - d2R.transpose(0, 1, 2, 3, 5, 4)
        rhs = (np.einsum("nmip,pjkl->ijklmn", R, R)
               + np.einsum("nmjp,ipkl->ijklmn", R, R)
               + np.einsum("nmkp,ijpl->ijklmn", R, R)
               + np.einsum("nmlp,ijkp->ijklmn", R, R))
        assert np.max(np.abs(rhs)) > 1e-2  # nontrivial data
        assert np.max(np.abs(comm - rhs)) < 1e-10


# ---------------------------------------------------------------------------
# sectional curvature
# ---------------------------------------------------------------------------

class TestSectional:
    def test_unit_sphere(self, s2):
        c = curvature(s2, point([0.7, -0.2]), 0)
        assert sectional(c, [1, 0], [0, 1]) == pytest.approx(1.0, abs=1e-12)

    def test_cp2_holomorphic_and_real_planes(self, cp2, rng):
        pt = cp2.sample_point(rng)
        c = curvature(cp2, pt, 0)
        jf = frame_j(cp2, pt, c.frame)
        x = np.array([1.0, 0, 0, 0])
        assert sectional(c, x, jf @ x) == pytest.approx(1.0, abs=1e-10)
        assert sectional(c, x, [0, 0, 1, 0]) == pytest.approx(0.25, abs=1e-10)

    def test_gl2_invariance(self, cp1xcp1, rng):
        pt = cp1xcp1.sample_point(rng)
        c = curvature(cp1xcp1, pt, 0)
        x = rng.normal(size=4)
        y = rng.normal(size=4)
        base = sectional(c, x, y)
        for _ in range(10):
            A = rng.normal(size=(2, 2))
            if abs(np.linalg.det(A)) < 0.1:
                continue
            xp = A[0, 0] * x + A[0, 1] * y
            yp = A[1, 0] * x + A[1, 1] * y
            assert sectional(c, xp, yp) == pytest.approx(base, abs=1e-10, rel=1e-10)

    def test_parallel_vectors_rejected(self, s4):
        c = curvature(s4, point([0, 0, 0, 0]), 0)
        with pytest.raises(DegeneratePlaneError):
            sectional(c, [1, 0, 0, 0], [2, 0, 0, 0])


# ---------------------------------------------------------------------------
# Einstein detection, extremes, scaling
# ---------------------------------------------------------------------------

class TestEinsteinAndExtremes:
    def test_flat_torus_einstein_zero(self, torus4):
        assert einstein_constant(torus4) == pytest.approx(0.0, abs=1e-14)

    def test_cp2_einstein_three_halves(self, cp2):
        assert einstein_constant(cp2) == pytest.approx(1.5, abs=1e-10)

    def test_conformal_not_einstein(self, conformal_model):
        with pytest.raises(NotEinsteinError) as err:
            einstein_constant(conformal_model)
        assert err.value.deviation > 1e-3
        assert err.value.point is not None

    def test_max_abs_sec_sphere(self, s4):
        assert max_abs_sec(s4, restarts=16) == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("name", ["cp2", "cp1xcp1"])
    def test_max_abs_sec_matches_sampling_oracle(self, name):
        model = catalog_model(name)
        rng = np.random.default_rng(17)
        found = max_abs_sec(model, restarts=32, rng=rng)
        # oracle: dense random-plane sampling never exceeds the ascent value,
        # and the ascent reaches the closed-form maximum c = 1
        pt = model.sample_point(rng)
        c = curvature(model, pt, 0)
        q1 = rng.standard_normal((20000, 4))
        q2 = rng.standard_normal((20000, 4))
        num = np.einsum("abcd,na,nb,nc,nd->n", c.R, q1, q2, q1, q2)
        den = (np.einsum("na,na->n", q1, q1) * np.einsum("na,na->n", q2, q2)
               - np.einsum("na,na->n", q1, q2) ** 2)
        sampled = np.max(np.abs(num / den))
        assert found >= sampled - 1e-9
        assert found == pytest.approx(1.0, abs=1e-4)

    def test_ch2_max_abs_sec(self, ch2):
        # range of sec is [-1, -1/4]
        assert max_abs_sec(ch2, restarts=32) == pytest.approx(1.0, abs=1e-4)

    def test_metric_scaling_divides_sectional(self, cp2, rng):
        lam = 1.7
        sc = scaled(cp2, lam)
        pt = cp2.sample_point(rng)
        c1 = curvature(cp2, pt, 0)
        c2 = curvature(sc, pt, 0)
        x, y = rng.normal(size=4), rng.normal(size=4)
        assert sectional(c2, x, y) == pytest.approx(sectional(c1, x, y) / lam**2, rel=1e-10)

    def test_normalize_rescales_to_unit_max(self):
        model = fubini_study(2, 2.0)
        nm = normalize(model, restarts=16)
        assert max_abs_sec(nm, restarts=16) == pytest.approx(1.0, abs=1e-4)
        # lambda^2 = 2: the metric doubles
        pt = point([0.1, 0.2, -0.3, 0.05])
        assert np.allclose(nm.metric_value(pt), 2.0 * model.metric_value(pt), rtol=1e-12)

    def test_normalize_flat_rejected(self, torus4):
        with pytest.raises(FlatModelError):
            normalize(torus4)


# ---------------------------------------------------------------------------
# chart independence
# ---------------------------------------------------------------------------

def test_cp1_chart_independence(cp1, rng):
    # the same geometric point in both affine charts gives equal scalars
    for _ in range(5):
        pt0 = cp1.sample_point(rng)
        if np.linalg.norm(pt0.coords) < 0.05:
            continue
        pt1 = cp1.transition(pt0, 1)
        c0 = chart_curvature(cp1, pt0, 0)
        c1 = chart_curvature(cp1, pt1, 0)
        s0 = np.einsum("ik,jl,ijkl->", c0.ginv, c0.ginv, c0.R)
        s1 = np.einsum("ik,jl,ijkl->", c1.ginv, c1.ginv, c1.R)
        assert s0 == pytest.approx(s1, rel=1e-8)
