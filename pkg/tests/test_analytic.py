"""Closed-form flux checks against independent quadrature oracles.

Every closed form in snmesh.analytic is compared here against a route that
shares no code with it: scipy.integrate.quad applied to the raw emission
profile (line integral for pulses, emission-time convolution for sources),
plus a hand-rolled exponential-integral implementation.  Spot values frozen
from those oracles pin the functions against silent regressions.
"""

import numpy as np
import pytest
from scipy.integrate import quad

from snmesh import analytic as an
from snmesh.analytic import SourceSpec

X0 = 0.5
SIGMA = 0.5
T0 = 5.0


def pulse_oracle(profile, x, t, pts=()):
    """e^-t / (2t) times the line integral of the profile over [x-t, x+t]."""
    inner = [p for p in pts if x - t < p < x + t]
    val, _ = quad(profile, x - t, x + t, points=inner, limit=200)
    return np.exp(-t) * val / (2.0 * t)


def square_profile(s):
    return 1.0 if abs(s) <= X0 else 0.0


def gaussian_profile(s):
    return np.exp(-s * s / (SIGMA * SIGMA))


# Oracle-frozen values: (x, t, phi_u) reproduced by the quad routes below.
FROZEN_SQUARE_PULSE = [
    (0.0, 1.0, 0.18393972058572117),
    (0.7, 1.0, 0.14715177646857694),
    (1.2, 1.0, 0.055181916175716356),
    (0.45, 0.2, 0.51170672067373857),
]
FROZEN_GAUSSIAN_PULSE = [
    (0.0, 1.0, 0.16224980455070417),
    (0.8, 1.0, 0.11642275614367367),
    (2.0, 1.0, 0.00038126424630944146),
    (0.3, 0.01, 0.6907085402700186),
]
FROZEN_SQUARE_SOURCE = [
    (0.0, 1.0, 0.5636641704776868),
    (0.3, 1.0, 0.50278186004124448),
    (0.5, 1.0, 0.31606027941427883),
    (0.6, 1.0, 0.18830198723106512),
    (1.2, 1.0, 0.010318213216687633),
    (0.2, 6.0, 0.10951192597167893),
    (3.0, 6.0, 0.0068178637875813373),
]
FROZEN_GAUSSIAN_SOURCE = [
    (0.0, 1.0, 0.50195044684663992),
    (0.7, 1.0, 0.14490089525393723),
    (1.0, 6.0, 0.081068938090950962),
]


class TestFrozenValues:
    @pytest.mark.parametrize("x,t,want", FROZEN_SQUARE_PULSE)
    def test_square_pulse(self, x, t, want):
        assert float(an.phi_u_square_pulse(x, t, X0)) == pytest.approx(want, rel=1e-14)

    @pytest.mark.parametrize("x,t,want", FROZEN_GAUSSIAN_PULSE)
    def test_gaussian_pulse(self, x, t, want):
        assert float(an.phi_u_gaussian_pulse(x, t, SIGMA)) == pytest.approx(want, rel=1e-14)

    @pytest.mark.parametrize("x,t,want", FROZEN_SQUARE_SOURCE)
    def test_square_source(self, x, t, want):
        assert float(an.phi_u_square_source(x, t, X0, T0)) == pytest.approx(want, rel=1e-13)

    @pytest.mark.parametrize("x,t,want", FROZEN_GAUSSIAN_SOURCE)
    def test_gaussian_source(self, x, t, want):
        assert float(an.phi_u_gaussian_source(x, t, SIGMA, T0)) == pytest.approx(want, rel=1e-11)

    def test_plane_pulse(self):
        assert float(an.phi_u_plane(0.3, 1.0)) == pytest.approx(np.exp(-1.0) / 2.0, rel=1e-15)
        assert float(an.phi_u_plane(1.0, 1.0)) == pytest.approx(np.exp(-1.0) / 2.0, rel=1e-15)
        assert float(an.phi_u_plane(1.0000001, 1.0)) == 0.0


class TestQuadOracles:
    """Live dual-route comparison, closed form vs scipy.quad, to 1e-8."""

    @pytest.mark.parametrize("x", [0.0, 0.2, 0.45, 0.55, 0.9, 1.3, 1.49])
    @pytest.mark.parametrize("t", [0.15, 1.0])
    def test_square_pulse(self, x, t):
        want = pulse_oracle(square_profile, x, t, pts=(-X0, X0))
        assert float(an.phi_u_square_pulse(x, t, X0)) == pytest.approx(want, abs=1e-12)

    @pytest.mark.parametrize("x", [0.0, 0.4, 1.1, 2.4])
    @pytest.mark.parametrize("t", [0.02, 0.7, 3.0])
    def test_gaussian_pulse(self, x, t):
        want = pulse_oracle(gaussian_profile, x, t)
        assert float(an.phi_u_gaussian_pulse(x, t, SIGMA)) == pytest.approx(want, abs=1e-12)

    @pytest.mark.parametrize(
        "x,t", [(0.0, 0.3), (0.0, 1.0), (0.35, 1.0), (0.5, 1.0), (0.8, 1.0),
                (1.4, 1.0), (0.1, 6.0), (2.0, 6.0), (5.4, 6.0)]
    )
    def test_square_source(self, x, t):
        def kern(tau):
            elapsed = t - tau
            if elapsed <= 0:
                return float(square_profile(x))
            return pulse_oracle(square_profile, x, elapsed, pts=(-X0, X0))

        pts = [p for p in (t - abs(abs(x) - X0), t - (abs(x) + X0)) if 0 < p < min(t, T0)]
        want, _ = quad(kern, 0.0, min(t, T0), points=pts, limit=400)
        assert float(an.phi_u_square_source(x, t, X0, T0)) == pytest.approx(want, abs=1e-8)

    @pytest.mark.parametrize("x,t", [(0.0, 0.4), (0.0, 1.0), (0.7, 1.0), (1.6, 2.0), (1.0, 6.0)])
    def test_gaussian_source(self, x, t):
        def kern(tau):
            elapsed = t - tau
            if elapsed <= 0:
                return float(gaussian_profile(x))
            return pulse_oracle(gaussian_profile, x, elapsed)

        want, _ = quad(kern, 0.0, min(t, T0), limit=400)
        assert float(an.phi_u_gaussian_source(x, t, SIGMA, T0)) == pytest.approx(want, abs=1e-8)


def ei_reference(y):
    """Ei(y) for y < 0 via the power series (small |y|) or the continued
    fraction for E1 evaluated with the modified Lentz scheme (large |y|)."""
    if y >= 0:
        raise ValueError("reference route covers negative arguments only")
    if y > -6.0:
        total = np.euler_gamma + np.log(abs(y))
        term = 1.0
        for k in range(1, 80):
            term *= y / k
            total += term / k
        return total
    z = -y
    tiny = 1e-300
    f = tiny
    c = f
    d = 0.0
    b = z + 1.0
    a = 1.0
    f = b
    c = b if b != 0 else tiny
    d = 0.0
    for k in range(1, 200):
        a_k = -(k * k)
        b_k = z + 2.0 * k + 1.0
        d = b_k + a_k * d
        d = tiny if d == 0 else d
        c = b_k + a_k / c
        c = tiny if c == 0 else c
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return -np.exp(-z) / f


class TestExponentialIntegral:
    @pytest.mark.parametrize("y", [-0.01, -0.3, -1.0, -2.5, -5.0, -8.0, -15.0, -30.0])
    def test_against_independent_route(self, y):
        assert an.exp_integral_Ei(y) == pytest.approx(ei_reference(y), rel=1e-12)

    def test_small_argument_log_behavior(self):
        y = -1e-8
        assert an.exp_integral_Ei(y) == pytest.approx(np.euler_gamma + np.log(abs(y)), rel=1e-7)


class TestIntegrals:
    """Total uncollided particle counts against quad of the flux itself."""

    @pytest.mark.parametrize(
        "kind,t",
        [("plane-pulse", 0.7), ("square-pulse", 0.4), ("square-pulse", 2.0),
         ("gaussian-pulse", 1.0), ("square-source", 1.5), ("square-source", 6.5),
         ("gaussian-source", 2.0)],
    )
    def test_count_matches_quadrature(self, kind, t):
        spec = SourceSpec(kind=kind, x0=X0, sigma=SIGMA, t0=T0)
        lim = t + X0 + 5 * SIGMA
        val, _ = quad(lambda x: float(an.uncollided_scalar_flux(spec, x, t)),
                      0.0, lim, limit=400)
        assert 2.0 * val == pytest.approx(float(an.uncollided_integral(spec, t)), rel=1e-7)

    def test_closed_form_counts(self):
        t = 1.3
        decay = np.exp(-t)
        assert an.uncollided_integral(SourceSpec("plane-pulse"), t) == pytest.approx(decay)
        assert an.uncollided_integral(
            SourceSpec("square-pulse", x0=X0), t
        ) == pytest.approx(2 * X0 * decay)
        assert an.uncollided_integral(
            SourceSpec("gaussian-pulse", sigma=SIGMA), t
        ) == pytest.approx(SIGMA * np.sqrt(np.pi) * decay)
        # source active: rate * (1 - e^-t); after shutoff the count decays
        src = SourceSpec("square-source", x0=X0, t0=2.0)
        assert an.uncollided_integral(src, 1.0) == pytest.approx(2 * X0 * (1 - np.exp(-1.0)))
        assert an.uncollided_integral(src, 3.0) == pytest.approx(
            2 * X0 * (1 - np.exp(-2.0)) * np.exp(-1.0)
        )

    def test_amplitude_scales_linearly(self):
        base = SourceSpec("gaussian-pulse", sigma=SIGMA)
        double = SourceSpec("gaussian-pulse", sigma=SIGMA, amplitude=2.0)
        x = np.linspace(-2, 2, 9)
        np.testing.assert_allclose(
            an.uncollided_scalar_flux(double, x, 0.8),
            2.0 * an.uncollided_scalar_flux(base, x, 0.8),
            rtol=1e-15,
        )
        assert an.uncollided_integral(double, 0.8) == pytest.approx(
            2.0 * an.uncollided_integral(base, 0.8)
        )


class TestShapeProperties:
    XS = np.linspace(0.0, 3.2, 33)

    @pytest.mark.parametrize(
        "kind,t", [("square-pulse", 0.9), ("gaussian-pulse", 0.9),
                   ("square-source", 1.7), ("gaussian-source", 1.7), ("plane-pulse", 0.9)]
    )
    def test_even_and_nonnegative(self, kind, t):
        spec = SourceSpec(kind=kind, x0=X0, sigma=SIGMA, t0=T0)
        plus = an.uncollided_scalar_flux(spec, self.XS, t)
        minus = an.uncollided_scalar_flux(spec, -self.XS, t)
        np.testing.assert_array_equal(plus, minus)
        assert np.all(plus >= 0.0)

    def test_supports_are_sharp(self):
        t = 0.9
        eps = 1e-9
        assert float(an.phi_u_plane(t + eps, t)) == 0.0
        assert float(an.phi_u_plane(t - eps, t)) > 0.0
        assert float(an.phi_u_square_pulse(t + X0 + eps, t, X0)) == 0.0
        assert float(an.phi_u_square_pulse(t + X0 - eps, t, X0)) > 0.0
        assert float(an.phi_u_square_source(t + X0 + eps, t, X0, T0)) == 0.0

    def test_wavefronts_take_inside_limit(self):
        # closed supports: the wavefront point equals the one-sided limit
        t = 0.9
        assert float(an.phi_u_plane(t, t)) == pytest.approx(np.exp(-t) / (2 * t))
        inside = float(an.phi_u_square_pulse(t + X0 - 1e-11, t, X0))
        front = float(an.phi_u_square_pulse(t + X0, t, X0))
        assert front == pytest.approx(inside, abs=1e-10)

    def test_square_source_continuous_at_edge(self):
        # the x0 kink is eta*ln(eta): continuous, with a divergent derivative
        t = 1.0
        at = float(an.phi_u_square_source(X0, t, X0, T0))
        near = float(an.phi_u_square_source(X0 + 1e-9, t, X0, T0))
        assert np.isfinite(at)
        assert at == pytest.approx(near, abs=1e-6)


class TestManufactured:
    def test_residual_vanishes_by_finite_differences(self):
        # (d_t + mu d_x + 1) psi - phi / 2 must equal source / 2 pointwise
        x0 = 0.1
        eps = 1e-5
        for x in (-1.3, -0.2, 0.0, 0.7, 1.1):
            for mu, t in ((-0.9, 0.8), (0.3, 0.8), (1.0, 1.6)):
                dpsi_dt = (an.mms_solution(x, t + eps, x0) - an.mms_solution(x, t - eps, x0)) / (2 * eps)
                dpsi_dx = (an.mms_solution(x + eps, t, x0) - an.mms_solution(x - eps, t, x0)) / (2 * eps)
                lhs = dpsi_dt + mu * dpsi_dx + an.mms_solution(x, t, x0)
                rhs = 0.5 * an.mms_phi(x, t, x0) + 0.5 * an.mms_source(x, mu, t, x0)
                assert lhs == pytest.approx(rhs, abs=5e-9)

    def test_support_expands_with_time(self):
        x0 = 0.1
        assert float(an.mms_solution(0.5, 0.0, x0)) == 0.0
        assert float(an.mms_solution(0.5, 1.0, x0)) > 0.0
        assert float(an.mms_phi(0.0, 0.0, x0)) == pytest.approx(1.0)

    def test_phi_is_twice_psi(self):
        x = np.linspace(-1, 1, 7)
        np.testing.assert_allclose(
            an.mms_phi(x, 0.6, 0.1), 2.0 * an.mms_solution(x, 0.6, 0.1), rtol=1e-15
        )


class TestScaling:
    @pytest.mark.parametrize("kind,kw", [
        ("square-pulse", dict(x0=X0)),
        ("gaussian-pulse", dict(sigma=SIGMA)),
        ("plane-pulse", dict()),
    ])
    @pytest.mark.parametrize("c", [0.8, 1.2])
    def test_identity_exact_on_uncollided_flux(self, kind, kw, c):
        # the transform also solves the pure-absorber problem, so the
        # closed-form uncollided fluxes must satisfy it to roundoff
        spec = SourceSpec(kind=kind, c=c, **kw)
        scaled, t_s = an.scaled_parameters(spec, 1.0)
        bench = SourceSpec(kind=kind, c=1.0, **kw)
        xs = np.linspace(-2.5, 2.5, 41)
        lhs = an.uncollided_scalar_flux(scaled, xs, t_s)
        rhs = c * np.exp(-(1.0 - c) * t_s) * an.uncollided_scalar_flux(bench, c * xs, c * t_s)
        np.testing.assert_allclose(lhs, rhs, atol=1e-15)

    def test_parameter_map(self):
        spec = SourceSpec("square-pulse", c=0.8, x0=0.5)
        scaled, t_s = an.scaled_parameters(spec, 1.0)
        assert scaled.x0 == pytest.approx(0.625)
        assert scaled.amplitude == pytest.approx(0.8)
        assert t_s == pytest.approx(1.25)
        g = SourceSpec("gaussian-pulse", c=1.2, sigma=0.5)
        gs, gt = an.scaled_parameters(g, 1.2)
        assert gs.sigma == pytest.approx(0.5 / 1.2)
        assert gs.amplitude == pytest.approx(1.2)
        assert gt == pytest.approx(1.0)
        p = SourceSpec("plane-pulse", c=0.8)
        ps, _ = an.scaled_parameters(p, 1.0)
        assert ps.amplitude == 1.0 and ps.x0 == 0.0

    def test_rejects_non_pulse_kinds(self):
        with pytest.raises(ValueError):
            an.scaled_parameters(SourceSpec("square-source", x0=X0, t0=T0), 1.0)
        with pytest.raises(ValueError):
            an.scaled_parameters(SourceSpec("mms", x0=0.1), 1.0)

    def test_scale_solution_applies_transform(self):
        sol = lambda x, mu, t: np.asarray(x) + 10.0 * t
        got = an.scale_solution(sol, 0.5, 2.0, 0.0, 1.0)
        assert got == pytest.approx(0.5 * np.exp(-0.5) * (1.0 + 5.0))


class TestKinkRadii:
    def test_smooth_profiles_have_none(self):
        assert an.kink_radii(SourceSpec("gaussian-pulse", sigma=SIGMA), 1.0, True) == ()
        assert an.kink_radii(SourceSpec("mms", x0=0.1), 1.0, True) == ()

    def test_square_pulse_fronts(self):
        spec = SourceSpec("square-pulse", x0=X0)
        assert an.kink_radii(spec, 0.2, True) == (abs(0.2 - X0), 0.2 + X0)
        assert an.kink_radii(spec, 2.0, True) == (1.5, 2.5)
        assert an.kink_radii(spec, 2.0, False) == (X0,)

    def test_plane_front_moves(self):
        assert an.kink_radii(SourceSpec("plane-pulse"), 0.8, True) == (0.8,)

    def test_square_source_adds_shutoff_fronts(self):
        spec = SourceSpec("square-source", x0=X0, t0=2.0)
        during = an.kink_radii(spec, 1.0, True)
        assert set(during) == {X0, abs(1.0 - X0), 1.0 + X0}
        after = an.kink_radii(spec, 3.0, True)
        assert abs(3.0 - 2.0 - X0) in after and abs(3.0 - 2.0 + X0) in after


class TestInitialData:
    def test_pulse_profiles(self):
        xs = np.array([0.0, 0.49, 0.51, 2.0])
        sq = an.initial_psi(SourceSpec("square-pulse", x0=X0), xs)
        np.testing.assert_allclose(sq, [0.5, 0.5, 0.0, 0.0])
        g = an.initial_psi(SourceSpec("gaussian-pulse", sigma=SIGMA), np.array([0.0]))
        assert g[0] == pytest.approx(0.5)
        # plane delta box: height amp / (4 w) inside |x| <= w, total mass
        # 2 * w * 2 * (amp / (4 w)) = amp, and spec.x0 must not leak in
        w = 0.125
        p = an.initial_psi(SourceSpec("plane-pulse", x0=0.25),
                           np.array([0.0, 0.5 * w, 2.0 * w, 0.25]),
                           plane_half_width=w)
        np.testing.assert_allclose(p[:2], 0.25 / w)
        np.testing.assert_allclose(p[2:], 0.0)
        with pytest.raises(ValueError):
            an.initial_psi(SourceSpec("plane-pulse"), np.array([0.0]))

    def test_sources_start_empty(self):
        xs = np.linspace(-1, 1, 5)
        assert np.all(an.initial_psi(SourceSpec("square-source", x0=X0, t0=T0), xs) == 0.0)

    def test_volumetric_source_shuts_off(self):
        spec = SourceSpec("square-source", x0=X0, t0=2.0)
        xs = np.array([0.0, 0.6])
        np.testing.assert_allclose(an.volumetric_source(spec, xs, 1.0), [1.0, 0.0])
        assert np.all(an.volumetric_source(spec, xs, 2.5) == 0.0)
        g = SourceSpec("gaussian-source", sigma=SIGMA, t0=2.0)
        assert float(an.volumetric_source(g, np.array([0.0]), 1.0)[0]) == pytest.approx(1.0)


class TestSpecValidation:
    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            SourceSpec("ring-pulse")
        with pytest.raises(ValueError):
            SourceSpec("square-pulse", x0=0.0)
        with pytest.raises(ValueError):
            SourceSpec("gaussian-pulse", sigma=-1.0)
        with pytest.raises(ValueError):
            SourceSpec("square-source", x0=X0, t0=0.0)
        with pytest.raises(ValueError):
            SourceSpec("gaussian-pulse", sigma=SIGMA, c=-0.1)
        with pytest.raises(ValueError):
            SourceSpec("mms", x0=0.1, c=0.9)

    def test_time_domain_guards(self):
        with pytest.raises(ValueError):
            an.phi_u_plane(0.0, 0.0)
        with pytest.raises(ValueError):
            an.phi_u_square_pulse(0.0, -0.5, X0)
        assert np.all(an.phi_u_square_source(np.array([0.3]), 0.0, X0, T0) == 0.0)
