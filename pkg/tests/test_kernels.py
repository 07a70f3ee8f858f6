import numpy as np
import pytest

from spherelink.kernels import (
    KernelEvaluator,
    _phi_numeric,
    convolution,
    get_evaluator,
    phi,
    phi_kernel_ratio,
    stable_sin,
)


def gl(a, b, m=160):
    x, w = np.polynomial.legendre.leggauss(m)
    return (b + a) / 2 + (b - a) / 2 * x, (b - a) / 2 * w


def phi_reference(k, l, alpha, m=160):
    """Independent oracle: plain Gauss-Legendre of the defining integral."""
    beta, w = gl(alpha, np.pi, m)
    return float(np.sum(w * np.sin(beta - alpha) ** k * np.sin(beta) ** l))


def conv_reference(k, l, alpha, m=160):
    beta, w = gl(0.0, np.pi, m)
    return float(np.sum(w * np.sin(alpha - beta) ** k * np.sin(beta) ** l))


ALPHAS = np.linspace(0.0, np.pi, 256)


class TestClosedForms:
    def test_phi_11(self):
        expected = 0.5 * ((np.pi - ALPHAS) * np.cos(ALPHAS) + np.sin(ALPHAS))
        assert np.max(np.abs(phi(1, 1, ALPHAS) - expected)) < 1e-14

    def test_phi_12_and_symmetry(self):
        expected = (1 + np.cos(ALPHAS)) ** 2 / 3
        assert np.max(np.abs(phi(1, 2, ALPHAS) - expected)) < 1e-14
        assert np.max(np.abs(phi(2, 1, ALPHAS) - expected)) < 1e-14

    def test_phi_00(self):
        assert np.max(np.abs(phi(0, 0, ALPHAS) - (np.pi - ALPHAS))) < 1e-14

    def test_conv_11(self):
        expected = -np.pi / 2 * np.cos(ALPHAS)
        assert np.max(np.abs(convolution(1, 1, ALPHAS) - expected)) < 1e-14

    def test_conv_22(self):
        expected = np.pi / 8 * (1 + 2 * np.cos(ALPHAS) ** 2)
        assert np.max(np.abs(convolution(2, 2, ALPHAS) - expected)) < 1e-14

    def test_conv_11_at_right_angle(self):
        assert convolution(1, 1, np.pi / 2) == pytest.approx(0.0, abs=1e-15)


class TestPhiGeneral:
    def test_vanishes_at_pi(self):
        for k in range(5):
            for l in range(5):
                assert abs(phi(k, l, np.pi)) < 1e-15

    def test_right_angle_moment(self):
        # phi at pi/2 equals the [0, pi/2] moment of sin^k cos^l
        theta, w = gl(0.0, np.pi / 2)
        for k, l in [(1, 1), (2, 2), (1, 3), (0, 1), (3, 2)]:
            moment = float(np.sum(w * np.sin(theta) ** k * np.cos(theta) ** l))
            assert phi(k, l, np.pi / 2) == pytest.approx(moment, abs=1e-12)

    def test_against_reference_quadrature(self):
        for k, l in [(1, 1), (2, 2), (1, 3), (0, 4), (4, 3)]:
            for a in [0.1, 0.9, 2.0, 3.0]:
                assert phi(k, l, a) == pytest.approx(phi_reference(k, l, a), abs=1e-12)

    def test_range_validation(self):
        with pytest.raises(ValueError):
            phi(1, 1, -0.1)
        with pytest.raises(ValueError):
            phi(1, 1, 3.3)

    def test_scalar_return(self):
        assert isinstance(phi(2, 2, 1.0), float)
        assert isinstance(convolution(2, 3, 1.0), float)
        assert isinstance(phi_kernel_ratio(2, 2, 1.0), float)


class TestKernelRatio:
    def test_closed_points(self):
        assert phi_kernel_ratio(1, 1, np.pi / 2) == pytest.approx(0.5, abs=1e-14)
        assert phi_kernel_ratio(1, 2, np.pi / 2) == pytest.approx(1 / 3, abs=1e-14)

    def test_limit_at_pi(self):
        # independent high-precision quotient at alpha = pi - 1e-4: the
        # substituted form eps * int_0^1 sin^k(eps(1-w)) sin^l(eps w) dw
        # keeps full relative precision
        eps = 1e-4
        w, q = gl(0.0, 1.0, 200)
        for k, l in [(1, 1), (1, 2), (2, 2), (1, 3)]:
            n = k + l + 1
            quotient = eps * float(
                np.sum(q * np.sin(eps * (1 - w)) ** k * np.sin(eps * w) ** l)
            ) / np.sin(np.pi - eps) ** n
            assert phi_kernel_ratio(k, l, np.pi - eps) == pytest.approx(quotient, abs=1e-9)
        assert phi_kernel_ratio(1, 1, np.pi) == pytest.approx(1 / 6, abs=1e-12)

    def test_branch_agreement_at_switchover(self):
        # quotient branch and series branch must agree near pi - 1e-3
        for k, l in [(1, 1), (1, 2), (2, 2), (1, 3), (0, 1)]:
            ev = get_evaluator(k, l)
            a = np.pi - 1e-3
            below = float(np.asarray(ev.kernel_ratio(a - 1e-12)))
            above = float(np.asarray(ev.kernel_ratio(a + 1e-12)))
            assert abs(below - above) < 1e-9

    def test_error_below_min(self):
        with pytest.raises(ValueError):
            phi_kernel_ratio(1, 1, 1e-9)

    def test_matches_quotient_midrange(self):
        a = np.linspace(0.2, 2.8, 40)
        for k, l in [(2, 2), (1, 3), (0, 1)]:
            n = k + l + 1
            expected = np.array([phi_reference(k, l, x) for x in a]) / np.sin(a) ** n
            got = phi_kernel_ratio(k, l, a)
            rel = np.max(np.abs(got - expected) / np.maximum(1.0, np.abs(expected)))
            assert rel < 1e-12


class TestIdentities:
    def test_symmetry_grid(self):
        alphas = np.linspace(0.0, np.pi, 256)
        for k in range(5):
            for l in range(k + 1, 5):
                d = np.max(np.abs(np.asarray(phi(k, l, alphas)) - np.asarray(phi(l, k, alphas))))
                assert d < 1e-11, (k, l, d)

    def test_reflection(self, rng):
        # phi(pi - a) = (-1)^k * integral over [0, a] of sin^k(b - a) sin^l(b)
        for _ in range(60):
            k = int(rng.integers(0, 5))
            l = int(rng.integers(0, 5))
            a = float(rng.uniform(0.05, np.pi - 0.05))
            beta, w = gl(0.0, a)
            rhs = (-1) ** k * float(np.sum(w * np.sin(beta - a) ** k * np.sin(beta) ** l))
            assert phi(k, l, np.pi - a) == pytest.approx(rhs, abs=1e-11)

    def test_convolution_identity(self, rng):
        # phi(a) + (-1)^k phi(pi - a) = (-1)^k conv(a)
        for _ in range(60):
            k = int(rng.integers(0, 5))
            l = int(rng.integers(0, 5))
            a = float(rng.uniform(0.0, np.pi))
            lhs = phi(k, l, a) + (-1) ** k * phi(k, l, np.pi - a)
            rhs = (-1) ** k * convolution(k, l, a)
            assert lhs == pytest.approx(rhs, abs=1e-11)

    def test_u_substitution(self, rng):
        # int_0^1 (pi - a) A^k B^l du = phi(a) with
        # A = sin(a) cos(u(pi-a)) + cos(a) sin(u(pi-a)), B = sin(u(pi-a))
        u, w = gl(0.0, 1.0, 128)
        for _ in range(60):
            k = int(rng.integers(0, 5))
            l = int(rng.integers(0, 5))
            a = float(rng.uniform(0.0, np.pi))
            eta = np.pi - a
            a_fac = np.sin(a) * np.cos(u * eta) + np.cos(a) * np.sin(u * eta)
            b_fac = np.sin(u * eta)
            lhs = eta * float(np.sum(w * a_fac**k * b_fac**l))
            assert lhs == pytest.approx(phi(k, l, a), abs=1e-11)


class TestEvaluator:
    def test_modes(self):
        assert KernelEvaluator(1, 1).mode == "closed_form"
        assert KernelEvaluator(2, 1).mode == "closed_form"
        assert KernelEvaluator(0, 0).mode == "closed_form"
        assert KernelEvaluator(2, 2).mode == "numeric"
        assert KernelEvaluator(1, 1).conv_mode == "closed_form"
        assert KernelEvaluator(2, 2).conv_mode == "closed_form"
        assert KernelEvaluator(1, 2).conv_mode == "numeric"

    def test_invalid_orders(self):
        with pytest.raises(ValueError):
            KernelEvaluator(-1, 2)
        with pytest.raises(ValueError):
            KernelEvaluator(1, 1, numeric_nodes=8)

    def test_fast_paths_match_direct(self):
        alphas = np.linspace(0.0, np.pi, 257)
        for k, l in [(2, 2), (1, 3), (0, 2)]:
            ev = KernelEvaluator(k, l)
            assert np.max(np.abs(ev.phi_fast(alphas) - _phi_numeric(k, l, alphas))) < 1e-12
            assert np.max(np.abs(ev.convolution_fast(alphas) - ev.convolution(alphas))) < 1e-12

    def test_stable_sin(self):
        a = np.array([0.0, 1e-9, np.pi / 2, np.pi - 1e-9, np.pi])
        assert np.allclose(stable_sin(a), np.sin(np.minimum(a, np.pi - a)))
        # full relative accuracy near pi, unlike naive sin
        eps = 1e-7
        assert stable_sin(np.pi - eps) == pytest.approx(np.sin(eps), rel=1e-15)
