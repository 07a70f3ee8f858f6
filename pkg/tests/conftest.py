"""Shared fixtures: the standard link-pair catalog and random helpers."""

import numpy as np
import pytest

from spherelink import (
    clifford_torus_curve,
    fourier_curve,
    great_subsphere,
    hopf_fiber,
    small_round_sphere,
)
from spherelink.catalog import alpha_range_scan


def random_rotation(dim: int, rng) -> np.ndarray:
    """Haar-ish random element of SO(dim) via QR with sign fixing."""
    a = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_fourier_pair(rng, scale: float = 0.12, min_sep: float = 0.15):
    """Two perturbed orthogonal circles on S^3, rejection-sampled until the
    pair clears the disjointness thresholds on a dense scan."""
    shape_mask_c = np.array([[1.0], [1.0], [0.5]])
    shape_mask_s = np.array([[0.0], [1.0], [0.5]])
    for _ in range(100):
        cc1 = np.zeros((3, 4))
        sc1 = np.zeros((3, 4))
        cc1[1, 0] = 1.0
        sc1[1, 1] = 1.0
        cc1 += rng.normal(0.0, scale, (3, 4)) * shape_mask_c
        sc1 += rng.normal(0.0, scale, (3, 4)) * shape_mask_s
        cc2 = np.zeros((3, 4))
        sc2 = np.zeros((3, 4))
        cc2[1, 2] = 1.0
        sc2[1, 3] = 1.0
        cc2 += rng.normal(0.0, scale, (3, 4)) * shape_mask_c
        sc2 += rng.normal(0.0, scale, (3, 4)) * shape_mask_s
        try:
            k_curve = fourier_curve(cc1, sc1)
            l_curve = fourier_curve(cc2, sc2)
        except ValueError:
            continue
        amin, amax = alpha_range_scan(k_curve, l_curve, 64)
        if amin > min_sep and amax < np.pi - min_sep:
            return k_curve, l_curve
    raise RuntimeError("could not sample a disjoint perturbed pair")


def unknotted_distant_pair():
    """A small perturbed loop near +e0 and a great circle a quarter-turn
    away; they cannot link (the loop bounds a disk clear of the circle)."""
    cc = np.zeros((2, 4))
    sc = np.zeros((2, 4))
    cc[0, 0] = 0.95
    cc[1, 1] = 0.30
    sc[1, 2] = 0.28
    cc[1, 3] = 0.05
    loop = fourier_curve(cc, sc)
    circle = great_subsphere(1, (2, 3), 3)
    return loop, circle


def small_sphere_pair(k: int, l: int):
    """Shrunk copies of the nested great spheres, still linking once."""
    n = k + l + 1
    d = n + 1
    r = 1.2
    center_k = np.zeros(d)
    center_k[k + 1] = 1.0
    frame_k = np.zeros((k + 1, d))
    for i in range(k + 1):
        frame_k[i, i] = 1.0
    center_l = np.zeros(d)
    center_l[0] = 1.0
    frame_l = np.zeros((l + 1, d))
    for i in range(l + 1):
        frame_l[i, k + 1 + i] = 1.0
    return (small_round_sphere(k, center_k, r, frame_k),
            small_round_sphere(l, center_l, r, frame_l))


def great_pair(k: int, l: int):
    n = k + l + 1
    return (great_subsphere(k, tuple(range(k + 1)), n),
            great_subsphere(l, tuple(range(k + 1, n + 1)), n))


def hopf_pair(generic: bool = True):
    if not generic:
        return hopf_fiber((1, 0, 0, 0)), hopf_fiber((0, 0, 1, 0))
    b = np.array([0.3, -0.2, 0.8, 0.4])
    return hopf_fiber((1, 0, 0, 0)), hopf_fiber(b / np.linalg.norm(b))


def clifford_pair(p: int, q: int, phase: float):
    return clifford_torus_curve(p, q), clifford_torus_curve(p, q, phase)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260808)
