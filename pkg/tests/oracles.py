"""Independent numerical oracles the tests check the fast paths against.

Everything here integrates the defining expressions directly (adaptive
quadrature or dense tensor grids) without going through the reduced
closed forms under test.
"""

import numpy as np
from scipy.integrate import dblquad, quad


def kernel_oracle(ratio, offset, r1, r2):
    """Adaptive-quadrature angular kernel, accurate to ~1e-12."""
    def integrand(phi):
        s = np.sqrt(max(r1 * r1 + r2 * r2 - 2 * r1 * r2 * np.cos(phi), 0.0))
        return np.cos(offset * phi) * np.exp(-3.44 * (s * ratio) ** (5.0 / 3.0))

    val, _ = quad(integrand, 0.0, np.pi, limit=400, epsabs=1e-13, epsrel=1e-13)
    return val / np.pi


def coupling_oracle(ratio, offset):
    """Transfer weight by nested adaptive quadrature (slow, ~1e-8)."""
    def inner(r2, r1):
        k = kernel_oracle(ratio, offset, r1, r2)
        return 16.0 * np.exp(-2.0 * r1 * r1 - 2.0 * r2 * r2) * k * r1 * r2

    val, err = dblquad(inner, 0.0, 4.0, 0.0, 4.0, epsabs=1e-8, epsrel=1e-8)
    return val, err


def brute_operator(spectrum, ratio, m_lo, m_hi, n_rad=48, n_ang=48):
    """Averaged detection operator by direct 4-fold tensor quadrature.

    Integrates u_m*(r1) A(r1) A*(r2) u_m'(r2) C(|r1 - r2|) on a
    (radial x angular)^2 grid without any azimuthal reduction.
    """
    x, wq = np.polynomial.legendre.leggauss(n_rad)
    r = 2.0 * (x + 1.0)
    wr = 2.0 * wq * r
    th = np.arange(n_ang) * 2.0 * np.pi / n_ang
    wt = 2.0 * np.pi / n_ang

    g = 2.0 * np.exp(-r**2) / np.sqrt(2.0 * np.pi)
    field_ang = np.exp(1j * np.outer(th, spectrum.ls)) @ spectrum.coefficients
    a = np.outer(g, field_ang)

    ms = np.arange(m_lo, m_hi + 1)
    modes = np.exp(-1j * np.outer(ms, th))[:, None, :] * g[None, :, None]
    b = (modes * a[None, :, :] * (wr[:, None] * wt)).reshape(ms.size, -1)

    rr = r[:, None, None, None] ** 2 + r[None, None, :, None] ** 2
    cross = 2.0 * np.outer(r, r)[:, None, :, None] * np.cos(
        th[None, :, None, None] - th[None, None, None, :]
    )
    s = np.sqrt(np.maximum(rr - cross, 0.0))
    ck = np.exp(-3.44 * (s * ratio) ** (5.0 / 3.0)).reshape(
        n_rad * n_ang, n_rad * n_ang
    )
    return ms, b @ ck @ b.conj().T
