"""Independent reference computations used only by the test suite."""

import numpy as np
from scipy.special import roots_chebyu

from rmtwave.rmt import nu, nu_inverse


def mollified_collision(rho, k_out, eps, n_fine=40001, n_outer=400):
    """Collision operator with the resonance delta replaced by a Gaussian of width ``eps``.

    The n-integral is done on a dense uniform grid in the dispersion variable,
    so nothing here relies on resolving the delta analytically.
    """
    xf = np.linspace(-2.0, 2.0, n_fine)
    hx = xf[1] - xf[0]
    jac = np.sqrt(np.clip(4.0 - xf**2, 0, None)) / np.pi  # dn = jac dx
    g_rho = jac * rho(nu_inverse(xf))
    cgrid = np.linspace(-4.5, 4.5, 9001)
    # Gaussian-mollified integrals I(c) = int delta_eps(c - x) g(x) dx
    kern = np.exp(-0.5 * ((cgrid[:, None] - xf[None, :]) / eps) ** 2) / (np.sqrt(2 * np.pi) * eps)
    I_rho = kern @ g_rho * hx
    I_one = kern @ jac * hx
    u, w = roots_chebyu(n_outer)
    y = 2.0 * u  # nu(l) and nu(m) with weight sqrt(4 - y^2)
    wy = 4.0 * w / np.pi  # includes the 1/pi Jacobian
    Y, Z = np.meshgrid(y, y, indexing="ij")
    W = np.outer(wy, wy)
    rl = rho(nu_inverse(Y))
    rm = rho(nu_inverse(Z))
    out = []
    for k in np.atleast_1d(k_out):
        rk = rho(k)
        c = nu(k) - Y + Z
        ir = np.interp(c, cgrid, I_rho)
        i1 = np.interp(c, cgrid, I_one)
        F = (rl * rm - rk * rm + rk * rl) * ir - rk * rl * rm * i1
        out.append(0.5 * np.pi * np.sum(W * F))
    return np.array(out)


def mollified_collision_extrapolated(rho, k_out, eps=(0.04, 0.02, 0.01)):
    """Richardson extrapolation in ``eps^2`` of :func:`mollified_collision`."""
    vals = [mollified_collision(rho, k_out, e) for e in eps]
    e2 = np.array(eps) ** 2
    # fit a + b eps^2 + c eps^4 exactly through the three values
    V = np.vstack([np.ones(3), e2, e2**2]).T
    coef = np.linalg.solve(V, np.array(vals))
    return coef[0], vals
