"""Product quadrature grid on the unit 2-sphere.

Polar angle uses Gauss-Legendre nodes in ``x = cos(theta)``, azimuth is
uniform. Tangential derivatives are spectral: Fourier in azimuth, and in the
polar direction a parity-aware polynomial differentiation (even azimuthal
modes are polynomials in ``x``, odd modes are ``sin(theta)`` times one).
"""

from __future__ import annotations

from functools import cached_property

import numpy as np


def _fourier_diff_matrix(n: int) -> np.ndarray:
    # derivative of the trigonometric interpolant, n even
    h = 2.0 * np.pi / n
    k = np.arange(n)
    diff = k[:, None] - k[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        d = 0.5 * (-1.0) ** diff / np.tan(diff * h / 2.0)
    d[diff == 0] = 0.0
    return d


def _poly_diff_matrix(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    # barycentric weights of Gauss-Legendre points: (-1)^j sqrt((1-x_j^2) w_j)
    order = np.argsort(x)
    sign = np.empty_like(x)
    sign[order] = (-1.0) ** np.arange(x.size)
    lam = sign * np.sqrt((1.0 - x**2) * w)
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    d = (lam[None, :] / lam[:, None]) / dx
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    return d


class SphereGrid:
    """Immutable Gauss-Legendre x uniform grid on S^2.

    Parameters
    ----------
    ntheta, nphi : int
        Number of polar and azimuthal nodes. ``nphi`` must be even.
    n : int
        Hypersurface dimension. Only ``n = 2`` (ambient R^3) is supported.
    """

    def __init__(self, ntheta: int = 64, nphi: int = 128, n: int = 2):
        if n != 2:
            raise NotImplementedError("only n = 2 (surfaces in R^3) is supported")
        if ntheta < 2 or nphi < 4 or nphi % 2:
            raise ValueError("need ntheta >= 2 and an even nphi >= 4")
        self.n = n
        self.ntheta = int(ntheta)
        self.nphi = int(nphi)

        x, wx = np.polynomial.legendre.leggauss(self.ntheta)
        x, wx = x[::-1].copy(), wx[::-1].copy()  # theta ascending
        theta = np.arccos(x)
        phi = 2.0 * np.pi * np.arange(self.nphi) / self.nphi

        self.theta = theta
        self.phi = phi
        self.cos_theta = x
        self.sin_theta = np.sin(theta)
        self.weights = np.outer(wx, np.full(self.nphi, 2.0 * np.pi / self.nphi))

        st, ct = self.sin_theta[:, None], x[:, None]
        sp, cp = np.sin(phi)[None, :], np.cos(phi)[None, :]
        self.directions = np.stack([st * cp, st * sp, ct * np.ones_like(cp)], axis=-1)
        self.e_theta = np.stack([ct * cp, ct * sp, -st * np.ones_like(cp)], axis=-1)
        self.e_phi = np.stack([-sp * np.ones_like(st), cp * np.ones_like(st),
                               np.zeros((self.ntheta, self.nphi))], axis=-1)

        dx = _poly_diff_matrix(x, wx)
        s = self.sin_theta
        self._d_even = -s[:, None] * dx
        self._d_odd = np.diag(x / s) - (s**2)[:, None] * dx / s[None, :]
        self._d_phi = _fourier_diff_matrix(self.nphi)

        for arr in (self.theta, self.phi, self.cos_theta, self.sin_theta, self.weights,
                    self.directions, self.e_theta, self.e_phi, self._d_even,
                    self._d_odd, self._d_phi):
            arr.setflags(write=False)

    def __repr__(self) -> str:
        return f"SphereGrid(ntheta={self.ntheta}, nphi={self.nphi})"

    def __eq__(self, other) -> bool:
        return (isinstance(other, SphereGrid) and self.ntheta == other.ntheta
                and self.nphi == other.nphi and self.n == other.n)

    def __hash__(self) -> int:
        return hash((self.n, self.ntheta, self.nphi))

    def __reduce__(self):
        return (SphereGrid, (self.ntheta, self.nphi, self.n))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ntheta, self.nphi)

    @property
    def size(self) -> int:
        return self.ntheta * self.nphi

    @cached_property
    def total_measure(self) -> float:
        return float(self.weights.sum())

    def integrate(self, f: np.ndarray) -> float:
        """Integrate nodal values ``f`` over the sphere."""
        return float(np.sum(self.weights * f))

    def _parity_split(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        even = 0.5 * (f + np.roll(f, self.nphi // 2, axis=1))
        return even, f - even

    def d_theta(self, f: np.ndarray) -> np.ndarray:
        even, odd = self._parity_split(f)
        return self._d_even @ even + self._d_odd @ odd

    def d_theta_adjoint(self, g: np.ndarray) -> np.ndarray:
        a = self._d_even.T @ g
        b = self._d_odd.T @ g
        a_even, _ = self._parity_split(a)
        _, b_odd = self._parity_split(b)
        return a_even + b_odd

    def d_phi(self, f: np.ndarray) -> np.ndarray:
        return f @ self._d_phi.T

    def d_phi_adjoint(self, g: np.ndarray) -> np.ndarray:
        return g @ self._d_phi

    @cached_property
    def nyquist_pattern(self) -> np.ndarray:
        """(-1)^k over azimuth: the mode the spectral phi-derivative cannot see."""
        pat = (-1.0) ** np.arange(self.nphi)
        pat.setflags(write=False)
        return pat

    def remove_nyquist(self, f: np.ndarray) -> np.ndarray:
        """Drop the azimuthal Nyquist component of a nodal field."""
        pat = self.nyquist_pattern
        return f - np.outer(f @ pat / self.nphi, pat)

    def surface_gradient(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Components of the tangential gradient along e_theta and e_phi."""
        return self.d_theta(f), self.d_phi(f) / self.sin_theta[:, None]
