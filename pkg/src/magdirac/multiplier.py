"""Radial Morawetz multiplier phi_R and the positivity algebra that fixes M."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .lattice import Grid

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_BUMP_POWER = 8


@dataclass(frozen=True)
class Multiplier:
    """phi_R with phi'(r) = M + r/(3R) for r <= R and M + 1/2 - R^2/(6 r^2) beyond.

    With ``s > 0`` every radial quantity is the even extension convolved with
    the bump (1 - t^2/s^2)^8 on [-s, s], which makes phi smooth in 3-D.
    """

    R: float
    M: float = 0.0
    s: float = 0.0

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"multiplier radius must be positive, got {self.R}")
        if self.M < 0:
            raise ValueError(f"M must be nonnegative, got {self.M}")
        if self.s < 0:
            raise ValueError(f"smoothing width must be nonnegative, got {self.s}")

    # exact piecewise profile
    def _phi(self, r):
        R, M = self.R, self.M
        return np.where(r <= R, M * r + r ** 2 / (6 * R),
                        M * r + 0.5 * r - 0.5 * R + R ** 2 / (6 * np.maximum(r, R)))

    def _dphi(self, r):
        R, M = self.R, self.M
        return np.where(r <= R, M + r / (3 * R), M + 0.5 - R ** 2 / (6 * np.maximum(r, R) ** 2))

    def _d2phi(self, r):
        R = self.R
        return np.where(r <= R, 1.0 / (3 * R), R ** 2 / (3 * np.maximum(r, R) ** 3))

    @cached_property
    def _bump_norm(self) -> float:
        return float(np.sum(_GL_WEIGHTS * (1 - _GL_NODES ** 2) ** _BUMP_POWER))

    def _bump(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(np.abs(t) < self.s, (1 - (t / self.s) ** 2) ** _BUMP_POWER, 0.0) / (self._bump_norm * self.s)

    def _mollify(self, func, r, parity: int):
        """(f_e * bump)(r), f_e the even (parity=+1) or odd (-1) extension of f.

        Integration is split at the kinks of the extended profile
        (|r - t| in {0, R}) so Gauss-Legendre stays accurate.
        """
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(r)
        s = self.s
        for idx, ri in np.ndenumerate(r):
            pts = {-s, s}
            for kink in (ri, ri - self.R, ri + self.R):
                if -s < kink < s:
                    pts.add(kink)
            pts = sorted(pts)
            total = 0.0
            for a, b in zip(pts[:-1], pts[1:]):
                t = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
                x = ri - t
                vals = func(np.abs(x)) * (np.sign(x) if parity < 0 else 1.0)
                total += 0.5 * (b - a) * np.sum(_GL_WEIGHTS * vals * self._bump(t))
            out[idx] = total
        return out

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        if self.s == 0:
            return self._phi(r)
        return self._mollify(self._phi, r, +1).reshape(r.shape)

    def dphi(self, r):
        r = np.asarray(r, dtype=float)
        if self.s == 0:
            return self._dphi(r)
        return self._mollify(self._dphi, r, -1).reshape(r.shape)

    def d2phi(self, r):
        r = np.asarray(r, dtype=float)
        if self.s == 0:
            return self._d2phi(r)
        # the odd extension of phi' jumps by 2M at the origin
        return (self._mollify(self._d2phi, r, +1).reshape(r.shape) + 2 * self.M * self._bump(r))

    def laplacian(self, r):
        """Delta phi = phi'' + 2 phi'/r, continued by 3 phi''(0) at r = 0 when smooth."""
        r = np.asarray(r, dtype=float)
        if self.s == 0:
            R, M = self.R, self.M
            with np.errstate(divide="ignore"):
                return np.where(r <= R, 1.0 / R + 2 * M / r, (1 + 2 * M) / np.maximum(r, R))
        d1, d2 = self.dphi(r), self.d2phi(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(r > 0, d2 + 2 * d1 / np.where(r > 0, r, 1.0), 3 * d2)

    @property
    def point_mass(self) -> float:
        """Coefficient of delta_0 in the distributional bilaplacian (exact profile)."""
        return -8.0 * np.pi * self.M

    @property
    def sphere_mass(self) -> float:
        """Coefficient of the surface delta on |x| = R."""
        return -1.0 / self.R ** 2

    def on_grid(self, grid: Grid) -> "GridMultiplier":
        """Sample phi, grad phi, phi'/r, phi'' and Delta phi at the grid nodes.

        Singular weights use the shared regularised radius max(|x|, h/2).
        """
        x = grid.offsets()
        r = grid.radius()
        rr = grid.regularized_radius()
        flat = np.unique(r)
        lookup = lambda f: np.interp(r, flat, f(flat)) if self.s > 0 else f(r)
        phi = lookup(self.phi)
        d1 = lookup(self.dphi)
        d2 = lookup(self.d2phi)
        if self.s > 0:
            lap = lookup(self.laplacian)
            d1_over_r = np.where(r > 0, d1 / np.where(r > 0, r, 1.0), d2)
        else:
            lap = self.laplacian(rr)
            d1_over_r = self._dphi(rr) / rr
        with np.errstate(invalid="ignore", divide="ignore"):
            n = np.where(r > 0, x / np.where(r > 0, r, 1.0), 0.0)
        return GridMultiplier(phi=phi, grad=d1 * n, dphi=d1, d2phi=d2, dphi_over_r=d1_over_r, lap=lap)


@dataclass(frozen=True, eq=False)
class GridMultiplier:
    phi: np.ndarray
    grad: np.ndarray
    dphi: np.ndarray
    d2phi: np.ndarray
    dphi_over_r: np.ndarray
    lap: np.ndarray


def make_multiplier(R: float, M: float = 0.0, s: float = 0.0) -> Multiplier:
    return Multiplier(R=float(R), M=float(M), s=float(s))


def optimal_M(C1: float, C2: float) -> float:
    """M = C1 / (2 sqrt(C1^2 + 6 C2)); 0 when both constants vanish."""
    if C1 == 0 and C2 == 0:
        return 0.0
    # hypot keeps tiny C1 from underflowing when squared
    return C1 / (2.0 * math.hypot(C1, math.sqrt(6.0 * C2)))


@dataclass(frozen=True)
class QuadraticFormResult:
    minimum: float
    argmin: tuple[float, float]
    coefficients: tuple[float, float, float]   # (a, c, b) of a p^2 + c q^2 - b p q
    discriminant: float                        # b^2 - 4ac
    psd: bool


def quadratic_form(M: float, C1: float, C2: float, p, q):
    return 2 * M * p ** 2 + (0.5 - 3 * (M + 0.5) * C2) * q ** 2 - (2 * M + 1) * C1 * p * q


def quadratic_form_check(M: float, C1: float, C2: float, p_values=None, q_values=None) -> QuadraticFormResult:
    """Minimum of 2Mp^2 + (1/2 - 3(M + 1/2)C2) q^2 - (2M + 1) C1 pq over a (p, q) >= 0 grid."""
    p_values = np.linspace(0.0, 1.0, 101) if p_values is None else np.asarray(p_values, dtype=float)
    q_values = np.linspace(0.0, 1.0, 101) if q_values is None else np.asarray(q_values, dtype=float)
    P, Q = np.meshgrid(p_values, q_values, indexing="ij")
    vals = quadratic_form(M, C1, C2, P, Q)
    i = np.unravel_index(np.argmin(vals), vals.shape)
    a, c, b = 2 * M, 0.5 - 3 * (M + 0.5) * C2, (2 * M + 1) * C1
    disc = b * b - 4 * a * c
    # on the closed quadrant cross terms only hurt when b > 0
    psd = a >= 0 and c >= 0 and (b <= 0 or disc <= 0)
    return QuadraticFormResult(minimum=float(vals[i]), argmin=(float(P[i]), float(Q[i])),
                               coefficients=(a, c, b), discriminant=float(disc), psd=bool(psd))
