"""One-cut equilibrium measure: support, density, log-potential, edge data.

The support endpoints solve the two moment conditions obtained by dividing
V' by the square root of the cut polynomial; the density prefactor h is the
polynomial part of that division.  Candidate roots of the endpoint system
are accepted only if the density is positive on the cut and the effective
potential is strictly negative outside, which filters out the spurious
branches the system also admits.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .potential import Potential

__all__ = [
    "EquilibriumData",
    "NotOneCutError",
    "RegularityReport",
    "check_regular",
    "density_psi",
    "edge_beta",
    "g_derivative",
    "g_double_prime",
    "g_function",
    "g_prime",
    "robin_constant",
    "solve_support",
]

_THETA_NODES = 480
_ENDPOINT_TOL = 1e-13
_GRID_POINTS = 2001


class NotOneCutError(RuntimeError):
    """No admissible one-cut equilibrium measure was found."""


def _chebyshev_moments(V: Potential, b0: float, a1: float, M: int = 96) -> tuple[float, float]:
    # (1/2pi) integral of V'(s)/sqrt((s-b0)(a1-s)) and s V'(s)/sqrt(...) over the cut,
    # exact for polynomials via midpoint rule in the angle variable.
    th = (np.arange(M) + 0.5) * np.pi / M
    s = 0.5 * (b0 + a1) + 0.5 * (a1 - b0) * np.cos(th)
    vp = V.eval(s, 1)
    return float(np.sum(vp) / (2.0 * M)), float(np.sum(s * vp) / (2.0 * M))


def _endpoint_residual(V: Potential, b0: float, a1: float) -> np.ndarray:
    t1, t2 = _chebyshev_moments(V, b0, a1)
    return np.array([t1, t2 - 1.0])


def _newton(V: Potential, b0: float, a1: float) -> tuple[np.ndarray, bool]:
    x = np.array([b0, a1], dtype=float)
    for _ in range(120):
        F = _endpoint_residual(V, *x)
        if np.max(np.abs(F)) < _ENDPOINT_TOL:
            return x, True
        J = np.empty((2, 2))
        h = 1e-7
        for jcol in range(2):
            xp = x.copy()
            xp[jcol] += h
            J[:, jcol] = (_endpoint_residual(V, *xp) - F) / h
        try:
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return x, False
        step = 1.0
        moved = False
        while step > 1e-9:
            xn = x + step * dx
            if xn[0] < xn[1] - 1e-9 and np.max(np.abs(_endpoint_residual(V, *xn))) <= np.max(np.abs(F)):
                moved = True
                break
            step *= 0.5
        if not moved:
            return x, False
        x = x + step * dx
    return x, bool(np.max(np.abs(_endpoint_residual(V, *x))) < 1e-11)


def _h_coefficients(V: Potential, b0: float, a1: float) -> np.ndarray:
    # Polynomial part of V'(z) / sqrt((z-b0)(z-a1)) expanded at infinity.
    d = V.degree
    vp = V.deriv_coefficients(1)
    K = d + 2
    def half_binomial(alpha: float) -> np.ndarray:
        out = np.zeros(K)
        out[0] = 1.0
        for k in range(1, K):
            out[k] = out[k - 1] * alpha * (2 * k - 1) / (2 * k)
        return out
    series = np.convolve(half_binomial(b0), half_binomial(a1))[:K]
    hm = np.zeros(max(d - 1, 1))
    for m in range(d - 1):
        for k in range(K):
            if m + 1 + k < len(vp):
                hm[m] += vp[m + 1 + k] * series[k]
    return hm


@dataclass
class EquilibriumData:
    """One-cut equilibrium measure of a potential and its derived constants."""

    V: Potential
    b0: float
    a1: float
    h_coeffs: np.ndarray
    ell: float = 0.0
    beta: float = 0.0
    _theta_w: np.ndarray = field(default=None, repr=False)
    _s: np.ndarray = field(default=None, repr=False)
    _dens: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        t, w = leggauss(_THETA_NODES)
        th = 0.5 * np.pi * (t + 1.0)
        self._theta_w = 0.5 * np.pi * w
        mid = 0.5 * (self.b0 + self.a1)
        rad = 0.5 * (self.a1 - self.b0)
        self._s = mid + rad * np.cos(th)
        hvals = np.polynomial.Polynomial(self.h_coeffs)(self._s)
        # density times the Jacobian of s = mid + rad*cos(theta): the two
        # square roots combine into (rad*sin(theta))^2.
        self._dens = hvals * (rad * np.sin(th)) ** 2 / (2.0 * np.pi)
        self.ell = 2.0 * self._g0(self.a1) - self.V.eval(self.a1)
        self.beta = edge_beta(self)

    # -- log-potential and its derivatives ---------------------------------

    def _g0(self, z: float) -> float:
        return float(np.dot(self._theta_w, np.log(np.abs(z - self._s)) * self._dens))

    def _g_quad(self, z: float, m: int) -> float:
        return float(
            (-1.0) ** (m - 1)
            * math.factorial(m - 1)
            * np.dot(self._theta_w, self._dens / (z - self._s) ** m)
        )

    def _sqrt_cut(self, z: float) -> float:
        return math.sqrt((z - self.b0) * (z - self.a1))

    def g(self, z: float) -> float:
        if z <= self.a1 and z >= self.b0:
            return self._g0(z) if z == self.a1 else self._g0_interior(z)
        return self._g0(z)

    def _g0_interior(self, x: float) -> float:
        # log |x - s| with the singular point inside the cut; adaptive
        # quadrature is only used for the regularity report, never in the
        # hot paths.
        from scipy.integrate import quad

        h = np.polynomial.Polynomial(self.h_coeffs)
        def integrand(s):
            return math.log(abs(x - s)) * h(s) * math.sqrt(max((s - self.b0) * (self.a1 - s), 0.0)) / (2.0 * np.pi)
        val, _ = quad(integrand, self.b0, self.a1, points=[x], limit=200)
        return val

    def g_deriv(self, z: float, m: int) -> float:
        """m-th derivative of the log-potential for z > a1 (m >= 1)."""
        if z <= self.a1:
            raise ValueError("derivatives are only evaluated right of the support")
        if m == 1:
            h = np.polynomial.Polynomial(self.h_coeffs)
            return 0.5 * (self.V.eval(z, 1) - h(z) * self._sqrt_cut(z))
        if m == 2:
            h = np.polynomial.Polynomial(self.h_coeffs)
            hp = h.deriv(1)
            S = self._sqrt_cut(z)
            Rp = 2.0 * z - self.b0 - self.a1
            return 0.5 * (self.V.eval(z, 2) - hp(z) * S - h(z) * Rp / (2.0 * S))
        return self._g_quad(z, m)


def solve_support(V: Potential, seeds=None) -> EquilibriumData:
    """Solve the one-cut endpoint system and validate the resulting measure.

    Multi-start damped Newton: the heuristic scale seed first, then user
    seeds, then a coarse symmetric scan.  A converged root is accepted only
    when the density is positive on the cut and the effective potential
    2g - V - ell stays strictly below zero outside it.
    """
    scale = float(np.sum(np.abs(V.coefficients))) ** (-1.0 / V.degree)
    candidates: list[tuple[float, float]] = [(-2.0 * scale, 2.0 * scale)]
    if seeds:
        candidates.extend(seeds)
    for m in (1.0, 1.5, 2.0, 3.0, 4.0, 6.0):
        candidates.append((-m, m))
    for m in (1.0, 2.0, 3.0):
        candidates.append((-m, 2.0 * m))
        candidates.append((-2.0 * m, m))

    failures = []
    seen: list[np.ndarray] = []
    for seed in candidates:
        root, ok = _newton(V, *seed)
        if not ok:
            continue
        if any(np.max(np.abs(root - r)) < 1e-8 for r in seen):
            continue
        seen.append(root)
        b0, a1 = float(root[0]), float(root[1])
        h = _h_coefficients(V, b0, a1)
        grid = np.linspace(b0, a1, _GRID_POINTS)
        hvals = np.polynomial.Polynomial(h)(grid)
        if hvals[len(hvals) // 2] < 0:
            # Sign pinned by positivity at the midpoint of the support.
            h = -h
            hvals = -hvals
        if hvals.min() <= 0:
            failures.append((b0, a1, "density not positive on the cut"))
            continue
        try:
            eq = EquilibriumData(V=V, b0=b0, a1=a1, h_coeffs=h)
        except NotOneCutError as exc:
            failures.append((b0, a1, str(exc)))
            continue
        outs = np.concatenate([
            np.linspace(a1 + 1e-2, a1 + 10.0, 160),
            np.linspace(b0 - 10.0, b0 - 1e-2, 80),
        ])
        margin = max(2.0 * eq._g0(x) - V.eval(x) - eq.ell for x in outs)
        if margin > 1e-8:
            failures.append((b0, a1, f"outside inequality violated by {margin:.3e}"))
            continue
        return eq
    detail = "; ".join(f"({b:.4f},{a:.4f}): {msg}" for b, a, msg in failures) or "no converged root"
    raise NotOneCutError(f"no admissible one-cut measure: {detail}")


def density_psi(eq: EquilibriumData, x) -> float:
    """Equilibrium density h(x) sqrt((x-b0)(a1-x)) / (2 pi) inside the cut."""
    xv = np.asarray(x, dtype=float)
    if np.any(xv < eq.b0) or np.any(xv > eq.a1):
        raise ValueError("density evaluated outside the support")
    h = np.polynomial.Polynomial(eq.h_coeffs)
    val = h(xv) * np.sqrt(np.maximum((xv - eq.b0) * (eq.a1 - xv), 0.0)) / (2.0 * np.pi)
    return float(val) if np.isscalar(x) else val


def g_function(eq: EquilibriumData, z: float) -> float:
    """Log-potential integral log(z - s) against the equilibrium density, z > a1."""
    if z < eq.a1:
        raise ValueError("g is evaluated at or right of the upper edge")
    return eq._g0(z)


def g_prime(eq: EquilibriumData, z: float) -> float:
    return eq.g_deriv(z, 1)


def g_double_prime(eq: EquilibriumData, z: float) -> float:
    return eq.g_deriv(z, 2)


def g_derivative(eq: EquilibriumData, z: float, m: int) -> float:
    return eq.g_deriv(z, m)


def robin_constant(eq: EquilibriumData, consistency_tol: float = 1e-5) -> float:
    """The variational constant, evaluated at the edge and cross-checked inside."""
    ell_edge = 2.0 * eq._g0(eq.a1) - eq.V.eval(eq.a1)
    mid = 0.5 * (eq.b0 + eq.a1)
    ell_mid = 2.0 * eq._g0_interior(mid) - eq.V.eval(mid)
    if abs(ell_edge - ell_mid) > consistency_tol:
        raise NotOneCutError(
            f"variational equality inconsistent: edge {ell_edge:.10f} vs midpoint {ell_mid:.10f}"
        )
    return ell_edge


def edge_beta(eq: EquilibriumData) -> float:
    """Edge constant: (h(a1)/2)^(2/3) (a1-b0)^(1/3), positive for a regular edge."""
    h_edge = float(np.polynomial.Polynomial(eq.h_coeffs)(eq.a1))
    if h_edge <= 0:
        raise NotOneCutError("prefactor vanishes at the upper edge; edge is not regular")
    return (0.5 * h_edge) ** (2.0 / 3.0) * (eq.a1 - eq.b0) ** (1.0 / 3.0)


@dataclass(frozen=True)
class RegularityReport:
    passed: bool
    h_min_inside: float
    worst_margin_right: float
    worst_margin_left: float
    worst_right_at: float
    worst_left_at: float

    def summary(self) -> str:
        status = "pass" if self.passed else "fail"
        return (
            f"{status}: min h = {self.h_min_inside:.3e}, "
            f"outside margins {self.worst_margin_right:.3e} (right, x={self.worst_right_at:.4f}) "
            f"/ {self.worst_margin_left:.3e} (left, x={self.worst_left_at:.4f})"
        )


def check_regular(eq: EquilibriumData, delta: float = 1e-3) -> RegularityReport:
    """Positivity of the density prefactor inside, strict negativity outside."""
    grid = np.linspace(eq.b0, eq.a1, 200)
    h_min = float(np.polynomial.Polynomial(eq.h_coeffs)(grid).min())
    right = np.linspace(eq.a1 + delta, eq.a1 + 10.0, 200)
    left = np.linspace(eq.b0 - 10.0, eq.b0 - delta, 200)
    vals_r = np.array([2.0 * eq._g0(x) - eq.V.eval(x) - eq.ell for x in right])
    vals_l = np.array([2.0 * eq._g0(x) - eq.V.eval(x) - eq.ell for x in left])
    ir = int(np.argmax(vals_r))
    il = int(np.argmax(vals_l))
    passed = h_min > 0 and vals_r[ir] < 0 and vals_l[il] < 0
    return RegularityReport(
        passed=passed,
        h_min_inside=h_min,
        worst_margin_right=float(vals_r[ir]),
        worst_margin_left=float(vals_l[il]),
        worst_right_at=float(right[ir]),
        worst_left_at=float(left[il]),
    )


def to_json(eq: EquilibriumData) -> dict:
    return {
        "b0": eq.b0,
        "a1": eq.a1,
        "ell": eq.ell,
        "beta": eq.beta,
        "h_coeffs": [float(c) for c in eq.h_coeffs],
        "potential": eq.V.to_json(),
    }


def density_csv(eq: EquilibriumData, path, num: int = 400) -> None:
    xs = np.linspace(eq.b0, eq.a1, num)
    ys = density_psi(eq, xs)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "psi"])
        for x, y in zip(xs, ys):
            writer.writerow([f"{x:.17g}", f"{y:.17g}"])


def json_dump(eq: EquilibriumData, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_json(eq), fh, indent=2)
