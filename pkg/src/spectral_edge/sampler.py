"""Monte Carlo verification: direct sampling of the Gaussian spiked model,
Metropolis sampling of the general-potential rank-one model, and empirical
distance to predicted laws.

The joint eigenvalue density of the rank-one model factors into the squared
Vandermonde, the confinement weight, and a divided difference of the
exponential tilt over the eigenvalues.  The divided difference is computed
as the corner entry of the exponential of a bidiagonal matrix (shifted so
all entries stay bounded), which is immune to the catastrophic cancellation
of the alternating-sum formula.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .potential import Potential

__all__ = [
    "EdgeSample",
    "McmcConfig",
    "dd_exp_log",
    "ks_distance",
    "ks_two_sample",
    "load_sample",
    "log_density_rank1",
    "mcmc_sample",
    "sample_gaussian_spiked",
    "save_sample",
]

RNG_FAMILY = "philox"


def thread_count() -> int:
    env = os.environ.get("SPECTRAL_EDGE_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return max(1, os.cpu_count() or 1)


def _rng(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, stream]))


@dataclass
class EdgeSample:
    """Largest-eigenvalue draws plus the provenance needed to reproduce them."""

    lambda_max: np.ndarray
    n: int
    a: float
    j: int
    potential_label: str
    seed: int
    method: str
    acceptance: float | None = None

    def __post_init__(self):
        arr = np.asarray(self.lambda_max, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        self.lambda_max = arr
        if self.method == "mcmc" and self.acceptance is not None:
            if not 0.1 <= self.acceptance <= 0.9:
                raise ValueError(f"acceptance rate {self.acceptance:.3f} outside [0.1, 0.9]")


def sample_gaussian_spiked(n: int, a: float, reps: int, seed: int = 0) -> EdgeSample:
    """Largest eigenvalues of the Gaussian model with a rank-one shift.

    The matrix is H + a e11 with H Hermitian, diagonal variance 1/n and
    off-diagonal mean-square 1/n, matching the confinement weight with the
    quadratic potential whose bulk fills [-2, 2].
    """
    if n > 2000:
        raise ValueError("n capped at 2000 for direct sampling")
    if reps * n > 10 ** 6 * 8:
        raise ValueError("requested sample volume too large")
    rng = _rng(seed)
    out = np.empty(reps)
    batch = max(1, min(reps, int(2e7 // (n * n)) or 1))
    done = 0
    while done < reps:
        b = min(batch, reps - done)
        hr = rng.normal(size=(b, n, n))
        hi = rng.normal(size=(b, n, n))
        m = (hr + hr.transpose(0, 2, 1)) / 2.0 + 1j * (hi - hi.transpose(0, 2, 1)) / 2.0
        m /= math.sqrt(n)
        m[:, 0, 0] += a
        out[done:done + b] = np.linalg.eigvalsh(m)[:, -1]
        done += b
    return EdgeSample(out, n=n, a=a, j=1, potential_label="gue", seed=seed, method="direct-gaussian")


def dd_exp_log(lams: np.ndarray, c: float) -> float:
    """log of the divided difference of exp(c*x) over the nodes.

    Corner entry of the exponential of the bidiagonal matrix with c*(node -
    max) on the diagonal and c on the superdiagonal, by Taylor plus
    scaling-and-squaring; all matrix entries are nonnegative so no
    cancellation occurs.  The max-node shift is restored additively.
    """
    lams = np.asarray(lams, dtype=float)
    nn = lams.size
    if nn == 1:
        return c * float(lams[0])
    mx = float(lams.max())
    B = np.diag(c * (lams - mx)) + np.diag(np.full(nn - 1, c), 1)
    norm = float(np.abs(B).sum(axis=1).max())
    s = max(0, int(math.ceil(math.log2(norm))) - 1) if norm > 1 else 0
    A = B / (2.0 ** s)
    X = np.eye(nn)
    term = np.eye(nn)
    for k in range(1, 18):
        term = term @ A / k
        X = X + term
    for _ in range(s):
        X = X @ X
    corner = float(X[0, -1])
    if corner <= 0 or not math.isfinite(corner):
        raise FloatingPointError("divided difference lost positivity")
    return c * mx + math.log(corner)


def log_density_rank1(lams: np.ndarray, V: Potential, n: int, a: float) -> float:
    """Unnormalized log density of the eigenvalues of the rank-one model.

    Repulsion + confinement + the rank-one tilt factor; with no spike the
    tilt drops and the density is the pure confined log-gas.
    """
    lams = np.sort(np.asarray(lams, dtype=float))
    nn = lams.size
    # the density is symmetric, so work with the sorted values and cascade a
    # minimal separation through any (near-)ties
    for i in range(1, nn):
        if lams[i] - lams[i - 1] < 1e-12:
            lams[i] = lams[i - 1] + 1e-12
    diffs = lams[:, None] - lams[None, :]
    iu = np.triu_indices(nn, 1)
    rep = 2.0 * float(np.sum(np.log(np.abs(diffs[iu]))))
    conf = -n * float(np.sum(V.eval(lams)))
    if a == 0.0:
        return rep + conf
    val = rep + conf + dd_exp_log(lams, n * a)
    if not math.isfinite(val):
        raise FloatingPointError("non-finite log density")
    return val


@dataclass(frozen=True)
class McmcConfig:
    steps: int = 4000
    burn_in: int = 800
    thinning: int = 2
    proposal_scale: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.burn_in >= self.steps:
            raise ValueError("burn-in must be shorter than the chain")
        if self.proposal_scale <= 0:
            raise ValueError("proposal scale must be positive")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")


def mcmc_sample(V: Potential, n: int, a: float, cfg: McmcConfig) -> EdgeSample:
    """Single-site Metropolis over the rank-one eigenvalue density.

    The proposal width adapts toward 0.3-0.5 acceptance during burn-in and
    is frozen afterwards, preserving detailed balance for the retained
    sweeps.  One step = one full sweep over the coordinates.
    """
    if n > 64:
        raise ValueError("Metropolis sampling capped at n = 64")
    rng = _rng(cfg.seed, stream=1)
    lams = np.sort(rng.normal(scale=0.7, size=n))
    logp = log_density_rank1(lams, V, n, a)
    scale = cfg.proposal_scale
    kept = []
    acc_window = []
    accepted_after = 0
    proposed_after = 0
    for sweep in range(cfg.steps):
        adapt = sweep < cfg.burn_in
        for site in range(n):
            prop = lams.copy()
            prop[site] += scale * rng.normal()
            try:
                logp_new = log_density_rank1(prop, V, n, a)
            except FloatingPointError:
                continue
            accept = math.log(rng.uniform()) < logp_new - logp
            if adapt:
                acc_window.append(1.0 if accept else 0.0)
            else:
                proposed_after += 1
                accepted_after += 1 if accept else 0
            if accept:
                lams = prop
                logp = logp_new
        if adapt and len(acc_window) >= 4 * n:
            rate = float(np.mean(acc_window))
            if rate < 0.3:
                scale *= 0.85
            elif rate > 0.5:
                scale *= 1.15
            acc_window = []
        if not adapt and (sweep - cfg.burn_in) % cfg.thinning == 0:
            kept.append(float(lams.max()))
    rate = accepted_after / max(proposed_after, 1)
    return EdgeSample(np.array(kept), n=n, a=a, j=1, potential_label=V.label or "custom",
                      seed=cfg.seed, method="mcmc", acceptance=rate)


def ks_distance(sample: EdgeSample, law, m: int = 40, cdf_grid: int = 200) -> float:
    """Sup distance between the empirical CDF of the draws and the law's CDF.

    For large samples the law CDF is evaluated on a dense grid spanning the
    draws and interpolated linearly; the interpolation error of the smooth
    CDF is orders of magnitude below the distances being tested.
    """
    lam = np.sort(sample.lambda_max)
    k = lam.size
    if k > 2 * cdf_grid:
        lo, hi = lam[0], lam[-1]
        pad = 1e-9 * max(1.0, abs(hi - lo))
        grid = np.linspace(lo - pad, hi + pad, cdf_grid)
        cdf_on_grid = law.cdf_lambda(grid, sample.n, m)
        cdf = np.interp(lam, grid, cdf_on_grid)
    else:
        cdf = np.atleast_1d(law.cdf_lambda(lam, sample.n, m))
    upper = np.max(np.abs(np.arange(1, k + 1) / k - cdf))
    lower = np.max(np.abs(np.arange(0, k) / k - cdf))
    return float(max(upper, lower))


def ks_two_sample(x: np.ndarray, y: np.ndarray) -> float:
    """Two-sample sup-distance between empirical CDFs."""
    xs = np.sort(np.asarray(x, dtype=float))
    ys = np.sort(np.asarray(y, dtype=float))
    grid = np.concatenate([xs, ys])
    fx = np.searchsorted(xs, grid, side="right") / xs.size
    fy = np.searchsorted(ys, grid, side="right") / ys.size
    return float(np.max(np.abs(fx - fy)))


def save_sample(sample: EdgeSample, csv_path) -> None:
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda_max"])
        for v in sample.lambda_max:
            writer.writerow([f"{v:.17g}"])
    sidecar = {
        "n": sample.n,
        "a": sample.a,
        "j": sample.j,
        "potential": sample.potential_label,
        "seed": sample.seed,
        "method": sample.method,
        "acceptance": sample.acceptance,
        "rng": RNG_FAMILY,
        "reps": int(sample.lambda_max.size),
    }
    with open(csv_path.with_suffix(".json"), "w") as fh:
        json.dump(sidecar, fh, indent=2)


def load_sample(csv_path) -> EdgeSample:
    csv_path = Path(csv_path)
    with open(csv_path.with_suffix(".json")) as fh:
        meta = json.load(fh)
    vals = []
    with open(csv_path) as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            vals.append(float(row[0]))
    return EdgeSample(np.array(vals), n=meta["n"], a=meta["a"], j=meta["j"],
                      potential_label=meta["potential"], seed=meta["seed"],
                      method=meta["method"], acceptance=meta.get("acceptance"))
