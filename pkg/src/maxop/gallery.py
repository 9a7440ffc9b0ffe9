"""Test weights on a grid: constants, power weights, steps, log-normal fields
and a step weight that degenerates as the grid is refined."""
from __future__ import annotations

import numpy as np

from .basis import as_rng
from .grid import Domain, GridFunction

__all__ = ["FAMILIES", "constant", "power", "step", "lognormal", "non_ainfty", "generate"]


def _radius(domain: Domain, center) -> np.ndarray:
    centers = domain.cell_centers()
    if center is None:
        center = [o + 0.5 * n * domain.h for o, n in zip(domain.origin, domain.shape)]
    center = np.broadcast_to(np.asarray(center, dtype=float), (domain.dim,))
    grids = np.meshgrid(*centers, indexing="ij")
    return np.sqrt(sum((g - c) ** 2 for g, c in zip(grids, center)))


def constant(domain: Domain, value: float = 1.0) -> GridFunction:
    if not value >= 0:
        raise ValueError("value must be nonnegative")
    return GridFunction(domain, np.full(domain.shape, float(value)))


def power(domain: Domain, a: float, center=None) -> GridFunction:
    """``|x - center|^a`` at cell centers; the default center is the box
    midpoint, which never coincides with a cell center."""
    r = _radius(domain, center)
    if a < 0 and np.any(r == 0):
        raise ValueError("negative power with the center on a cell center")
    with np.errstate(divide="ignore"):
        return GridFunction(domain, r ** float(a))


def step(domain: Domain, low: float = 1.0, high: float = 4.0, split: float = 0.5) -> GridFunction:
    """``low`` on the first ``split`` fraction of axis 0, ``high`` after it."""
    if not (low >= 0 and high >= 0 and 0 <= split <= 1):
        raise ValueError("invalid step parameters")
    n0 = domain.shape[0]
    cut = int(round(split * n0))
    idx = np.arange(n0).reshape((-1,) + (1,) * (domain.dim - 1))
    vals = np.where(idx < cut, float(low), float(high)) * np.ones(domain.shape)
    return GridFunction(domain, vals)


def lognormal(domain: Domain, sigma_log: float = 1.0, rng=None, smooth: int = 0) -> GridFunction:
    """``exp(sigma_log * g)`` for a standard normal field ``g``, optionally
    smoothed by ``smooth`` passes of a 3-point moving average per axis."""
    rng = as_rng(rng)
    g = rng.standard_normal(domain.shape)
    for _ in range(int(smooth)):
        for ax in range(domain.dim):
            g = (np.roll(g, 1, ax) + g + np.roll(g, -1, ax)) / 3.0
        g = g / (g.std() or 1.0)
    return GridFunction(domain, np.exp(float(sigma_log) * g))


def non_ainfty(domain: Domain, eps: float | None = None, decay: float = 1.0) -> GridFunction:
    """``eps`` on the first half of axis 0 and 1 on the rest; ``eps``
    defaults to ``N_0^(-decay)`` so the weight degenerates under refinement."""
    if eps is None:
        eps = float(domain.shape[0]) ** (-float(decay))
    if not eps >= 0:
        raise ValueError("eps must be nonnegative")
    return step(domain, eps, 1.0, 0.5)


FAMILIES = ("constant", "power", "step", "lognormal", "non-ainfty")


def generate(family: str, domain: Domain, rng=None, **params) -> GridFunction:
    if family == "constant":
        return constant(domain, params.get("value", 1.0))
    if family == "power":
        return power(domain, params.get("a", 0.5), params.get("center"))
    if family == "step":
        return step(domain, params.get("low", 1.0), params.get("high", 4.0), params.get("split", 0.5))
    if family == "lognormal":
        return lognormal(domain, params.get("sigma_log", 1.0), rng, params.get("smooth", 0))
    if family == "non-ainfty":
        return non_ainfty(domain, params.get("eps"), params.get("decay", 1.0))
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
