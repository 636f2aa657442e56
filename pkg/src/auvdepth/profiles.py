"""Depth reference profiles: constant targets, analytic curves, and sampled
seafloor tables with linear interpolation.

Profiles map horizontal distance x (m) to a depth (m, positive down).
Analytic profiles also expose the first two spatial derivatives, which the
curved-reference observation needs; sampled tables expose depth only.
"""

from __future__ import annotations

import csv
from typing import Callable

import numpy as np


class ConstantProfile:
    """Flat reference at a fixed depth."""

    def __init__(self, z_ref: float):
        self.z_ref = float(z_ref)

    def depth(self, x: float) -> float:
        return self.z_ref

    def slope(self, x: float) -> float:
        return 0.0

    def curvature(self, x: float) -> float:
        return 0.0


class AnalyticProfile:
    """Reference curve given by callables for g, g', and g''."""

    def __init__(self, g: Callable[[float], float],
                 g1: Callable[[float], float],
                 g2: Callable[[float], float]):
        self._g, self._g1, self._g2 = g, g1, g2

    def depth(self, x: float) -> float:
        return float(self._g(x))

    def slope(self, x: float) -> float:
        return float(self._g1(x))

    def curvature(self, x: float) -> float:
        return float(self._g2(x))


def sinusoid_profile(z0: float, wavenumber: float) -> AnalyticProfile:
    """z(x) = z0 - sin(k x), the standard curved-tracking benchmark."""
    k = float(wavenumber)
    return AnalyticProfile(
        lambda x: z0 - np.sin(k * x),
        lambda x: -k * np.cos(k * x),
        lambda x: k * k * np.sin(k * x),
    )


class SampledProfile:
    """Piecewise-linear depth table over strictly increasing distances."""

    def __init__(self, distances: np.ndarray, depths: np.ndarray):
        d = np.asarray(distances, dtype=float)
        z = np.asarray(depths, dtype=float)
        if d.ndim != 1 or d.shape != z.shape:
            raise ValueError("distances and depths must be equal-length vectors")
        if d.size < 2:
            raise ValueError("a sampled profile needs at least two points")
        if not np.all(np.diff(d) > 0):
            raise ValueError("distances must be strictly increasing")
        self.distances = d
        self.depths = z

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.distances[0]), float(self.distances[-1])

    def depth(self, x: float) -> float:
        lo, hi = self.domain
        if not lo <= x <= hi:
            raise ValueError(
                f"distance {x:.3f} m outside sampled range [{lo:.3f}, {hi:.3f}]")
        return float(np.interp(x, self.distances, self.depths))


def load_profile_csv(path: str) -> SampledProfile:
    """Read a two-column table `distance_m,depth_m` (header required)."""
    distances: list[float] = []
    depths: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            cells = [c.strip() for c in row]
            if lineno == 1:
                if cells != ["distance_m", "depth_m"]:
                    raise ValueError(
                        f"{path} line 1: header must be 'distance_m,depth_m', "
                        f"got {','.join(cells)!r}")
                continue
            if len(cells) != 2:
                raise ValueError(f"{path} line {lineno}: expected 2 columns, got {len(cells)}")
            try:
                d, z = float(cells[0]), float(cells[1])
            except ValueError:
                raise ValueError(f"{path} line {lineno}: non-numeric value") from None
            if distances and d <= distances[-1]:
                raise ValueError(
                    f"{path} line {lineno}: distance {d} does not increase past {distances[-1]}")
            distances.append(d)
            depths.append(z)
    if len(distances) < 2:
        raise ValueError(f"{path}: a sampled profile needs at least two points")
    return SampledProfile(np.array(distances), np.array(depths))


def save_profile_csv(profile: SampledProfile, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["distance_m", "depth_m"])
        for d, z in zip(profile.distances, profile.depths):
            writer.writerow([f"{d:.6f}", f"{z:.6f}"])


def synthetic_seafloor(length_m: float, spacing_m: float, base_depth: float,
                       amplitude: float, kind: str = "sinusoid",
                       wavelength: float = 100.0, smooth_m: float = 25.0,
                       rng: np.random.Generator | None = None) -> SampledProfile:
    """Generate a stand-in seafloor when no survey data is available.

    "sinusoid" is the deterministic benchmark swell; "walk" integrates white
    noise, smooths it with a moving average of width smooth_m, and rescales
    the result so the largest excursion equals amplitude. Depths are floored
    at 1 m so the terrain never breaches the surface.
    """
    if spacing_m <= 0.0 or length_m <= 0.0:
        raise ValueError("length and spacing must be positive")
    xs = np.arange(0.0, length_m + spacing_m / 2.0, spacing_m)
    if kind == "sinusoid":
        z = base_depth - amplitude * np.sin(2.0 * np.pi * xs / wavelength)
    elif kind == "walk":
        rng = rng if rng is not None else np.random.default_rng()
        walk = np.cumsum(rng.standard_normal(xs.size))
        width = max(int(round(smooth_m / spacing_m)), 1)
        kernel = np.ones(width) / width
        padded = np.concatenate([np.full(width - 1, walk[0]), walk])
        smooth = np.convolve(padded, kernel, mode="valid")
        smooth -= smooth.mean()
        peak = np.max(np.abs(smooth))
        if peak > 0.0:
            smooth *= amplitude / peak
        z = base_depth + smooth
    else:
        raise ValueError(f"unknown seafloor kind {kind!r}; "
                         f"use 'sinusoid' or 'walk'")
    return SampledProfile(xs, np.maximum(z, 1.0))
