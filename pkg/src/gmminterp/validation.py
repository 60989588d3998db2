"""Randomized engine-vs-reference checks, shared by the ``validate`` command and the tests."""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .core import CoordinateFrame, InterpConfig, PointSet
from .engine import backward, forward, partition_of_unity
from .oracle import compare_buffers, oracle_forward, oracle_gradients_fd

FORWARD_RTOL = 1e-12
UNITY_TOL = 1e-12
CONSTANT_TOL = 1e-12
GRAD_RTOL = 1e-6
GRAD_ATOL = 1e-8
TRUNCATION_TOL = 1e-3
WORKER_COUNTS = (1, 2, 4, 8)


@dataclasses.dataclass(frozen=True)
class Instance:
    seed: int
    points: PointSet
    sigma: float
    frame: CoordinateFrame
    upstream: np.ndarray

    @property
    def untruncated_radius(self) -> float:
        """A cutoff larger than any point-to-pixel distance in the instance."""
        pos = self.points.positions
        lo = np.minimum(pos.min(axis=0), 0.0)
        hi = np.maximum(pos.max(axis=0), [self.frame.width - 1, self.frame.height - 1])
        return float(math.hypot(*(hi - lo))) + 1.0


def random_instance(seed: int, grid_max: int = 16, points_max: int = 50,
                    sigma_range=(0.5, 4.0)) -> Instance:
    """Uniform positions over the image rectangle, uniform colors, 1 or 3 channels."""
    rng = np.random.Generator(np.random.Philox(seed))
    w = int(rng.integers(1, grid_max + 1))
    h = int(rng.integers(1, grid_max + 1))
    n = int(rng.integers(1, points_max + 1))
    c = int(rng.choice([1, 3]))
    sigma = float(rng.uniform(*sigma_range))
    pos = np.column_stack([rng.uniform(-0.5, w - 0.5, n), rng.uniform(-0.5, h - 0.5, n)])
    colors = rng.uniform(0.0, 1.0, (n, c))
    upstream = rng.normal(size=(h, w, c))
    return Instance(seed, PointSet(pos, colors), sigma, CoordinateFrame(w, h), upstream)


def max_relative_error(a: np.ndarray, ref: np.ndarray) -> float:
    err = np.abs(a - ref)
    scale = np.abs(ref)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(err == 0, 0.0, err / scale)
    return float(rel.max()) if rel.size else 0.0


def check_forward_equivalence(inst: Instance) -> float:
    cfg = InterpConfig(inst.sigma, inst.untruncated_radius)
    img, _ = forward(inst.points, cfg, inst.frame)
    return max_relative_error(img, oracle_forward(inst.points, inst.sigma, inst.frame))


def truncation_error(inst: Instance) -> float:
    img, _ = forward(inst.points, InterpConfig(inst.sigma), inst.frame)
    return compare_buffers(img, oracle_forward(inst.points, inst.sigma, inst.frame)).max_abs


def unity_and_constant_error(inst: Instance) -> tuple[float, float]:
    """Worst deviation of the weight sum from 1, and of a constant-color render
    from its constant, over truncated and untruncated configs."""
    unity = const = 0.0
    kappa = 0.3 + 0.4 * ((inst.seed * 0.6180339887) % 1.0)
    flat = inst.points.replace(colors=np.full_like(inst.points.colors, kappa))
    for radius in (None, inst.untruncated_radius):
        cfg = InterpConfig(inst.sigma, radius)
        _, cache = forward(inst.points, cfg, inst.frame)
        s = partition_of_unity(cache)
        if np.isfinite(s).any():
            unity = max(unity, float(np.nanmax(np.abs(s - 1.0))))
        img, cache = forward(flat, cfg, inst.frame)
        live = ~cache.fallback_mask
        if live.any():
            const = max(const, float(np.abs(img[live] - kappa).max()))
    return unity, const


def gradient_error(inst: Instance, fault: float = 0.0) -> float:
    """Largest ``|analytic - fd| / (atol + rtol |fd|)``; the check passes when <= 1.

    ``fault`` scales the analytic position gradient by ``1 + fault`` to
    exercise the failure path.
    """
    cfg = InterpConfig(inst.sigma, inst.untruncated_radius)
    _, cache = forward(inst.points, cfg, inst.frame)
    g = backward(inst.points, cfg, cache, inst.upstream)
    fd = oracle_gradients_fd(inst.points, inst.sigma, inst.frame, inst.upstream)
    worst = 0.0
    for a, b in ((g.d_colors, fd.d_colors), (g.d_positions * (1.0 + fault), fd.d_positions)):
        worst = max(worst, float(np.max(np.abs(a - b) / (GRAD_ATOL + GRAD_RTOL * np.abs(b)))))
    return worst


def deterministic_across_workers(inst: Instance, worker_counts=WORKER_COUNTS) -> bool:
    cfg = InterpConfig(inst.sigma)
    ref = None
    for workers in worker_counts:
        img, cache = forward(inst.points, cfg, inst.frame, workers=workers)
        g = backward(inst.points, cfg, cache, inst.upstream, workers=workers)
        blob = (img.tobytes(), g.d_colors.tobytes(), g.d_positions.tobytes())
        if ref is None:
            ref = blob
        elif blob != ref:
            return False
    return True


@dataclasses.dataclass
class CaseResult:
    seed: int
    forward_rel: float
    unity: float
    constant: float
    gradient_scaled: float
    deterministic: bool
    truncation_abs: float

    def failures(self) -> list[str]:
        out = []
        if not self.forward_rel <= FORWARD_RTOL:
            out.append("forward_equivalence")
        if not self.unity <= UNITY_TOL:
            out.append("partition_of_unity")
        if not self.constant <= CONSTANT_TOL:
            out.append("constant_color")
        if not self.gradient_scaled <= 1.0:
            out.append("gradient_fd")
        if not self.deterministic:
            out.append("worker_determinism")
        return out


def run_case(seed: int, grid_max: int = 8, points_max: int = 20, fault: float = 0.0) -> CaseResult:
    inst = random_instance(seed, grid_max=grid_max, points_max=points_max)
    unity, const = unity_and_constant_error(inst)
    return CaseResult(
        seed=seed,
        forward_rel=check_forward_equivalence(inst),
        unity=unity,
        constant=const,
        gradient_scaled=gradient_error(inst, fault=fault),
        deterministic=deterministic_across_workers(inst),
        truncation_abs=truncation_error(inst),
    )
