"""Gradient-descent refinement of point positions (and optionally colors) under L1 loss."""

from __future__ import annotations

import dataclasses
import enum

import numpy as np

from .core import GmmInterpError, InterpConfig, PointSet, ShapeMismatch, CoordinateFrame
from .engine import backward, forward
from .oracle import oracle_gradients_fd


class EmptyLog(GmmInterpError, ValueError):
    pass


class Method(enum.Enum):
    GRADIENT_DESCENT = "gd"


@dataclasses.dataclass(frozen=True)
class OptimConfig:
    steps: int
    learning_rate: float
    optimize_positions: bool = True
    optimize_colors: bool = False
    log_every: int = 10
    seed: int = 0
    method: Method = Method.GRADIENT_DESCENT

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be non-negative, got {self.learning_rate}")
        if self.log_every < 1:
            raise ValueError(f"log_every must be >= 1, got {self.log_every}")


@dataclasses.dataclass
class TrajectoryLog:
    """Rows of ``(step, point_index, x, y, loss)``."""

    rows: list[tuple[int, int, float, float, float]] = dataclasses.field(default_factory=list)

    HEADER = ("step", "point_index", "x", "y", "loss")

    def record(self, step: int, positions: np.ndarray, loss: float) -> None:
        for i, (x, y) in enumerate(positions):
            self.rows.append((step, i, float(x), float(y), float(loss)))

    def steps(self) -> list[int]:
        return sorted({r[0] for r in self.rows})

    def positions_at(self, step: int) -> np.ndarray:
        pts = [(r[1], r[2], r[3]) for r in self.rows if r[0] == step]
        pts.sort()
        return np.array([(x, y) for _, x, y in pts])


@dataclasses.dataclass
class OptimResult:
    points: PointSet
    log: TrajectoryLog
    losses: list[float]  # loss at each step 0..steps (last entry is the final state)


def l1_loss_and_grad(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    if pred.shape != target.shape:
        raise ShapeMismatch(f"prediction {pred.shape} vs target {target.shape}")
    diff = pred - target
    return float(np.mean(np.abs(diff))), np.sign(diff) / diff.size


def optimize_points(
    ps: PointSet,
    target: np.ndarray,
    icfg: InterpConfig,
    ocfg: OptimConfig,
    workers: int = 1,
) -> OptimResult:
    """Plain gradient descent on the L1 reconstruction loss.

    Each step renders, backpropagates and updates; the bin grid is rebuilt
    from the new positions every step. Points may leave the image.
    """
    h, w = target.shape[:2]
    frame = CoordinateFrame(w, h)
    pos = ps.positions.copy()
    col = ps.colors.copy()
    log = TrajectoryLog()
    losses = []
    lr = ocfg.learning_rate
    for step in range(ocfg.steps + 1):
        current = PointSet(pos, col)
        pred, cache = forward(current, icfg, frame, workers=workers)
        loss, upstream = l1_loss_and_grad(pred, target)
        losses.append(loss)
        if step % ocfg.log_every == 0 or step == ocfg.steps:
            log.record(step, pos, loss)
        if step == ocfg.steps:
            break
        if not (ocfg.optimize_positions or ocfg.optimize_colors):
            continue
        grads = backward(current, icfg, cache, upstream, workers=workers)
        if ocfg.optimize_positions:
            pos = pos - lr * grads.d_positions
        if ocfg.optimize_colors:
            col = np.clip(col - lr * grads.d_colors, 0.0, 1.0)
    return OptimResult(PointSet(pos, col), log, losses)


def gradient_spot_check(
    ps: PointSet,
    target: np.ndarray,
    sigma: float,
    n_points: int = 8,
    seed: int = 0,
    h: float = 1e-5,
    rtol: float = 1e-6,
    atol: float = 1e-8,
) -> dict:
    """Compare analytic gradients of the L1 step against finite differences
    of the untruncated reference on a few seeded points.

    The upstream gradient is frozen at the state's L1 subgradient. The engine
    runs with a cutoff beyond the image diagonal so both sides differentiate
    the same function.
    """
    hh, ww = target.shape[:2]
    frame = CoordinateFrame(ww, hh)
    extent = np.ptp(np.vstack([ps.positions, [[0, 0], [ww - 1, hh - 1]]]), axis=0)
    cfg = InterpConfig(sigma, cutoff_radius=float(np.hypot(*extent)) + 1.0)
    pred, cache = forward(ps, cfg, frame)
    _, upstream = l1_loss_and_grad(pred, target)
    analytic = backward(ps, cfg, cache, upstream)
    rng = np.random.Generator(np.random.Philox(seed))
    idx = np.sort(rng.choice(len(ps), size=min(n_points, len(ps)), replace=False))
    fd = oracle_gradients_fd(ps, sigma, frame, upstream, h=h, indices=idx)
    a = np.hstack([analytic.d_colors[idx], analytic.d_positions[idx]])
    b = np.hstack([fd.d_colors[idx], fd.d_positions[idx]])
    err = np.abs(a - b)
    ok = bool(np.all(err <= atol + rtol * np.abs(b)))
    return {"ok": ok, "indices": idx.tolist(), "max_abs_err": float(err.max()),
            "max_scaled_err": float(np.max(err / (atol + rtol * np.abs(b))))}


@dataclasses.dataclass(frozen=True)
class DisplacementReport:
    mean: float
    max: float
    start: np.ndarray
    end: np.ndarray


def displacement_report(log: TrajectoryLog) -> DisplacementReport:
    steps = log.steps()
    if not steps:
        raise EmptyLog("trajectory log is empty")
    start = log.positions_at(steps[0])
    end = log.positions_at(steps[-1])
    d = np.hypot(*(end - start).T)
    return DisplacementReport(float(d.mean()), float(d.max()), start, end)
