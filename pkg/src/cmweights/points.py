"""Deterministic node sets in [0, 1]^d."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CBC_DECAY = 2.0


@dataclass(frozen=True)
class PointSet:
    d: int
    nodes: np.ndarray
    generator: str

    @property
    def n(self) -> int:
        return len(self.nodes)

    def __post_init__(self):
        nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        if nodes.shape[1] != self.d:
            raise ValueError(f"nodes have {nodes.shape[1]} coordinates, expected {self.d}")
        if np.any(nodes < 0) or np.any(nodes > 1):
            raise ValueError("nodes must lie in [0, 1]^d")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)


def _bernoulli2(x):
    return x * x - x + 1.0 / 6.0


def cbc_generating_vector(n: int, d: int, decay: float = CBC_DECAY) -> np.ndarray:
    """Component-by-component rank-1 lattice for product weights j^-decay.

    Minimizes the periodic Sobolev criterion prod_j (1 + gamma_j 2 pi^2 B_2({k z_j / n})).
    """
    cands = np.array([z for z in range(1, max(n // 2, 1) + 1) if math.gcd(z, n) == 1])
    k = np.arange(n)
    phase = (np.outer(cands, k) % n) / n
    omega = 2 * math.pi ** 2 * _bernoulli2(phase)
    acc = np.ones(n)
    z = []
    for j in range(1, d + 1):
        g = j ** -decay
        crit = ((1 + g * omega) * acc).sum(axis=1)
        best = int(np.argmin(crit))
        z.append(int(cands[best]))
        acc = acc * (1 + g * omega[best])
    return np.array(z)


def lattice_points(n: int, d: int) -> PointSet:
    if n < 1 or d < 1:
        raise ValueError("lattice needs n >= 1 and d >= 1")
    z = cbc_generating_vector(n, d)
    nodes = (np.outer(np.arange(n), z) % n) / n
    return PointSet(d, nodes, f"lattice:{n}")


def uniform_points(n: int, d: int, seed: int = 0) -> PointSet:
    rng = np.random.default_rng(seed)
    return PointSet(d, rng.random((n, d)), f"uniform:{n}:seed={seed}")


def read_points(path, d=None) -> PointSet:
    """One node per line, coordinates separated by spaces; ``#`` starts a comment."""
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append([float(t) for t in line.split()])
    if not rows:
        raise ValueError(f"no nodes in {path}")
    nodes = np.array(rows, dtype=float)
    return PointSet(nodes.shape[1] if d is None else d, nodes, f"file:{path}")


def make_points(desc: str, d: int, seed: int = 0) -> PointSet:
    """Parse ``lattice:n``, ``uniform:n``, ``file:path`` or ``explicit:x1,x2;y1,y2``."""
    kind, _, arg = desc.partition(":")
    if kind == "lattice":
        return lattice_points(int(arg), d)
    if kind == "uniform":
        return uniform_points(int(arg), d, seed)
    if kind == "file":
        return read_points(arg, d)
    if kind == "explicit":
        rows = [[float(t) for t in node.split(",")] for node in arg.split(";") if node.strip()]
        return PointSet(d, np.array(rows), "explicit")
    raise ValueError(f"unknown point generator {desc!r}")
