"""Uniform 1-D mesh on (0, L) with homogeneous Dirichlet data.

Nodal functions are plain float arrays holding the ``n`` interior values;
the two boundary zeros are implicit.  Gradient terms use the rectangle rule
on the ``n + 1`` cells, zeroth-order terms the nodal rule.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["Mesh", "make_mesh", "grad", "norm_w1p", "norm_lr", "inner_h",
           "as_gridfn", "write_gridfn_csv", "read_gridfn_csv"]


@dataclass(frozen=True)
class Mesh:
    n: int
    L: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"mesh needs at least 2 interior nodes, got n={self.n}")
        if not self.L > 0:
            raise ValueError(f"domain length must be positive, got L={self.L}")

    @property
    def h(self):
        return self.L / (self.n + 1)

    @property
    def x(self):
        """Interior node coordinates."""
        return self.h * np.arange(1, self.n + 1)

    @property
    def x_full(self):
        """Node coordinates including both boundary points."""
        return self.h * np.arange(0, self.n + 2)


def make_mesh(n, L=1.0):
    if int(n) != n:
        raise ValueError(f"interior node count must be an integer, got {n!r}")
    return Mesh(int(n), float(L))


def as_gridfn(u, m):
    """Validate ``u`` as a nodal function on ``m`` and return it as a float array."""
    u = np.asarray(u, dtype=float)
    if u.shape != (m.n,):
        raise ValueError(f"grid function has shape {u.shape}, mesh expects ({m.n},)")
    if not np.all(np.isfinite(u)):
        raise ValueError("grid function has non-finite entries")
    return u


def grad(u, m):
    """Forward differences on the n+1 cells, boundary values taken as zero."""
    u = np.asarray(u, dtype=float)
    if u.shape != (m.n,):
        raise ValueError(f"grid function has shape {u.shape}, mesh expects ({m.n},)")
    padded = np.concatenate(([0.0], u, [0.0]))
    return np.diff(padded) / m.h


def norm_w1p(u, p, m):
    if not p > 1:
        raise ValueError(f"W^(1,p) norm needs p > 1, got p={p}")
    g = grad(u, m)
    return float((m.h * np.sum(np.abs(g) ** p)) ** (1.0 / p))


def norm_lr(u, r, m):
    if not r >= 1:
        raise ValueError(f"L^r norm needs r >= 1, got r={r}")
    u = np.asarray(u, dtype=float)
    if u.shape != (m.n,):
        raise ValueError(f"grid function has shape {u.shape}, mesh expects ({m.n},)")
    return float((m.h * np.sum(np.abs(u) ** r)) ** (1.0 / r))


def inner_h(a, b, m):
    """Mass-weighted nodal inner product h * sum(a * b)."""
    return float(m.h * np.dot(a, b))


def write_gridfn_csv(path, u, m):
    """One column of n+2 values (boundary zeros included), 17 significant digits."""
    u = as_gridfn(u, m)
    full = np.concatenate(([0.0], u, [0.0]))
    with open(path, "w") as fh:
        for v in full:
            fh.write(f"{v:.17g}\n")


def read_gridfn_csv(path, m):
    full = np.loadtxt(path, dtype=float, ndmin=1)
    if full.shape != (m.n + 2,):
        raise ValueError(f"expected {m.n + 2} values in {path}, found {full.shape[0]}")
    return as_gridfn(full[1:-1], m)
