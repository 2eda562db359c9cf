"""Uniform cell-centered meshes with ghost padding and difference helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Grid", "pad_scalar", "pad_vector", "shifted", "centered_gradient",
           "centered_divergence"]

_BC_NAMES = ("periodic", "constant-state")


@dataclass(frozen=True)
class Grid:
    lo: tuple
    hi: tuple
    cells: tuple
    bc: tuple
    ghost: int = 2

    def __post_init__(self):
        lo = tuple(float(x) for x in self.lo)
        hi = tuple(float(x) for x in self.hi)
        cells = tuple(int(c) for c in self.cells)
        bc = tuple(self.bc)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "bc", bc)
        n = len(cells)
        if n not in (1, 2, 3):
            raise ValueError("grid dimension must be 1, 2 or 3")
        if len(lo) != n or len(hi) != n or len(bc) != n:
            raise ValueError("lo, hi, cells and bc must have matching lengths")
        if any(h <= l for l, h in zip(lo, hi)):
            raise ValueError("domain extents must satisfy hi > lo")
        if any(c < 8 for c in cells):
            raise ValueError("need at least 8 cells per axis")
        if self.ghost < 2:
            raise ValueError("ghost width must be at least 2")
        if any(b not in _BC_NAMES for b in bc):
            raise ValueError(f"boundary condition must be one of {_BC_NAMES}")

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def dx(self) -> tuple:
        return tuple((h - l) / c for l, h, c in zip(self.lo, self.hi, self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.dx))

    @property
    def shape(self) -> tuple:
        return self.cells

    def centers(self, axis: int) -> np.ndarray:
        d = self.dx[axis]
        return self.lo[axis] + d * (np.arange(self.cells[axis]) + 0.5)

    def center_mesh(self) -> np.ndarray:
        """Cell-center coordinates stacked as (dim, *cells)."""
        axes = [self.centers(a) for a in range(self.dim)]
        return np.stack(np.meshgrid(*axes, indexing="ij"))


def pad_scalar(arr: np.ndarray, g: Grid, const: float = 0.0) -> np.ndarray:
    """Add ghost layers on every spatial axis (wrap or constant fill)."""
    out = arr
    for a in range(g.dim):
        ax = out.ndim - g.dim + a
        width = [(0, 0)] * out.ndim
        width[ax] = (g.ghost, g.ghost)
        if g.bc[a] == "periodic":
            out = np.pad(out, width, mode="wrap")
        else:
            out = np.pad(out, width, mode="constant", constant_values=const)
    return out


def pad_vector(vec: np.ndarray, g: Grid, const=None) -> np.ndarray:
    """Pad the spatial axes of a vector field (component axis first)."""
    comps = []
    for i in range(vec.shape[0]):
        c = 0.0 if const is None else float(const[i])
        comps.append(pad_scalar(vec[i], g, c))
    return np.stack(comps, axis=0)


def shifted(padded: np.ndarray, g: Grid, axis: int, shift: int) -> np.ndarray:
    """Interior view of a padded array displaced by `shift` cells on one axis."""
    if abs(shift) > g.ghost:
        raise ValueError("shift exceeds ghost width")
    sl = [slice(None)] * padded.ndim
    for a in range(g.dim):
        ax = padded.ndim - g.dim + a
        s = shift if a == axis else 0
        sl[ax] = slice(g.ghost + s, g.ghost + s + g.cells[a])
    return padded[tuple(sl)]


def centered_gradient(padded_scalar: np.ndarray, g: Grid) -> np.ndarray:
    """Second-order gradient of a padded scalar, shape (dim, *cells)."""
    out = []
    for a in range(g.dim):
        d = g.dx[a]
        out.append((shifted(padded_scalar, g, a, 1) - shifted(padded_scalar, g, a, -1)) / (2.0 * d))
    return np.stack(out, axis=0)


def centered_divergence(padded_vec: np.ndarray, g: Grid) -> np.ndarray:
    """Second-order divergence of a padded vector field."""
    acc = None
    for a in range(g.dim):
        d = g.dx[a]
        term = (shifted(padded_vec[a], g, a, 1) - shifted(padded_vec[a], g, a, -1)) / (2.0 * d)
        acc = term if acc is None else acc + term
    return acc
