"""Periodic finite differences for 4-form fields on a flat torus slice.

A lattice discretizes a subset of the eight torus directions (the active
axes); fields are constant along the rest.  Grid arrays carry one leading
axis per active axis, then the tensor axes, e.g. a 4-form field is
(N, ..., N, 70) canonical or (N, ..., N, 8, 8, 8, 8) dense.

Torsion and the curvature-identity residuals follow the coordinate
expressions valid on the flat torus, where the connection is plain
coordinate differentiation.  A uniform conformal metric factor
(metric g = s * identity) threads through the contractions so parabolic
rescalings stay exact; s = 1 everywhere except in rescaling checks.

Derivative stencils are central, order 2 or 4, with periodic wrap; grid
reductions go through numpy's pairwise summation, which is deterministic
for a fixed shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import pi7, pi21, unpack4

__all__ = [
    "LatticeSpec",
    "fd_gradient",
    "fd_gradient_generic",
    "fd_laplacian",
    "torsion",
    "div_torsion",
    "energy",
    "max_torsion",
    "omega21_defect",
    "bianchi_residual",
    "ricci_residual",
    "scalar_residual",
    "scalar_residual_printed",
    "integrate",
    "grid_coordinates",
]


@dataclass(frozen=True)
class LatticeSpec:
    """Grid over a subset of the eight torus axes.

    active_axes are 0-based axis indices (ascending); fields depend only on
    these.  All eight axes share the period, so the total torus volume is
    period**8 regardless of how many axes are discretized.
    """

    active_axes: tuple[int, ...]
    points: int
    period: float = 1.0
    stencil_order: int = 2

    def __post_init__(self):
        axes = tuple(self.active_axes)
        object.__setattr__(self, "active_axes", axes)
        if not axes or any(a < 0 or a > 7 for a in axes) or list(axes) != sorted(set(axes)):
            raise ValueError(f"active_axes must be ascending distinct axes in 0..7, got {axes}")
        if self.stencil_order not in (2, 4):
            raise ValueError(f"stencil_order must be 2 or 4, got {self.stencil_order}")
        if self.points < 2 * self.stencil_order:
            raise ValueError(
                f"points={self.points} too small for stencil order {self.stencil_order}")
        if not self.period > 0:
            raise ValueError("period must be positive")

    @property
    def n_axes(self) -> int:
        return len(self.active_axes)

    @property
    def spacing(self) -> float:
        return self.period / self.points

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (self.points,) * self.n_axes

    @property
    def n_points(self) -> int:
        return self.points ** self.n_axes

    @property
    def cell_volume(self) -> float:
        """Coordinate volume per grid cell, inactive periods included."""
        return self.spacing ** self.n_axes * self.period ** (8 - self.n_axes)

    def to_dict(self) -> dict:
        return {
            "active_axes": [a + 1 for a in self.active_axes],
            "points": self.points,
            "period": self.period,
            "stencil_order": self.stencil_order,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LatticeSpec":
        return cls(
            active_axes=tuple(a - 1 for a in d["active_axes"]),
            points=int(d["points"]),
            period=float(d["period"]),
            stencil_order=int(d.get("stencil_order", 2)),
        )


def grid_coordinates(spec: LatticeSpec) -> list[np.ndarray]:
    """Coordinate arrays (one per active axis) broadcast to the grid shape."""
    x = np.arange(spec.points) * spec.spacing
    return list(np.meshgrid(*([x] * spec.n_axes), indexing="ij"))


def _d1(values: np.ndarray, axis: int, h: float, order: int) -> np.ndarray:
    if order == 2:
        return (np.roll(values, -1, axis) - np.roll(values, 1, axis)) / (2.0 * h)
    return (-np.roll(values, -2, axis) + 8.0 * np.roll(values, -1, axis)
            - 8.0 * np.roll(values, 1, axis) + np.roll(values, 2, axis)) / (12.0 * h)


def _d2(values: np.ndarray, axis: int, h: float, order: int) -> np.ndarray:
    if order == 2:
        return (np.roll(values, -1, axis) - 2.0 * values + np.roll(values, 1, axis)) / h**2
    return (-np.roll(values, -2, axis) + 16.0 * np.roll(values, -1, axis) - 30.0 * values
            + 16.0 * np.roll(values, 1, axis) - np.roll(values, 2, axis)) / (12.0 * h**2)


def fd_gradient_generic(spec: LatticeSpec, values: np.ndarray) -> np.ndarray:
    """Stack of active-axis derivatives, new axis after the grid axes.

    Output shape: grid_shape + (n_axes,) + tensor_shape.  Inactive-axis
    derivatives are identically zero and are not stored.
    """
    k = spec.n_axes
    out = np.stack([_d1(values, ax, spec.spacing, spec.stencil_order) for ax in range(k)],
                   axis=k)
    return out


def fd_gradient(spec: LatticeSpec, phi_canon: np.ndarray) -> np.ndarray:
    """Derivatives of a canonical 4-form field; shape grid + (n_axes, 70)."""
    return fd_gradient_generic(spec, phi_canon)


def fd_laplacian(spec: LatticeSpec, values: np.ndarray) -> np.ndarray:
    """Sum of active-axis second derivatives (flat Laplacian)."""
    out = _d2(values, 0, spec.spacing, spec.stencil_order)
    for ax in range(1, spec.n_axes):
        out = out + _d2(values, ax, spec.spacing, spec.stencil_order)
    return out


def _embed_m_axis(spec: LatticeSpec, compact: np.ndarray, position: int) -> np.ndarray:
    """Scatter an (..., n_axes, ...) array into (..., 8, ...) with zeros."""
    shape = list(compact.shape)
    shape[position] = 8
    out = np.zeros(shape, dtype=compact.dtype)
    idx = [slice(None)] * len(shape)
    for i, ax in enumerate(spec.active_axes):
        idx[position] = ax
        src = [slice(None)] * len(shape)
        src[position] = i
        out[tuple(idx)] = compact[tuple(src)]
    return out


def torsion(spec: LatticeSpec, phi_canon: np.ndarray, metric_scale: float = 1.0,
            phi_dense: np.ndarray | None = None) -> np.ndarray:
    """Full torsion field T[..., m, a, b], skew-symmetrized in (a, b).

    T_m = (1/96) (d_m phi . phi) with three contraction slots raised by the
    uniform metric, i.e. an s**-3 factor.  Inactive m-slices are zero.
    phi_dense may pass a precomputed dense view of the same field.
    """
    grad_d = unpack4(fd_gradient(spec, phi_canon))    # grid + (k, 8,8,8,8)
    if phi_dense is None:
        phi_dense = unpack4(phi_canon)
    raw = np.einsum("...majkl,...bjkl->...mab", grad_d, phi_dense)
    raw = 0.5 * (raw - np.swapaxes(raw, -1, -2)) / (96.0 * metric_scale**3)
    return _embed_m_axis(spec, raw, raw.ndim - 3)


def div_torsion(spec: LatticeSpec, t_field: np.ndarray, phi_canon: np.ndarray | None = None,
                metric_scale: float = 1.0, project: bool = True,
                phi_dense: np.ndarray | None = None) -> np.ndarray:
    """Divergence over the m-slot, (Div T)_ab = g^mn d_n T_m;ab.

    With project=True (the flow's convention) the output is pi7-projected
    pointwise, which needs the 4-form field (canonical or dense).
    """
    h, order = spec.spacing, spec.stencil_order
    out = None
    for grid_axis, m_slot in enumerate(spec.active_axes):
        term = _d1(t_field[..., m_slot, :, :], grid_axis, h, order)
        out = term if out is None else out + term
    out = out / metric_scale
    if project:
        if phi_dense is None:
            if phi_canon is None:
                raise ValueError("pi7 projection of the divergence needs the 4-form field")
            phi_dense = unpack4(phi_canon)
        out = pi7(out, phi_dense, metric_scale=metric_scale)
    return out


def _t_norm_sq_field(t_field: np.ndarray, metric_scale: float) -> np.ndarray:
    return np.einsum("...mab,...mab->...", t_field, t_field) / metric_scale**3


def energy(spec: LatticeSpec, t_field: np.ndarray, metric_scale: float = 1.0) -> float:
    """Half the integral of |T|^2 over the full torus (Riemann sum)."""
    dvol = spec.cell_volume * metric_scale**4
    return 0.5 * float(np.sum(_t_norm_sq_field(t_field, metric_scale))) * dvol


def max_torsion(spec: LatticeSpec, t_field: np.ndarray, metric_scale: float = 1.0) -> float:
    """Sup over the grid of the pointwise torsion norm."""
    return float(np.sqrt(np.max(_t_norm_sq_field(t_field, metric_scale))))


def integrate(spec: LatticeSpec, pointwise: np.ndarray, metric_scale: float = 1.0) -> float:
    """Riemann sum of a pointwise scalar over the torus."""
    return float(np.sum(pointwise)) * spec.cell_volume * metric_scale**4


def omega21_defect(spec: LatticeSpec, t_field: np.ndarray, phi_canon: np.ndarray,
                   metric_scale: float = 1.0) -> float:
    """Max over grid and m of the Frobenius norm of pi21(T_m)."""
    phi_d = unpack4(phi_canon)
    defect = pi21(np.moveaxis(t_field, -3, 0), phi_d[None], metric_scale=metric_scale)
    return float(np.sqrt(np.max(np.sum(defect * defect, axis=(-1, -2)))))


def _grad_t(spec: LatticeSpec, t_field: np.ndarray) -> np.ndarray:
    """d_i T_{m;ab} with the derivative axis embedded to size 8 (zeros inactive).

    Output shape: grid + (8_i, 8_m, 8_a, 8_b).
    """
    k = spec.n_axes
    compact = np.stack(
        [_d1(t_field, ax, spec.spacing, spec.stencil_order) for ax in range(k)], axis=k)
    return _embed_m_axis(spec, compact, compact.ndim - 4)


def bianchi_residual(spec: LatticeSpec, t_field: np.ndarray,
                     return_field: bool = False):
    """Flat-torus residual of the first-order torsion identity.

    res_{ij;ab} = d_i T_{j;ab} - d_j T_{i;ab} - 2 T_{i;am} T_{j;mb}
                  + 2 T_{j;am} T_{i;mb};
    the curvature terms of the closed identity vanish on the flat torus, so
    this is O(h^p) on smooth admissible fields.  Returns the max norm.
    """
    gt = _grad_t(spec, t_field)
    quad = np.einsum("...iam,...jmb->...ijab", t_field, t_field)
    res = gt - np.swapaxes(gt, -4, -3) - 2.0 * quad + 2.0 * np.swapaxes(quad, -4, -3)
    if return_field:
        return res
    return float(np.abs(res).max())


def ricci_residual(spec: LatticeSpec, t_field: np.ndarray,
                   return_field: bool = False):
    """Flat-torus residual of the Ricci-curvature expression in T and dT.

    res_ij = 4 d_i T_{a;ja} - 4 d_a T_{i;ja} - 8 T_{i;jb} T_{a;ba}
             + 8 T_{a;jb} T_{i;ba};  O(h^p) on smooth admissible fields.
    """
    gt = _grad_t(spec, t_field)
    res = (4.0 * np.einsum("...iaja->...ij", gt)
           - 4.0 * np.einsum("...aija->...ij", gt)
           - 8.0 * np.einsum("...ijb,...aba->...ij", t_field, t_field)
           + 8.0 * np.einsum("...ajb,...iba->...ij", t_field, t_field))
    if return_field:
        return res
    return float(np.abs(res).max())


def scalar_residual(spec: LatticeSpec, t_field: np.ndarray,
                    return_field: bool = False):
    """Flat-torus scalar-curvature residual: the trace of `ricci_residual`.

    Equals 4 d_i T_{a;ia} - 4 d_a T_{i;ia} + 8 |v|^2 + 8 T_{a;jb} T_{j;ba}
    with v_b = T_{i;ib}.  Note the |v|^2: the commonly quoted variant with
    |T|^2 in its place is *not* the trace of the Ricci expression and does
    not vanish on flat-torus data (see `scalar_residual_printed`, kept for
    comparison, and the refinement tests).
    """
    res = ricci_residual(spec, t_field, return_field=True)
    res = np.einsum("...ii->...", res)
    if return_field:
        return res
    return float(np.abs(res).max())


def scalar_residual_printed(spec: LatticeSpec, t_field: np.ndarray) -> float:
    """The |T|^2 variant of the scalar residual; O(1), does not decay."""
    gt = _grad_t(spec, t_field)
    res = (4.0 * np.einsum("...iaia->...", gt)
           - 4.0 * np.einsum("...aiia->...", gt)
           + 8.0 * np.einsum("...mab,...mab->...", t_field, t_field)
           + 8.0 * np.einsum("...ajb,...jba->...", t_field, t_field))
    return float(np.abs(res).max())
