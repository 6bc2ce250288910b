"""Distortion tables and generic rate-distortion problem instances."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


class DistortionTable:
    """Single-letter distortion between flat source and reproduction indices.

    ``values[z, y]`` holds the distortion; ``forbidden[z, y]`` marks pairs a
    reproduction kernel may never use (infinite distortion). Forbidden slots
    store NaN so they cannot leak into arithmetic unnoticed; use ``filled``.
    """

    def __init__(self, values, forbidden=None, source_shape=None, repro_shape=None):
        values = np.array(values, dtype=float)
        if values.ndim != 2:
            raise ValidationError("distortion table must be 2-d (source x reproduction)")
        if forbidden is None:
            forbidden = np.zeros(values.shape, dtype=bool)
        forbidden = np.array(forbidden, dtype=bool)
        if forbidden.shape != values.shape:
            raise ValidationError("forbidden mask shape differs from values")
        ok = ~forbidden
        if np.any(~np.isfinite(values[ok])) or np.any(values[ok] < 0):
            raise ValidationError("distortion values must be finite and nonnegative")
        if not np.all(ok.any(axis=1)):
            bad = int(np.flatnonzero(~ok.any(axis=1))[0])
            raise ValidationError(f"source symbol {bad} has every reproduction forbidden")
        values[forbidden] = np.nan
        values.setflags(write=False)
        forbidden.setflags(write=False)
        self.values = values
        self.forbidden = forbidden
        self.source_shape = tuple(source_shape) if source_shape else (values.shape[0],)
        self.repro_shape = tuple(repro_shape) if repro_shape else (values.shape[1],)

    @property
    def shape(self):
        return self.values.shape

    @property
    def allowed(self):
        return ~self.forbidden

    def filled(self, fill=0.0):
        return np.where(self.forbidden, fill, self.values)

    def expected(self, joint):
        """E[d] under a joint pmf over (source, reproduction)."""
        joint = np.asarray(joint, dtype=float)
        if np.any(joint[self.forbidden] > 0):
            return float("inf")
        return float(np.sum(joint * self.filled()))

    def __repr__(self):
        return f"DistortionTable(shape={self.shape}, forbidden={int(self.forbidden.sum())})"


@dataclass(frozen=True)
class DeltaRange:
    delta_min: float
    delta_max: float
    sampler_witness: object = None
    max_witness: object = None

    def __post_init__(self):
        if self.delta_min > self.delta_max + 1e-12:
            raise ValidationError(
                f"delta_min {self.delta_min} exceeds delta_max {self.delta_max}")


@dataclass(frozen=True)
class RdInstance:
    """Minimize I(Z; Y) subject to E[rho(Z, Y)] <= delta.

    ``source`` is strictly positive; atoms of zero probability are dropped by
    the constructors upstream, with ``z_labels`` keeping track of what each
    remaining atom stands for.
    """

    source: np.ndarray
    rho: DistortionTable
    z_labels: tuple = field(default=None)
    y_labels: tuple = field(default=None)

    def __post_init__(self):
        source = np.asarray(self.source, dtype=float)
        if source.ndim != 1 or source.shape[0] != self.rho.shape[0]:
            raise ValidationError("source length must match distortion rows")
        if np.any(source <= 0):
            raise ValidationError("instance source must be strictly positive")
        if abs(source.sum() - 1.0) > 1e-9:
            raise ValidationError("instance source must sum to one")
        source = source / source.sum()
        source.setflags(write=False)
        object.__setattr__(self, "source", source)
        if self.z_labels is None:
            object.__setattr__(self, "z_labels", tuple(range(source.shape[0])))
        if self.y_labels is None:
            object.__setattr__(self, "y_labels", tuple(range(self.rho.shape[1])))

    @property
    def nz(self):
        return self.source.shape[0]

    @property
    def ny(self):
        return self.rho.shape[1]

    def delta_min(self):
        """E[min_y rho(Z, y)] over admissible y."""
        rowmin = np.nanmin(np.where(self.rho.forbidden, np.inf, self.rho.values), axis=1)
        return float(self.source @ rowmin)

    def universal_outputs(self):
        """Reproductions admissible for every source atom."""
        return np.flatnonzero(~self.rho.forbidden.any(axis=0))

    def delta_max(self):
        """min over universally admissible y of E[rho(Z, y)], with the argmin.

        Returns ``(None, None)`` when no single reproduction is admissible for
        every atom; the rate then never reaches zero.
        """
        ys = self.universal_outputs()
        if ys.size == 0:
            return None, None
        means = self.source @ self.rho.filled()[:, ys]
        j = int(np.argmin(means))
        return float(means[j]), int(ys[j])

    def fingerprint(self):
        return (self.source.tobytes(), self.rho.filled(-1.0).tobytes(),
                self.rho.forbidden.tobytes(), self.rho.shape)
