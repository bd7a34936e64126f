"""Kernel families and ring-decomposed pixel neighborhoods.

A bilateral filter is determined by a photometric family V (a decaying
symmetric function of the intensity difference, scaled by t), a spatial
family W (a decaying function of pixel distance), and a support size n.
The support is a union of concentric integer-lattice rings; every pixel of
a ring shares one precomputed spatial weight w_i = W(r_i).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "VFamily",
    "WFamily",
    "KernelSpec",
    "Ring",
    "RingNeighborhood",
    "AxiomReport",
    "MAX_SUPPORT_SIZE",
    "build_rings",
    "eval_V",
    "eval_W",
    "validate_kernel",
]

MAX_SUPPORT_SIZE = 5


class VFamily(enum.Enum):
    """Photometric similarity families.

    Each maps a scaled intensity difference u = t*x to a weight in (0, 1]:
    ``Abs``  -> 1 / (1 + |u|)
    ``Frac`` -> 1 / (1 + u^2)
    ``Quad`` -> 1 / (1 + u^4)
    ``Exp``  -> exp(-u^2)
    """

    Abs = "abs"
    Frac = "frac"
    Quad = "quad"
    Exp = "exp"

    @classmethod
    def parse(cls, name: str) -> "VFamily":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown V family {name!r} (expected one of: {valid})") from None


class WVariant(enum.Enum):
    Power = "power"
    Gaussian = "gauss"


@dataclass(frozen=True)
class WFamily:
    """Spatial weight family.

    ``Power``    -> W(r) = 2^(-r)
    ``Gaussian`` -> W(r) = exp(-(r/sigma_d)^2), sigma_d > 0
    """

    variant: WVariant = WVariant.Power
    sigma_d: float | None = None

    def __post_init__(self):
        if self.variant is WVariant.Gaussian:
            if self.sigma_d is None or not self.sigma_d > 0:
                raise ValueError("Gaussian W requires sigma_d > 0")
        elif self.sigma_d is not None:
            raise ValueError("sigma_d only applies to the Gaussian variant")

    @classmethod
    def power(cls) -> "WFamily":
        return cls(WVariant.Power)

    @classmethod
    def gaussian(cls, sigma_d: float) -> "WFamily":
        return cls(WVariant.Gaussian, float(sigma_d))

    @classmethod
    def parse(cls, text: str) -> "WFamily":
        """Parse ``power`` or ``gauss:<sigma>``."""
        text = text.strip().lower()
        if text == "power":
            return cls.power()
        if text.startswith("gauss"):
            _, sep, rest = text.partition(":")
            if not sep:
                raise ValueError("Gaussian W must be given as gauss:<sigma>")
            try:
                return cls.gaussian(float(rest))
            except ValueError as exc:
                raise ValueError(f"bad Gaussian sigma {rest!r}") from exc
        raise ValueError(f"unknown W family {text!r} (expected power or gauss:<sigma>)")


@dataclass(frozen=True)
class KernelSpec:
    """Complete filter parameterization: V family with scale t, W family, support n."""

    v: VFamily
    t: float
    w: WFamily = field(default_factory=WFamily.power)
    n: int = 3

    def __post_init__(self):
        if not self.t >= 0:
            raise ValueError(f"scale t must be >= 0, got {self.t}")
        if not 1 <= self.n <= MAX_SUPPORT_SIZE:
            raise ValueError(f"support size n must be in 1..{MAX_SUPPORT_SIZE}, got {self.n}")

    def with_t(self, t: float) -> "KernelSpec":
        return KernelSpec(self.v, t, self.w, self.n)


# Ring geometry: offsets at fixed Euclidean distance from the center, in a
# fixed declaration order (the accumulation order is part of the numeric
# contract between backends).  The fifth ring merges the radius-2*sqrt(2) and
# radius-3 lattice shells into one ring with the representative radius
# 2*sqrt(2), the smaller (larger-weight) of the two.
_RING_RADII = (1.0, math.sqrt(2.0), 2.0, math.sqrt(5.0), 2.0 * math.sqrt(2.0))
_RING_OFFSETS = (
    ((1, 0), (-1, 0), (0, 1), (0, -1)),
    ((1, 1), (1, -1), (-1, 1), (-1, -1)),
    ((2, 0), (-2, 0), (0, 2), (0, -2)),
    ((2, 1), (2, -1), (-2, 1), (-2, -1), (1, 2), (1, -2), (-1, 2), (-1, -2)),
    ((2, 2), (2, -2), (-2, 2), (-2, -2), (3, 0), (-3, 0), (0, 3), (0, -3)),
)


@dataclass(frozen=True)
class Ring:
    radius: float
    offsets: tuple[tuple[int, int], ...]
    weight: float


@dataclass(frozen=True)
class RingNeighborhood:
    """The first n rings with their shared spatial weights (center excluded)."""

    rings: tuple[Ring, ...]

    @property
    def n(self) -> int:
        return len(self.rings)

    @property
    def size(self) -> int:
        """Total number of support pixels."""
        return sum(len(r.offsets) for r in self.rings)

    def all_offsets(self) -> list[tuple[int, int]]:
        """Support offsets flattened in ring order."""
        return [off for ring in self.rings for off in ring.offsets]

    def offset_weights(self) -> np.ndarray:
        """Per-offset spatial weight, aligned with :meth:`all_offsets`."""
        return np.array(
            [ring.weight for ring in self.rings for _ in ring.offsets], dtype=np.float64
        )

    def margin(self) -> int:
        """Largest coordinate magnitude in the support (border width)."""
        return max(max(abs(dx), abs(dy)) for ring in self.rings for (dx, dy) in ring.offsets)


def build_rings(n: int, w: WFamily) -> RingNeighborhood:
    """Construct the first ``n`` rings with weights w_i = W(r_i).

    Ring layout (cumulative sizes 4 / 8 / 12 / 20 / 28):
      1: (+-1, 0), (0, +-1)            r = 1
      2: (+-1, +-1)                    r = sqrt(2)
      3: (+-2, 0), (0, +-2)            r = 2
      4: the 8 offsets with dx^2+dy^2 = 5   r = sqrt(5)
      5: (+-2, +-2), (+-3, 0), (0, +-3)    r = 2*sqrt(2) (merged shells)
    """
    if not isinstance(n, int) or not 1 <= n <= MAX_SUPPORT_SIZE:
        raise ValueError(f"support size n must be an integer in 1..{MAX_SUPPORT_SIZE}, got {n!r}")
    rings = tuple(
        Ring(radius=_RING_RADII[i], offsets=_RING_OFFSETS[i], weight=eval_W(w, _RING_RADII[i]))
        for i in range(n)
    )
    return RingNeighborhood(rings)


def eval_V(v: VFamily, t: float, x):
    """Photometric weight for intensity difference ``x`` at scale ``t``.

    Total on reals; vectorizes over ``x``.  ``t = 0`` (or ``x = 0``) gives 1
    for every family — the filter degenerates to the linear W-weighted
    average.
    """
    if not t >= 0:
        raise ValueError(f"scale t must be >= 0, got {t}")
    u = np.multiply(t, x, dtype=np.float64)
    if v is VFamily.Abs:
        out = 1.0 / (1.0 + np.abs(u))
    elif v is VFamily.Frac:
        out = 1.0 / (1.0 + u * u)
    elif v is VFamily.Quad:
        u2 = u * u
        out = 1.0 / (1.0 + u2 * u2)
    elif v is VFamily.Exp:
        out = np.exp(-(u * u))
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown V family {v!r}")
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


def eval_W(w: WFamily, r):
    """Spatial weight at distance ``r >= 0``; W(0) = 1 for both families."""
    r_arr = np.asarray(r, dtype=np.float64)
    if np.any(r_arr < 0):
        raise ValueError("distance r must be >= 0")
    if w.variant is WVariant.Power:
        out = np.exp2(-r_arr)
    else:
        s = r_arr / w.sigma_d
        out = np.exp(-(s * s))
    if np.isscalar(r) or np.ndim(r) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class AxiomReport:
    """Numeric check of the four kernel axioms on a probe grid."""

    normalized: bool  # V(0) = 1
    monotone: bool  # non-increasing on the positive half-grid
    symmetric: bool  # V(x) = V(-x) bit-exactly
    vanishing: bool  # V at the largest |x| below tolerance
    tail_value: float

    @property
    def all_pass(self) -> bool:
        return self.normalized and self.monotone and self.symmetric and self.vanishing


def validate_kernel(
    v: VFamily, t: float, probe_grid, vanish_tol: float = 0.05
) -> AxiomReport:
    """Check the kernel axioms numerically on ``probe_grid``.

    The grid must be non-empty and symmetric about 0.  Failures are reported,
    not raised: a slowly-decaying family at small ``t`` legitimately fails the
    vanishing check on a finite grid.
    """
    grid = np.sort(np.asarray(probe_grid, dtype=np.float64))
    if grid.size == 0:
        raise ValueError("probe grid must be non-empty")
    if not np.allclose(np.sort(-grid), grid, rtol=0, atol=0):
        raise ValueError("probe grid must be symmetric about 0")
    pos = grid[grid >= 0]
    vals_pos = np.atleast_1d(eval_V(v, t, pos))
    vals_neg = np.atleast_1d(eval_V(v, t, -pos))
    normalized = float(eval_V(v, t, 0.0)) == 1.0
    monotone = bool(np.all(np.diff(vals_pos) <= 0))
    symmetric = bool(np.all(vals_pos == vals_neg))
    tail = float(vals_pos[-1]) if pos.size else 1.0
    return AxiomReport(
        normalized=normalized,
        monotone=monotone,
        symmetric=symmetric,
        vanishing=tail < vanish_tol,
        tail_value=tail,
    )
