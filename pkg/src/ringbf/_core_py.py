"""Pure-numpy compute kernels (fallback backend).

Both backends implement the same three entry points with a pinned arithmetic
contract so results are directly comparable:

- intensity differences are formed in float64, reduced to float32, scaled by
  float32(t), and the photometric family is evaluated in float32;
- spatial weights and all accumulation are float64;
- accumulation order is rings ascending, offsets in declaration order, with
  per-ring photometric sums combined by the ring weight;
- a pixel whose photometric weights all underflow to zero falls back to the
  unweighted mean of its support values.

V family codes: 0 = Abs, 1 = Frac, 2 = Quad, 3 = Exp.
Border codes: 0 = clamp (edge replication), 1 = skip (copy the margin).
"""
from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

_ONE = np.float32(1.0)


def v_weights(d: np.ndarray, t: float, v_code: int) -> np.ndarray:
    """Float32 photometric weights for float32 differences ``d`` at scale ``t``."""
    u = np.float32(t) * d
    if v_code == 0:
        return _ONE / (_ONE + np.abs(u))
    if v_code == 1:
        return _ONE / (_ONE + u * u)
    if v_code == 2:
        u2 = u * u
        return _ONE / (_ONE + u2 * u2)
    if v_code == 3:
        return np.exp(-(u * u))
    raise ValueError(f"unknown V family code {v_code}")


def filter_values(
    f: np.ndarray,
    t: float,
    v_code: int,
    dxs: np.ndarray,
    dys: np.ndarray,
    ring_starts: np.ndarray,
    ring_weights: np.ndarray,
    border_code: int,
    gate_lo: float,
    gate_hi: float,
    has_gate: bool,
) -> np.ndarray:
    """Ring-separated bilateral filter over a float64 image.

    ``dxs``/``dys`` are the support offsets flattened in ring order;
    ``ring_starts`` delimits rings (length = ring count + 1);
    ``ring_weights`` is the per-ring spatial weight.
    Returns the pre-rounding float64 output image.
    """
    f = np.ascontiguousarray(f, dtype=np.float64)
    h, w = f.shape
    margin = int(max(np.max(np.abs(dxs)), np.max(np.abs(dys))))
    pad = np.pad(f, margin, mode="edge")

    num = np.zeros((h, w), dtype=np.float64)
    den = np.zeros((h, w), dtype=np.float64)
    supsum = np.zeros((h, w), dtype=np.float64)
    n_rings = len(ring_weights)
    for i in range(n_rings):
        sv = np.zeros((h, w), dtype=np.float64)
        sfv = np.zeros((h, w), dtype=np.float64)
        for j in range(int(ring_starts[i]), int(ring_starts[i + 1])):
            dx = int(dxs[j])
            dy = int(dys[j])
            nb = pad[margin + dy : margin + dy + h, margin + dx : margin + dx + w]
            d32 = (nb - f).astype(np.float32)
            v64 = v_weights(d32, t, v_code).astype(np.float64)
            sv += v64
            sfv += v64 * nb
            supsum += nb
        wi = float(ring_weights[i])
        num += wi * sfv
        den += wi * sv

    support_size = int(ring_starts[n_rings])
    safe = den > 0.0
    out = np.where(safe, num / np.where(safe, den, 1.0), supsum / support_size)

    if has_gate:
        in_gate = (f >= gate_lo) & (f <= gate_hi)
        out = np.where(in_gate, out, f)
    if border_code == 1 and margin > 0:
        out[:margin, :] = f[:margin, :]
        out[-margin:, :] = f[-margin:, :]
        out[:, :margin] = f[:, :margin]
        out[:, -margin:] = f[:, -margin:]
    return out


def ensemble_filter(
    vals: np.ndarray,
    t: float,
    v_code: int,
    ring_starts: np.ndarray,
    ring_weights: np.ndarray,
) -> np.ndarray:
    """Filter the center of each trial row.

    ``vals`` has one row per trial: column 0 is the center value, the
    remaining columns are the support values in ring order.  Returns the
    filtered center per trial (float64).
    """
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    f0 = vals[:, 0]
    n_trials = vals.shape[0]
    num = np.zeros(n_trials, dtype=np.float64)
    den = np.zeros(n_trials, dtype=np.float64)
    supsum = np.zeros(n_trials, dtype=np.float64)
    n_rings = len(ring_weights)
    for i in range(n_rings):
        sv = np.zeros(n_trials, dtype=np.float64)
        sfv = np.zeros(n_trials, dtype=np.float64)
        for j in range(int(ring_starts[i]), int(ring_starts[i + 1])):
            nb = vals[:, 1 + j]
            d32 = (nb - f0).astype(np.float32)
            v64 = v_weights(d32, t, v_code).astype(np.float64)
            sv += v64
            sfv += v64 * nb
            supsum += nb
        wi = float(ring_weights[i])
        num += wi * sfv
        den += wi * sv

    support_size = int(ring_starts[n_rings])
    safe = den > 0.0
    return np.where(safe, num / np.where(safe, den, 1.0), supsum / support_size)
