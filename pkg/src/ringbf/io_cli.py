"""Image file formats and the command-line interface.

Two on-disk image formats are supported, both 16-bit:

* ``.raw``  — signed 16-bit little-endian samples, row-major, with a text
  sidecar next to it (``foo.raw`` -> ``foo.meta``) holding ``width=<int>``
  and ``height=<int>`` lines.  This is the lossless interchange format and
  the only one that can hold negative values.
* ``.pgm``  — binary PGM (``P5``) with maxval 65535 and big-endian samples,
  for viewing in standard tools.  Values must fit in [0, 32767]; writing a
  negative image raises ``RangeError`` directing the caller to ``.raw``.

The CLI (``ringbf <subcommand>``) exposes filtering, deviation-reduction
curves, threshold solving, dose planning, calibration reports, and phantom
synthesis.  Exit codes: 0 success, 1 usage/validation error, 2 malformed
file, 3 numerical failure (bracket, convergence, or degenerate fit).
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import NoiseDistribution, compute_curve, curve_to_csv, solve_threshold
from .calibrate import (
    empirical_K_points,
    fit_polynomial,
    format_calibration_report,
    regress_noise,
)
from .ctmodel import DEFAULT_DOSE_MODEL, load_dose_model, plan_filter, synth_phantom
from .errors import FormatError, NumericalError, RangeError
from .filter import FilterConfig, Image, filter_iterate
from .kernel import KernelSpec, VFamily, WFamily

__all__ = [
    "RawImageHeader",
    "read_image",
    "write_image",
    "cli_dispatch",
    "main",
]

_WHITESPACE = b" \t\r\n\x0b\x0c"
_PGM_MAX = 32767  # largest value an int16 pipeline can round-trip


@dataclass(frozen=True)
class RawImageHeader:
    """Dimensions parsed from a ``.meta`` sidecar."""

    width: int
    height: int


def _meta_path(raw_path: Path) -> Path:
    return raw_path.with_suffix(".meta")


def _parse_meta(text: str, path: Path) -> RawImageHeader:
    fields: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in ("width", "height"):
            raise FormatError(f"{path}: line {lineno}: expected 'width=<int>' or 'height=<int>', got {line!r}")
        try:
            parsed = int(value.strip())
        except ValueError:
            raise FormatError(f"{path}: line {lineno}: {key} must be an integer, got {value.strip()!r}") from None
        if parsed <= 0:
            raise FormatError(f"{path}: line {lineno}: {key} must be positive, got {parsed}")
        if key in fields:
            raise FormatError(f"{path}: line {lineno}: duplicate {key}")
        fields[key] = parsed
    for key in ("width", "height"):
        if key not in fields:
            raise FormatError(f"{path}: missing {key}=<int> line")
    return RawImageHeader(width=fields["width"], height=fields["height"])


def _read_raw(path: Path) -> Image:
    data = path.read_bytes()  # a missing image is an OS error, not a format one
    meta = _meta_path(path)
    if not meta.exists():
        raise FormatError(f"missing sidecar {meta} for {path}")
    header = _parse_meta(meta.read_text(encoding="ascii"), meta)
    expected = header.width * header.height * 2
    if len(data) != expected:
        raise FormatError(
            f"{path}: raw data is {len(data)} bytes, expected {expected} "
            f"({header.width}x{header.height} 16-bit samples)"
        )
    pixels = np.frombuffer(data, dtype="<i2").astype(np.int16).reshape(header.height, header.width)
    return Image(pixels=pixels)


def _write_raw(path: Path, img: Image) -> None:
    path.write_bytes(np.ascontiguousarray(img.pixels, dtype="<i2").tobytes())
    _meta_path(path).write_text(f"width={img.width}\nheight={img.height}\n", encoding="ascii")


def _read_pgm(path: Path) -> Image:
    data = path.read_bytes()
    pos = 0

    def skip_separators() -> None:
        nonlocal pos
        while pos < len(data):
            byte = data[pos:pos + 1]
            if byte in (b"#",):
                while pos < len(data) and data[pos:pos + 1] not in (b"\r", b"\n"):
                    pos += 1
            elif byte and byte in _WHITESPACE:
                pos += 1
            else:
                break

    def read_token(name: str) -> tuple[bytes, int]:
        nonlocal pos
        skip_separators()
        start = pos
        while pos < len(data) and data[pos:pos + 1] not in _WHITESPACE:
            pos += 1
        if pos == start:
            raise FormatError(f"{path}: missing {name} in header", offset=start)
        return data[start:pos], start

    def read_int(name: str) -> tuple[int, int]:
        token, start = read_token(name)
        try:
            return int(token), start
        except ValueError:
            raise FormatError(f"{path}: {name} must be an integer, got {token!r}", offset=start) from None

    magic, start = read_token("magic number")
    if magic != b"P5":
        raise FormatError(f"{path}: not a binary PGM (expected magic 'P5', got {magic!r})", offset=start)
    width, start = read_int("width")
    if width <= 0:
        raise FormatError(f"{path}: width must be positive, got {width}", offset=start)
    height, start = read_int("height")
    if height <= 0:
        raise FormatError(f"{path}: height must be positive, got {height}", offset=start)
    maxval, start = read_int("maxval")
    if maxval != 65535:
        raise FormatError(
            f"{path}: 16-bit grayscale required (maxval 65535), got maxval {maxval}", offset=start
        )
    if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
        raise FormatError(f"{path}: expected a single whitespace byte after maxval", offset=pos)
    pos += 1
    expected = width * height * 2
    body = data[pos:]
    if len(body) != expected:
        raise FormatError(
            f"{path}: pixel data is {len(body)} bytes, expected {expected} "
            f"({width}x{height} 16-bit samples)",
            offset=pos,
        )
    samples = np.frombuffer(body, dtype=">u2")
    too_big = np.nonzero(samples > _PGM_MAX)[0]
    if too_big.size:
        idx = int(too_big[0])
        raise FormatError(
            f"{path}: sample {idx} is {int(samples[idx])}, beyond the supported "
            f"range [0, {_PGM_MAX}]",
            offset=pos + 2 * idx,
        )
    pixels = samples.astype(np.int16).reshape(height, width)
    return Image(pixels=pixels)


def _write_pgm(path: Path, img: Image) -> None:
    lo = int(img.pixels.min())
    hi = int(img.pixels.max())
    if lo < 0:
        raise RangeError(
            f"cannot write {path}: pixel value {lo} is negative; PGM holds only "
            f"[0, {_PGM_MAX}] — use the .raw format instead"
        )
    if hi > _PGM_MAX:
        raise RangeError(
            f"cannot write {path}: pixel value {hi} exceeds the supported range [0, {_PGM_MAX}]"
        )
    header = f"P5\n{img.width} {img.height}\n65535\n".encode("ascii")
    path.write_bytes(header + np.ascontiguousarray(img.pixels, dtype=">u2").tobytes())


def read_image(path) -> Image:
    """Read a ``.raw`` (+ ``.meta`` sidecar) or 16-bit ``.pgm`` image."""
    p = Path(path)
    suffix = p.suffix.lower()
    if suffix == ".raw":
        return _read_raw(p)
    if suffix == ".pgm":
        return _read_pgm(p)
    raise ValueError(f"unsupported image extension {p.suffix!r} (expected .raw or .pgm)")


def write_image(path, img: Image) -> None:
    """Write an image in the format implied by the extension (.raw or .pgm)."""
    if not isinstance(img, Image):
        raise ValueError(f"expected an Image, got {type(img).__name__}")
    p = Path(path)
    suffix = p.suffix.lower()
    if suffix == ".raw":
        _write_raw(p, img)
    elif suffix == ".pgm":
        _write_pgm(p, img)
    else:
        raise ValueError(f"unsupported image extension {p.suffix!r} (expected .raw or .pgm)")


# ---------------------------------------------------------------------------
# CLI


def _parse_pair(text: str, what: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"{what} must be 'lo:hi', got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise ValueError(f"{what} must be numeric 'lo:hi', got {text!r}") from None
    return lo, hi


def _parse_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"--t-grid must be 'lo:hi:step', got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise ValueError(f"--t-grid must be numeric 'lo:hi:step', got {text!r}") from None
    if step <= 0:
        raise ValueError(f"--t-grid step must be positive, got {step}")
    if hi < lo:
        raise ValueError(f"--t-grid range is empty: {lo} > {hi}")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


def _parse_size(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"--size must be 'WxH', got {text!r}")
    try:
        width, height = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValueError(f"--size must be integer 'WxH', got {text!r}") from None
    if width <= 0 or height <= 0:
        raise ValueError(f"--size dimensions must be positive, got {text!r}")
    return width, height


def _kernel_from_args(args, t: float) -> KernelSpec:
    return KernelSpec(
        v=VFamily.parse(args.v),
        t=t,
        w=WFamily.parse(args.w),
        n=args.n,
    )


def _cmd_filter(args) -> int:
    spec = _kernel_from_args(args, args.t)
    gate = _parse_pair(args.gate, "--gate") if args.gate else None
    cfg = FilterConfig(spec=spec, hu_gate=gate, border=args.border)
    img = read_image(args.inp)
    out = filter_iterate(img, cfg, args.iterate)
    write_image(args.out, out)
    return 0


def _cmd_curve(args) -> int:
    spec = _kernel_from_args(args, 0.0)
    grid = _parse_grid(args.t_grid)
    curve = compute_curve(spec, grid, NoiseDistribution.parse(args.dist),
                          trials=args.trials, seed=args.seed)
    Path(args.out).write_text(curve_to_csv(curve), encoding="ascii", newline="\n")
    return 0


def _cmd_threshold(args) -> int:
    spec = _kernel_from_args(args, 0.0)
    t0 = solve_threshold(
        spec,
        NoiseDistribution.parse(args.dist),
        target=args.target,
        bracket=_parse_pair(args.bracket, "--bracket"),
        tol=args.tol,
        trials=args.trials,
        seed=args.seed,
    )
    print(f"{t0:.9g}")
    return 0


def _cmd_plan(args) -> int:
    model = load_dose_model(args.model) if args.model else DEFAULT_DOSE_MODEL
    if args.solve_t0:
        spec = KernelSpec(v=VFamily.parse(args.v), t=0.0, w=WFamily.power(), n=args.n)
        t0 = solve_threshold(spec, NoiseDistribution.Normal,
                             trials=args.trials, seed=args.seed)
    else:
        t0 = args.t0
    plan = plan_filter(args.dose_fraction, model=model, v=VFamily.parse(args.v),
                       n=args.n, t0=t0)
    print(f"x={plan.x:.9g}")
    print(f"sigma={plan.sigma:.9g}")
    print(f"t0={plan.t0:.9g}")
    print(f"t={plan.t:.9g}")
    if args.apply:
        if not args.inp or not args.out:
            raise ValueError("--apply requires both --in and --out")
        img = read_image(args.inp)
        out = filter_iterate(img, plan.config(), 1)
        write_image(args.out, out)
    elif args.inp or args.out:
        raise ValueError("--in/--out are only used with --apply")
    return 0


def _cmd_calibrate(args) -> int:
    high = read_image(args.high)
    low = read_image(args.low)
    points = empirical_K_points(high, low, args.window)
    fit = fit_polynomial(points, args.degree)
    regression = regress_noise(high, low, args.window)
    text = format_calibration_report(points, fit, regression)
    Path(args.out).write_text(text, encoding="ascii", newline="\n")
    return 0


def _cmd_phantom(args) -> int:
    try:
        densities = [float(part) for part in args.densities.split(",")]
    except ValueError:
        raise ValueError(f"--densities must be comma-separated numbers, got {args.densities!r}") from None
    if not densities:
        raise ValueError("--densities must name at least one region")
    width, height = _parse_size(args.size)
    img = synth_phantom(densities, sigma=args.sigma, seed=args.seed, size=(height, width))
    write_image(args.out, img)
    return 0


def _add_kernel_options(sub, *, with_t: bool) -> None:
    sub.add_argument("--v", required=True, choices=["abs", "frac", "quad", "exp"],
                     help="photometric weight family")
    if with_t:
        sub.add_argument("--t", required=True, type=float, help="photometric scale")
    sub.add_argument("--n", required=True, type=int, choices=range(1, 6),
                     help="number of rings in the support")
    sub.add_argument("--w", default="power",
                     help="spatial weight family: 'power' or 'gauss:<sigma>'")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ringbf",
        description="Ring-decomposed bilateral filtering and deviation-reduction analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="filter an image")
    p.add_argument("--in", dest="inp", required=True, help="input image (.raw or .pgm)")
    p.add_argument("--out", required=True, help="output image (.raw or .pgm)")
    _add_kernel_options(p, with_t=True)
    p.add_argument("--gate", default=None, help="only filter pixels inside 'lo:hi'")
    p.add_argument("--iterate", type=int, default=1, help="number of passes (default 1)")
    p.add_argument("--border", choices=["clamp", "skip"], default="clamp",
                   help="border handling (default clamp)")
    p.set_defaults(handler=_cmd_filter)

    p = sub.add_parser("curve", help="tabulate the deviation-reduction curve K(t)")
    _add_kernel_options(p, with_t=False)
    p.add_argument("--dist", required=True, choices=["normal", "uniform"],
                   help="noise distribution")
    p.add_argument("--t-grid", dest="t_grid", required=True, help="photometric scales 'lo:hi:step'")
    p.add_argument("--trials", type=int, default=20000, help="Monte-Carlo trials per point")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(handler=_cmd_curve)

    p = sub.add_parser("threshold", help="solve K(t0) = target for t0")
    _add_kernel_options(p, with_t=False)
    p.add_argument("--dist", required=True, choices=["normal", "uniform"],
                   help="noise distribution")
    p.add_argument("--target", type=float, default=0.5, help="target reduction (default 0.5)")
    p.add_argument("--bracket", default="0.01:50.0", help="search bracket 'lo:hi'")
    p.add_argument("--tol", type=float, default=1e-3, help="bracket width tolerance")
    p.add_argument("--trials", type=int, default=200000, help="Monte-Carlo trials")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.set_defaults(handler=_cmd_threshold)

    p = sub.add_parser("plan", help="derive filter settings for a dose fraction")
    p.add_argument("--dose-fraction", dest="dose_fraction", required=True, type=float,
                   help="dose fraction x in the model's domain")
    p.add_argument("--model", default=None, help="dose model file (default: built-in model)")
    p.add_argument("--v", default="frac", choices=["abs", "frac", "quad", "exp"],
                   help="photometric weight family (default frac)")
    p.add_argument("--n", type=int, default=3, choices=range(1, 6),
                   help="number of rings (default 3)")
    p.add_argument("--t0", type=float, default=1.40, help="unit-scale threshold (default 1.40)")
    p.add_argument("--solve-t0", dest="solve_t0", action="store_true",
                   help="re-derive t0 by Monte-Carlo instead of using --t0")
    p.add_argument("--trials", type=int, default=200000,
                   help="Monte-Carlo trials for --solve-t0")
    p.add_argument("--seed", type=int, default=0, help="random seed for --solve-t0")
    p.add_argument("--apply", action="store_true", help="also filter an image with the plan")
    p.add_argument("--in", dest="inp", default=None, help="input image for --apply")
    p.add_argument("--out", default=None, help="output image for --apply")
    p.set_defaults(handler=_cmd_plan)

    p = sub.add_parser("calibrate", help="empirical reduction report from an image pair")
    p.add_argument("--high", required=True, help="high-dose image")
    p.add_argument("--low", required=True, help="low-dose image")
    p.add_argument("--window", type=int, default=2, help="window half-size (default 2)")
    p.add_argument("--degree", type=int, default=4, help="trend polynomial degree (default 4)")
    p.add_argument("--out", required=True, help="output report path")
    p.set_defaults(handler=_cmd_calibrate)

    p = sub.add_parser("phantom", help="synthesize a banded test image")
    p.add_argument("--densities", required=True, help="comma-separated region values")
    p.add_argument("--sigma", type=float, default=0.0, help="additive noise deviation")
    p.add_argument("--size", default="512x512", help="image size 'WxH' (default 512x512)")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--out", required=True, help="output image (.raw or .pgm)")
    p.set_defaults(handler=_cmd_phantom)

    return parser


# Options whose values may legitimately begin with '-' (negative bounds or
# densities); argparse would otherwise read the value as an option name.
_DASH_VALUE_OPTS = {"--gate", "--bracket", "--densities"}


def _merge_dash_values(argv: list) -> list:
    merged = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (tok in _DASH_VALUE_OPTS and nxt is not None and nxt.startswith("-")
                and any(ch.isdigit() for ch in nxt)):
            merged.append(f"{tok}={nxt}")
            i += 2
        else:
            merged.append(tok)
            i += 1
    return merged


def cli_dispatch(argv) -> int:
    """Run one CLI invocation; returns the process exit code instead of exiting."""
    parser = _build_parser()
    try:
        args = parser.parse_args(_merge_dash_values(list(argv)))
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        return 0 if code == 0 else 1
    try:
        return args.handler(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
