"""Transfer functions: HU -> color/extinction classification.

A TransferFunction is a piecewise-linear RGBA curve over control points in
Hounsfield units, plus a window (level/width) that remaps which HU range
the curve spans.  build_lut bakes the windowed curve into a fixed-size
RGBA table; classify converts a table entry's opacity into a physical
extinction coefficient via -ln(1 - a) (Beer-Lambert consistent).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from cinevol.errors import InvalidTransferFunction, PresetParseError

LUT_SIZE_DEFAULT = 4096
ALPHA_CAP = 0.999


@dataclass(frozen=True)
class ControlPoint:
    value: float  # HU
    r: float
    g: float
    b: float
    a: float

    def __post_init__(self):
        for name in ("r", "g", "b", "a"):
            c = getattr(self, name)
            if not (0.0 <= c <= 1.0):
                raise InvalidTransferFunction(
                    f"channel {name}={c} outside [0, 1]"
                )

    def rgba(self) -> tuple[float, float, float, float]:
        return (self.r, self.g, self.b, self.a)


@dataclass(frozen=True)
class TransferFunction:
    """Sorted control points plus a display window (level/width in HU)."""

    points: tuple[ControlPoint, ...]
    window_level: float = None  # type: ignore[assignment]
    window_width: float = None  # type: ignore[assignment]

    def __post_init__(self):
        pts = tuple(
            p if isinstance(p, ControlPoint) else ControlPoint(*p)
            for p in self.points
        )
        if len(pts) < 2:
            raise InvalidTransferFunction("need at least 2 control points")
        values = [p.value for p in pts]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise InvalidTransferFunction(
                "control point values must be strictly ascending"
            )
        level = self.window_level
        width = self.window_width
        # neutral window: spans the control-point range exactly
        if level is None:
            level = 0.5 * (values[0] + values[-1])
        if width is None:
            width = values[-1] - values[0]
        if width <= 0:
            raise InvalidTransferFunction(f"window_width must be > 0, got {width}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "window_level", float(level))
        object.__setattr__(self, "window_width", float(width))

    def evaluate(self, value: float) -> tuple[float, float, float, float]:
        """Piecewise-linear RGBA at an HU value; clamps beyond the ends."""
        pts = self.points
        if value <= pts[0].value:
            return pts[0].rgba()
        if value >= pts[-1].value:
            return pts[-1].rgba()
        for lo, hi in zip(pts, pts[1:]):
            if value <= hi.value:
                t = (value - lo.value) / (hi.value - lo.value)
                return tuple(
                    (1 - t) * a + t * b
                    for a, b in zip(lo.rgba(), hi.rgba())
                )
        return pts[-1].rgba()  # unreachable

    def window_bounds(self) -> tuple[float, float]:
        half = 0.5 * self.window_width
        return (self.window_level - half, self.window_level + half)


@dataclass(frozen=True)
class Lut:
    """Baked RGBA table over an HU domain."""

    entries: np.ndarray = field(repr=False)  # (N, 4) float64 in [0, 1]
    domain: tuple[float, float]

    def __post_init__(self):
        e = np.ascontiguousarray(self.entries, dtype=np.float64)
        if e.ndim != 2 or e.shape[1] != 4 or e.shape[0] < 2:
            raise InvalidTransferFunction(f"bad LUT shape {e.shape}")
        if e.min() < 0.0 or e.max() > 1.0:
            raise InvalidTransferFunction("LUT channels must lie in [0, 1]")
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)
        object.__setattr__(
            self, "domain", (float(self.domain[0]), float(self.domain[1]))
        )

    def index_of(self, value: float) -> int:
        lo, hi = self.domain
        n = self.entries.shape[0]
        t = (value - lo) / (hi - lo)
        # floor(x + 0.5) matches the render kernel's tie-breaking
        return int(np.clip(math.floor(t * (n - 1) + 0.5), 0, n - 1))


@dataclass(frozen=True)
class ClassifiedSample:
    color: tuple[float, float, float]
    sigma_t: float  # extinction, 1/mm


def apply_window(tf: TransferFunction, value: float) -> float:
    """Window-normalized coordinate: clamp((v - (level - w/2)) / w, 0, 1)."""
    lo = tf.window_level - 0.5 * tf.window_width
    return float(np.clip((value - lo) / tf.window_width, 0.0, 1.0))


def build_lut(tf: TransferFunction, n: int = LUT_SIZE_DEFAULT) -> Lut:
    """Bake the transfer function into an n-entry RGBA table.

    Entry i sits at normalized window coordinate i/(n-1); the curve itself
    is evaluated at the matching position within the control-point range,
    so the window selects which HU interval the curve spans.  The returned
    domain is the window interval in HU.
    """
    if n < 2:
        raise InvalidTransferFunction(f"LUT size must be >= 2, got {n}")
    first = tf.points[0].value
    last = tf.points[-1].value
    entries = np.empty((n, 4), dtype=np.float64)
    for i in range(n):
        t = i / (n - 1)
        entries[i] = tf.evaluate(first + t * (last - first))
    return Lut(entries, tf.window_bounds())


def classify(lut: Lut, value: float, density_scale: float) -> ClassifiedSample:
    """Color + extinction for an HU value.

    sigma_t = -ln(1 - min(a, 0.999)) * density_scale, so a = 0 is fully
    transparent and a -> 1 approaches (finite) total extinction.
    """
    if density_scale <= 0:
        raise InvalidTransferFunction(
            f"density_scale must be > 0, got {density_scale}"
        )
    r, g, b, a = lut.entries[lut.index_of(value)]
    sigma_t = -math.log(1.0 - min(a, ALPHA_CAP)) * density_scale
    return ClassifiedSample((r, g, b), sigma_t)


def opacity_to_sigma(a: float, density_scale: float) -> float:
    """The scalar opacity -> extinction map used by classify."""
    return -math.log(1.0 - min(float(a), ALPHA_CAP)) * density_scale


# --- CSV presets -------------------------------------------------------------

_CSV_HEADER = "value,r,g,b,a"


def _fmt(x: float) -> str:
    return repr(float(x))


def save_preset_csv(tf: TransferFunction) -> bytes:
    """Serialize to the `.tfcsv` preset format (UTF-8, LF line endings)."""
    lines = [_CSV_HEADER]
    for p in tf.points:
        lines.append(
            ",".join(_fmt(x) for x in (p.value, p.r, p.g, p.b, p.a))
        )
    lines.append(f"#level,{_fmt(tf.window_level)}")
    lines.append(f"#width,{_fmt(tf.window_width)}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def load_preset_csv(data: bytes) -> TransferFunction:
    """Parse a `.tfcsv` preset; raises PresetParseError with line numbers."""
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    points = []
    level = None
    width = None
    for lineno, line in enumerate(io.StringIO(text), start=1):
        line = line.strip()
        if not line:
            continue
        if lineno == 1:
            if line != _CSV_HEADER:
                raise PresetParseError(
                    f"expected header {_CSV_HEADER!r}, got {line!r}", line=lineno
                )
            continue
        if line.startswith("#"):
            key, _, val = line[1:].partition(",")
            try:
                if key == "level":
                    level = float(val)
                elif key == "width":
                    width = float(val)
                else:
                    raise ValueError(f"unknown metadata row {key!r}")
            except ValueError as exc:
                raise PresetParseError(str(exc), line=lineno) from None
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise PresetParseError(
                f"expected 5 fields, got {len(parts)}", line=lineno
            )
        try:
            values = [float(x) for x in parts]
        except ValueError:
            raise PresetParseError(f"non-numeric field in {line!r}", line=lineno)
        points.append(ControlPoint(*values))
    if len(points) < 2:
        raise PresetParseError("preset needs at least 2 control points")
    return TransferFunction(tuple(points), level, width)


# --- shipped presets ---------------------------------------------------------

def preset(name: str) -> TransferFunction:
    """Built-in presets for the phantom scenes (original, not published TFs)."""
    presets = {
        "cardiac": TransferFunction((
            ControlPoint(-1000.0, 0.0, 0.0, 0.0, 0.0),
            ControlPoint(-150.0, 0.0, 0.0, 0.0, 0.0),
            ControlPoint(40.0, 0.75, 0.45, 0.40, 0.18),
            ControlPoint(120.0, 0.80, 0.50, 0.45, 0.35),
            ControlPoint(250.0, 0.85, 0.20, 0.15, 0.70),
            ControlPoint(400.0, 0.90, 0.25, 0.20, 0.92),
            ControlPoint(1200.0, 0.95, 0.92, 0.85, 0.98),
        )),
        "bone": TransferFunction((
            ControlPoint(-1000.0, 0.0, 0.0, 0.0, 0.0),
            ControlPoint(300.0, 0.0, 0.0, 0.0, 0.0),
            ControlPoint(700.0, 0.9, 0.88, 0.82, 0.5),
            ControlPoint(2000.0, 1.0, 1.0, 0.95, 0.95),
        )),
        "gray": TransferFunction((
            ControlPoint(-1000.0, 0.0, 0.0, 0.0, 0.0),
            ControlPoint(0.0, 0.5, 0.5, 0.5, 0.3),
            ControlPoint(400.0, 0.9, 0.9, 0.9, 0.9),
        )),
    }
    if name not in presets:
        raise KeyError(f"unknown preset {name!r} (have {sorted(presets)})")
    return presets[name]
