"""Event streams: parsing, windowed polarity integration, and EDI propagation.

An event is a tuple (t, x, y, polarity) with polarity in {-1, +1}.  Streams
keep the four fields as parallel arrays sorted by timestamp.  The event
frame E over a window (f, t] is the per-pixel signed sum of polarities; the
EDI relation L(t) = L(f) * exp(c * E) moves intensities across the window.

Time convention: timestamps are seconds and t = 0 marks the start of the
camera exposure.  The stream's reference time ``f`` (the instant the latent
image is anchored at) defaults to the exposure midpoint when unset.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import EventParseError


@dataclass
class EventStream:
    """Time-sorted event arrays plus sensor geometry.

    t, x, y, polarity are equal-length 1-D arrays; polarity entries are -1
    or +1.  ``exposure`` is the optional (start, end) of the frame exposure
    and ``f`` the optional reference time of the latent image.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    polarity: np.ndarray
    width: int
    height: int
    exposure: tuple | None = None
    f: float | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        self.x = np.asarray(self.x, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.polarity = np.asarray(self.polarity, dtype=np.int64)
        if not (len(self.t) == len(self.x) == len(self.y) == len(self.polarity)):
            raise ValueError("event field arrays must have equal length")
        if len(self.t) and np.any(np.diff(self.t) < 0):
            raise ValueError("event stream must be sorted by timestamp")

    def __len__(self):
        return len(self.t)

    @property
    def shape(self):
        return (self.height, self.width)


def load_events(path, width=None, height=None):
    """Parse an ECD-style text file with one "t x y p" event per line.

    p is 0 or 1 and maps to polarity -1 / +1.  Events are stably sorted by
    timestamp.  If width/height are given, out-of-bounds pixels raise; if
    omitted, the sensor size is inferred as max coordinate + 1.
    """
    ts, xs, ys, ps = [], [], [], []
    with open(path, "r") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise EventParseError(path, line_no, f"expected 4 fields, got {len(parts)}")
            try:
                t = float(parts[0])
                x = int(parts[1])
                y = int(parts[2])
                p = int(parts[3])
            except ValueError as exc:
                raise EventParseError(path, line_no, str(exc)) from None
            if p not in (0, 1):
                raise EventParseError(path, line_no, f"polarity field must be 0 or 1, got {p}")
            if x < 0 or y < 0:
                raise EventParseError(path, line_no, f"negative pixel index ({x}, {y})")
            if width is not None and x >= width:
                raise EventParseError(path, line_no, f"x={x} outside sensor width {width}")
            if height is not None and y >= height:
                raise EventParseError(path, line_no, f"y={y} outside sensor height {height}")
            ts.append(t)
            xs.append(x)
            ys.append(y)
            ps.append(1 if p == 1 else -1)

    t_arr = np.asarray(ts, dtype=np.float64)
    order = np.argsort(t_arr, kind="stable")
    if width is None:
        width = int(max(xs) + 1) if xs else 0
    if height is None:
        height = int(max(ys) + 1) if ys else 0
    return EventStream(
        t=t_arr[order],
        x=np.asarray(xs, dtype=np.int64)[order],
        y=np.asarray(ys, dtype=np.int64)[order],
        polarity=np.asarray(ps, dtype=np.int64)[order],
        width=width,
        height=height,
    )


def save_events(stream: EventStream, path):
    """Write a stream back to the "t x y p" text format (p in {0, 1})."""
    with open(path, "w") as fh:
        for t, x, y, p in zip(stream.t, stream.x, stream.y, stream.polarity):
            fh.write(f"{t:.9f} {x} {y} {1 if p > 0 else 0}\n")


def integrate(stream: EventStream, f, t):
    """Signed polarity sum per pixel over the half-open window (f, t].

    Backward windows integrate in reverse: integrate(f, t) == -integrate(t, f),
    so E is additive over adjacent windows in either direction.
    """
    if t < f:
        return -integrate(stream, t, f)
    frame = np.zeros(stream.shape, dtype=np.float64)
    lo = np.searchsorted(stream.t, f, side="right")
    hi = np.searchsorted(stream.t, t, side="right")
    if hi > lo:
        idx = stream.y[lo:hi] * stream.width + stream.x[lo:hi]
        counts = np.bincount(idx, weights=stream.polarity[lo:hi].astype(np.float64),
                             minlength=frame.size)
        frame += counts.reshape(stream.shape)
    return frame


def edi_propagate(L_f, E, c):
    """Move intensities across an event window: L(t) = L(f) * exp(c * E)."""
    return np.asarray(L_f, dtype=np.float64) * np.exp(c * np.asarray(E, dtype=np.float64))


def theta2(E, c):
    """Per-pixel event factor exp(c * E) - 1 used by both data terms."""
    return np.expm1(c * np.asarray(E, dtype=np.float64))
