"""Planar 8-bit YUV 4:2:0 pictures, raw I420 file I/O and distortion metrics."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable

import numpy as np

from .errors import FormatError

# A plane is a 2-D uint8 array indexed [row, column].
Plane = np.ndarray

PSNR_INF = math.inf


def is_inf_psnr(value: float) -> bool:
    return math.isinf(value)


def _as_plane(a, name: str) -> Plane:
    a = np.asarray(a)
    if a.ndim != 2:
        raise ValueError(f"{name} plane must be 2-D, got shape {a.shape}")
    if a.dtype != np.uint8:
        if a.size and (a.min() < 0 or a.max() > 255):
            raise ValueError(f"{name} plane has samples outside [0, 255]")
        a = a.astype(np.uint8)
    return a


@dataclass(frozen=True, eq=False)
class Frame:
    y: Plane
    u: Plane
    v: Plane

    def __post_init__(self):
        y = _as_plane(self.y, "Y")
        u = _as_plane(self.u, "U")
        v = _as_plane(self.v, "V")
        h, w = y.shape
        if w % 2 or h % 2:
            raise ValueError(f"luma dimensions must be even, got {w}x{h}")
        if u.shape != (h // 2, w // 2) or v.shape != (h // 2, w // 2):
            raise ValueError("chroma planes must be half the luma size (4:2:0)")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def width(self) -> int:
        return self.y.shape[1]

    @property
    def height(self) -> int:
        return self.y.shape[0]

    @property
    def planes(self) -> tuple[Plane, Plane, Plane]:
        return self.y, self.u, self.v

    @classmethod
    def blank(cls, width: int, height: int, value: int = 128) -> "Frame":
        return cls(
            np.full((height, width), value, np.uint8),
            np.full((height // 2, width // 2), value, np.uint8),
            np.full((height // 2, width // 2), value, np.uint8),
        )

    def equals(self, other: "Frame") -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.planes, other.planes))


@dataclass(eq=False)
class Sequence:
    frames: list[Frame] = field(default_factory=list)
    fps: float = 25.0

    def __post_init__(self):
        self.frames = list(self.frames)
        if self.frames:
            w, h = self.frames[0].width, self.frames[0].height
            for f in self.frames[1:]:
                if (f.width, f.height) != (w, h):
                    raise ValueError("all frames in a sequence must share dimensions")

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, i):
        return self.frames[i]

    @property
    def size(self) -> tuple[int, int] | None:
        if not self.frames:
            return None
        return self.frames[0].width, self.frames[0].height

    def equals(self, other: "Sequence") -> bool:
        return len(self) == len(other) and all(
            a.equals(b) for a, b in zip(self.frames, other.frames)
        )


def frame_bytes(width: int, height: int) -> int:
    return width * height * 3 // 2


def read_yuv420(
    stream: BinaryIO | bytes,
    width: int,
    height: int,
    max_frames: int | None = None,
    bit_depth: int = 8,
) -> Sequence:
    if bit_depth != 8:
        raise FormatError(f"only 8-bit video is supported (got {bit_depth}-bit)")
    if width <= 0 or height <= 0 or width % 2 or height % 2:
        raise FormatError(f"frame dimensions must be positive and even, got {width}x{height}")
    if isinstance(stream, (bytes, bytearray, memoryview)):
        stream = io.BytesIO(bytes(stream))
    n = frame_bytes(width, height)
    ysz, csz = width * height, width * height // 4
    frames = []
    while max_frames is None or len(frames) < max_frames:
        buf = stream.read(n)
        if not buf:
            break
        if len(buf) < n:
            raise FormatError(
                f"truncated frame: frame {len(frames)} has {len(buf)} of {n} bytes"
            )
        a = np.frombuffer(buf, np.uint8)
        frames.append(
            Frame(
                a[:ysz].reshape(height, width),
                a[ysz:ysz + csz].reshape(height // 2, width // 2),
                a[ysz + csz:].reshape(height // 2, width // 2),
            )
        )
    return Sequence(frames)


def write_yuv420(seq: Sequence | Iterable[Frame], stream: BinaryIO) -> int:
    frames = seq.frames if isinstance(seq, Sequence) else list(seq)
    total = 0
    for f in frames:
        for p in f.planes:
            data = np.ascontiguousarray(p).tobytes()
            stream.write(data)
            total += len(data)
    return total


def load_yuv(path, width: int, height: int, max_frames: int | None = None) -> Sequence:
    with open(path, "rb") as fh:
        return read_yuv420(fh, width, height, max_frames)


def save_yuv(path, seq: Sequence) -> int:
    with open(path, "wb") as fh:
        return write_yuv420(seq, fh)


def pad_replicate(frame: Frame, multiple: int) -> Frame:
    """Grow the frame to a multiple of ``multiple`` by repeating the last row/column."""
    if multiple < 1 or multiple % 2:
        raise ValueError("padding multiple must be a positive even number")
    w, h = frame.width, frame.height
    pw = -(-w // multiple) * multiple
    ph = -(-h // multiple) * multiple
    if (pw, ph) == (w, h):
        return frame
    y = np.pad(frame.y, ((0, ph - h), (0, pw - w)), mode="edge")
    u = np.pad(frame.u, ((0, (ph - h) // 2), (0, (pw - w) // 2)), mode="edge")
    v = np.pad(frame.v, ((0, (ph - h) // 2), (0, (pw - w) // 2)), mode="edge")
    return Frame(y, u, v)


def sse(reference: Plane, test: Plane) -> int:
    if reference.shape != test.shape:
        raise ValueError(f"plane size mismatch: {reference.shape} vs {test.shape}")
    d = reference.astype(np.int64) - test.astype(np.int64)
    return int(np.dot(d.ravel(), d.ravel()))


def psnr(reference: Plane, test: Plane) -> float:
    """Peak signal-to-noise ratio in dB; ``PSNR_INF`` for identical planes."""
    err = sse(reference, test)
    if err == 0:
        return PSNR_INF
    mse = err / reference.size
    return 10.0 * math.log10(255.0 * 255.0 / mse)


def mean_psnr(values: Iterable[float]) -> float:
    """Average of PSNR values; infinite if any input is infinite."""
    values = list(values)
    if not values:
        raise ValueError("no PSNR values to average")
    if any(math.isinf(v) for v in values):
        return PSNR_INF
    return sum(values) / len(values)
