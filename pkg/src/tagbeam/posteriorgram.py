"""Per-frame log-probability matrices: binary I/O and a synthetic generator.

The on-disk layout ("LPG1") is: 4 magic bytes ``LPG1``, little-endian u32
frame count T, little-endian u32 alphabet size V, little-endian u64 FNV-1a
checksum of the canonical alphabet JSON, then T*V little-endian f32
natural-log probabilities in row-major order.  In memory frames are float64.
"""

import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .alphabet import Alphabet

MAGIC = b"LPG1"
_HEADER = struct.Struct("<4sIIQ")

# per-frame logsumexp must stay within this band around zero
NORMALIZATION_TOL = 1e-3


class BadMagic(ValueError):
    """The file does not start with the LPG magic bytes."""


class VersionUnsupported(ValueError):
    """The file is an LPG container of an unknown version."""


class ShapeMismatch(ValueError):
    """Frame matrix dimensions are unusable."""


class NotNormalized(ValueError):
    """A frame's probabilities do not sum to one."""

    def __init__(self, frame_index: int, message: Optional[str] = None):
        super().__init__(message or "frame %d is not normalized" % frame_index)
        self.frame_index = frame_index

    def __reduce__(self):
        return (NotNormalized, (self.frame_index,))


@dataclass
class Posteriorgram:
    """T x V matrix of natural-log probabilities bound to an alphabet checksum."""

    frames: np.ndarray
    alphabet_hash: int
    frame_shift_ms: float = 20.0  # metadata only; not persisted

    def validate(self) -> None:
        if self.frames.ndim != 2:
            raise ShapeMismatch("frames must be a 2-D matrix, got %d dims" % self.frames.ndim)
        t, v = self.frames.shape
        if t < 1 or v < 1:
            raise ShapeMismatch("need at least one frame and one symbol, got %dx%d" % (t, v))
        if self.frame_shift_ms <= 0:
            raise ValueError("frame_shift_ms must be positive")
        nan_rows = np.isnan(self.frames).any(axis=1)
        if nan_rows.any():
            raise NotNormalized(int(np.nonzero(nan_rows)[0][0]))
        sums = np.logaddexp.reduce(self.frames, axis=1)
        ok = (sums >= -NORMALIZATION_TOL) & (sums <= NORMALIZATION_TOL)
        if not ok.all():
            raise NotNormalized(int(np.nonzero(~ok)[0][0]))

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def num_symbols(self) -> int:
        return self.frames.shape[1]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Posteriorgram)
            and self.alphabet_hash == other.alphabet_hash
            and self.frames.shape == other.frames.shape
            and np.array_equal(self.frames, other.frames)
        )


def write_posteriorgram(pg: Posteriorgram, path) -> None:
    """Write the LPG1 binary file; the matrix is quantized to f32 on disk."""
    pg.validate()
    t, v = pg.frames.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, t, v, pg.alphabet_hash))
        np.asarray(pg.frames, dtype="<f4").tofile(fh)


def read_posteriorgram(path) -> Posteriorgram:
    """Read and validate an LPG1 file."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < 4 or header[:4] != MAGIC:
            if header[:3] == MAGIC[:3]:
                raise VersionUnsupported("unsupported LPG version %r" % header[:4])
            raise BadMagic("not an LPG1 file: magic %r" % header[:4])
        if len(header) < _HEADER.size:
            raise OSError("truncated LPG1 header in %s" % path)
        _, t, v, checksum = _HEADER.unpack(header)
        data = np.fromfile(fh, dtype="<f4", count=t * v)
    if data.size != t * v:
        raise OSError("truncated LPG1 payload in %s: expected %d values, got %d"
                      % (path, t * v, data.size))
    frames = data.astype(np.float64).reshape(t, v)
    pg = Posteriorgram(frames=frames, alphabet_hash=checksum)
    pg.validate()
    return pg


def synth_generate(
    reference: str,
    alphabet: Alphabet,
    noise: float,
    dur_max: int,
    seed: int,
) -> Posteriorgram:
    """Emulate acoustic-model output for a reference transcript.

    Each character of the encoded reference is held for a duration drawn
    uniformly from 1..dur_max.  A one-frame blank segment is mandatory
    between identical adjacent characters and is inserted with probability
    0.5 after any other character segment (including the last).  Every
    frame's distribution puts mass ``1 - noise`` on its designated symbol
    and ``noise / (V - 1)`` on each other symbol.  Output is deterministic
    for a fixed seed.
    """
    if not 0.0 <= noise < 1.0:
        raise ValueError("noise must be in [0, 1), got %r" % noise)
    if dur_max < 1:
        raise ValueError("dur_max must be >= 1, got %d" % dur_max)
    labels = alphabet.encode(reference)
    blank = alphabet.blank_index
    v = len(alphabet)
    rng = np.random.default_rng(seed)

    plan = []
    for i, lab in enumerate(labels):
        dur = int(rng.integers(1, dur_max + 1))
        plan.extend([lab] * dur)
        if i + 1 < len(labels) and labels[i + 1] == lab:
            plan.append(blank)
        elif rng.random() < 0.5:
            plan.append(blank)
    if not plan:
        plan = [blank]

    frames = np.full((len(plan), v), -np.inf if noise == 0.0 else np.log(noise / (v - 1)))
    frames[np.arange(len(plan)), plan] = 0.0 if noise == 0.0 else np.log1p(-noise)
    return Posteriorgram(frames=frames, alphabet_hash=alphabet.checksum)
