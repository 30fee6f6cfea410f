"""Gridded fields on a regular lat/lon patch, plus GRID1 file I/O.

A field is a rectangular array of float values with a uniform grid spacing
in degrees.  Three kinds are distinguished:

* ``"mask"``  -- binary event observations, values in {0, 1}
* ``"prob"``  -- probabilistic predictions, values in [0, 1]
* ``"real"``  -- unconstrained values (e.g. output of a spectral filter)

An optional boolean ``eval_mask`` marks which pixels are scored; pixels with
``eval_mask == False`` still carry values (filters see them) but are excluded
from every score sum, numerator and denominator alike.

GRID1 format
------------
Byte layout of a ``.grid`` file::

    line 1:  b"GRID1\\n"
    line 2:  b"<rows> <cols> <spacing_deg> <kind>[ masked]\\n"   (ASCII, space-separated)
    payload: rows*cols little-endian IEEE-754 float32, row-major
    mask:    rows*cols bytes of 0/1, row-major (only when "masked" is present)

Values are quantised to float32 on write; a write/read/write cycle is
byte-identical.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, replace

import numpy as np

MAGIC = b"GRID1"
GRID_KINDS = ("mask", "prob", "real")


@dataclass(frozen=True)
class GridField:
    """A 2-D field with grid spacing in degrees and a value-kind contract.

    :param values: 2-D float64 array, finite everywhere.
    :param spacing_deg: grid spacing in degrees, > 0.
    :param kind: one of "mask", "prob", "real".
    :param eval_mask: optional boolean array marking scored pixels.
    """

    values: np.ndarray
    spacing_deg: float
    kind: str
    eval_mask: np.ndarray | None = None

    def __post_init__(self):
        values = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if values.ndim != 2 or values.size == 0:
            raise ValueError("values must be a non-empty 2-D array")
        if not np.isfinite(values).all():
            raise ValueError("values must be finite")
        if self.kind not in GRID_KINDS:
            raise ValueError(f"kind must be one of {GRID_KINDS}, got {self.kind!r}")
        if self.kind == "mask" and not np.isin(values, (0.0, 1.0)).all():
            raise ValueError("mask fields must contain only 0 and 1")
        if self.kind == "prob" and (values.min() < 0.0 or values.max() > 1.0):
            raise ValueError("prob fields must lie in [0, 1]")
        if not (np.isfinite(self.spacing_deg) and self.spacing_deg > 0):
            raise ValueError("spacing_deg must be positive and finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.eval_mask is not None:
            emask = np.ascontiguousarray(np.asarray(self.eval_mask, dtype=bool))
            if emask.shape != values.shape:
                raise ValueError("eval_mask shape must match values")
            emask.flags.writeable = False
            object.__setattr__(self, "eval_mask", emask)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def with_values(self, values: np.ndarray, kind: str | None = None) -> "GridField":
        """Return a copy with new values (and optionally a new kind)."""
        return replace(self, values=values, kind=self.kind if kind is None else kind)


@dataclass(frozen=True)
class WavelengthBand:
    """A pass band in wavelength space (degrees), inclusive bounds.

    ``lo == 0`` means no lower bound; ``hi == math.inf`` means no upper
    bound, so ``WavelengthBand(0, math.inf)`` is all-pass.
    """

    lo_deg: float
    hi_deg: float

    def __post_init__(self):
        if not (self.lo_deg >= 0 and self.hi_deg > self.lo_deg):
            raise ValueError("band must satisfy 0 <= lo < hi")

    @property
    def is_all_pass(self) -> bool:
        return self.lo_deg == 0 and math.isinf(self.hi_deg)


def next_pow2_dims(shape: tuple[int, int]) -> tuple[int, int]:
    """Smallest power-of-two dimensions >= shape, per axis."""
    return tuple(1 << max(0, int(n - 1).bit_length()) for n in shape)


def _pad_amounts(orig: int, target: int) -> tuple[int, int]:
    """Centered padding split; an odd remainder goes to the bottom/right."""
    if target < orig:
        raise ValueError(f"target {target} smaller than original {orig}")
    before = (target - orig) // 2
    return before, target - orig - before


def taper_zero_pad(field: GridField, target_shape: tuple[int, int]) -> GridField:
    """Embed the field centered in a larger zero grid.

    The original values sit in the middle; an odd padding remainder goes to
    the bottom/right.  The eval_mask, if any, is dropped (padding pixels are
    not scored; the tapered grid is an intermediate for spectral filtering).
    """
    (top, _), (left, _) = (_pad_amounts(field.rows, target_shape[0]),
                           _pad_amounts(field.cols, target_shape[1]))
    out = np.zeros(target_shape, dtype=np.float64)
    out[top:top + field.rows, left:left + field.cols] = field.values
    return GridField(out, field.spacing_deg, field.kind)


def crop_taper(field: GridField, orig_shape: tuple[int, int]) -> GridField:
    """Undo :func:`taper_zero_pad`: crop the centered original-shape window."""
    (top, _), (left, _) = (_pad_amounts(orig_shape[0], field.rows),
                           _pad_amounts(orig_shape[1], field.cols))
    out = field.values[top:top + orig_shape[0], left:left + orig_shape[1]]
    return GridField(out.copy(), field.spacing_deg, field.kind)


def _format_header(field: GridField) -> bytes:
    tokens = [str(field.rows), str(field.cols), repr(float(field.spacing_deg)), field.kind]
    if field.eval_mask is not None:
        tokens.append("masked")
    return MAGIC + b"\n" + " ".join(tokens).encode("ascii") + b"\n"


def write_grid(path: str | os.PathLike, field: GridField) -> None:
    """Write a field to a GRID1 file (atomically: temp file + rename)."""
    payload = np.ascontiguousarray(field.values, dtype="<f4").tobytes()
    blob = _format_header(field) + payload
    if field.eval_mask is not None:
        blob += np.ascontiguousarray(field.eval_mask, dtype=np.uint8).tobytes()
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_grid(path: str | os.PathLike) -> GridField:
    """Read a GRID1 file; raises ValueError on any malformed content."""
    with open(path, "rb") as fh:
        blob = fh.read()
    nl1 = blob.find(b"\n")
    if nl1 < 0 or blob[:nl1] != MAGIC:
        raise ValueError("not a GRID1 file (bad magic line)")
    nl2 = blob.find(b"\n", nl1 + 1)
    if nl2 < 0:
        raise ValueError("truncated GRID1 header")
    tokens = blob[nl1 + 1:nl2].decode("ascii", errors="replace").split()
    has_mask = tokens and tokens[-1] == "masked"
    if has_mask:
        tokens = tokens[:-1]
    if len(tokens) != 4:
        raise ValueError(f"GRID1 header must have 4 fields, got {len(tokens)}")
    try:
        rows, cols = int(tokens[0]), int(tokens[1])
        spacing = float(tokens[2])
    except ValueError as exc:
        raise ValueError(f"bad GRID1 header numbers: {exc}") from exc
    kind = tokens[3]
    if kind not in GRID_KINDS:
        raise ValueError(f"unknown GRID1 kind {kind!r}")
    if rows <= 0 or cols <= 0:
        raise ValueError("GRID1 dims must be positive")
    n = rows * cols
    body = blob[nl2 + 1:]
    expected = n * 4 + (n if has_mask else 0)
    if len(body) != expected:
        raise ValueError(f"GRID1 payload is {len(body)} bytes, expected {expected}")
    values = np.frombuffer(body[:n * 4], dtype="<f4").astype(np.float64).reshape(rows, cols)
    emask = None
    if has_mask:
        raw = np.frombuffer(body[n * 4:], dtype=np.uint8)
        if not np.isin(raw, (0, 1)).all():
            raise ValueError("GRID1 eval_mask bytes must be 0 or 1")
        emask = raw.astype(bool).reshape(rows, cols)
    return GridField(values, spacing, kind, emask)
