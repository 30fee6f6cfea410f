"""Fourier scale separation: taper, radial window, Butterworth band-pass.

The pipeline for one field is:

1. zero-pad the field, centered, to 3x its dimensions (so discontinuities at
   the patch edge move away from the data);
2. multiply by a radially symmetric Blackman-Harris window that falls from 1
   at the grid center to 0 at the nearest edge;
3. forward 2-D DFT (unnormalised);
4. multiply the complex coefficients by a real Butterworth gain built from
   the wavelength band;
5. inverse DFT (scaled by 1/(rows*cols)), keep the real part;
6. crop the centered original-shape window back out.

The inverse of a real-input forward transform with a real gain is real up to
rounding; the imaginary residue is asserted to be tiny and then dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridField, WavelengthBand, crop_taper, taper_zero_pad

TAPER_FACTOR = 3
BUTTERWORTH_ORDER = 2
IMAG_RESIDUE_TOL = 1e-9


class NumericError(RuntimeError):
    """An internal numeric sanity check failed (not a usage error)."""


@dataclass(frozen=True)
class FrequencyGrid:
    """DFT wavenumbers (cycles per degree) for a rows x cols grid.

    ``nu_rows``/``nu_cols`` are the per-axis wavenumbers in DFT index order
    (index m maps to m for m <= N/2, else m - N, divided by N*spacing);
    ``nu_total`` is the 2-D magnitude sqrt(nu_r^2 + nu_c^2).
    """

    nu_rows: np.ndarray
    nu_cols: np.ndarray
    nu_total: np.ndarray


def _axis_frequencies(n: int, spacing_deg: float) -> np.ndarray:
    idx = np.arange(n)
    signed = np.where(2 * idx <= n, idx, idx - n)
    return signed / (n * spacing_deg)


def frequency_grid(shape: tuple[int, int], spacing_deg: float) -> FrequencyGrid:
    """Wavenumber grid for an unshifted 2-D DFT of the given shape."""
    nu_r = _axis_frequencies(shape[0], spacing_deg)
    nu_c = _axis_frequencies(shape[1], spacing_deg)
    nu_total = np.sqrt(nu_r[:, None] ** 2 + nu_c[None, :] ** 2)
    return FrequencyGrid(nu_r, nu_c, nu_total)


def blackman_harris_weights(shape: tuple[int, int]) -> np.ndarray:
    """Radially symmetric Blackman-Harris window.

    At distance r_g from the grid center the weight is

        w = 0.42 - 0.5*cos(pi*(1 + r_g/R)) + 0.08*cos(2*pi*(1 + r_g/R))

    for r_g <= R and 0 beyond, where R is the half-width of the grid
    (half the smaller of rows-1, cols-1), so w(0) = 1 and w(R) = 0.
    """
    rows, cols = shape
    center_r, center_c = (rows - 1) / 2.0, (cols - 1) / 2.0
    radius = min(rows - 1, cols - 1) / 2.0
    rr = np.arange(rows)[:, None] - center_r
    cc = np.arange(cols)[None, :] - center_c
    dist = np.sqrt(rr ** 2 + cc ** 2)
    if radius == 0:
        return (dist == 0).astype(np.float64)
    phase = np.pi * (1.0 + dist / radius)
    weights = 0.42 - 0.5 * np.cos(phase) + 0.08 * np.cos(2.0 * phase)
    # The continuous window is non-negative; rounding can leave ~-1e-17 at
    # the boundary circle, so clamp before zeroing the outside.
    np.maximum(weights, 0.0, out=weights)
    weights[dist > radius] = 0.0
    return weights


def butterworth_gain(shape: tuple[int, int], spacing_deg: float,
                     band: WavelengthBand, order: int = BUTTERWORTH_ORDER) -> np.ndarray:
    """Real band-pass gain grid for the given wavelength band.

    The band [lo, hi] in wavelength maps to wavenumbers [1/hi, 1/lo].  The
    low-pass stage 1/(1 + (nu/nu_max)^(2*order)) removes wavenumbers above
    nu_max = 1/lo (skipped when lo = 0); the high-pass stage
    1 - 1/(1 + (nu/nu_min)^(2*order)) removes wavenumbers below
    nu_min = 1/hi (skipped when hi = inf).  Gains of complementary bands
    [0, x] and [x, inf] sum to 1 at every wavenumber.
    """
    nu = frequency_grid(shape, spacing_deg).nu_total
    gain = np.ones(shape, dtype=np.float64)
    if band.lo_deg > 0:
        nu_max = 1.0 / band.lo_deg
        gain *= 1.0 / (1.0 + (nu / nu_max) ** (2 * order))
    if not math.isinf(band.hi_deg):
        nu_min = 1.0 / band.hi_deg
        gain *= 1.0 - 1.0 / (1.0 + (nu / nu_min) ** (2 * order))
    return gain


def fourier_band_pass(field: GridField, band: WavelengthBand,
                      order: int = BUTTERWORTH_ORDER,
                      return_stages: bool = False) -> GridField | tuple[GridField, dict]:
    """Band-pass filter a field with the taper/window/Butterworth pipeline.

    Returns a "real"-kind field of the original shape (window attenuation is
    not undone).  With ``return_stages=True`` also returns a dict of
    intermediate arrays for inspection: tapered, window, windowed, gain,
    spectrum_mag, filtered_mag, full (uncropped output).
    """
    target = (TAPER_FACTOR * field.rows, TAPER_FACTOR * field.cols)
    tapered = taper_zero_pad(field, target)
    window = blackman_harris_weights(target)
    windowed = window * tapered.values
    spectrum = np.fft.fft2(windowed)
    gain = butterworth_gain(target, field.spacing_deg, band, order=order)
    filtered = spectrum * gain
    back = np.fft.ifft2(filtered)
    residue = float(np.abs(back.imag).max())
    scale = max(1.0, float(np.abs(back.real).max()))
    if residue > IMAG_RESIDUE_TOL * scale:
        raise NumericError(f"inverse DFT imaginary residue {residue:g} too large")
    full = GridField(back.real, field.spacing_deg, "real")
    out = crop_taper(full, field.shape)
    out = GridField(out.values, field.spacing_deg, "real", field.eval_mask)
    if not return_stages:
        return out
    stages = {
        "tapered": tapered.values,
        "window": window,
        "windowed": windowed,
        "gain": gain,
        "spectrum_mag": np.abs(spectrum),
        "filtered_mag": np.abs(filtered),
        "full": back.real,
    }
    return out, stages
