"""Spatially enhanced loss functions: score + spatial filter, differentiable.

A loss configuration pairs one of the nine scores with a spatial filter:

* ``nbhd_r<k>``  -- neighbourhood filter of half-width k, applied inside the
  loss (six scores only; the contingency scores have no neighbourhood form);
* ``F<lo>-<hi>`` -- Fourier band-pass in degrees ("inf" for no upper bound);
* ``W<lo>-<hi>`` -- wavelet band-pass.

The canonical census is 336 configurations: 6 scores x 8 half-widths
{0, 1, 2, 3, 4, 6, 8, 12} plus 9 scores x 16 wavelength bands x 2 spectral
methods.  Spec ids look like ``fss_nbhd_r4`` or ``brier_W0.1-inf``.

For training, spectral filtering is applied to the observations only
(``prepare_target``), then clamped back to [0, 1]; the predictions enter the
score raw, so gradients never flow through a spectral transform.  For model
comparison, ``metric_value`` instead filters both fields, which is the
evaluation-time convention; the two intentionally differ.

Losses are negatively oriented: loss = score for brier/xent, 1 - score for
the rest.  ``loss_gradient`` returns the exact derivative of the implemented
loss (including its degenerate fallback branches, where the returned value
is constant and the gradient is zero), and ``grad_check`` verifies it
against central finite differences away from non-smooth points.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .fourier import fourier_band_pass
from .grid import GridField, WavelengthBand
from .neighbourhood import (max_filter, max_filter_array, mean_filter,
                            mean_filter_array)
from .scores import (NBHD_SCORE_KINDS, ORIENTATION, SCORE_KINDS, XENT_EPS,
                     ScoreResult, _nbhd_arrays, _nbhd_contingency_arrays,
                     _pixelwise_arrays, nbhd_score_detail,
                     pixelwise_score_detail, scored_weights)
from .wavelet import wavelet_band_pass

NBHD_HALF_WIDTHS = (0, 1, 2, 3, 4, 6, 8, 12)

_OCTAVE_EDGES = (0.025, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6)
_SPLIT_EDGES = (0.1, 0.2, 0.4, 0.8)

#: The 16 wavelength bands of the census: the 8 contiguous octave bands plus
#: 4 low-pass / 4 high-pass splits.
CENSUS_BANDS = tuple(
    [WavelengthBand(0.0, _OCTAVE_EDGES[0])]
    + [WavelengthBand(lo, hi) for lo, hi in zip(_OCTAVE_EDGES, _OCTAVE_EDGES[1:])]
    + [WavelengthBand(_OCTAVE_EDGES[-1], math.inf)]
    + [WavelengthBand(0.0, x) for x in _SPLIT_EDGES]
    + [WavelengthBand(x, math.inf) for x in _SPLIT_EDGES]
)

SPECTRAL_METHODS = ("F", "W")


def _format_edge(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:g}"


@dataclass(frozen=True)
class LossSpec:
    """One loss configuration: a score kind plus a spatial filter."""

    score: str
    filter_kind: str  # "nbhd", "F", or "W"
    half_width: int | None = None
    band: WavelengthBand | None = None

    def __post_init__(self):
        if self.score not in SCORE_KINDS:
            raise ValueError(f"unknown score {self.score!r}; valid: {SCORE_KINDS}")
        if self.filter_kind == "nbhd":
            if self.score not in NBHD_SCORE_KINDS:
                raise ValueError(
                    f"{self.score} has no neighbourhood form; valid: {NBHD_SCORE_KINDS}")
            if self.half_width is None or self.half_width < 0 or self.band is not None:
                raise ValueError("nbhd spec needs half_width >= 0 and no band")
        elif self.filter_kind in SPECTRAL_METHODS:
            if self.band is None or self.half_width is not None:
                raise ValueError("spectral spec needs a band and no half_width")
        else:
            raise ValueError(f"filter_kind must be 'nbhd', 'F' or 'W', got {self.filter_kind!r}")

    @property
    def filter_id(self) -> str:
        if self.filter_kind == "nbhd":
            return f"nbhd_r{self.half_width}"
        return (f"{self.filter_kind}{_format_edge(self.band.lo_deg)}"
                f"-{_format_edge(self.band.hi_deg)}")

    @property
    def spec_id(self) -> str:
        return f"{self.score}_{self.filter_id}"

    @property
    def is_spectral(self) -> bool:
        return self.filter_kind in SPECTRAL_METHODS


_SPEC_GRAMMAR = ("<score>_nbhd_r<half_width> | <score>_F<lo>-<hi> | "
                 "<score>_W<lo>-<hi>  (wavelengths in degrees, 'inf' allowed; "
                 f"scores: {', '.join(SCORE_KINDS)})")


def parse_spec_id(spec_id: str) -> LossSpec:
    """Parse a spec id like ``fss_nbhd_r4`` or ``brier_W0.1-inf``."""
    def bad(why: str) -> ValueError:
        return ValueError(f"bad spec id {spec_id!r} ({why}); grammar: {_SPEC_GRAMMAR}")

    parts = spec_id.strip().split("_")
    if len(parts) < 2:
        raise bad("missing filter part")
    score = parts[0].lower()
    if score not in SCORE_KINDS:
        raise bad(f"unknown score {parts[0]!r}")
    rest = "_".join(parts[1:])
    m = re.fullmatch(r"nbhd_r(\d+)", rest, flags=re.IGNORECASE)
    if m:
        return LossSpec(score, "nbhd", half_width=int(m.group(1)))
    m = re.fullmatch(r"([FW])([0-9.]+|inf)-([0-9.]+|inf)", rest, flags=re.IGNORECASE)
    if m:
        method = m.group(1).upper()
        try:
            lo = float(m.group(2))
            hi = float(m.group(3))
            band = WavelengthBand(lo, hi)
        except ValueError as exc:
            raise bad(str(exc)) from exc
        return LossSpec(score, method, band=band)
    raise bad("unrecognised filter part")


_FILTER_GRAMMAR = ("nbhd_max_r<half_width> | nbhd_mean_r<half_width> | "
                   "F<lo>-<hi> | W<lo>-<hi>  (wavelengths in degrees, "
                   "'inf' allowed)")


@dataclass(frozen=True)
class FilterSpec:
    """A standalone spatial filter (no score attached)."""

    kind: str  # "nbhd_max" | "nbhd_mean" | "F" | "W"
    half_width: int | None = None
    band: WavelengthBand | None = None

    def __post_init__(self):
        if self.kind in ("nbhd_max", "nbhd_mean"):
            if self.half_width is None or self.half_width < 0 or self.band is not None:
                raise ValueError("neighbourhood filters take a non-negative half_width only")
        elif self.kind in SPECTRAL_METHODS:
            if self.band is None or self.half_width is not None:
                raise ValueError("spectral filters take a wavelength band only")
        else:
            raise ValueError(f"kind must be 'nbhd_max', 'nbhd_mean', 'F' or 'W', got {self.kind!r}")

    @property
    def filter_id(self) -> str:
        if self.kind in ("nbhd_max", "nbhd_mean"):
            return f"{self.kind}_r{self.half_width}"
        return (f"{self.kind}{_format_edge(self.band.lo_deg)}"
                f"-{_format_edge(self.band.hi_deg)}")


def parse_filter_id(filter_id: str) -> FilterSpec:
    """Parse a standalone filter id like ``nbhd_max_r4`` or ``F0.5-2``."""
    def bad(why: str) -> ValueError:
        return ValueError(f"bad filter id {filter_id!r} ({why}); grammar: {_FILTER_GRAMMAR}")

    text = filter_id.strip()
    m = re.fullmatch(r"nbhd_(max|mean)_r(\d+)", text, flags=re.IGNORECASE)
    if m:
        return FilterSpec(f"nbhd_{m.group(1).lower()}", half_width=int(m.group(2)))
    m = re.fullmatch(r"([FW])([0-9.]+|inf)-([0-9.]+|inf)", text, flags=re.IGNORECASE)
    if m:
        try:
            band = WavelengthBand(float(m.group(2)), float(m.group(3)))
        except ValueError as exc:
            raise bad(str(exc)) from exc
        return FilterSpec(m.group(1).upper(), band=band)
    raise bad("unrecognised filter id")


def apply_filter(field: GridField, fspec: FilterSpec,
                 return_stages: bool = False):
    """Apply a standalone filter to a field.

    Returns the filtered field, or ``(field, stages)`` when
    ``return_stages`` is set (spectral filters expose their pipeline
    stages; neighbourhood filters have none and return an empty dict).
    """
    if fspec.kind == "nbhd_max":
        out = max_filter(field, fspec.half_width)
        return (out, {}) if return_stages else out
    if fspec.kind == "nbhd_mean":
        out = mean_filter(field, fspec.half_width)
        return (out, {}) if return_stages else out
    if fspec.kind == "F":
        return fourier_band_pass(field, fspec.band, return_stages=return_stages)
    return wavelet_band_pass(field, fspec.band, return_stages=return_stages)


def enumerate_configs() -> list[LossSpec]:
    """The full census: 48 neighbourhood + 288 scale-separation configs."""
    configs = [LossSpec(score, "nbhd", half_width=r)
               for score in NBHD_SCORE_KINDS for r in NBHD_HALF_WIDTHS]
    configs += [LossSpec(score, method, band=band)
                for method in SPECTRAL_METHODS
                for score in SCORE_KINDS
                for band in CENSUS_BANDS]
    return configs


def band_pass(field: GridField, method: str, band: WavelengthBand) -> GridField:
    """Dispatch to the Fourier or wavelet band-pass."""
    if method == "F":
        return fourier_band_pass(field, band)
    if method == "W":
        return wavelet_band_pass(field, band)
    raise ValueError(f"unknown spectral method {method!r}")


@dataclass(frozen=True)
class PreparedTarget:
    """Observations readied for a loss: filtered once, reusable across time
    steps and across every score that shares the filter.

    ``clamp_max_abs`` records how far the spectral filter output had to be
    clamped to return to [0, 1] (0 for neighbourhood specs).
    """

    spec: LossSpec
    observed: GridField
    filtered: GridField
    clamp_max_abs: float = 0.0


def prepare_target(spec: LossSpec, y: GridField) -> PreparedTarget:
    """Filter the observations for a spectral spec; pass masks through for nbhd."""
    if y.kind != "mask":
        raise ValueError("targets must be binary masks")
    if not spec.is_spectral:
        return PreparedTarget(spec, y, y)
    raw = band_pass(y, spec.filter_kind, spec.band)
    clamped = np.clip(raw.values, 0.0, 1.0)
    clamp_max = float(np.max(np.abs(raw.values - clamped)))
    filtered = GridField(clamped, y.spacing_deg, "prob", y.eval_mask)
    return PreparedTarget(spec, y, filtered, clamp_max)


def _loss_from_arrays(spec: LossSpec, pv: np.ndarray, tv: np.ndarray,
                      w: np.ndarray) -> float:
    if spec.filter_kind == "nbhd":
        score, _ = _nbhd_arrays(spec.score, pv, tv, w, spec.half_width)
    else:
        score, _ = _pixelwise_arrays(spec.score, pv, tv, w)
    return score if ORIENTATION[spec.score] < 0 else 1.0 - score


def loss_detail(spec: LossSpec, p: GridField, target: PreparedTarget) -> ScoreResult:
    """Loss value plus fallback flags for one prediction field."""
    if target.spec.filter_id != spec.filter_id:
        raise ValueError("target was prepared with a different filter")
    if spec.filter_kind == "nbhd":
        result = nbhd_score_detail(spec.score, p, target.filtered, spec.half_width)
    else:
        result = pixelwise_score_detail(spec.score, p, target.filtered)
    value = result.value if ORIENTATION[spec.score] < 0 else 1.0 - result.value
    return ScoreResult(value, result.fallbacks)


def loss_value(spec: LossSpec, p: GridField, target: PreparedTarget) -> float:
    return loss_detail(spec, p, target).value


def _filtered_clamped_pair(spec: LossSpec, p: GridField,
                           y: GridField) -> tuple[GridField, GridField]:
    pf = band_pass(p, spec.filter_kind, spec.band)
    yf = band_pass(y, spec.filter_kind, spec.band)
    p2 = GridField(np.clip(pf.values, 0.0, 1.0), p.spacing_deg, "prob", p.eval_mask)
    y2 = GridField(np.clip(yf.values, 0.0, 1.0), y.spacing_deg, "prob", y.eval_mask)
    return p2, y2


def metric_value(spec: LossSpec, p: GridField, y: GridField) -> ScoreResult:
    """Evaluation-time metric: for spectral specs both fields are filtered.

    Unlike the training loss, model comparison filters predictions and
    observations alike (then clamps both to [0, 1]).  Returns the score in
    its natural orientation (not the loss).
    """
    if spec.filter_kind == "nbhd":
        return nbhd_score_detail(spec.score, p, y, spec.half_width)
    p2, y2 = _filtered_clamped_pair(spec, p, y)
    return pixelwise_score_detail(spec.score, p2, y2)


def metric_table(specs: list[LossSpec], p: GridField,
                 y: GridField) -> dict[str, ScoreResult]:
    """``metric_value`` for many configs at once, filtering once per filter.

    Configs sharing a spectral filter reuse the same filtered field pair,
    which turns the 288-config census into 32 transform passes per field.
    Keys are spec ids; values match ``metric_value`` exactly.
    """
    cache: dict[str, tuple[GridField, GridField]] = {}
    out: dict[str, ScoreResult] = {}
    for spec in specs:
        if spec.filter_kind == "nbhd":
            out[spec.spec_id] = nbhd_score_detail(spec.score, p, y, spec.half_width)
            continue
        if spec.filter_id not in cache:
            cache[spec.filter_id] = _filtered_clamped_pair(spec, p, y)
        p2, y2 = cache[spec.filter_id]
        out[spec.spec_id] = pixelwise_score_detail(spec.score, p2, y2)
    return out


# ---------------------------------------------------------------------------
# Analytic gradients.

_LN2 = math.log(2.0)


def _grad_pixelwise(kind: str, pv: np.ndarray, tv: np.ndarray,
                    w: np.ndarray) -> np.ndarray:
    """d(score)/dp for the pixelwise formulas; zero on unscored pixels."""
    wf = w.astype(np.float64)
    g = float(wf.sum())
    p = pv
    y = tv
    zeros = np.zeros_like(p)

    if kind == "brier":
        return (2.0 / g) * wf * (p - y)
    if kind == "xent":
        ph = np.clip(p, XENT_EPS, 1.0 - XENT_EPS)
        interior = (p > XENT_EPS) & (p < 1.0 - XENT_EPS)
        return -(wf * interior / (g * _LN2)) * (y / ph - (1.0 - y) / (1.0 - ph))
    if kind == "fss":
        sse = float(np.sum(wf * (p - y) ** 2))
        ref = float(np.sum(wf * (p * p + y * y)))
        if ref == 0.0:
            return zeros
        return -wf * (2.0 * (p - y) * ref - sse * 2.0 * p) / ref ** 2
    if kind == "iou":
        inter = float(np.sum(wf * p * y))
        union = float(np.sum(wf * np.maximum(p, y)))
        if union == 0.0:
            return zeros
        sigma = np.where(p > y, 1.0, np.where(p == y, 0.5, 0.0))
        return wf * (y * union - inter * sigma) / union ** 2
    if kind == "dice":
        return wf * (2.0 * y - 1.0) / g

    n1 = float(np.sum(wf * y))
    n0 = float(np.sum(wf * (1.0 - y)))
    n = g
    if kind == "csi":
        a = float(np.sum(wf * p * y))
        denom = float(np.sum(wf * (p + y - p * y)))
        if denom == 0.0:
            return zeros
        return wf * (y * denom - a * (1.0 - y)) / denom ** 2
    if kind == "peirce":
        if n1 == 0.0 or n0 == 0.0:
            return zeros
        return wf * (y / n1 - (1.0 - y) / n0)
    if kind == "heidke":
        t = float(np.sum(wf * (p * y + (1.0 - p) * (1.0 - y))))
        sum_p = float(np.sum(wf * p))
        n_rand = (sum_p * n1 + n0 * (n - sum_p)) / n
        denom = n - n_rand
        if denom == 0.0:
            return zeros
        kappa = (n1 - n0) / n
        dt = 2.0 * y - 1.0
        return wf * ((dt - kappa) * denom + (t - n_rand) * kappa) / denom ** 2
    if kind == "gerrity":
        if n0 == 0.0:
            return zeros
        r = n1 / n0
        if r == 0.0:
            return wf * (2.0 * y - 1.0) / n
        return wf * (y * (1.0 + 1.0 / r) - (1.0 - y) * (1.0 + r)) / n
    raise ValueError(f"no gradient for kind {kind!r}")


def _obs_window_max_grad(pv: np.ndarray, yv: np.ndarray, w: np.ndarray,
                         r: int) -> np.ndarray:
    """d(a_obs)/dp: each observed event routes weight to its window argmax.

    Exact ties within a window split the unit weight equally.
    """
    grad = np.zeros_like(pv)
    rows, cols = pv.shape
    for i, j in zip(*np.nonzero(w & (yv == 1.0))):
        sl = (slice(max(0, i - r), min(rows, i + r + 1)),
              slice(max(0, j - r), min(cols, j + r + 1)))
        window = pv[sl]
        m = window.max()
        ties = window == m
        grad[sl] += ties / float(ties.sum())
    return grad


def _grad_nbhd_csi(pv: np.ndarray, yv: np.ndarray, w: np.ndarray,
                   r: int) -> np.ndarray:
    """d(CSI)/dp for the two-sided neighbourhood contingency CSI."""
    wf = w.astype(np.float64)
    a_obs, a_pred, b, c = _nbhd_contingency_arrays(pv, yv, w, r)
    zeros = np.zeros_like(pv)
    pod_den = a_obs + c
    sr_den = a_pred + b

    event_near = max_filter_array(yv, r) == 1.0
    e = (w & event_near).astype(np.float64)
    not_e = (w & ~event_near).astype(np.float64)

    def sr_grad() -> np.ndarray:
        # SR = a_pred / sr_den;  d a_pred = e,  d sr_den = not_e.
        return (e * sr_den - a_pred * not_e) / sr_den ** 2

    if pod_den == 0.0 and sr_den == 0.0:
        return zeros  # CSI == 1, constant
    if pod_den == 0.0:
        return zeros if a_pred == 0.0 else sr_grad()  # CSI == SR
    if a_obs == 0.0:
        return zeros  # CSI == 0, constant branch
    if sr_den == 0.0:
        return _obs_window_max_grad(pv, yv, w, r) / pod_den  # CSI == POD
    if a_pred == 0.0:
        return zeros
    da_obs = _obs_window_max_grad(pv, yv, w, r)
    inv = pod_den / a_obs + sr_den / a_pred - 1.0
    csi = 1.0 / inv
    dinv = (-pod_den / a_obs ** 2 * da_obs
            + (not_e * a_pred - sr_den * e) / a_pred ** 2)
    return -(csi ** 2) * dinv


def _grad_score(spec: LossSpec, pv: np.ndarray, tv: np.ndarray,
                w: np.ndarray) -> np.ndarray:
    """d(score)/dp for the score underlying a spec."""
    if spec.filter_kind != "nbhd":
        return _grad_pixelwise(spec.score, pv, tv, w)
    r = spec.half_width
    if spec.score == "csi":
        return _grad_nbhd_csi(pv, tv, w, r)
    if spec.score == "fss":
        wf = w.astype(np.float64)
        pbar = mean_filter_array(pv, r)
        ybar = mean_filter_array(tv, r)
        sse = float(np.sum(wf * (pbar - ybar) ** 2))
        ref = float(np.sum(wf * (pbar ** 2 + ybar ** 2)))
        if ref == 0.0:
            return np.zeros_like(pv)
        d_sse = 2.0 * mean_filter_array(wf * (pbar - ybar), r)
        d_ref = 2.0 * mean_filter_array(wf * pbar, r)
        return -(d_sse * ref - sse * d_ref) / ref ** 2
    ymax = max_filter_array(tv, r)
    return _grad_pixelwise(spec.score, pv, ymax, w)


def loss_gradient(spec: LossSpec, p: GridField, target: PreparedTarget) -> np.ndarray:
    """Exact gradient of the loss with respect to every prediction pixel.

    Matches the implemented loss including fallback branches (which return
    constants, hence zero gradient).  Neighbourhood losses propagate
    gradient through the prediction-side filters (mean filter for fss,
    window argmax for csi), so unscored pixels can receive gradient when
    they influence a scored window.
    """
    if target.spec.filter_id != spec.filter_id:
        raise ValueError("target was prepared with a different filter")
    w = scored_weights(p, target.filtered)
    pv, tv = p.values, target.filtered.values
    d_score = _grad_score(spec, pv, tv, w)
    return d_score if ORIENTATION[spec.score] < 0 else -d_score


# ---------------------------------------------------------------------------
# Finite-difference verification.

@dataclass(frozen=True)
class GradCheckReport:
    """Result of comparing analytic and finite-difference gradients."""

    spec_id: str
    max_abs_diff: float
    max_rel_diff: float
    n_checked: int
    n_excluded: int
    worst_pixel: tuple[int, int]

    def passed(self, rel_tol: float = 1e-5) -> bool:
        return self.max_rel_diff <= rel_tol


def _excluded_pixels(spec: LossSpec, pv: np.ndarray, tv: np.ndarray,
                     w: np.ndarray, step: float) -> np.ndarray:
    """Pixels within reach of a non-smooth point for this spec (2*step margin)."""
    excluded = np.zeros(pv.shape, dtype=bool)
    margin = 2.0 * step
    if spec.score == "xent":
        excluded |= (pv <= XENT_EPS + margin) | (pv >= 1.0 - XENT_EPS - margin)
    if spec.score == "iou":
        target = tv if spec.filter_kind != "nbhd" else max_filter_array(tv, spec.half_width)
        excluded |= np.abs(pv - target) <= margin
    if spec.filter_kind == "nbhd" and spec.score == "csi":
        rows, cols = pv.shape
        r = spec.half_width
        for i, j in zip(*np.nonzero(w & (tv == 1.0))):
            sl = (slice(max(0, i - r), min(rows, i + r + 1)),
                  slice(max(0, j - r), min(cols, j + r + 1)))
            window = pv[sl]
            m = window.max()
            near = m - window <= margin
            if near.sum() > 1:
                excluded[sl] |= near  # argmax may change under perturbation
    return excluded


def grad_check(spec: LossSpec, p: GridField, target: PreparedTarget,
               step: float = 1e-5) -> GradCheckReport:
    """Compare the analytic gradient against central finite differences.

    Pixels within ``2*step`` of a non-smooth point (max-filter ties, clamp
    edges, iou kinks) are excluded and counted.  The relative difference is
    measured against ``max(|analytic|, |fd|)`` per pixel, floored at 1e-3 of
    the largest finite-difference magnitude so that noise at zero-gradient
    pixels is not amplified.  Differences inside the rounding budget of the
    central difference itself (~eps * |loss| / step, e.g. a loss that is
    constant in one pixel) count as exact matches.
    """
    analytic = loss_gradient(spec, p, target)
    w = scored_weights(p, target.filtered)
    pv = p.values.copy()
    tv = target.filtered.values
    excluded = _excluded_pixels(spec, pv, tv, w, step)
    loss_scale = max(1.0, abs(_loss_from_arrays(spec, pv, tv, w)))
    fd_noise = 64.0 * np.finfo(np.float64).eps * loss_scale / step

    fd = np.zeros_like(pv)
    for i in range(pv.shape[0]):
        for j in range(pv.shape[1]):
            if excluded[i, j]:
                continue
            orig = pv[i, j]
            pv[i, j] = orig + step
            up = _loss_from_arrays(spec, pv, tv, w)
            pv[i, j] = orig - step
            down = _loss_from_arrays(spec, pv, tv, w)
            pv[i, j] = orig
            fd[i, j] = (up - down) / (2.0 * step)

    checked = ~excluded
    gmax = float(np.abs(fd[checked]).max(initial=0.0))
    floor = max(1e-3 * gmax, 1e-12)
    diff = np.abs(analytic - fd)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), floor)
    rel = np.where(checked & (diff > fd_noise), diff / denom, 0.0)
    abs_masked = np.where(checked, diff, 0.0)
    worst = np.unravel_index(int(np.argmax(rel)), rel.shape)
    return GradCheckReport(
        spec_id=spec.spec_id,
        max_abs_diff=float(abs_masked.max()),
        max_rel_diff=float(rel.max()),
        n_checked=int(checked.sum()),
        n_excluded=int(excluded.sum()),
        worst_pixel=(int(worst[0]), int(worst[1])),
    )
