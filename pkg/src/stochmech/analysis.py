"""Observables over trajectory ensembles.

Densities, Kolmogorov-Smirnov distances, autocorrelation, Welch power
spectra, and first-passage-time samples.  Everything here is a pure function
of an immutable ensemble; reductions are deterministic (fixed summation
order) so repeated runs agree bitwise.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import signal
from scipy.stats import kstest

from .kinematics import TrajectoryEnsemble

DENSITY_NORM_TOL = 1e-12
MIN_KS_SAMPLES = 100
MIN_WELCH_SEGMENTS = 8

_ACF_CHUNK = 512


@dataclass(frozen=True)
class Histogram:
    """Density-normalized histogram; sum(density * width) == 1 to 1e-12."""

    bin_edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    n_samples: int

    def __post_init__(self):
        widths = np.diff(self.bin_edges)
        total = float(np.sum(self.density * widths))
        if abs(total - 1.0) > DENSITY_NORM_TOL:
            raise ValueError(f"histogram not density-normalized: sums to {total!r}")

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])


@dataclass(frozen=True)
class AutocorrelationResult:
    """C(tau) averaged over paths and time origins, per-path scatter as error."""

    lags: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    n_paths: int


@dataclass(frozen=True)
class TwoPointCorrelation:
    """Non-stationary two-point function E[x(t)x(t+tau)] on a (t, tau) grid."""

    t_origins: np.ndarray
    lags: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    n_paths: int


@dataclass(frozen=True)
class SpectrumEstimate:
    """One-sided Welch spectrum on an angular frequency grid.

    Normalization: sum(psd) * (omega[1] - omega[0]) recovers the signal
    variance (mean-removed), so the spectrum doubles as a Parseval check.
    """

    omega: np.ndarray
    psd: np.ndarray
    n_segments: int
    window: str

    def __post_init__(self):
        if np.any(self.psd < 0):
            raise ValueError("PSD must be nonnegative")


@dataclass(frozen=True)
class FirstPassageResult:
    """Per-path first-passage sample with censoring bookkeeping.

    times holds one entry per eligible path: the interpolated crossing time,
    or NaN when the path was censored.  Censored paths are split by cause:
    absorbed at a boundary before qualifying vs. still running at the
    horizon.
    """

    times: np.ndarray
    censored_absorbed: int
    censored_horizon: int
    sense: str
    region: tuple
    n_eligible: int
    empty: bool

    @property
    def qualified(self) -> np.ndarray:
        return self.times[np.isfinite(self.times)]

    @property
    def mean(self) -> float:
        q = self.qualified
        return float(np.mean(q)) if q.size else math.nan

    @property
    def median(self) -> float:
        q = self.qualified
        return float(np.median(q)) if q.size else math.nan


def empirical_density(ensemble: TrajectoryEnsemble, t: float,
                      bins: Union[int, np.ndarray] = 64,
                      x_range: Optional[tuple] = None) -> Histogram:
    """Histogram of surviving paths at the stored time nearest t.

    t is on the ensemble clock.  Paths absorbed strictly before t sit frozen
    at a wall and are excluded.
    """
    times = ensemble.times
    if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
        raise ValueError(f"t={t} outside the ensemble horizon [0, {times[-1]}]")
    idx = int(np.argmin(np.abs(times - t)))
    alive = ~(ensemble.absorbed_at < times[idx])
    x = ensemble.paths[alive, idx]
    if x.size == 0:
        raise ValueError(f"no surviving paths at t={times[idx]}")
    counts, edges = np.histogram(x, bins=bins, range=x_range)
    widths = np.diff(edges)
    density = counts / (counts.sum() * widths)
    return Histogram(bin_edges=edges, counts=counts, density=density,
                     n_samples=int(x.size))


def ks_distance(samples, reference_cdf: Callable) -> float:
    """sup |empirical CDF - reference CDF|.

    samples may be a raw array or a Histogram; the binned variant compares
    cumulative bin mass at the bin edges (resolution-limited but unbiased
    for smooth references).
    """
    if isinstance(samples, Histogram):
        if samples.n_samples < MIN_KS_SAMPLES:
            raise ValueError(f"too few samples for a KS distance: "
                             f"{samples.n_samples} < {MIN_KS_SAMPLES}")
        cum = np.concatenate([[0.0], np.cumsum(samples.counts)]) / samples.counts.sum()
        ref = np.asarray(reference_cdf(samples.bin_edges), dtype=np.float64)
        return float(np.max(np.abs(cum - ref)))
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < MIN_KS_SAMPLES:
        raise ValueError(f"too few samples for a KS distance: {x.size} < {MIN_KS_SAMPLES}")
    return float(kstest(x, reference_cdf).statistic)


def _paths_minus_mean(ensemble: TrajectoryEnsemble,
                      mean_trajectory: Optional[np.ndarray]) -> np.ndarray:
    x = ensemble.paths
    if np.any(np.isfinite(ensemble.absorbed_at)):
        raise ValueError("correlation estimators require non-absorbing ensembles")
    if mean_trajectory is not None:
        m = np.asarray(mean_trajectory, dtype=np.float64)
        if m.shape != (x.shape[1],):
            raise ValueError("mean_trajectory must match the recorded time grid")
        return x - m
    return x


def autocorrelation(ensemble: TrajectoryEnsemble, max_lag: float,
                    stationary: bool = True,
                    mean_trajectory: Optional[np.ndarray] = None):
    """Position autocorrelation up to lag max_lag (ensemble time units).

    stationary=True averages over paths and time origins after removing the
    pooled mean and returns AutocorrelationResult; C(0) is then exactly the
    pooled sample variance.  stationary=False computes the two-point moment
    E[x(t)x(t+tau)] path-averaged on a complete (t, tau) grid with no mean
    removal.  mean_trajectory, when given, is subtracted from every path
    first (fluctuations about a known classical motion).
    """
    times = ensemble.times
    dt_rec = times[1] - times[0]
    horizon = times[-1]
    if max_lag >= horizon:
        raise ValueError(f"max_lag={max_lag} must be below the horizon {horizon}")
    n_lags = int(math.floor(max_lag / dt_rec + 1e-9)) + 1
    x = _paths_minus_mean(ensemble, mean_trajectory)
    n_paths, n_rec = x.shape
    lags = dt_rec * np.arange(n_lags)

    if not stationary:
        n_origins = n_rec - n_lags + 1
        vals = np.empty((n_origins, n_lags))
        errs = np.empty((n_origins, n_lags))
        for j in range(n_lags):
            prod = x[:, :n_origins] * x[:, j:j + n_origins]
            vals[:, j] = prod.mean(axis=0)
            errs[:, j] = prod.std(axis=0, ddof=1) / math.sqrt(n_paths)
        return TwoPointCorrelation(t_origins=times[:n_origins], lags=lags,
                                   values=vals, stderr=errs, n_paths=n_paths)

    xc = x - x.mean()
    n_fft = 1 << int(math.ceil(math.log2(2 * n_rec)))
    norm = (n_rec - np.arange(n_lags)).astype(np.float64)
    per_path = np.empty((n_paths, n_lags))
    for lo in range(0, n_paths, _ACF_CHUNK):
        hi = min(lo + _ACF_CHUNK, n_paths)
        spec = np.fft.rfft(xc[lo:hi], n=n_fft, axis=1)
        acov = np.fft.irfft(spec * np.conj(spec), n=n_fft, axis=1)[:, :n_lags]
        per_path[lo:hi] = acov / norm
    values = per_path.mean(axis=0)
    stderr = per_path.std(axis=0, ddof=1) / math.sqrt(n_paths)
    return AutocorrelationResult(lags=lags, values=values, stderr=stderr,
                                 n_paths=n_paths)


def power_spectral_density(ensemble: TrajectoryEnsemble, segment_length: int,
                           overlap: float = 0.5,
                           mean_trajectory: Optional[np.ndarray] = None) -> SpectrumEstimate:
    """Welch spectrum, Hann window, averaged over segments and paths.

    Frequencies are angular; the density is scaled so that integrating it
    over the one-sided angular grid returns the signal variance.
    """
    x = _paths_minus_mean(ensemble, mean_trajectory)
    n_paths, n_rec = x.shape
    dt_rec = ensemble.times[1] - ensemble.times[0]
    if not 0.0 <= overlap < 1.0:
        raise ValueError("overlap must be a fraction in [0, 1)")
    if segment_length > n_rec:
        raise ValueError(f"segment_length={segment_length} exceeds the "
                         f"{n_rec} stored samples per path")
    noverlap = int(overlap * segment_length)
    seg_per_path = 1 + (n_rec - segment_length) // (segment_length - noverlap)
    n_segments = seg_per_path * n_paths
    if n_segments < MIN_WELCH_SEGMENTS:
        raise ValueError(f"degenerate segmentation: {n_segments} segments "
                         f"< {MIN_WELCH_SEGMENTS}")
    # pooled demean instead of per-segment detrending: detrending each
    # segment removes genuine low-frequency power and breaks Parseval
    freqs_hz, psd_hz = signal.welch(x - x.mean(), fs=1.0 / dt_rec, window="hann",
                                    nperseg=segment_length, noverlap=noverlap,
                                    detrend=False, axis=-1)
    psd_hz = psd_hz.mean(axis=0)
    omega = 2.0 * math.pi * freqs_hz
    psd = psd_hz / (2.0 * math.pi)
    return SpectrumEstimate(omega=omega, psd=psd, n_segments=int(n_segments),
                            window=f"hann,nperseg={segment_length},noverlap={noverlap}")


def fit_corner_frequency(spectrum: SpectrumEstimate, omega_max: float) -> float:
    """Corner of a Lorentzian S = A/(omega^2 + corner^2) by linear regression.

    1/S is linear in omega^2; the corner is sqrt(intercept/slope).  Fit
    restricted to omega <= omega_max (the Lorentzian regime).
    """
    sel = (spectrum.omega > 0) & (spectrum.omega <= omega_max) & (spectrum.psd > 0)
    if np.count_nonzero(sel) < 4:
        raise ValueError("too few spectral points below omega_max for a corner fit")
    w2 = spectrum.omega[sel] ** 2
    inv_s = 1.0 / spectrum.psd[sel]
    slope, intercept = np.polyfit(w2, inv_s, 1)
    if slope <= 0 or intercept <= 0:
        raise ValueError("spectrum is not Lorentzian-like below omega_max")
    return float(math.sqrt(intercept / slope))


def _normalize_region(region) -> tuple:
    if np.isscalar(region):
        return (float(region), math.inf)
    lo, hi = float(region[0]), float(region[1])
    if not lo < hi:
        raise ValueError("region interval must satisfy lo < hi")
    return (lo, hi)


def _first_predicate_time(x: np.ndarray, valid: np.ndarray, times: np.ndarray,
                          inside: np.ndarray, levels: tuple) -> np.ndarray:
    """First time each path's predicate turns true, linearly interpolated.

    inside[p, k] is the predicate on the recorded positions; levels are the
    region edges used to interpolate the crossing instant within the stride.
    Records after a path's absorption are marked invalid by the caller.
    Returns NaN where the predicate never fires on valid records.
    """
    n_paths, n_rec = x.shape
    hit = inside & valid
    first = np.argmax(hit, axis=1)
    any_hit = hit[np.arange(n_paths), first]
    out = np.full(n_paths, np.nan)
    for p in np.nonzero(any_hit)[0]:
        k = first[p]
        if k == 0:
            out[p] = times[0]
            continue
        x0, x1 = x[p, k - 1], x[p, k]
        # first region edge bracketed by the stride, fractional position;
        # equality allowed so crossings landing exactly on a record keep
        # their infimum time
        frac = None
        for lvl in levels:
            if math.isfinite(lvl) and (x0 - lvl) * (x1 - lvl) <= 0 and x1 != x0:
                f = (lvl - x0) / (x1 - x0)
                if frac is None or f < frac:
                    frac = f
        if frac is None:
            out[p] = times[k]
        else:
            out[p] = times[k - 1] + frac * (times[k] - times[k - 1])
    return out


def first_passage_times(ensemble: TrajectoryEnsemble, region,
                        sense: str = "enter") -> FirstPassageResult:
    """First time each path enters, exits, or traverses a region.

    region is an (lo, hi) interval or a scalar threshold (treated as
    [threshold, +inf)).  sense='traverse' takes paths starting below lo and
    reports their first arrival at hi.  Crossing times are interpolated
    linearly inside the recording stride.  Paths absorbed before qualifying
    and paths that never qualify by the horizon are censored separately.
    """
    lo, hi = _normalize_region(region)
    if sense not in ("enter", "exit", "traverse"):
        raise ValueError(f"unknown sense {sense!r}")
    x = ensemble.paths
    times = ensemble.times
    n_paths, n_rec = x.shape

    absorbed = np.isfinite(ensemble.absorbed_at)
    # records strictly after the absorption instant are frozen wall copies
    valid = ~(times[None, :] > ensemble.absorbed_at[:, None] + 1e-12)

    if sense == "traverse":
        if not math.isfinite(hi):
            raise ValueError("traverse needs a bounded (lo, hi) interval")
        eligible = x[:, 0] < lo
        inside = x >= hi
        levels = (hi, math.inf)
    else:
        eligible = np.ones(n_paths, dtype=bool)
        inside = (x >= lo) & (x <= hi)
        if sense == "exit":
            inside = ~inside
        levels = (lo, hi)

    raw = _first_predicate_time(x[eligible], valid[eligible], times, inside[eligible],
                                levels)
    qualified = np.isfinite(raw)
    cens_abs = int(np.count_nonzero(~qualified & absorbed[eligible]))
    cens_hor = int(np.count_nonzero(~qualified & ~absorbed[eligible]))
    return FirstPassageResult(times=raw, censored_absorbed=cens_abs,
                              censored_horizon=cens_hor, sense=sense,
                              region=(lo, hi), n_eligible=int(eligible.sum()),
                              empty=not bool(qualified.any()))
