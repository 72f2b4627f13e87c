"""Time-frequency engine: analytic-Morlet CWT, instantaneous-frequency
estimation, synchrosqueezing, band-limited inversion, and baselines.

Conventions
-----------
* Wavelet: analytic Morlet, centre parameter ``OMEGA0`` rad/s; in frequency
  Phi_hat(xi) = pi**(-1/4) * sqrt(2*pi) * exp(-(xi - OMEGA0)**2 / 2), xi > 0.
* CWT rows are computed in the frequency domain on a reflection-padded
  copy of the signal and trimmed back to the original axis; the time
  derivative uses the derivative theorem (multiply by j*omega), not finite
  differences.
* Scales are geometric with ``voices_per_octave`` per octave; the scale
  step weights in the reassignment sum are backward differences, and the
  reassignment-bin widths cancel exactly in the inversion.
* Inversion divides by the admissibility constant
  0.5 * integral Phi_hat(xi)/xi dxi (numerical quadrature, cached).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
import scipy.signal as sig
from scipy.integrate import quad

from .errors import DomainError, NumericalError, ValidationError

OMEGA0 = 6.0          # Morlet centre frequency (rad/s at unit scale)
SUPPORT_SIGMAS = 4.0  # half support of the wavelet envelope, in envelope widths
MIN_SIGNAL_LEN = 64


@dataclass(frozen=True)
class Band:
    """Closed frequency interval in Hz."""

    f_lo: float
    f_hi: float

    def __post_init__(self):
        if not (0.0 < self.f_lo < self.f_hi):
            raise ValidationError(f"need 0 < f_lo < f_hi, got [{self.f_lo}, {self.f_hi}]")

    @classmethod
    def parse(cls, text: str) -> "Band":
        """Parse 'LO:HI'."""
        lo, hi = (float(p) for p in text.split(":"))
        return cls(lo, hi)


def morlet_hat(xi: np.ndarray) -> np.ndarray:
    """Fourier transform of the analytic Morlet wavelet (zero for xi <= 0)."""
    out = np.zeros_like(xi)
    pos = xi > 0
    out[pos] = (math.pi ** -0.25) * math.sqrt(2 * math.pi) * np.exp(-0.5 * (xi[pos] - OMEGA0) ** 2)
    return out


@lru_cache(maxsize=None)
def admissibility_constant(omega0: float = OMEGA0) -> float:
    """0.5 * integral_0^inf Phi_hat(xi)/xi dxi for the Morlet with centre omega0."""
    val, err = quad(
        lambda x: (math.pi ** -0.25) * math.sqrt(2 * math.pi) * math.exp(-0.5 * (x - omega0) ** 2) / x,
        1e-10, omega0 + 40.0, limit=400, epsabs=1e-12, epsrel=1e-12)
    if err > 1e-7 * val:
        raise NumericalError("admissibility quadrature failed")
    return 0.5 * val


@dataclass
class CwtResult:
    """Complex coefficient grid over (scales x time).

    ``scales`` ascend (centre frequencies descend); ``d_w`` is the
    time-derivative transform used by the phase estimate; both are trimmed
    to the unpadded time axis.
    """

    W: np.ndarray
    d_w: np.ndarray
    scales: np.ndarray
    center_freqs: np.ndarray
    dt: float
    voices_per_octave: int

    @property
    def n_times(self) -> int:
        return self.W.shape[1]

    def scale_steps(self) -> np.ndarray:
        """Backward differences a_k - a_{k-1}; first entry continues the ratio."""
        da = np.empty_like(self.scales)
        da[1:] = np.diff(self.scales)
        da[0] = self.scales[0] * (1.0 - self.scales[0] / self.scales[1])
        return da

    def validity_mask(self, n_sigma: float = SUPPORT_SIGMAS) -> np.ndarray:
        """False inside the cone of influence of the record edges."""
        n = self.n_times
        idx = np.arange(n)
        reach = np.ceil(n_sigma * self.scales / self.dt).astype(int)
        return (idx[None, :] >= reach[:, None]) & (idx[None, :] < n - reach[:, None])


@dataclass
class SwtResult:
    """Synchrosqueezed grid over (frequency bins x time); bins ascend, log-spaced."""

    T: np.ndarray
    freq_bins: np.ndarray
    gamma: float

    def bin_widths(self) -> np.ndarray:
        """Bin widths in rad/s; first entry continues the geometric ratio."""
        d = np.empty_like(self.freq_bins)
        d[1:] = 2 * math.pi * np.diff(self.freq_bins)
        d[0] = d[1] * self.freq_bins[0] / self.freq_bins[1]
        return d


def _scale_grid(freq_range: Band, voices_per_octave: int):
    n_sc = int(math.ceil(voices_per_octave * math.log2(freq_range.f_hi / freq_range.f_lo))) + 1
    center = freq_range.f_hi * 2.0 ** (-np.arange(n_sc) / voices_per_octave)
    scales = OMEGA0 / (2 * math.pi * center)
    return scales, center


def cwt(signal: np.ndarray, dt: float, voices_per_octave: int = 32,
        freq_range: Band = Band(0.05, 16.0)) -> CwtResult:
    """Continuous wavelet transform with the analytic Morlet.

    The signal is reflection-padded by half the longest wavelet support on
    each side (and up to a fast FFT length on the right); each scale row is
    a frequency-domain multiplication, trimmed back to the input axis.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or len(x) < MIN_SIGNAL_LEN:
        raise ValidationError(f"need a 1-D signal of at least {MIN_SIGNAL_LEN} samples")
    nyquist = 0.5 / dt
    if freq_range.f_hi >= nyquist:
        raise DomainError(f"freq_range upper edge {freq_range.f_hi} Hz >= Nyquist {nyquist} Hz")
    scales, center = _scale_grid(freq_range, voices_per_octave)
    n = len(x)
    pad = int(math.ceil(SUPPORT_SIGMAS * scales[-1] / dt))
    xp = np.pad(x, pad, mode="reflect")
    n_fft = sfft.next_fast_len(len(xp))
    if n_fft > len(xp):
        xp = np.pad(xp, (0, n_fft - len(xp)), mode="reflect")
    X = sfft.fft(xp)
    omega = 2 * math.pi * sfft.fftfreq(n_fft, dt)
    W = np.empty((len(scales), n), dtype=complex)
    dW = np.empty_like(W)
    for k, a in enumerate(scales):
        kernel = math.sqrt(a) * morlet_hat(a * omega)
        row = sfft.ifft(X * kernel)
        drow = sfft.ifft(X * kernel * (1j * omega))
        W[k] = row[pad:pad + n]
        dW[k] = drow[pad:pad + n]
    return CwtResult(W=W, d_w=dW, scales=scales, center_freqs=center, dt=dt,
                     voices_per_octave=voices_per_octave)


def inst_freq(cwt_res: CwtResult, gamma: float = 1e-8) -> np.ndarray:
    """Instantaneous frequency (Hz) per cell: Im(dW/W)/(2*pi).

    Cells with |W| below ``gamma`` times the grid maximum are NaN (excluded
    from reassignment).
    """
    if gamma <= 0:
        raise ValidationError("gamma must be positive")
    W = cwt_res.W
    thr = gamma * np.abs(W).max()
    with np.errstate(divide="ignore", invalid="ignore"):
        om = np.imag(cwt_res.d_w / W) / (2 * math.pi)
    om[np.abs(W) < thr] = np.nan
    return om


def synchrosqueeze(cwt_res: CwtResult, omega: np.ndarray,
                   n_bins: int | None = None, gamma: float = 1e-8) -> SwtResult:
    """Reassign CWT energy to the bin nearest each cell's instantaneous frequency.

    Each valid cell contributes W * a**(-3/2) * da / dw_c to its bin; cells
    whose estimate falls outside the bin range are dropped. Accumulation is
    a bincount (fixed summation order, hence bit-deterministic).
    """
    W = cwt_res.W
    n_sc, n = W.shape
    if omega.shape != W.shape:
        raise ValidationError("omega grid shape mismatch")
    if n_bins is None:
        n_bins = n_sc
    f_lo, f_hi = cwt_res.center_freqs[-1], cwt_res.center_freqs[0]
    bins = np.exp(np.linspace(math.log(f_lo), math.log(f_hi), n_bins))
    dlog = math.log(bins[1] / bins[0])
    weights = cwt_res.scales ** -1.5 * cwt_res.scale_steps()

    valid = np.isfinite(omega) & (omega > 0) & (np.abs(W) >= gamma * np.abs(W).max())
    k = np.full(omega.shape, -1, dtype=int)
    k[valid] = np.rint((np.log(omega[valid]) - math.log(bins[0])) / dlog).astype(int)
    in_range = valid & (k >= 0) & (k < n_bins)
    rows, cols = np.nonzero(in_range)
    flat = k[in_range] * n + cols
    vals = W[in_range] * weights[rows]
    re = np.bincount(flat, weights=vals.real, minlength=n_bins * n)
    im = np.bincount(flat, weights=vals.imag, minlength=n_bins * n)
    swt = SwtResult(T=(re + 1j * im).reshape(n_bins, n), freq_bins=bins, gamma=gamma)
    swt.T /= swt.bin_widths()[:, None]
    return swt


def iswt_band(swt: SwtResult, band: Band) -> np.ndarray:
    """Band-limited inversion: real part of the admissibility-scaled bin sum."""
    sel = (swt.freq_bins >= band.f_lo) & (swt.freq_bins <= band.f_hi)
    if not sel.any():
        raise DomainError(f"no frequency bins inside [{band.f_lo}, {band.f_hi}] Hz")
    widths = swt.bin_widths()[sel]
    return np.real((swt.T[sel] * widths[:, None]).sum(axis=0)) / admissibility_constant()


def icwt_band(cwt_res: CwtResult, band: Band) -> np.ndarray:
    """CWT inversion restricted to scales whose centre frequency lies in ``band``."""
    sel = (cwt_res.center_freqs >= band.f_lo) & (cwt_res.center_freqs <= band.f_hi)
    if not sel.any():
        raise DomainError(f"no scales inside [{band.f_lo}, {band.f_hi}] Hz")
    weights = (cwt_res.scales ** -1.5 * cwt_res.scale_steps())[sel]
    return np.real((cwt_res.W[sel] * weights[:, None]).sum(axis=0)) / admissibility_constant()


def bandpass(signal: np.ndarray, dt: float, band: Band) -> np.ndarray:
    """Zero-phase 4th-order Butterworth band-pass (forward-backward, even padding)."""
    nyquist = 0.5 / dt
    if band.f_hi >= nyquist:
        raise DomainError(f"band upper edge {band.f_hi} Hz >= Nyquist {nyquist} Hz")
    sos = sig.butter(4, [band.f_lo, band.f_hi], btype="bandpass", fs=1.0 / dt, output="sos")
    x = np.asarray(signal, dtype=float)
    padlen = min(len(x) - 1, max(3 * (2 * len(sos) + 1), int(round(1.0 / (band.f_lo * dt)))))
    return sig.sosfiltfilt(sos, x, padtype="even", padlen=padlen)


def magnitude_to_csv(grid: np.ndarray, freqs: np.ndarray, path) -> None:
    """Dump |grid| as CSV: rows are frequency bins (descending), columns time.

    The first column carries the row's frequency in Hz.
    """
    order = np.argsort(freqs)[::-1]
    mat = np.abs(grid)[order]
    out = np.column_stack([freqs[order], mat])
    np.savetxt(path, out, delimiter=",", fmt="%.9e")
