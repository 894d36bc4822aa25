"""
Tangential calculus on the periodic direction.

Transform convention, used everywhere in the package:

    (F_x w)(k) = sum_i w(x_i) exp(-i k x_i) * (2*pi/Nx)

so that the discrete L2(T) norm satisfies Parseval in the form
||w||^2 = (2*pi)^-1 * sum_k |F_x w(k)|^2. Multipliers act on the last
axis of a field through rfft/irfft, which keeps every output real.
"""

from dataclasses import dataclass

import numpy as np

from src.core.errors import InvalidParameterError


@dataclass(frozen=True, eq=False)
class SpectralLine:
    """Fourier coefficients of one real sample row, ordered as numpy.fft.fft"""
    coefficients: np.ndarray

    @property
    def nx(self) -> int:
        return self.coefficients.shape[-1]

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.rint(np.fft.fftfreq(self.nx, d=1.0 / self.nx)).astype(int)

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        c = self.coefficients
        mirrored = np.conj(np.roll(c[::-1], 1))
        scale = max(float(np.max(np.abs(c))), 1.0)
        return bool(np.max(np.abs(c - mirrored)) <= rtol * scale)


def forward_transform(row: np.ndarray) -> SpectralLine:
    nx = row.shape[-1]
    return SpectralLine(np.fft.fft(row, axis=-1) * (2.0 * np.pi / nx))


def inverse_transform(line: SpectralLine) -> np.ndarray:
    nx = line.nx
    return np.real(np.fft.ifft(line.coefficients * (nx / (2.0 * np.pi)), axis=-1))


def rfft_wavenumbers(nx: int) -> np.ndarray:
    """Non-negative integer wavenumbers 0..Nx/2 matching numpy.fft.rfft output"""
    return np.arange(nx // 2 + 1, dtype=float)


def apply_multiplier(field: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    """Multiply each row's rfft coefficients by symbol(k) and transform back"""
    nx = field.shape[-1]
    return np.fft.irfft(np.fft.rfft(field, axis=-1) * symbol, n=nx, axis=-1)


def dx(field: np.ndarray, order: int = 1) -> np.ndarray:
    """Exact spectral x-derivative, row by row"""
    if not 1 <= order <= 4:
        raise InvalidParameterError("order", "tangential derivative order must be in 1..4")
    nx = field.shape[-1]
    k = rfft_wavenumbers(nx)
    symbol = (1j * k) ** order
    if order % 2:
        # odd derivative of the Nyquist mode is not representable as a real row
        symbol[-1] = 0.0
    return apply_multiplier(field, symbol)


def lambda_sigma(field: np.ndarray, sigma: float) -> np.ndarray:
    """Lambda_x^sigma: symbol (1 + k^2)^(sigma/2)"""
    k = rfft_wavenumbers(field.shape[-1])
    return apply_multiplier(field, (1.0 + k * k) ** (0.5 * sigma))


def abs_dx_sigma(field: np.ndarray, sigma: float) -> np.ndarray:
    """|D_x|^sigma: symbol |k|^sigma, annihilates the mean"""
    if not sigma > 0:
        raise InvalidParameterError("sigma", f"|D_x|^sigma needs sigma > 0, got {sigma}")
    k = rfft_wavenumbers(field.shape[-1])
    return apply_multiplier(field, k ** sigma)


def commutator_multiplier(rho: np.ndarray, w: np.ndarray, sigma: float) -> np.ndarray:
    """[|D_x|^sigma, rho] w = |D_x|^sigma(rho w) - rho |D_x|^sigma w"""
    if not 0.0 < sigma < 1.0:
        raise InvalidParameterError("sigma", f"commutator estimate is stated for 0 < sigma < 1, got {sigma}")
    if rho.shape[-1] != w.shape[-1]:
        raise InvalidParameterError("rho", "rho and w must live on the same x nodes")
    return abs_dx_sigma(rho * w, sigma) - rho * abs_dx_sigma(w, sigma)


def two_thirds_filter(field: np.ndarray) -> np.ndarray:
    """Zero every x-mode with |k| > Nx/3"""
    nx = field.shape[-1]
    keep = rfft_wavenumbers(nx) <= nx // 3
    return apply_multiplier(field, keep.astype(float))


def dealiased_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise product with 2/3-rule truncation of inputs and output"""
    return two_thirds_filter(two_thirds_filter(a) * two_thirds_filter(b))


def l2_x_norm(row: np.ndarray) -> np.ndarray:
    """Discrete L2(T) norm along the last axis"""
    nx = row.shape[-1]
    return np.sqrt(np.sum(row * row, axis=-1) * (2.0 * np.pi / nx))
