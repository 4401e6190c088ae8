"""Dense multi-register simulation of phase estimation on a unitary.

A register state is a complex vector over (mainspace) x (phase register) x
(vote register), stored flat in C order, so index ((m * P) + w) * V + v with
P and V the register sizes addresses mainspace index m, phase value w and
vote bits v.  All operators act on one axis of the reshaped array and batch
over the others; the raw kernels below take any (main, phase, trailing)
array so callers can slice the trailing axis however they need.

The estimation circuit is: Walsh-Hadamard on the phase register, powers of
the mainspace unitary controlled on the phase value, then an inverse Fourier
transform of the phase register.  Fed a mainspace eigenstate it leaves the
phase register in a peaked distribution whose amplitudes have the closed
form implemented by ``estimate_amplitudes``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import TOL, ResourceCapExceeded, dagger, round_half_away

DENSE_CAP = 1 << 22

_AXES = {"main": 0, "phase": 1, "vote": 2}


@dataclass(frozen=True)
class RegisterLayout:
    """Shape bookkeeping for a joint register vector."""

    main_dim: int
    phase_bits: int
    vote_bits: int = 0
    dense_cap: int = DENSE_CAP

    def __post_init__(self):
        if self.main_dim < 1 or self.phase_bits < 1 or self.vote_bits < 0:
            raise ValueError(
                f"bad layout: main {self.main_dim}, phase {self.phase_bits} bits, "
                f"vote {self.vote_bits} bits"
            )
        if self.dim > self.dense_cap:
            raise ResourceCapExceeded(
                f"register of {self.dim} amplitudes exceeds the dense cap "
                f"{self.dense_cap}; lower the register sizes or raise the cap"
            )

    @property
    def phase_dim(self) -> int:
        return 1 << self.phase_bits

    @property
    def vote_dim(self) -> int:
        return 1 << self.vote_bits

    @property
    def dim(self) -> int:
        return self.main_dim * self.phase_dim * self.vote_dim

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.main_dim, self.phase_dim, self.vote_dim)


class StateVector:
    """Normalized amplitudes over a RegisterLayout."""

    __slots__ = ("amps", "layout")

    def __init__(self, amps, layout: RegisterLayout):
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        if amps.shape != (layout.dim,):
            raise ValueError(f"amplitude count {amps.shape[0]} != layout dim {layout.dim}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > TOL.state_norm:
            raise ValueError(f"state norm {norm!r} is not 1 within {TOL.state_norm:g}")
        self.amps = amps
        self.layout = layout

    def reshaped(self) -> np.ndarray:
        return self.amps.reshape(self.layout.shape)

    def marginal(self, register: str) -> np.ndarray:
        """Probability marginal of one register."""
        axis = _AXES[register]
        p = np.abs(self.reshaped()) ** 2
        other = tuple(a for a in range(3) if a != axis)
        return p.sum(axis=other)

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amps, other.amps))


def embed_mainspace(layout: RegisterLayout, vec, phase_value: int = 0,
                    vote_value: int = 0) -> StateVector:
    """Joint state |vec> |phase_value> |vote_value>."""
    vec = np.asarray(vec, dtype=complex)
    if vec.shape != (layout.main_dim,):
        raise ValueError("mainspace vector has the wrong dimension")
    if not (0 <= phase_value < layout.phase_dim and 0 <= vote_value < layout.vote_dim):
        raise ValueError("register value out of range")
    a = np.zeros(layout.shape, dtype=complex)
    a[:, phase_value, vote_value] = vec
    return StateVector(a.reshape(-1), layout)


@dataclass(frozen=True, eq=False)
class SubspaceMask:
    """A set of basis values of one register, as sorted unique indices."""

    register_dim: int
    indices: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))

    def __post_init__(self):
        idx = np.unique(np.asarray(self.indices, dtype=int))
        if idx.size and (idx[0] < 0 or idx[-1] >= self.register_dim):
            raise ValueError("mask index out of register range")
        object.__setattr__(self, "indices", idx)

    @property
    def size(self) -> int:
        return int(self.indices.size)

    def complement(self) -> "SubspaceMask":
        keep = np.setdiff1d(np.arange(self.register_dim), self.indices)
        return SubspaceMask(self.register_dim, keep)

    def indicator(self) -> np.ndarray:
        ind = np.zeros(self.register_dim)
        ind[self.indices] = 1.0
        return ind

    def sign_vector(self) -> np.ndarray:
        """+1 off the mask, -1 on it; the diagonal of a selective flip."""
        return 1.0 - 2.0 * self.indicator()


# ---------------------------------------------------------------------------
# Raw kernels.  Arrays are (main_dim, phase_dim, trailing); always C order in,
# C order out, input never mutated.

def raw_flip(a: np.ndarray, sign: np.ndarray, axis: int) -> np.ndarray:
    shape = [1] * a.ndim
    shape[axis] = sign.shape[0]
    return a * sign.reshape(shape)


def raw_walsh_hadamard(a: np.ndarray) -> np.ndarray:
    """Hadamard on every phase-register qubit, by in-place butterflies."""
    n, m = a.shape[0], a.shape[1]
    trailing = a.shape[2:]
    a = np.ascontiguousarray(a).reshape(n, m, -1).copy()
    h = 1
    while h < m:
        b = a.reshape(n, m // (2 * h), 2, h, -1)
        top = b[:, :, 0].copy()
        b[:, :, 0] += b[:, :, 1]
        b[:, :, 1] = top - b[:, :, 1]
        h *= 2
    a /= math.sqrt(m)
    return a.reshape((n, m) + trailing)


def raw_qft(a: np.ndarray) -> np.ndarray:
    """Fourier transform of the phase axis, |w> -> sum_k e^{+2 pi i wk/M}."""
    return np.fft.ifft(a, axis=1) * math.sqrt(a.shape[1])


def raw_inverse_qft(a: np.ndarray) -> np.ndarray:
    return np.fft.fft(a, axis=1) / math.sqrt(a.shape[1])


def raw_controlled_powers(a: np.ndarray, unitary: np.ndarray,
                          inverse: bool = False) -> np.ndarray:
    """unitary^w on the main axis, controlled on phase value w.

    One dense application of an n x n matrix per phase bit, each hitting the
    half of the register where that bit is set; powers come from repeated
    squaring.
    """
    n, m = a.shape[0], a.shape[1]
    trailing = a.shape[2:]
    u = np.asarray(unitary, dtype=complex)
    if u.shape != (n, n):
        raise ValueError(f"mainspace operator shape {u.shape} does not match {n}")
    if inverse:
        u = dagger(u)
    a = np.ascontiguousarray(a).reshape(n, m, -1).copy()
    t = a.shape[2]
    bits = m.bit_length() - 1
    power = u
    for j in range(bits):
        b = a.reshape(n, m >> (j + 1), 2, (1 << j) * t)
        b[:, :, 1] = np.tensordot(power, b[:, :, 1], axes=([1], [0]))
        if j + 1 < bits:
            power = power @ power
    return a.reshape((n, m) + trailing)


def raw_estimate_forward(a: np.ndarray, unitary: np.ndarray) -> np.ndarray:
    """Walsh-Hadamard, controlled powers, inverse Fourier transform."""
    return raw_inverse_qft(raw_controlled_powers(raw_walsh_hadamard(a), unitary))


def raw_estimate_inverse(a: np.ndarray, unitary: np.ndarray) -> np.ndarray:
    """Exact inverse of ``raw_estimate_forward``."""
    return raw_walsh_hadamard(raw_controlled_powers(raw_qft(a), unitary, inverse=True))


# ---------------------------------------------------------------------------
# StateVector wrappers.  These are the operators that charge the query ledger:
# each pass of controlled powers costs one controlled application of the
# mainspace unitary per register value, and as many oracle queries.

def _charge_powers(ledger, phase_dim: int):
    if ledger is not None:
        ledger.controlled_s += phase_dim
        ledger.oracle_queries += phase_dim


def apply_register_flip(state: StateVector, mask: SubspaceMask,
                        register: str) -> StateVector:
    """Flip the sign of every amplitude whose ``register`` value is masked."""
    axis = _AXES[register]
    if mask.register_dim != state.layout.shape[axis]:
        raise ValueError("mask dimension does not match the register")
    out = raw_flip(state.reshaped(), mask.sign_vector(), axis)
    return StateVector(out.reshape(-1), state.layout)


def project_register(state: StateVector, mask: SubspaceMask,
                     register: str) -> np.ndarray:
    """Zero out amplitudes off the mask; returns a flat, unnormalized array."""
    axis = _AXES[register]
    if mask.register_dim != state.layout.shape[axis]:
        raise ValueError("mask dimension does not match the register")
    shape = [1, 1, 1]
    shape[axis] = mask.register_dim
    return (state.reshaped() * mask.indicator().reshape(shape)).reshape(-1)


def mask_probability(state: StateVector, mask: SubspaceMask,
                     register: str) -> float:
    """Probability that measuring ``register`` lands inside the mask."""
    p = state.marginal(register)
    if mask.register_dim != p.shape[0]:
        raise ValueError("mask dimension does not match the register")
    return float(p[mask.indices].sum())


def apply_walsh_hadamard(state: StateVector) -> StateVector:
    return StateVector(raw_walsh_hadamard(state.reshaped()).reshape(-1), state.layout)


def apply_qft(state: StateVector) -> StateVector:
    return StateVector(raw_qft(state.reshaped()).reshape(-1), state.layout)


def apply_inverse_qft(state: StateVector) -> StateVector:
    return StateVector(raw_inverse_qft(state.reshaped()).reshape(-1), state.layout)


def apply_controlled_powers(state: StateVector, unitary: np.ndarray,
                            ledger=None, inverse: bool = False) -> StateVector:
    out = raw_controlled_powers(state.reshaped(), unitary, inverse)
    _charge_powers(ledger, state.layout.phase_dim)
    return StateVector(out.reshape(-1), state.layout)


def phase_estimate(state: StateVector, unitary: np.ndarray, ledger=None) -> StateVector:
    """Forward estimation circuit on the phase register."""
    out = raw_estimate_forward(state.reshaped(), unitary)
    _charge_powers(ledger, state.layout.phase_dim)
    return StateVector(out.reshape(-1), state.layout)


def phase_estimate_inverse(state: StateVector, unitary: np.ndarray, ledger=None) -> StateVector:
    """Exact inverse of ``phase_estimate`` at the same ledger cost."""
    out = raw_estimate_inverse(state.reshaped(), unitary)
    _charge_powers(ledger, state.layout.phase_dim)
    return StateVector(out.reshape(-1), state.layout)


# ---------------------------------------------------------------------------
# Closed-form register distribution and window bookkeeping.

def estimate_amplitudes(phase_bits: int, lam: float) -> np.ndarray:
    """Phase-register amplitudes after estimating an eigenphase ``lam``.

    Entry k is the average over control values z of e^{i z (lam - 2 pi k/M)}
    with M the register size, evaluated in closed form.  The ratio of sines
    is stable arbitrarily close to its removable poles; the branch handles
    only an exactly-zero denominator, where the defining sum is exactly 1.
    """
    m = 1 << phase_bits
    x = lam - 2.0 * np.pi * np.arange(m) / m
    half = 0.5 * x
    den = np.sin(half)
    num = np.sin(m * half)
    ratio = np.divide(num, den, out=np.full(m, float(m)), where=den != 0.0)
    amps = np.exp(1j * (m - 1) * half) * ratio / m
    return np.where(den == 0.0, 1.0 + 0.0j, amps)


def k_nearest(phase_bits: int, lam: float) -> int:
    """Phase-register value closest to lam, on the register's own circle."""
    m = 1 << phase_bits
    return round_half_away(m * lam / (2.0 * np.pi)) % m


def window_mask(phase_bits: int, center: int, halfwidth: int) -> SubspaceMask:
    """2*halfwidth + 1 register values centered on ``center``, wrapping.

    A window that covers the register exactly is allowed and gives the full
    mask; anything wider is an error.
    """
    m = 1 << phase_bits
    if halfwidth < 0:
        raise ValueError("window halfwidth must be >= 0")
    if 2 * halfwidth + 1 > m:
        raise ValueError(
            f"window of halfwidth {halfwidth} exceeds the {m}-value register"
        )
    idx = (center + np.arange(-halfwidth, halfwidth + 1)) % m
    return SubspaceMask(m, idx)


def peak_window_mask(phase_bits: int, lam: float, halfwidth: int) -> SubspaceMask:
    """Window around the register value nearest to a known eigenphase."""
    return window_mask(phase_bits, k_nearest(phase_bits, lam), halfwidth)


def peak_window_mass(phase_bits: int, lam: float, halfwidth: int) -> float:
    """Probability that the estimate of ``lam`` lands within ``halfwidth``
    register values of the nearest one."""
    mask = peak_window_mask(phase_bits, lam, halfwidth)
    return estimate_window_mass(phase_bits, lam, mask)


def peak_mass_bound(halfwidth: int) -> float:
    """Guaranteed probability mass inside a peak window, 1 - 1/(2(c-1))."""
    if halfwidth < 2:
        raise ValueError("the mass bound needs halfwidth >= 2")
    return 1.0 - 1.0 / (2.0 * (halfwidth - 1))


def gap_window_halfwidth(phase_bits: int, phase_gap: float,
                         guard_fraction: float) -> int:
    """Halfwidth of the zero-centered window: nearest integer to
    M (1 - guard) gap / 2 pi."""
    if not (0.0 < guard_fraction < 1.0):
        raise ValueError("guard fraction must sit in (0, 1)")
    m = 1 << phase_bits
    return round_half_away(m * (1.0 - guard_fraction) * phase_gap / (2.0 * np.pi))


def gap_window_mask(phase_bits: int, phase_gap: float,
                    guard_fraction: float) -> SubspaceMask:
    """Zero-centered register window reaching almost to the spectral gap.

    Unlike a peak window this one must leave room on the register; covering
    it entirely would flip everything and is rejected.
    """
    m = 1 << phase_bits
    halfwidth = gap_window_halfwidth(phase_bits, phase_gap, guard_fraction)
    if 2 * halfwidth + 1 >= m:
        raise ValueError(
            f"gap window of halfwidth {halfwidth} covers the whole "
            f"{m}-value register; the gap guess is too coarse for it"
        )
    return window_mask(phase_bits, 0, halfwidth)


def gap_guard_margin(phase_bits: int, phase_gap: float,
                     guard_fraction: float) -> float:
    """Register-units distance M guard gap / 2 pi kept between the window
    edge and the nearest eigenphase outside the gap."""
    m = 1 << phase_bits
    return m * guard_fraction * phase_gap / (2.0 * np.pi)


def estimate_window_mass(phase_bits: int, lam: float, mask: SubspaceMask) -> float:
    """Analytic probability that the estimate of ``lam`` lands in the mask."""
    if mask.register_dim != (1 << phase_bits):
        raise ValueError("mask dimension does not match the register")
    amps = estimate_amplitudes(phase_bits, lam)
    return float(np.sum(np.abs(amps[mask.indices]) ** 2))
