"""Approximate sign flip of the two gap eigenstates of a search operator.

The eigenstates are unknown, but their eigenphases are the only ones inside
the spectral gap, so phase estimation can tag them: estimate the phase into
an ancilla register, flip the sign of everything inside a zero-centered
window that stops a guard margin short of the gap edge, then uncompute.

Two schemes are implemented.  The basic one flips directly on the window and
its error per eigenstate is twice the square root of the estimate mass on
the wrong side of the window.  The boosted one converts the window test into
independent one-qubit votes, flips on a strict majority of ones, and turns
that linear error into a binomial tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import TOL, AssumptionViolation, ResourceCapExceeded, eig_unitary, is_unitary
from .phase_estimation import (
    DENSE_CAP,
    RegisterLayout,
    StateVector,
    SubspaceMask,
    embed_mainspace,
    estimate_amplitudes,
    estimate_window_mass,
    gap_window_mask,
    raw_estimate_forward,
    raw_estimate_inverse,
    raw_flip,
)

GUARD_FRACTION = 2.0 * math.pi / 128.0

MATRIX_CAP = 1 << 12


@dataclass(frozen=True)
class InversionScheme:
    """Register sizing and window geometry for one inversion operator.

    ``phase_gap`` is the declared spectral gap the windows are built from; it
    is part of the scheme, not of the instance, because a caller that only
    guesses the gap still has to commit the guess to hardware sizes.
    """

    kind: str
    phase_bits: int
    vote_bits: int
    phase_gap: float
    guard_fraction: float = GUARD_FRACTION

    def __post_init__(self):
        if self.kind not in ("basic", "boosted"):
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.phase_bits < 1:
            raise ValueError("need at least one phase-register bit")
        if not (0.0 < self.phase_gap <= math.pi):
            raise ValueError(f"phase gap {self.phase_gap} outside (0, pi]")
        if not (0.0 < self.guard_fraction < 1.0):
            raise ValueError("guard fraction must sit in (0, 1)")
        if self.kind == "basic" and self.vote_bits != 0:
            raise ValueError("the basic scheme has no vote register")
        if self.kind == "boosted" and (self.vote_bits < 2 or self.vote_bits % 2):
            raise ValueError("the boosted scheme needs an even vote count >= 2")

    @classmethod
    def basic(cls, boost: float, phase_gap: float, extra_bits: int = 7,
              guard_fraction: float = GUARD_FRACTION) -> "InversionScheme":
        """Size the register so the window error stays of order 2^-extra_bits.

        The wrong-side mass of an in-gap eigenstate scales like the square of
        boost over the guard margin in register units, so the bit count grows
        with twice the log of the boost minus the log of the gap.
        """
        bits = math.ceil(2.0 * math.log2(boost) - math.log2(phase_gap)) + extra_bits
        return cls("basic", max(1, bits), 0, float(phase_gap), guard_fraction)

    @classmethod
    def boosted(cls, boost: float, phase_gap: float, offset_bits: int = 16,
                guard_fraction: float = GUARD_FRACTION) -> "InversionScheme":
        """Fixed-margin register plus enough votes to crush the error tail.

        The vote count only needs to grow logarithmically in the boost; it is
        kept even so a strict majority leaves a deliberate tie band.
        """
        bits = math.ceil(-math.log2(phase_gap)) + offset_bits
        votes = math.ceil(5.0 * math.log(boost)) if boost > 1.0 else 0
        votes = max(2, votes + (votes % 2))
        return cls("boosted", max(1, bits), votes, float(phase_gap), guard_fraction)


def vote_majority_mask(vote_bits: int) -> SubspaceMask:
    """Vote values with strictly more ones than zeros; ties stay outside."""
    if vote_bits < 2 or vote_bits % 2:
        raise ValueError("majority voting needs an even vote count >= 2")
    need = vote_bits // 2 + 1
    idx = [v for v in range(1 << vote_bits) if v.bit_count() >= need]
    return SubspaceMask(1 << vote_bits, np.array(idx))


def binomial_tail_wrong_half(vote_bits: int, p: float, invert: bool) -> float:
    """Probability that the independent votes at success rate p miss majority.

    For a state meant to be inverted the wrong half is at most half the votes
    coming up one (ties included); for a state meant to pass through it is a
    strict majority of ones.
    """
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"vote probability {p} outside [0, 1]")
    votes = vote_bits
    ks = range(0, votes // 2 + 1) if invert else range(votes // 2 + 1, votes + 1)
    return float(sum(math.comb(votes, k) * p**k * (1.0 - p) ** (votes - k) for k in ks))


def _charge(ledger, **counts):
    if ledger is None:
        return
    for name, value in counts.items():
        setattr(ledger, name, getattr(ledger, name) + value)


def _raw_amplification(a: np.ndarray, unitary: np.ndarray,
                       window_sign: np.ndarray, inverse: bool) -> np.ndarray:
    # minus (estimate . flip-zero . unestimate) . window-flip, or its adjoint
    if not inverse:
        b = raw_flip(a, window_sign, 1)
        b = raw_estimate_inverse(b, unitary)
        b[:, 0] *= -1.0
        b = raw_estimate_forward(b, unitary)
        return -b
    b = raw_estimate_inverse(a, unitary)
    b[:, 0] *= -1.0
    b = raw_estimate_forward(b, unitary)
    return -raw_flip(b, window_sign, 1)


def _vote_hadamard_inplace(a: np.ndarray, j: int):
    n, m, v = a.shape
    b = a.reshape(n, m, v >> (j + 1), 2, 1 << j)
    x0 = b[:, :, :, 0].copy()
    b[:, :, :, 0] = (x0 + b[:, :, :, 1]) / math.sqrt(2.0)
    b[:, :, :, 1] = (x0 - b[:, :, :, 1]) / math.sqrt(2.0)


@dataclass(eq=False)
class InversionOperator:
    """A sized inversion scheme bound to one mainspace unitary."""

    scheme: InversionScheme
    unitary: np.ndarray
    layout: RegisterLayout
    gap_window: SubspaceMask
    vote_window: SubspaceMask | None

    @classmethod
    def build(cls, scheme: InversionScheme, unitary: np.ndarray,
              dense_cap: int = DENSE_CAP) -> "InversionOperator":
        unitary = np.asarray(unitary, dtype=complex)
        if not is_unitary(unitary, TOL.system_unitarity):
            raise ValueError("inversion target operator is not unitary")
        layout = RegisterLayout(unitary.shape[0], scheme.phase_bits,
                                scheme.vote_bits, dense_cap)
        window = gap_window_mask(scheme.phase_bits, scheme.phase_gap,
                                 scheme.guard_fraction)
        votes = vote_majority_mask(scheme.vote_bits) if scheme.kind == "boosted" else None
        return cls(scheme=scheme, unitary=unitary, layout=layout,
                   gap_window=window, vote_window=votes)

    def apply(self, state: StateVector, ledger=None) -> StateVector:
        """One application of the inversion; charges the full query bill."""
        if state.layout != self.layout:
            raise ValueError("state layout does not match the operator")
        if self.scheme.kind == "basic":
            out = self._apply_basic(state.reshaped(), ledger)
        else:
            out = self._apply_boosted(state.reshaped(), ledger)
        return StateVector(out.reshape(-1), self.layout)

    def _apply_basic(self, a: np.ndarray, ledger) -> np.ndarray:
        m = self.layout.phase_dim
        window_sign = self.gap_window.sign_vector()
        a = raw_estimate_forward(a, self.unitary)
        _charge(ledger, controlled_s=m, oracle_queries=m)
        a = raw_flip(a, window_sign, 1)
        a = raw_estimate_inverse(a, self.unitary)
        _charge(ledger, controlled_s=m, oracle_queries=m)
        return a

    def _apply_boosted(self, a: np.ndarray, ledger) -> np.ndarray:
        m = self.layout.phase_dim
        a = raw_estimate_forward(a, self.unitary)
        _charge(ledger, controlled_s=m, oracle_queries=m)
        for j in range(self.scheme.vote_bits):
            a = self._kickback(a, j, ledger, inverse=False)
        a = raw_flip(a, self.vote_window.sign_vector(), 2)
        for j in reversed(range(self.scheme.vote_bits)):
            a = self._kickback(a, j, ledger, inverse=True)
        a = raw_estimate_inverse(a, self.unitary)
        _charge(ledger, controlled_s=m, oracle_queries=m)
        return a

    def _kickback(self, a: np.ndarray, j: int, ledger, inverse: bool) -> np.ndarray:
        """Hadamard on vote qubit j, amplification on its ones-slice, Hadamard."""
        n, m, v = self.layout.shape
        window_sign = self.gap_window.sign_vector()
        a = np.ascontiguousarray(a)
        _vote_hadamard_inplace(a, j)
        b = a.reshape(n, m, v >> (j + 1), 2, 1 << j)
        sel = np.ascontiguousarray(b[:, :, :, 1]).reshape(n, m, -1)
        sel = _raw_amplification(sel, self.unitary, window_sign, inverse)
        b[:, :, :, 1] = sel.reshape(n, m, v >> (j + 1), 1 << j)
        _vote_hadamard_inplace(a, j)
        _charge(ledger, controlled_s=2 * m, oracle_queries=2 * m,
                i_zero_prime=1, hadamards_vote=2)
        return a

    def to_matrix(self) -> np.ndarray:
        """Dense matrix of the full-register inversion; small layouts only."""
        dim = self.layout.dim
        if dim > MATRIX_CAP:
            raise ResourceCapExceeded(
                f"dense inversion matrix of dimension {dim} exceeds {MATRIX_CAP}"
            )
        cols = np.empty((dim, dim), dtype=complex)
        for i in range(dim):
            e = np.zeros(dim, dtype=complex)
            e[i] = 1.0
            cols[:, i] = self.apply(StateVector(e, self.layout)).amps
        return cols


def predicted_epsilon(scheme: InversionScheme, lam: float, invert: bool) -> float:
    """Analytic inversion error for one eigenphase.

    Basic scheme: twice the root of the estimate mass on the wrong side of
    the window.  Boosted scheme: twice the root of the binomial tail at the
    per-vote in-window probability.
    """
    mask = gap_window_mask(scheme.phase_bits, scheme.phase_gap, scheme.guard_fraction)
    p = estimate_window_mass(scheme.phase_bits, lam, mask)
    if scheme.kind == "basic":
        wrong = 1.0 - p if invert else p
        return 2.0 * math.sqrt(max(0.0, wrong))
    return 2.0 * math.sqrt(binomial_tail_wrong_half(scheme.vote_bits, p, invert))


def basic_error_bound(scheme: InversionScheme) -> float:
    """Closed-form ceiling on the basic scheme's worst inversion error."""
    if scheme.kind != "basic":
        raise ValueError("the closed-form bound covers the basic scheme only")
    return math.sqrt(1.0 / (2.0 ** (scheme.phase_bits - 6) * scheme.phase_gap))


@dataclass(frozen=True, eq=False)
class EpsilonReport:
    """Measured and predicted inversion errors over a set of eigenstates."""

    scheme: InversionScheme
    eigenphases: np.ndarray
    measured: np.ndarray
    predicted: np.ndarray
    inverted: np.ndarray
    bound: float | None = None

    @property
    def epsilon_max(self) -> float:
        return float(self.measured.max())

    @property
    def worst_inverted(self) -> float:
        return float(self.measured[self.inverted].max())

    @property
    def worst_passthrough(self) -> float:
        return float(self.measured[~self.inverted].max())

    @property
    def worst_prediction_gap(self) -> float:
        return float(np.max(np.abs(self.measured - self.predicted)))


def measure_epsilon(op: InversionOperator, eigenphases, eigenvectors,
                    invert) -> EpsilonReport:
    """Drive every given eigenstate through the operator and compare against
    the intended sign, alongside the analytic prediction."""
    phases = np.asarray(eigenphases, dtype=float)
    vectors = np.asarray(eigenvectors, dtype=complex)
    invert = np.asarray(invert, dtype=bool)
    measured = np.empty(phases.shape[0])
    predicted = np.empty(phases.shape[0])
    for k in range(phases.shape[0]):
        sv = embed_mainspace(op.layout, vectors[:, k])
        out = op.apply(sv)
        sign = -1.0 if invert[k] else 1.0
        measured[k] = float(np.linalg.norm(out.amps - sign * sv.amps))
        predicted[k] = predicted_epsilon(op.scheme, float(phases[k]), bool(invert[k]))
    bound = basic_error_bound(op.scheme) if op.scheme.kind == "basic" else None
    return EpsilonReport(scheme=op.scheme, eigenphases=phases,
                         measured=measured, predicted=predicted,
                         inverted=invert, bound=bound)


def instance_epsilon_report(op: InversionOperator, inst,
                            operator: np.ndarray | None = None) -> EpsilonReport:
    """Epsilon report over the full eigensystem of an instance's search
    operator; the two gap eigenstates are the ones marked for inversion."""
    from .search_core import build_search_operator

    if operator is None:
        operator = build_search_operator(inst)
    dec = eig_unitary(operator, TOL.system_unitarity)
    invert = np.abs(dec.phases) < op.scheme.phase_gap
    if int(invert.sum()) != 2:
        raise AssumptionViolation(
            f"expected 2 eigenphases inside the declared gap, found {int(invert.sum())}"
        )
    return measure_epsilon(op, dec.phases, dec.vectors, invert)


@dataclass(frozen=True)
class KickbackReport:
    """Two routes to the amplification rotation angle on one eigenstate."""

    eigenphase: float
    window_probability: float
    omega_measured: float
    omega_predicted: float
    block_residual: float
    eigenvalue_moduli_error: float


def kickback_analysis(scheme: InversionScheme, unitary: np.ndarray,
                      eigenvector, lam: float,
                      dense_cap: int = DENSE_CAP) -> KickbackReport:
    """Check the two-dimensional rotation picture of the amplification step.

    The estimate of ``lam``, split into its in-window and off-window parts,
    spans a plane that the amplification operator maps to itself, rotating by
    2 omega with sin(omega)^2 the in-window probability.  The block is built
    numerically here and its angle compared with the closed form.
    """
    n = np.asarray(unitary).shape[0]
    layout = RegisterLayout(n, scheme.phase_bits, 0, dense_cap)
    mask = gap_window_mask(scheme.phase_bits, scheme.phase_gap, scheme.guard_fraction)
    phi = estimate_amplitudes(scheme.phase_bits, lam)
    inside = phi * mask.indicator()
    outside = phi - inside
    n_in, n_out = np.linalg.norm(inside), np.linalg.norm(outside)
    if min(n_in, n_out) < 1e-12:
        raise ValueError(
            "estimate mass is entirely on one side of the window; "
            "the rotation plane degenerates for this eigenphase"
        )
    vec = np.asarray(eigenvector, dtype=complex)
    basis = [
        np.einsum("i,j->ij", vec, inside / n_in).reshape(n, layout.phase_dim, 1),
        np.einsum("i,j->ij", vec, outside / n_out).reshape(n, layout.phase_dim, 1),
    ]
    window_sign = mask.sign_vector()
    images = [_raw_amplification(b, np.asarray(unitary, dtype=complex), window_sign, False)
              for b in basis]
    block = np.empty((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            block[i, j] = np.vdot(basis[i], images[j])
    residual = max(
        float(np.linalg.norm(images[j] - block[0, j] * basis[0] - block[1, j] * basis[1]))
        for j in range(2)
    )
    evals = np.linalg.eigvals(block)
    moduli_err = float(np.max(np.abs(np.abs(evals) - 1.0)))
    omega_measured = float(np.max(np.abs(np.angle(evals)))) / 2.0
    p = float(n_in**2)
    omega_predicted = math.asin(min(1.0, math.sqrt(p)))
    return KickbackReport(
        eigenphase=float(lam),
        window_probability=p,
        omega_measured=omega_measured,
        omega_predicted=omega_predicted,
        block_residual=residual,
        eigenvalue_moduli_error=moduli_err,
    )
