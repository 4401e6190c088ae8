"""Search operator, its relevant eigenpair, and rotation to the halfway state.

The product of the diffusion operator with a target-phase flip has exactly two
eigenstates carrying most of the source state.  Their eigenphases are the two
roots of a weighted cotangent sum adjacent to zero; when the first moment of
the spectrum vanishes they sit at plus and minus twice the source-target
overlap divided by the boost factor.  Both routes to the pair, dense
diagonalization and root bisection, are kept and compared; neither is trusted
alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import TOL, AssumptionViolation, eig_unitary, round_half_away, wrap_angle
from .spectra import SearchInstance, assemble_diffusion


def build_search_operator(inst: SearchInstance) -> np.ndarray:
    """Dense product of the diffusion operator and the target phase flip."""
    s = assemble_diffusion(inst.spec)
    s[:, inst.target_index] *= -1.0
    return s


def _weighted_poles(inst: SearchInstance):
    weights = np.abs(inst.spec.eigenbasis[inst.target_index, :]) ** 2
    keep = weights > 0.0
    return inst.spec.eigenphases[keep], weights[keep]


def secular_residual(inst: SearchInstance, lam: float) -> float:
    """Weighted cotangent sum whose zeros are the search eigenphases.

    Sum over every diffusion eigenstate l, the source included, of
    |<l|t>|^2 cot((lam - theta_l) / 2).  Monotone decreasing between
    consecutive poles.
    """
    poles, weights = _weighted_poles(inst)
    gaps = wrap_angle(lam - poles)
    if np.min(np.abs(gaps)) < TOL.pole_proximity:
        raise ValueError(f"lambda {lam!r} sits on a pole of the secular sum")
    return float(np.sum(weights / np.tan(gaps / 2.0)))


def _bisect_root(inst: SearchInstance, lo: float, hi: float) -> float:
    # Residual is +inf just above lo and -inf just below hi; plain bisection
    # on the sign is enough and never evaluates at a pole.
    width = hi - lo
    a = lo + max(TOL.pole_proximity * 10.0, width * 1e-9)
    b = hi - max(TOL.pole_proximity * 10.0, width * 1e-9)
    fa = secular_residual(inst, a)
    fb = secular_residual(inst, b)
    if not (fa > 0.0 > fb):
        raise AssumptionViolation(
            f"secular sum does not change sign on ({lo:.6g}, {hi:.6g}); "
            "pole bookkeeping is off for this instance"
        )
    while b - a > TOL.secular_bisection:
        mid = 0.5 * (a + b)
        if secular_residual(inst, mid) > 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def secular_pair(inst: SearchInstance) -> tuple[float, float]:
    """The two secular roots bracketing zero, found by bisection alone.

    Returns (positive root, negative root).  Works on the phase circle, so a
    spectrum with no positive pole besides the wrap of a negative one is still
    handled.
    """
    poles, _ = _weighted_poles(inst)
    above = poles[poles > 0.0]
    below = poles[poles < 0.0]
    next_above = float(np.min(above)) if above.size else float(np.min(poles)) + 2.0 * np.pi
    next_below = float(np.max(below)) if below.size else float(np.max(poles)) - 2.0 * np.pi
    lam_plus = _bisect_root(inst, 0.0, next_above)
    lam_minus = _bisect_root(inst, next_below, 0.0)
    return lam_plus, lam_minus


def mixing_angle(inst: SearchInstance) -> float:
    """Rotation angle set by the first moment; pi/4 when the moment vanishes."""
    return 0.5 * np.arctan2(2.0 * inst.overlap * inst.boost, inst.first_moment)


def predicted_pair_phases(inst: SearchInstance) -> tuple[float, float]:
    """Small-overlap prediction for the two eigenphases adjacent to zero.

    With a vanishing first moment both collapse to plus and minus twice the
    overlap over the boost.
    """
    eta = mixing_angle(inst)
    scale = 2.0 * inst.overlap / inst.boost
    return scale * np.tan(eta), -scale / np.tan(eta)


@dataclass(frozen=True, eq=False)
class RelevantPair:
    """The two search eigenstates that carry the source state.

    Eigenvectors are gauged so the target amplitude of each is real and
    positive.  ``secular_plus`` and ``secular_minus`` come from independent
    root bisection and are kept alongside the diagonalization values.
    """

    phase_plus: float
    phase_minus: float
    state_plus: np.ndarray
    state_minus: np.ndarray
    target_overlap_plus: float
    target_overlap_minus: float
    secular_plus: float
    secular_minus: float
    mixing: float


def find_relevant_pair(inst: SearchInstance, operator: np.ndarray | None = None) -> RelevantPair:
    """Locate, gauge and cross-check the eigenpair adjacent to phase zero.

    Raises AssumptionViolation when the instance does not actually have
    exactly two eigenphases inside the declared spectral gap, when either has
    a vanishing target amplitude, or when diagonalization and bisection
    disagree.
    """
    if operator is None:
        operator = build_search_operator(inst)
    dec = eig_unitary(operator, TOL.system_unitarity)
    inside = np.flatnonzero(np.abs(dec.phases) < inst.spec.phase_gap)
    if inside.size != 2:
        raise AssumptionViolation(
            f"expected 2 eigenphases inside the gap (+-{inst.spec.phase_gap:.6g}), "
            f"found {inside.size}"
        )
    lams = dec.phases[inside]
    if not (lams.min() < 0.0 < lams.max()):
        raise AssumptionViolation(
            f"gap eigenphases {lams.tolist()} do not straddle zero"
        )

    states = {}
    overlaps = {}
    for k in inside:
        vec = np.array(dec.vectors[:, k])
        amp = vec[inst.target_index]
        if np.abs(amp) < 1e-12:
            raise AssumptionViolation("a gap eigenstate has no target amplitude")
        vec *= amp.conjugate() / np.abs(amp)
        key = "+" if dec.phases[k] > 0.0 else "-"
        states[key] = vec
        overlaps[key] = float(np.abs(amp))

    sec_plus, sec_minus = secular_pair(inst)
    for got, want in ((lams.max(), sec_plus), (lams.min(), sec_minus)):
        if abs(got - want) > TOL.secular_agreement:
            raise AssumptionViolation(
                f"diagonalization gives eigenphase {got:.12g} but bisection "
                f"gives {want:.12g}; disagreement exceeds {TOL.secular_agreement:g}"
            )

    return RelevantPair(
        phase_plus=float(lams.max()),
        phase_minus=float(lams.min()),
        state_plus=states["+"],
        state_minus=states["-"],
        target_overlap_plus=overlaps["+"],
        target_overlap_minus=overlaps["-"],
        secular_plus=sec_plus,
        secular_minus=sec_minus,
        mixing=float(mixing_angle(inst)),
    )


def reconstruct_source(pair: RelevantPair) -> np.ndarray:
    """Rebuild the source state from the pair, global phase included.

    In the gauge fixed by ``find_relevant_pair`` (real positive target
    amplitudes, and the source column of the instance rephased the same way)
    the source is -i/sqrt(2) (e^{i p+/2} |+> - e^{i p-/2} |->) up to the
    weight the pair fails to carry.
    """
    return (-1j / np.sqrt(2.0)) * (
        np.exp(0.5j * pair.phase_plus) * pair.state_plus
        - np.exp(0.5j * pair.phase_minus) * pair.state_minus
    )


def halfway_state(pair: RelevantPair) -> np.ndarray:
    """Equal in-phase mix of the pair; target amplitude about one over boost."""
    return (pair.state_plus + pair.state_minus) / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class HalfwayState:
    """Rotated source after the first stage, with its preparation cost."""

    state: np.ndarray
    steps: int


def halfway_step_count(inst: SearchInstance) -> int:
    """Search-operator applications rotating the source onto the halfway mix.

    Nearest integer to pi boost / (4 overlap) - 1/2, exact .5 going up.
    """
    return round_half_away(np.pi * inst.boost / (4.0 * inst.overlap) - 0.5)


def evolve_to_halfway(inst: SearchInstance, ledger=None,
                      operator: np.ndarray | None = None) -> HalfwayState:
    """Apply the search operator repeatedly to rotate source toward halfway.

    Each application charges one diffusion application and one oracle query
    to ``ledger`` when given.
    """
    if operator is None:
        operator = build_search_operator(inst)
    steps = halfway_step_count(inst)
    state = np.array(inst.spec.eigenbasis[:, inst.spec.source_index])
    for _ in range(steps):
        state = operator @ state
        if ledger is not None:
            ledger.ds_applications += 1
            ledger.oracle_queries += 1
    return HalfwayState(state=state, steps=steps)
