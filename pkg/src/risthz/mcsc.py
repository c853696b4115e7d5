"""Mixed-criticality superposition-coding signal model.

SINR expressions for the two superposed streams, successive decoding
indicators, half-power pointing-error thresholds, and the closed-form
outage probabilities used by the power optimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channel import (
    BlockageState,
    LinkBudget,
    PointingError,
    channel_gains,
    fading_coefficient,
)
from .config import SystemConfig

# exp(-2 eps_th^2 / w_eq^2) = 1/2  at  eps_th = sqrt(ln(sqrt(2))) * w_eq
_EPS_TH_FACTOR = math.sqrt(math.log(math.sqrt(2.0)))


@dataclass(frozen=True)
class PowerAllocation:
    """Transmit powers [W] of the HC/LC streams on the direct and RIS beams.

    Nonnegative, sum bounded by P_max.  The optimizer drives p_l_r to
    zero, but nonzero values are permitted here for generality.
    """

    p_h_d: float
    p_h_r: float
    p_l_d: float
    p_l_r: float = 0.0

    def total(self) -> float:
        return self.p_h_d + self.p_h_r + self.p_l_d + self.p_l_r


@dataclass(frozen=True)
class RateTargets:
    R_h: float  # HC target rate [bit/s]
    R_l: float  # LC target rate [bit/s]
    gamma_h: float | None = None  # optional SINR lower bound backing R_h
    gamma_l: float | None = None


@dataclass(frozen=True)
class OutageProbs:
    P_out_h: float
    P_out_l: float


def sinr_hc(
    budget: LinkBudget,
    beta: BlockageState,
    rho_d: float,
    rho_r: float,
    p: PowerAllocation,
) -> float:
    """SINR of the HC stream (decoded first, LC acts as interference)."""
    h2, g2 = channel_gains(budget, beta, rho_d, rho_r)
    return (h2 * p.p_h_d + g2 * p.p_h_r) / (
        h2 * p.p_l_d + g2 * p.p_l_r + budget.sigma_n2
    )


def snr_lc(
    budget: LinkBudget,
    beta: BlockageState,
    rho_d: float,
    rho_r: float,
    p: PowerAllocation,
) -> float:
    """SNR of the LC stream after HC cancellation (validity of the
    cancellation is enforced by :func:`decode`, not here)."""
    h2, g2 = channel_gains(budget, beta, rho_d, rho_r)
    return (h2 * p.p_l_d + g2 * p.p_l_r) / budget.sigma_n2


def decode(
    budget: LinkBudget,
    beta: BlockageState,
    eps: PointingError,
    p: PowerAllocation,
    targets: RateTargets,
    B: float,
) -> tuple[int, int]:
    """Successive-decoding outcome (xi_h, xi_l) at a sampled channel state.

    HC is decoded first; LC requires successful HC cancellation.
    """
    rho_d = fading_coefficient(eps.eps_d, budget.A_d, budget.w_eq_d)
    rho_r = fading_coefficient(eps.eps_r, budget.A_RIS * budget.A_r, budget.w_eq_r)
    r_h = B * math.log2(1.0 + sinr_hc(budget, beta, rho_d, rho_r, p))
    xi_h = int(r_h >= targets.R_h)
    if not xi_h:
        return 0, 0
    r_l = B * math.log2(1.0 + snr_lc(budget, beta, rho_d, rho_r, p))
    xi_l = int(r_l >= targets.R_l)
    return xi_h, xi_l


def epsilon_threshold(budget: LinkBudget) -> tuple[float, float]:
    """Half-power pointing-error thresholds (eps_th_d, eps_th_r) [m]."""
    return _EPS_TH_FACTOR * budget.w_eq_d, _EPS_TH_FACTOR * budget.w_eq_r


def outage_probs(cfg: SystemConfig, budget: LinkBudget) -> OutageProbs:
    """Closed-form outage probabilities under the per-path availability rule.

    A path counts as available iff it is unblocked and its pointing error
    stays within the half-power threshold.  HC fails only when both paths
    fail; this treats the paths independently and ignores decoding via the
    combined signal, so it is an approximation (slightly pessimistic for HC).
    """
    fail_d = 1.0 - (1.0 - cfg.q_d) * (1.0 - budget.q_md)
    fail_r = 1.0 - (1.0 - cfg.q_r) * (1.0 - budget.q_mr)
    return OutageProbs(P_out_h=fail_d * fail_r, P_out_l=fail_d)
