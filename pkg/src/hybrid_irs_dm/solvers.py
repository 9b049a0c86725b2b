"""Structured convex subproblem solvers used by the alternating schemes.

Every phase-shift subproblem reduces to a separable problem with a linear
(or linear-minus-diagonal-quadratic) objective, per-element amplitude caps
and one weighted quadratic budget. The beamformer subproblem is a linear
objective over the intersection of the unit ball and an ellipsoid.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .channel import ChannelSet
from .errors import NumericError
from .irs import HybridIrsLayout, active_power_weights
from .link import LinkBudget, cascade_coefficients
from .numerics import hermitian_max_eigenvalue

_MAX_BISECT = 200


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    ITERATION_CAP = "IterationCap"
    INFEASIBLE = "Infeasible"


@dataclass
class SolveReport:
    objective: float
    iterations: int
    kkt_residual: float
    status: Status
    multipliers: dict[str, float] = field(default_factory=dict)


# --------------------------------------------------------------------------
# capped amplitudes under one quadratic budget
# --------------------------------------------------------------------------


def max_linear_capped_budget(
    c,
    caps,
    weights,
    budget: float,
    penalty=None,
    tol: float = 1e-10,
) -> tuple[np.ndarray, SolveReport]:
    """Maximize ``Re{x^H c} - sum p_m |x_m|^2`` over separable constraints.

    Constraints are ``|x_m| <= caps[m]`` and ``sum w_m |x_m|^2 <= budget``.
    The optimum aligns ``arg x_m`` with ``arg c_m``; amplitudes are
    ``min(cap, |c_m| / (2 (p_m + lam w_m)))`` with the budget multiplier
    ``lam`` found by bisection. Elements with ``w_m = p_m = 0`` sit at
    their cap, including when ``c_m = 0``.

    Parameters
    ----------
    c : complex array
    caps, weights : real arrays, same length as ``c``
    budget : float
    penalty : real array or None
        Non-negative diagonal quadratic penalty ``p``; ``None`` means zero.
    tol : float
        Relative tolerance on the budget and the KKT residual.

    Returns
    -------
    x : complex array
    report : SolveReport
    """
    c = np.asarray(c, dtype=complex)
    caps = np.asarray(caps, dtype=float)
    w = np.asarray(weights, dtype=float)
    p = np.zeros_like(w) if penalty is None else np.asarray(penalty, dtype=float)
    if not (c.shape == caps.shape == w.shape == p.shape):
        raise ValueError("c, caps, weights and penalty must share one shape")
    if np.any(w < 0) or np.any(p < 0) or np.any(caps < 0):
        raise ValueError("caps, weights and penalty must be non-negative")
    if budget < 0:
        return np.zeros_like(c), SolveReport(0.0, 0, 0.0, Status.INFEASIBLE)

    mag = np.abs(c)
    phase = np.where(mag > 0, c / np.where(mag > 0, mag, 1.0), 1.0)
    free = (w == 0) & (p == 0)

    def amplitudes(lam: float) -> np.ndarray:
        denom = 2.0 * (p + lam * w)
        with np.errstate(divide="ignore", invalid="ignore"):
            # zero coefficient on a costly entry: tie broken to zero amplitude
            a = np.where(denom > 0, mag / np.where(denom > 0, denom, 1.0), np.where(mag > 0, np.inf, 0.0))
        a = np.minimum(caps, a)
        return np.where(free, caps, a)

    def spent(lam: float) -> float:
        return float(np.sum(w * amplitudes(lam) ** 2))

    lam = 0.0
    iters = 0
    if spent(0.0) > budget * (1 + 1e-15):
        costly = w > 0
        if budget == 0.0:
            lam = np.inf
        else:
            a_lim = np.sqrt(budget / np.sum(w[costly]))
            hi = float(np.max(mag[costly] / (2.0 * w[costly] * a_lim)))
            lo = 0.0
            for iters in range(1, _MAX_BISECT + 1):
                mid = 0.5 * (lo + hi)
                if spent(mid) > budget:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 4 * np.finfo(float).eps * hi:
                    break
            lam = hi

    if np.isinf(lam):
        a = np.where(w > 0, 0.0, amplitudes(0.0))
    else:
        a = amplitudes(lam)
    x = a * phase
    objective = float(np.sum(a * mag) - np.sum(p * a**2))
    used = float(np.sum(w * a**2))
    scale = max(abs(objective), float(np.sum(a * mag)), np.finfo(float).tiny)
    slack_term = 0.0 if (lam == 0.0 or np.isinf(lam)) else lam * abs(budget - used) / scale
    feas = max(0.0, used - budget) / max(budget, np.finfo(float).tiny)
    resid = max(slack_term, feas)
    status = Status.OPTIMAL if resid <= max(tol, 1e-9) else Status.ITERATION_CAP
    return x, SolveReport(objective, iters, resid, status, {"budget": float(lam)})


# --------------------------------------------------------------------------
# linear objective over ball and ellipsoid
# --------------------------------------------------------------------------


def max_linear_ball_ellipsoid(c, B, b0: float, budget: float, tol: float = 1e-12) -> tuple[np.ndarray, SolveReport]:
    """Maximize ``Re{c^H v}`` s.t. ``||v||^2 <= 1`` and ``v^H B v + b0 <= budget``.

    KKT gives ``v = (2 mu I + 2 lam B)^{-1} c``. ``B`` is diagonalized once;
    the ball multiplier is solved for each ellipsoid multiplier (inner
    root find) and the ellipsoid multiplier is then matched to the budget
    (outer root find). Both searches are bracketed.
    """
    c = np.asarray(c, dtype=complex)
    B = np.asarray(B, dtype=complex)
    n = c.shape[0]
    if b0 > budget:
        return np.zeros(n, dtype=complex), SolveReport(0.0, 0, 0.0, Status.INFEASIBLE)
    cn = float(np.linalg.norm(c))
    if cn == 0.0:
        return np.zeros(n, dtype=complex), SolveReport(0.0, 0, 0.0, Status.OPTIMAL)

    d, U = np.linalg.eigh(0.5 * (B + B.conj().T))
    dmax = max(float(d.max()), 0.0)
    d = np.where(d > 1e-13 * dmax, d, 0.0)
    cp = U.conj().T @ c
    e = np.abs(cp) ** 2
    slack = budget - b0
    calls = 0

    def coords(mu, lam):
        den = 2.0 * mu + 2.0 * lam * d
        out = np.zeros_like(cp)
        live = e > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            np.divide(cp, den, out=out, where=live)
        return out

    def v_of(mu, lam):
        return U @ coords(mu, lam)

    def norm2(mu, lam):
        return float(np.sum(np.abs(coords(mu, lam)) ** 2))

    def quad(mu, lam):
        y = coords(mu, lam)
        return float(np.sum(d * np.abs(y) ** 2))

    def mu_of(lam):
        nonlocal calls
        if lam > 0 and not np.any((e > 0) & (d == 0)) and norm2(0.0, lam) <= 1.0:
            return 0.0
        hi = cn / 2.0
        if norm2(hi, lam) >= 1.0:
            return hi
        calls += 1
        return brentq(lambda mu: norm2(mu, lam) - 1.0, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=_MAX_BISECT)

    mu, lam = cn / 2.0, 0.0
    if quad(mu, 0.0) > slack:
        if slack <= 0.0 or dmax == 0.0:
            null = np.where(d == 0.0, cp, 0.0)
            nn = np.linalg.norm(null)
            v = U @ (null / nn) if nn > 0 else np.zeros(n, dtype=complex)
            obj = float(np.real(np.vdot(c, v)))
            return v, SolveReport(obj, 0, 0.0, Status.OPTIMAL, {"ball": nn / 2.0, "ellipsoid": np.inf})
        pos = (e > 0) & (d > 0)
        hi = float(np.sqrt(np.sum(e[pos] / d[pos]) / (4.0 * slack)))
        while quad(mu_of(hi), hi) > slack:
            hi *= 2.0
        lam = brentq(
            lambda x: quad(mu_of(x), x) - slack, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=_MAX_BISECT
        )
        mu = mu_of(lam)

    v = v_of(mu, lam)
    nv = np.linalg.norm(v)
    if nv > 1.0:
        v = v / nv
    q = float(np.real(np.vdot(v, B @ v)))
    if q > slack > 0:
        v = v * np.sqrt(slack / q)
        q = float(np.real(np.vdot(v, B @ v)))

    objective = float(np.real(np.vdot(c, v)))
    stat = np.linalg.norm(c - 2 * mu * v - 2 * lam * (B @ v)) / cn
    nv2 = float(np.real(np.vdot(v, v)))
    comp_ball = abs(mu * (nv2 - 1.0)) / cn
    comp_ell = abs(lam * (q + b0 - budget)) / cn
    feas = max(0.0, nv2 - 1.0, (q + b0 - budget) / max(abs(budget), np.finfo(float).tiny))
    resid = max(stat, comp_ball, comp_ell, feas)
    status = Status.OPTIMAL if resid <= max(tol, 1e-9) else Status.ITERATION_CAP
    return v, SolveReport(objective, calls, float(resid), status, {"ball": float(mu), "ellipsoid": float(lam)})


# --------------------------------------------------------------------------
# active-element update: Dinkelbach over a linearized numerator
# --------------------------------------------------------------------------


@dataclass
class PsiStepResult:
    psi: np.ndarray
    tau_trace: list[float]
    f_trace: list[float]
    report: SolveReport


def fp_psi_step(
    v,
    theta,
    layout: HybridIrsLayout,
    channels: ChannelSet,
    budget: LinkBudget,
    tol: float = 1e-6,
    max_iter: int = 500,
) -> PsiStepResult:
    """Update the active reflection coefficients with passive ones frozen.

    The SNR restricted to the active entries is a ratio of a convex
    quadratic over a positive diagonal quadratic. Each Dinkelbach round
    sets ``tau`` to the current ratio and maximizes the numerator's tangent
    minus ``tau`` times the denominator (both in SNR units, i.e. scaled by
    ``P / sigma_b^2`` and ``1 / sigma_b^2``). The round's optimal value
    ``F(tau) >= 0``; iteration stops once it falls to ``tol``.

    ``theta`` is the full current reflection vector; the returned ``psi``
    is zero outside the active set.
    """
    v = np.asarray(v, dtype=complex)
    theta = np.asarray(theta, dtype=complex)
    act = layout.active_mask
    if not np.any(act):
        psi = np.zeros_like(theta)
        t0 = _ratio_snr(v, theta, layout, channels, budget)
        return PsiStepResult(psi, [t0], [0.0], SolveReport(t0, 0, 0.0, Status.OPTIMAL))

    s = np.sqrt(channels.rho_srb) * cascade_coefficients(v, channels)
    q = s[act]
    d0 = complex(np.sum(s[~act] * theta[~act]) + np.sqrt(channels.rho_sb) * np.vdot(channels.h_sb, v))
    gain_scale = budget.p_tx / budget.sigma_b2
    noise_w = budget.sigma_r2 * channels.rho_rb * np.abs(channels.h_rb[act]) ** 2 / budget.sigma_b2
    pw = active_power_weights(v, channels, budget.p_tx, budget.sigma_r2)[act]
    caps = np.full(q.shape, layout.beta_max)

    def num(x):
        return gain_scale * abs(np.sum(q * x) + d0) ** 2

    def den(x):
        return 1.0 + float(np.sum(noise_w * np.abs(x) ** 2))

    x = theta[act].copy()
    taus, fs = [], []
    status = Status.ITERATION_CAP
    it = 0
    f = np.inf
    for it in range(1, max_iter + 1):
        tau = num(x) / den(x)
        if not np.isfinite(tau):
            raise NumericError("Dinkelbach ratio became non-finite")
        taus.append(tau)
        zbar = np.sum(q * x) + d0
        # Re{conj(zbar) q_m x_m} = Re{conj(x_m) zbar conj(q_m)}
        coef = 2.0 * gain_scale * zbar * q.conj()
        x_new, rep = max_linear_capped_budget(coef, caps, pw, layout.pr_max, penalty=tau * noise_w)
        # tangent value minus tau * denominator; zero at the expansion point
        lin = gain_scale * (2.0 * np.real(np.conj(zbar) * (np.sum(q * x_new) + d0)) - abs(zbar) ** 2)
        f = lin - tau * den(x_new)
        fs.append(float(f))
        if f < 0:
            # expansion point is itself optimal up to rounding
            f = max(f, 0.0)
            x_new = x
        x = x_new
        if f <= tol:
            status = Status.OPTIMAL
            break
    psi = np.zeros_like(theta)
    psi[act] = x
    final_ratio = num(x) / den(x)
    return PsiStepResult(psi, taus, fs, SolveReport(final_ratio, it, float(abs(f)), status, {"tau": taus[-1]}))


def _ratio_snr(v, theta, layout, channels, budget) -> float:
    s = np.sqrt(channels.rho_srb) * cascade_coefficients(v, channels)
    g = np.sum(s * theta) + np.sqrt(channels.rho_sb) * np.vdot(channels.h_sb, v)
    noise = 1.0 + budget.sigma_r2 * channels.rho_rb * float(
        np.sum((np.abs(channels.h_rb) ** 2 * np.abs(theta) ** 2)[layout.active_mask])
    ) / budget.sigma_b2
    return float(budget.p_tx * abs(g) ** 2 / budget.sigma_b2 / noise)


# --------------------------------------------------------------------------
# joint update through the lifted vector and an MM surrogate
# --------------------------------------------------------------------------


def lift(theta) -> np.ndarray:
    """Lifted vector ``[conj(theta); 1]`` so that the gain is ``x^H h_b``."""
    return np.concatenate([np.conj(np.asarray(theta, dtype=complex)), [1.0 + 0j]])


def unlift(x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    return np.conj(x[:-1] / (x[-1] / abs(x[-1])))


def lifted_channels(v, layout: HybridIrsLayout, channels: ChannelSet, budget: LinkBudget):
    """Return ``h_b`` (length M+1) and the diagonal of ``H_e H_e^H`` (length M+1)."""
    s = cascade_coefficients(v, channels)
    h_b = np.concatenate(
        [
            np.sqrt(channels.rho_srb * budget.p_tx) * s,
            [np.sqrt(channels.rho_sb * budget.p_tx) * np.vdot(channels.h_sb, v)],
        ]
    )
    he2 = np.concatenate([channels.rho_rb * np.abs(channels.h_rb) ** 2 * layout.active_mask, [0.0]])
    return h_b, he2


@dataclass
class MMStepResult:
    theta_hat: np.ndarray
    surrogate_gain: float
    lambda_max: float
    report: SolveReport


def mm_theta_step(
    theta_bar,
    v,
    layout: HybridIrsLayout,
    channels: ChannelSet,
    budget: LinkBudget,
    tol: float = 1e-10,
) -> MMStepResult:
    """One minorize-maximize update of the lifted reflection vector.

    ``log(1 + SNR)`` is minorized at ``theta_bar`` by ``2 Re{x^H u} - x^H W x``
    plus a constant. The quadratic is then majorized with
    ``lambda_max(W) ||x||^2``, which is tight at ``theta_bar``. Passive entries
    have fixed modulus, so the norm term only penalizes active entries.
    The last lifted entry stays pinned to 1.

    ``theta_bar`` and the returned ``theta_hat`` are lifted vectors (see
    :func:`lift`).
    """
    theta_bar = np.asarray(theta_bar, dtype=complex)
    m = layout.m_total
    h_b, he2 = lifted_channels(v, layout, channels, budget)
    cc = budget.sigma_r2 * float(np.sum(he2 * np.abs(theta_bar) ** 2)) + budget.sigma_b2
    dd = abs(np.vdot(theta_bar, h_b)) ** 2
    k = dd / (cc * (cc + dd))
    W = k * (budget.sigma_r2 * np.diag(he2) + np.outer(h_b, h_b.conj()))
    u = h_b * np.vdot(h_b, theta_bar) / cc
    lam = hermitian_max_eigenvalue(W, tol=1e-12) * (1 + 1e-9)
    c_mm = lam * theta_bar - W @ theta_bar + u

    act = layout.active_mask
    pw = active_power_weights(v, channels, budget.p_tx, budget.sigma_r2)
    weights = np.where(act, pw, 0.0)
    penalty = np.where(act, lam / 2.0, 0.0)
    x, rep = max_linear_capped_budget(c_mm[:m], layout.caps(), weights, layout.pr_max, penalty=penalty, tol=tol)
    theta_hat = np.concatenate([x, [1.0 + 0j]])

    def surrogate(z):
        return 2 * np.real(np.vdot(z, u)) - np.real(np.vdot(z, W @ z))

    gain = float(surrogate(theta_hat) - surrogate(theta_bar))
    return MMStepResult(theta_hat, gain, float(lam), rep)
