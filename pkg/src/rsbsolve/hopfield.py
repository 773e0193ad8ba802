"""Variational pressure and self-consistency maps of the
associative-memory model at extensive storage load.

Integrating out the pattern layer leaves a cascade of linear-response
denominators; whenever one of them reaches zero the trial point is
outside the domain of the closed form and a SusceptibilityDivergence is
raised instead of returning a number.  The conjugate plateaus are slaved
to the overlap plateaus through an exact closed form, so the solvers
only ever iterate magnetization and overlaps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    HopfieldParams,
    RangeViolation,
    RsbAnsatz,
    SusceptibilityDivergence,
    validate_ansatz,
)
from .quadrature import nested_log_cosh_expect, nested_ratio_expect
from .sk import _check_flat


@dataclass(frozen=True)
class HopEvaluation:
    """Pressure value with its additive pieces."""

    pressure: float
    terms: dict


@dataclass(frozen=True)
class QDenominators:
    """Linear-response denominators, one per level, outermost first."""

    values: tuple


def hop_q_denominators(params, ansatz):
    """Cascade of response denominators for a depth-k ansatz.

    Built top down: the innermost value is 1 - beta*(1 - q_{k+1}) and
    each step outward subtracts beta * theta_a * (q_{a+1} - q_a).  Any
    non-positive value raises; this function never returns a number in
    that case.
    """
    a = validate_ansatz(ansatz)
    beta = params.beta
    q = a.qs
    th = a.thetas
    vals = [0.0] * (a.k + 1)
    vals[a.k] = 1.0 - beta * (1.0 - q[a.k])
    if vals[a.k] <= 0.0:
        raise SusceptibilityDivergence(
            "response denominator %r <= 0 at the innermost level" % vals[a.k])
    for i in range(a.k - 1, -1, -1):
        vals[i] = vals[i + 1] - beta * th[i] * (q[i + 1] - q[i])
        if vals[i] <= 0.0:
            raise SusceptibilityDivergence(
                "response denominator %r <= 0 at level %d" % (vals[i], i + 1))
    return QDenominators(values=tuple(vals))


def hop_p_closed_form(params, ansatz):
    """Conjugate plateaus slaved to the overlaps.

    p_1 = beta q_1 / Q_1^2 and each increment is
    beta (q_a - q_{a-1}) / (Q_a Q_{a-1}).
    """
    a = validate_ansatz(ansatz)
    qd = hop_q_denominators(params, a).values
    beta = params.beta
    q = a.qs
    ps = [beta * q[0] / qd[0] ** 2]
    for i in range(1, a.k + 1):
        ps.append(ps[-1] + beta * (q[i] - q[i - 1]) / (qd[i] * qd[i - 1]))
    return tuple(ps)


def _hop_terms(params, ansatz, ps, qd):
    alpha, beta = params.alpha, params.beta
    q = np.asarray(ansatz.qs, dtype=float)
    th = np.asarray(ansatz.thetas, dtype=float)
    p = np.asarray(ps, dtype=float)
    qdv = np.asarray(qd, dtype=float)
    k = ansatz.k
    tower = 0.5 * alpha * sum(
        math.log(qdv[i + 1] / qdv[i]) / th[i] for i in range(k))
    logterm = -0.5 * alpha * math.log(qdv[k])
    qterm = 0.5 * alpha * beta * q[0] / qdv[0]
    pterm = -0.5 * alpha * beta * p[k] * (1.0 - q[k])
    mix = -0.5 * alpha * beta * sum(
        th[i] * (p[i + 1] * q[i + 1] - p[i] * q[i]) for i in range(k))
    return tower, logterm, qterm, pterm, mix


def hop_pressure_krsb(params, ansatz, spec=None):
    """Hierarchical trial pressure at a depth-k ansatz.

    When ``ansatz.ps`` is None the conjugate plateaus are filled from
    their closed form.  At zero storage load the pattern layer is absent
    and the value reduces exactly to the one-body ferromagnet.
    """
    if not isinstance(params, HopfieldParams):
        raise TypeError("params must be HopfieldParams")
    a = validate_ansatz(ansatz)
    alpha, beta = params.alpha, params.beta
    if alpha == 0.0:
        # no pattern layer: the response cascade and its guard drop out
        field = nested_log_cosh_expect(beta * a.m, np.zeros(a.k + 1),
                                       a.thetas, spec)
        pressure = field - 0.5 * beta * a.m * a.m
        return HopEvaluation(pressure=pressure,
                            terms={"field": field, "load_terms": 0.0,
                                   "bias_source": -0.5 * beta * a.m * a.m})
    ps = a.ps if a.ps is not None else hop_p_closed_form(params, a)
    qd = hop_q_denominators(params, a).values
    p = np.asarray(ps, dtype=float)
    dp = np.diff(np.concatenate([[0.0], p]))
    if np.any(dp < 0.0):
        raise RangeViolation("conjugate plateaus must be non-decreasing")
    coeffs = np.sqrt(alpha * beta * dp)
    field = nested_log_cosh_expect(beta * a.m, coeffs, a.thetas, spec)
    tower, logterm, qterm, pterm, mix = _hop_terms(params, a, ps, qd)
    bias = -0.5 * beta * a.m * a.m
    pressure = field + tower + logterm + qterm + pterm + mix + bias
    return HopEvaluation(pressure=pressure,
                        terms={"field": field, "response_tower": tower,
                               "response_log": logterm, "overlap_source": qterm,
                               "conjugate_source": pterm + mix,
                               "bias_source": bias})


def hop_pressure_rs(params, m, q, p=None, spec=None):
    """Flat-ansatz pressure; ``p`` defaults to its closed form
    beta q / (1 - beta (1 - q))^2."""
    if not isinstance(params, HopfieldParams):
        raise TypeError("params must be HopfieldParams")
    _check_flat(m, q)
    alpha, beta = params.alpha, params.beta
    if alpha == 0.0:
        field = nested_log_cosh_expect(beta * m, [0.0], (), spec)
        return HopEvaluation(pressure=field - 0.5 * beta * m * m,
                            terms={"field": field, "load_terms": 0.0,
                                   "bias_source": -0.5 * beta * m * m})
    qr = 1.0 - beta * (1.0 - q)
    if qr <= 0.0:
        raise SusceptibilityDivergence("response denominator %r <= 0" % qr)
    if p is None:
        p = beta * q / qr ** 2
    if p < 0.0:
        raise RangeViolation("p must be >= 0, got %r" % p)
    field = nested_log_cosh_expect(beta * m, [math.sqrt(alpha * beta * p)],
                                   (), spec)
    pressure = (field - 0.5 * alpha * math.log(qr)
                + 0.5 * alpha * beta * q / qr
                - 0.5 * beta * m * m
                - 0.5 * alpha * beta * p * (1.0 - q))
    return HopEvaluation(pressure=pressure,
                        terms={"field": field,
                               "response_log": -0.5 * alpha * math.log(qr),
                               "overlap_source": 0.5 * alpha * beta * q / qr,
                               "conjugate_source": -0.5 * alpha * beta * p * (1.0 - q),
                               "bias_source": -0.5 * beta * m * m})


def hop_sce_rs(params, m, q, spec=None):
    """One application of the flat self-consistency map: returns
    (m', q', p') with the conjugate plateau evaluated at the new
    overlap."""
    _check_flat(m, q)
    alpha, beta = params.alpha, params.beta
    if alpha == 0.0:
        m_new = math.tanh(beta * m)
        q_new = m_new * m_new
        return m_new, q_new, 0.0
    qr = 1.0 - beta * (1.0 - q)
    if qr <= 0.0:
        raise SusceptibilityDivergence("response denominator %r <= 0" % qr)
    p = beta * q / qr ** 2
    offset = beta * m
    coeffs = [math.sqrt(alpha * beta * p)]
    m_new = nested_ratio_expect(offset, coeffs, (), inner="tanh", spec=spec)
    q_new = nested_ratio_expect(offset, coeffs, (), inner="tanh2", spec=spec)
    qr_new = 1.0 - beta * (1.0 - q_new)
    if qr_new <= 0.0:
        raise SusceptibilityDivergence("response denominator %r <= 0" % qr_new)
    p_new = beta * q_new / qr_new ** 2
    return m_new, q_new, p_new


def hop_sce_krsb(params, ansatz, spec=None):
    """One application of the depth-k self-consistency map with the
    conjugate plateaus eliminated.

    Field coefficients use the incoming conjugate plateaus when given,
    otherwise their closed form at the incoming overlaps (which must be
    admissible).  The returned trial point always carries ``ps=None``:
    the conjugates are slaved, so the iteration runs over magnetization
    and overlaps only and the divergence guard fires on iterates, never
    on raw map output.
    """
    a = validate_ansatz(ansatz)
    alpha, beta = params.alpha, params.beta
    if alpha == 0.0:
        m_new = math.tanh(beta * a.m)
        q_new = m_new * m_new
        return replace(a, m=m_new, qs=(q_new,) * (a.k + 1), ps=None)
    ps_in = a.ps if a.ps is not None else hop_p_closed_form(params, a)
    p = np.asarray(ps_in, dtype=float)
    dp = np.diff(np.concatenate([[0.0], p]))
    if np.any(dp < 0.0):
        raise RangeViolation("conjugate plateaus must be non-decreasing")
    coeffs = np.sqrt(alpha * beta * dp)
    offset = beta * a.m
    th = a.thetas
    m_new = nested_ratio_expect(offset, coeffs, th, inner="tanh", spec=spec)
    qs_new = [
        nested_ratio_expect(offset, coeffs, th, inner="tanh",
                            square_at_level=lvl, spec=spec)
        for lvl in range(1, a.k + 1)
    ]
    qs_new.append(nested_ratio_expect(offset, coeffs, th, inner="tanh2",
                                      spec=spec))
    qs_new = np.maximum.accumulate(np.clip(qs_new, 0.0, 1.0))
    m_new = min(1.0, max(-1.0, m_new))
    return replace(a, m=m_new, qs=tuple(qs_new), ps=None)
