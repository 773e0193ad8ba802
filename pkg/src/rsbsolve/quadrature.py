"""Nested Gaussian averages on tensor grids.

All expectations are over independent standard normals, one per
hierarchy level.  Deterministic Gauss-Hermite nodes are used per level
(physicists' nodes rescaled to unit variance); when the tensor product
would blow the configured budget, outer levels degrade one by one to a
fixed antithetic sampling rule so results stay reproducible without any
caller-supplied seed.  Everything runs in the log domain, with a max
subtraction per reduction, so large arguments cannot overflow.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_hermite

from .core import (
    BudgetExceeded,
    NonFiniteIntegrand,
    OrderingViolation,
    QuadratureSpec,
    RangeViolation,
)

THETA_FLOOR = 0.01

_DEFAULT_SPEC = QuadratureSpec()


@lru_cache(maxsize=64)
def _hermite_nodes(n):
    # roots of H_n: rescale so the weight is the standard normal density
    x, w = roots_hermite(n)
    h = x * math.sqrt(2.0)
    wn = w / math.sqrt(math.pi)
    h.setflags(write=False)
    wn.setflags(write=False)
    return h, wn


@lru_cache(maxsize=256)
def _sampling_nodes(level, count):
    # Fixed stream per (level, count): identical runs never depend on call
    # order, process, or platform.
    ss = np.random.SeedSequence(entropy=0x5EED, spawn_key=(int(level), int(count)))
    gen = np.random.Generator(np.random.Philox(ss))
    half = (count + 1) // 2
    draws = gen.standard_normal(half)
    nodes = np.concatenate([draws, -draws])[:count]
    weights = np.full(count, 1.0 / count)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _log2cosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax))


def gauss_expect(f, spec=None):
    """Expectation of ``f(h)`` for a single standard normal ``h``.

    ``f`` may be vectorized over a node array; a scalar-only callable is
    looped over.
    """
    spec = _DEFAULT_SPEC if spec is None else spec
    h, w = _hermite_nodes(spec.nodes_per_level)
    vals = np.asarray(f(h), dtype=float)
    if vals.shape != h.shape:
        vals = np.array([float(f(hi)) for hi in h])
    if not np.all(np.isfinite(vals)):
        raise NonFiniteIntegrand("integrand returned a non-finite value")
    return float(np.dot(w, vals))


def _check_thetas(thetas):
    thetas = tuple(float(t) for t in thetas)
    for t in thetas:
        if not math.isfinite(t):
            raise RangeViolation("weight exponent %r is not finite" % t)
        if t < THETA_FLOOR:
            raise RangeViolation(
                "weight exponent %r below the %g floor" % (t, THETA_FLOOR))
        if t > 1.0:
            raise RangeViolation("weight exponent %r must be <= 1" % t)
    for lo, hi in zip(thetas, thetas[1:]):
        if hi <= lo:
            raise OrderingViolation("weight exponents must be strictly increasing")
    return thetas


def _check_field(offset, coeffs, n_levels):
    offset = float(offset)
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 1 or coeffs.size != n_levels:
        raise RangeViolation(
            "need one field coefficient per level, got %r for %d levels"
            % (list(np.atleast_1d(coeffs)), n_levels))
    if not (math.isfinite(offset) and np.all(np.isfinite(coeffs))):
        raise NonFiniteIntegrand("field offset or coefficients are not finite")
    return offset, coeffs


def _plan_levels(n_levels, spec):
    """Node count per level, degrading outer levels to sampling nodes
    until the tensor grid fits the budget."""
    sizes = [spec.nodes_per_level] * n_levels
    sampled = [False] * n_levels
    i = 0
    while math.prod(sizes) > spec.max_tensor_points and i < n_levels:
        if spec.mc_samples <= 0:
            raise BudgetExceeded(
                "grid of %d points exceeds max_tensor_points=%d and "
                "mc_samples is 0" % (math.prod(sizes), spec.max_tensor_points))
        sizes[i] = spec.mc_samples
        sampled[i] = True
        i += 1
    if math.prod(sizes) > spec.max_tensor_points:
        raise BudgetExceeded(
            "grid of %d points exceeds max_tensor_points=%d even with "
            "sampling nodes on every level"
            % (math.prod(sizes), spec.max_tensor_points))
    return sizes, sampled


def _level_grids(n_levels, spec):
    sizes, sampled = _plan_levels(n_levels, spec)
    nodes, weights = [], []
    for idx in range(n_levels):
        if sampled[idx]:
            nd, wt = _sampling_nodes(idx + 1, sizes[idx])
        else:
            nd, wt = _hermite_nodes(sizes[idx])
        nodes.append(nd)
        weights.append(wt)
    return nodes, weights


def _field_tensor(offset, coeffs, nodes):
    n_levels = len(nodes)
    g = np.array(offset)
    for idx in range(n_levels):
        shape = [1] * n_levels
        shape[idx] = nodes[idx].size
        g = g + coeffs[idx] * nodes[idx].reshape(shape)
    return g


def nested_log_cosh_expect(offset, coeffs, thetas=(), spec=None):
    """Hierarchical free-energy term of a field with k+1 Gaussian layers.

    The innermost kernel is 2*cosh of the accumulated field (so the k=0
    case is plainly E[log 2 cosh(offset + c*h)] and a zero field returns
    log 2); each interior level averages the previous kernel raised to
    the ratio of adjacent weight exponents, and the outermost level
    averages (1/theta_1) * log of the result.
    """
    spec = _DEFAULT_SPEC if spec is None else spec
    thetas = _check_thetas(thetas)
    k = len(thetas)
    offset, coeffs = _check_field(offset, coeffs, k + 1)
    th = list(thetas) + [1.0]

    nodes, weights = _level_grids(k + 1, spec)
    g = _field_tensor(offset, coeffs, nodes)
    logn = _log2cosh(g)
    for b in range(k + 1, 1, -1):        # integrate out level b
        r = th[b - 2] / th[b - 1]
        a = r * logn
        mx = a.max(axis=-1, keepdims=True)
        z = np.sum(weights[b - 1] * np.exp(a - mx), axis=-1)
        logn = np.squeeze(mx, axis=-1) + np.log(z)
    value = float(np.dot(weights[0], np.atleast_1d(logn)) / th[0])
    if not math.isfinite(value):
        raise NonFiniteIntegrand("nested average is not finite")
    return value


_INNER_KERNELS = ("tanh", "tanh2", "none")


def nested_ratio_expect(offset, coeffs, thetas=(), inner="tanh",
                        square_at_level=None, spec=None):
    """Telescopic weighted average of an inner kernel of the field.

    The innermost kernel is tanh (``"tanh"``), tanh squared (``"tanh2"``)
    or the constant one (``"none"``, which makes the result 1 and checks
    weight normalization).  Each reduction reweights by the normalized
    power of the local partition kernel.  ``square_at_level = a`` squares
    the partial average once ``a`` levels of expectation remain outside:
    values 1..k give the interior-plateau averages, 0 squares the final
    scalar, and None disables squaring (used for the magnetization and
    the innermost plateau).
    """
    spec = _DEFAULT_SPEC if spec is None else spec
    thetas = _check_thetas(thetas)
    k = len(thetas)
    offset, coeffs = _check_field(offset, coeffs, k + 1)
    if inner not in _INNER_KERNELS:
        raise RangeViolation("inner must be one of %r" % (_INNER_KERNELS,))
    if square_at_level is not None:
        square_at_level = int(square_at_level)
        if not (0 <= square_at_level <= k):
            raise RangeViolation(
                "square_at_level must be None or in [0, %d], got %d"
                % (k, square_at_level))
    th = list(thetas) + [1.0]

    nodes, weights = _level_grids(k + 1, spec)
    g = _field_tensor(offset, coeffs, nodes)
    logn = _log2cosh(g)
    if inner == "tanh":
        val = np.tanh(g)
    elif inner == "tanh2":
        val = np.tanh(g) ** 2
    else:
        val = np.ones_like(g)
    for b in range(k + 1, 1, -1):
        r = th[b - 2] / th[b - 1]
        a = r * logn
        mx = a.max(axis=-1, keepdims=True)
        we = weights[b - 1] * np.exp(a - mx)
        z = we.sum(axis=-1)
        val = np.sum(we * val, axis=-1) / z
        logn = np.squeeze(mx, axis=-1) + np.log(z)
        if square_at_level == b - 1:   # square once reduced to level b-1
            val = val * val
    out = float(np.dot(weights[0], np.atleast_1d(val)))
    if square_at_level == 0:
        out = out * out
    if not math.isfinite(out):
        raise NonFiniteIntegrand("nested ratio average is not finite")
    return out
