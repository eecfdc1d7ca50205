"""Truncated multivariate Taylor arithmetic (forward mode, orders 0..4).

A :class:`TaylorArray` carries the value of an array-valued quantity together
with its derivative tensors with respect to ``k`` seed variables.  Coefficient
``m`` has shape ``base_shape + (k,)*m``.  Arithmetic propagates derivatives
exactly (Leibniz rule for products, Faa di Bruno for scalar functions), so a
function evaluated on a seeded input yields its gradient, Hessian and, when
requested, third and fourth derivative tensors in a single pass.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

_MAX_ORDER = 4
_SEEDS = "abcdef"


def _set_partitions(items):
    if len(items) == 1:
        yield [[items[0]]]
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + [list(b) for b in part]
        for i in range(len(part)):
            yield [list(b) for b in part[:i]] + [[first] + list(part[i])] + [
                list(b) for b in part[i + 1 :]
            ]


# PARTITIONS[m]: all set partitions of {0..m-1}, blocks sorted internally.
PARTITIONS = {
    m: [tuple(tuple(sorted(b)) for b in p) for p in _set_partitions(list(range(m)))]
    for m in range(1, _MAX_ORDER + 1)
}


def _outer(factors):
    """Outer product over seed axes; base axes broadcast via ellipsis."""
    if len(factors) == 1:
        return factors[0][0]
    subs = []
    pos = 0
    for _, p in factors:
        subs.append("..." + _SEEDS[pos : pos + p])
        pos += p
    expr = ",".join(subs) + "->..." + _SEEDS[:pos]
    return np.einsum(expr, *[a for a, _ in factors])


def _scatter_axes(term, targets, base_ndim):
    """Move seed axes of ``term`` so that source axis i lands at slot targets[i]."""
    if list(targets) == sorted(targets):
        if list(targets) == list(range(len(targets))):
            return term
    inv = np.argsort(np.asarray(targets, dtype=int), kind="stable")
    axes = list(range(base_ndim)) + [base_ndim + int(i) for i in inv]
    return np.transpose(term, axes)


class TaylorArray:
    """Array with derivative tensors w.r.t. ``k`` seed variables."""

    __slots__ = ("c", "k", "order", "base_ndim")

    def __init__(self, coeffs, k, order):
        self.c = list(coeffs)
        self.k = k
        self.order = order
        self.base_ndim = np.ndim(self.c[0])

    # -- construction -----------------------------------------------------

    @staticmethod
    def seed(values, order):
        """Seed an input batch; the last axis of ``values`` enumerates the k inputs."""
        values = np.asarray(values, dtype=float)
        k = values.shape[-1]
        coeffs = [values]
        if order >= 1:
            coeffs.append(np.broadcast_to(np.eye(k), values.shape + (k,)))
        for m in range(2, order + 1):
            coeffs.append(np.zeros(values.shape + (k,) * m))
        return TaylorArray(coeffs, k, order)

    @staticmethod
    def constant(value, k, order):
        value = np.asarray(value, dtype=float)
        coeffs = [value] + [np.zeros(value.shape + (k,) * m) for m in range(1, order + 1)]
        return TaylorArray(coeffs, k, order)

    @property
    def base_shape(self):
        return np.shape(self.c[0])

    def _zeros_like_coeff(self, m, base_shape=None):
        shape = (base_shape if base_shape is not None else self.base_shape) + (self.k,) * m
        return np.zeros(shape)

    def _lift(self, other):
        """Coerce a scalar/ndarray to a broadcast-compatible plain array."""
        other = np.asarray(other, dtype=float)
        if other.ndim > self.base_ndim:
            raise ValueError("broadcast would add base axes; seed the input instead")
        return other

    # -- component access -------------------------------------------------

    def component(self, index):
        """Select ``index`` along the last base axis."""
        axis = self.base_ndim - 1
        return TaylorArray([np.take(c, index, axis=axis) for c in self.c], self.k, self.order)

    def affine(self, weight, bias=None):
        """Contract the last base axis with ``weight`` (out, in), then add ``bias``."""
        weight = np.asarray(weight, dtype=float)
        out = []
        for m, c in enumerate(self.c):
            sub = "..." + "i" + _SEEDS[:m]
            res = np.einsum(f"oi,{sub}->...o{_SEEDS[:m]}", weight, c)
            out.append(res)
        if bias is not None:
            out[0] = out[0] + np.asarray(bias, dtype=float)
        return TaylorArray(out, self.k, self.order)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, TaylorArray):
            return TaylorArray(
                [a + b for a, b in zip(self.c, other.c)], self.k, self.order
            )
        other = self._lift(other)
        out = list(self.c)
        out[0] = out[0] + other
        return TaylorArray(out, self.k, self.order)

    __radd__ = __add__

    def __neg__(self):
        return TaylorArray([-c for c in self.c], self.k, self.order)

    def __sub__(self, other):
        return self + (-other if isinstance(other, TaylorArray) else -np.asarray(other, dtype=float))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, TaylorArray):
            other = self._lift(other)
            out = [c * other.reshape(other.shape + (1,) * m) for m, c in enumerate(self.c)]
            return TaylorArray(out, self.k, self.order)
        f, g = self, other
        coeffs = []
        for m in range(self.order + 1):
            acc = None
            for p in range(m + 1):
                for S in combinations(range(m), p):
                    rest = tuple(i for i in range(m) if i not in S)
                    term = _outer([(f.c[p], p), (g.c[m - p], m - p)])
                    bnd = max(f.base_ndim, g.base_ndim)
                    term = _scatter_axes(term, S + rest, bnd)
                    acc = term if acc is None else acc + term
            coeffs.append(acc)
        return TaylorArray(coeffs, self.k, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TaylorArray):
            return self * other._reciprocal()
        return self * (1.0 / self._lift(other))

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    def __pow__(self, n):
        if not isinstance(n, int) or n < 1:
            raise ValueError("only positive integer powers are supported")
        out = self
        for _ in range(n - 1):
            out = out * self
        return out

    def _reciprocal(self):
        x = self.c[0]
        derivs = [1.0 / x]
        fact, sign = 1.0, 1.0
        for n in range(1, self.order + 1):
            fact *= n
            sign = -sign
            derivs.append(sign * fact / x ** (n + 1))
        return _compose(derivs, self)

    def compose(self, derivs):
        """Apply a scalar function given its derivative values at ``self.c[0]``."""
        return _compose(derivs, self)


def _compose(u_derivs, f):
    """Faa di Bruno: u(f) for a scalar function u with derivatives ``u_derivs``."""
    coeffs = [np.asarray(u_derivs[0], dtype=float)]
    for m in range(1, f.order + 1):
        acc = None
        for part in PARTITIONS[m]:
            factors = [(f.c[len(block)], len(block)) for block in part]
            term = _outer(factors)
            targets = [pos for block in part for pos in block]
            term = _scatter_axes(term, targets, f.base_ndim)
            u = np.asarray(u_derivs[len(part)], dtype=float)
            term = u.reshape(u.shape + (1,) * m) * term
            acc = term if acc is None else acc + term
        coeffs.append(acc)
    return TaylorArray(coeffs, f.k, f.order)


# -- scalar functions (dispatch on TaylorArray vs ndarray) ------------------

_SIN_CYCLE = (np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x))


def sin(x):
    if isinstance(x, TaylorArray):
        v = x.c[0]
        return _compose([_SIN_CYCLE[m % 4](v) for m in range(x.order + 1)], x)
    return np.sin(x)


def cos(x):
    if isinstance(x, TaylorArray):
        v = x.c[0]
        return _compose([_SIN_CYCLE[(m + 1) % 4](v) for m in range(x.order + 1)], x)
    return np.cos(x)


def exp(x):
    if isinstance(x, TaylorArray):
        e = np.exp(x.c[0])
        return _compose([e] * (x.order + 1), x)
    return np.exp(x)


def log(x):
    if isinstance(x, TaylorArray):
        v = x.c[0]
        derivs = [np.log(v)]
        fact, sign = 1.0, 1.0
        for n in range(1, x.order + 1):
            derivs.append(sign * fact / v**n)
            fact *= n
            sign = -sign
        return _compose(derivs, x)
    return np.log(x)


def _sigmoid_value(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


# sigma^(n) expressed as polynomials in sigma (coefficients of sigma^1..).
_SIGMOID_POLYS = (
    (1.0,),
    (1.0, -1.0),
    (1.0, -3.0, 2.0),
    (1.0, -7.0, 12.0, -6.0),
    (1.0, -15.0, 50.0, -60.0, 24.0),
)


def _sigmoid_derivs(s, n_max):
    out = [s]
    for n in range(1, n_max + 1):
        poly = _SIGMOID_POLYS[n]
        acc = np.zeros_like(s)
        for j, coef in enumerate(poly, start=1):
            acc = acc + coef * s**j
        out.append(acc)
    return out


def sigmoid(x):
    if isinstance(x, TaylorArray):
        s = _sigmoid_value(x.c[0])
        return _compose(_sigmoid_derivs(s, x.order), x)
    return _sigmoid_value(x)


def softplus(x):
    if isinstance(x, TaylorArray):
        v = x.c[0]
        s = _sigmoid_value(v)
        derivs = [np.logaddexp(0.0, v)] + _sigmoid_derivs(s, x.order)[: x.order]
        return _compose(derivs, x)
    return np.logaddexp(0.0, x)


def symmetrize_exact(tensor, order, base_ndim):
    """Make a derivative tensor exactly permutation-symmetric.

    Every entry is replaced by the entry at the sorted index tuple, so permuted
    index positions hold bit-identical values.
    """
    if order < 2:
        return tensor
    k = tensor.shape[-1]
    idx = np.indices((k,) * order)
    idx = np.sort(idx, axis=0)
    key = (Ellipsis,) + tuple(idx[i] for i in range(order))
    return tensor[key]
