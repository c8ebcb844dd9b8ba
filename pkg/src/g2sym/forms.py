"""Exterior algebra on a fixed coframe.

A :class:`Form` of degree ``k`` on an ``n``-dimensional space stores one real
coefficient per strictly increasing index tuple, in the order produced by
``itertools.combinations(range(n), k)``.  A :class:`Coframe` adds structure
equations ``d(omega_a)`` so that exterior derivatives of forms whose
coefficients depend on one parameter can be evaluated.
"""

from functools import lru_cache
from itertools import combinations, permutations

import numpy as np


@lru_cache(maxsize=None)
def basis(dim, degree):
    """Sorted index tuples of the basis ``degree``-forms."""
    return tuple(combinations(range(dim), degree))


@lru_cache(maxsize=None)
def _position(dim, degree):
    return {idx: k for k, idx in enumerate(basis(dim, degree))}


def _sort_sign(indices):
    """Return (sign, sorted tuple) for a tuple of indices, sign 0 on repeats."""
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return 0, None
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return sign, tuple(idx)


@lru_cache(maxsize=None)
def _wedge_table(dim, p, q):
    rows_a, rows_b, rows_out, signs = [], [], [], []
    pos = _position(dim, p + q)
    for ia, a in enumerate(basis(dim, p)):
        for ib, b in enumerate(basis(dim, q)):
            s, merged = _sort_sign(a + b)
            if s:
                rows_a.append(ia)
                rows_b.append(ib)
                rows_out.append(pos[merged])
                signs.append(s)
    return (np.array(rows_a, dtype=np.intp), np.array(rows_b, dtype=np.intp),
            np.array(rows_out, dtype=np.intp), np.array(signs, dtype=float))


@lru_cache(maxsize=None)
def _interior_table(dim, degree):
    """Rows (source basis index, removed slot index, target basis index, sign)."""
    src, slot, dst, signs = [], [], [], []
    pos = _position(dim, degree - 1)
    for k, idx in enumerate(basis(dim, degree)):
        for m, i in enumerate(idx):
            src.append(k)
            slot.append(i)
            dst.append(pos[idx[:m] + idx[m + 1:]])
            signs.append(-1.0 if m % 2 else 1.0)
    return (np.array(src, dtype=np.intp), np.array(slot, dtype=np.intp),
            np.array(dst, dtype=np.intp), np.array(signs))


class Form:
    """A constant-coefficient exterior form."""

    __slots__ = ("dim", "degree", "coeffs")

    def __init__(self, dim, degree, coeffs=None):
        self.dim = dim
        self.degree = degree
        n = len(basis(dim, degree))
        if coeffs is None:
            self.coeffs = np.zeros(n)
        else:
            self.coeffs = np.asarray(coeffs, dtype=float).reshape(n)

    @classmethod
    def from_terms(cls, dim, terms):
        """Build from ``{index_tuple: coefficient}``; tuples need not be sorted."""
        items = list(terms.items())
        if not items:
            raise ValueError("no terms given; use Form(dim, degree) for zero")
        degree = len(items[0][0])
        out = cls(dim, degree)
        pos = _position(dim, degree)
        for idx, c in items:
            if len(idx) != degree:
                raise ValueError("mixed degrees in terms")
            s, key = _sort_sign(idx)
            if s:
                out.coeffs[pos[key]] += s * c
        return out

    @classmethod
    def one_form(cls, dim, index):
        out = cls(dim, 1)
        out.coeffs[index] = 1.0
        return out

    def terms(self, tol=0.0):
        """Nonzero coefficients as ``{sorted_tuple: value}``."""
        return {idx: float(c) for idx, c in zip(basis(self.dim, self.degree), self.coeffs)
                if abs(c) > tol}

    def component(self, *indices):
        s, key = _sort_sign(indices)
        if not s:
            return 0.0
        return s * float(self.coeffs[_position(self.dim, self.degree)[key]])

    def copy(self):
        return Form(self.dim, self.degree, self.coeffs.copy())

    def _check(self, other):
        if not isinstance(other, Form) or other.dim != self.dim or other.degree != self.degree:
            raise ValueError("forms must share dimension and degree")

    def __add__(self, other):
        self._check(other)
        return Form(self.dim, self.degree, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return Form(self.dim, self.degree, self.coeffs - other.coeffs)

    def __neg__(self):
        return Form(self.dim, self.degree, -self.coeffs)

    def __mul__(self, scalar):
        return Form(self.dim, self.degree, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Form(self.dim, self.degree, self.coeffs / float(scalar))

    def __xor__(self, other):
        return self.wedge(other)

    def wedge(self, other):
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        p, q = self.degree, other.degree
        out = Form(self.dim, p + q) if p + q <= self.dim else None
        if out is None:
            raise ValueError("degree exceeds dimension")
        ia, ib, io, s = _wedge_table(self.dim, p, q)
        np.add.at(out.coeffs, io, s * self.coeffs[ia] * other.coeffs[ib])
        return out

    def interior(self, vector):
        """Contraction ``vector ⌟ self``."""
        if self.degree == 0:
            raise ValueError("cannot contract a 0-form")
        v = np.asarray(vector, dtype=float)
        src, slot, dst, s = _interior_table(self.dim, self.degree)
        out = Form(self.dim, self.degree - 1)
        np.add.at(out.coeffs, dst, s * v[slot] * self.coeffs[src])
        return out

    def __call__(self, *vectors):
        """Evaluate on ``degree`` vectors given in coframe components."""
        if len(vectors) != self.degree:
            raise ValueError(f"expected {self.degree} vectors, got {len(vectors)}")
        mat = np.array(vectors, dtype=float).T
        total = 0.0
        for c, idx in zip(self.coeffs, basis(self.dim, self.degree)):
            if c != 0.0:
                total += c * np.linalg.det(mat[list(idx), :])
        return total

    def to_tensor(self):
        """Dense totally antisymmetric coefficient tensor."""
        k = self.degree
        t = np.zeros((self.dim,) * k)
        perms = [(p, _sort_sign(p)[0]) for p in permutations(range(k))]
        for c, idx in zip(self.coeffs, basis(self.dim, k)):
            if c == 0.0:
                continue
            for p, s in perms:
                t[tuple(idx[m] for m in p)] = s * c
        return t

    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    def __repr__(self):
        return f"Form(dim={self.dim}, degree={self.degree}, terms={self.terms(1e-300)})"


def top_coefficient(form):
    """Coefficient of a top-degree form against ``e_0 ∧ ... ∧ e_{n-1}``."""
    if form.degree != form.dim:
        raise ValueError("not a top-degree form")
    return float(form.coeffs[0])


def hodge_star(form, metric, orientation=1.0):
    """Hodge star for a constant metric given in coframe components.

    The convention is ``alpha ∧ *beta = <alpha, beta> vol`` with
    ``vol = orientation * sqrt(det g) e_0 ∧ ... ∧ e_{n-1}``.
    """
    g = np.asarray(metric, dtype=float)
    n, k = form.dim, form.degree
    ginv = np.linalg.inv(g)
    scale = orientation * np.sqrt(np.linalg.det(g))
    # raised components on sorted tuples: beta^I = sum_J det(ginv[I, J]) beta_J
    idx = basis(n, k)
    raised = np.array([
        sum(c * np.linalg.det(ginv[np.ix_(I, J)]) for c, J in zip(form.coeffs, idx) if c != 0.0)
        if k else form.coeffs[0]
        for I in idx
    ])
    out = Form(n, n - k)
    pos = _position(n, n - k)
    full = tuple(range(n))
    for c, I in zip(raised, idx):
        if c == 0.0:
            continue
        J = tuple(i for i in full if i not in I)
        s, _ = _sort_sign(I + J)
        out.coeffs[pos[J]] += s * scale * c
    return out


class Coframe:
    """Structure equations ``d(omega_a) = structure[a]`` for a coframe.

    Coefficients of the forms handled by :meth:`exterior_derivative` depend on
    one parameter dual to ``omega_0``.  Along the remaining frame directions
    they are either constant (``mode="constant"``) or determined by invariance
    under the flows of the dual frame vectors (``mode="generated"``).
    """

    def __init__(self, dim, structure, mode="constant"):
        if mode not in ("constant", "generated"):
            raise ValueError("mode must be 'constant' or 'generated'")
        self.dim = dim
        self.structure = [s if s is not None else Form(dim, 2) for s in structure]
        if len(self.structure) != dim:
            raise ValueError("need one structure equation per basis 1-form")
        self.mode = mode
        self._d_cache = {}
        self._lie_cache = {}

    def d_matrix(self, degree):
        """Matrix of d on constant-coefficient ``degree``-forms."""
        if degree not in self._d_cache:
            n = self.dim
            src = basis(n, degree)
            mat = np.zeros((len(basis(n, degree + 1)), len(src)))
            for col, idx in enumerate(src):
                acc = Form(n, degree + 1)
                for m, a in enumerate(idx):
                    left = _product(n, idx[:m])
                    right = _product(n, idx[m + 1:])
                    term = left.wedge(self.structure[a]).wedge(right)
                    acc = acc + term * (-1.0) ** m
                mat[:, col] = acc.coeffs
            self._d_cache[degree] = mat
        return self._d_cache[degree]

    def lie_matrix(self, direction, degree):
        """Matrix of the Lie derivative along frame vector ``direction``."""
        key = (direction, degree)
        if key not in self._lie_cache:
            n = self.dim
            e = np.zeros(n)
            e[direction] = 1.0
            lie1 = [self.structure[a].interior(e) for a in range(n)]
            src = basis(n, degree)
            mat = np.zeros((len(src), len(src)))
            for col, idx in enumerate(src):
                acc = Form(n, degree)
                for m, a in enumerate(idx):
                    left = _product(n, idx[:m])
                    right = _product(n, idx[m + 1:])
                    acc = acc + left.wedge(lie1[a]).wedge(right)
                mat[:, col] = acc.coeffs
            self._lie_cache[key] = mat
        return self._lie_cache[key]

    def exterior_derivative(self, form_fn, s, h):
        """d of the form ``form_fn(s)`` at parameter ``s``.

        ``form_fn`` maps the parameter to a :class:`Form`; its parameter
        derivative is a central difference with step ``h``.
        """
        centre = form_fn(s)
        k = centre.degree
        dc = (form_fn(s + h).coeffs - form_fn(s - h).coeffs) / (2.0 * h)
        out = Form(self.dim, k + 1, self.d_matrix(k) @ centre.coeffs)
        out = out + Form.one_form(self.dim, 0).wedge(Form(self.dim, k, dc))
        if self.mode == "generated":
            for a in range(1, self.dim):
                deriv = -self.lie_matrix(a, k) @ centre.coeffs
                out = out + Form.one_form(self.dim, a).wedge(Form(self.dim, k, deriv))
        return out


def _product(dim, indices):
    if not indices:
        return Form(dim, 0, [1.0])
    out = Form.one_form(dim, indices[0])
    for i in indices[1:]:
        out = out.wedge(Form.one_form(dim, i))
    return out
