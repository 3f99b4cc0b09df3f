"""Orthonormal multivariate Hermite bases over independent standard normals.

All polynomials are normalized so that ``E[Phi_i Phi_j] = delta_ij``; the
classical probabilists' polynomial ``He_n`` is recovered by multiplying by
``sqrt(n!)`` per dimension.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

DEFAULT_MAX_TERMS = 10**6


class Scheme(str, enum.Enum):
    TOTAL_ORDER = "total-order"
    TENSOR_PRODUCT = "tensor-product"


def hermite_eval_univariate(n: int, z):
    """Normalized probabilists' Hermite polynomial ``He_n(z) / sqrt(n!)``.

    Uses the three-term recurrence of the normalized family, which stays
    well-scaled for large ``n``. ``z`` may be a scalar or an array.
    """
    if n < 0:
        raise ValueError("degree must be non-negative")
    z = np.asarray(z, dtype=float)
    prev = np.ones_like(z)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = z.copy()
    for k in range(1, n):
        prev, cur = cur, (z * cur - math.sqrt(k) * prev) / math.sqrt(k + 1)
    return cur if cur.ndim else float(cur)


def hermite_table(z, degree: int) -> np.ndarray:
    """Values of ``h_0..h_degree`` at ``z``; shape ``z.shape + (degree + 1,)``."""
    z = np.asarray(z, dtype=float)
    out = np.empty(z.shape + (degree + 1,))
    out[..., 0] = 1.0
    if degree >= 1:
        out[..., 1] = z
    for k in range(1, degree):
        out[..., k + 1] = (z * out[..., k] - math.sqrt(k) * out[..., k - 1]) / math.sqrt(k + 1)
    return out


def hermite_triple_1d(a: int, b: int, c: int) -> float:
    """``E[h_a h_b h_c]`` for normalized Hermite polynomials, in closed form.

    Nonzero only when ``a + b + c`` is even and ``(a, b, c)`` satisfy the
    triangle inequality; then ``E[He_a He_b He_c] = a! b! c! / ((s-a)! (s-b)! (s-c)!)``
    with ``s = (a + b + c) / 2``.
    """
    total = a + b + c
    if total % 2:
        return 0.0
    s = total // 2
    if s < a or s < b or s < c:
        return 0.0
    # exact integer arithmetic before the single normalizing square root
    num = math.factorial(a) * math.factorial(b) * math.factorial(c)
    den = math.factorial(s - a) * math.factorial(s - b) * math.factorial(s - c)
    if num.bit_length() < 1000:
        return (num // den) / math.sqrt(num)
    # high degrees: same ratio in log space
    log_val = (0.5 * (math.lgamma(a + 1) + math.lgamma(b + 1) + math.lgamma(c + 1))
               - math.lgamma(s - a + 1) - math.lgamma(s - b + 1) - math.lgamma(s - c + 1))
    return math.exp(log_val)


def term_count(n_zeta: int, p: int, scheme: Scheme | str) -> int:
    """Number of basis terms, constant term included."""
    scheme = Scheme(scheme)
    if scheme is Scheme.TOTAL_ORDER:
        return math.comb(p + n_zeta, n_zeta)
    return (p + 1) ** n_zeta


@dataclass(frozen=True)
class MultiIndexBasis:
    n_zeta: int
    degree: int
    scheme: Scheme
    indices: np.ndarray  # (M, n_zeta) integer multi-indices
    _lookup: dict = field(default=None, repr=False, compare=False)

    @property
    def size(self) -> int:
        return self.indices.shape[0]

    def position(self, multi_index) -> int | None:
        """Row of ``multi_index`` in the basis, or ``None`` when absent."""
        return self._lookup.get(tuple(int(m) for m in multi_index))

    def linear_position(self, dim: int) -> int | None:
        """Row of the first-degree polynomial ``zeta_dim``."""
        e = [0] * self.n_zeta
        e[dim] = 1
        return self.position(e)

    def normalization(self) -> np.ndarray:
        """``sqrt(prod_j m_j!)`` per term; multiplies into classical Hermite products."""
        fact = np.vectorize(math.factorial)
        return np.sqrt(np.prod(fact(self.indices), axis=1).astype(float))


def _ordered(candidates) -> list[tuple[int, ...]]:
    # total degree ascending; within a degree the first dimension varies slowest
    # from high to low, e.g. (1,0) before (0,1)
    return sorted(candidates, key=lambda m: (sum(m), tuple(-x for x in m)))


def build_basis(n_zeta: int, p: int, scheme: Scheme | str = Scheme.TOTAL_ORDER,
                max_terms: int = DEFAULT_MAX_TERMS) -> MultiIndexBasis:
    if n_zeta < 1:
        raise ValueError("n_zeta must be >= 1")
    if p < 0:
        raise ValueError("degree must be >= 0")
    scheme = Scheme(scheme)
    m = term_count(n_zeta, p, scheme)
    if m > max_terms:
        raise ValueError(f"basis would have {m} terms, above the cap of {max_terms}")
    grid = itertools.product(range(p + 1), repeat=n_zeta)
    if scheme is Scheme.TOTAL_ORDER:
        cands = [mi for mi in grid if sum(mi) <= p]
    else:
        cands = list(grid)
    ordered = _ordered(cands)
    indices = np.array(ordered, dtype=np.int64).reshape(len(ordered), n_zeta)
    lookup = {mi: i for i, mi in enumerate(ordered)}
    return MultiIndexBasis(n_zeta, p, scheme, indices, lookup)


def eval_basis(basis: MultiIndexBasis, zeta) -> np.ndarray:
    """Evaluate every basis polynomial.

    ``zeta`` of shape ``(n_zeta,)`` gives a length-``M`` vector; shape
    ``(N, n_zeta)`` gives an ``(N, M)`` matrix.
    """
    zeta = np.asarray(zeta, dtype=float)
    single = zeta.ndim == 1
    z = np.atleast_2d(zeta)
    if z.shape[1] != basis.n_zeta:
        raise ValueError(f"expected {basis.n_zeta} input dimensions, got {z.shape[1]}")
    table = hermite_table(z, basis.degree)  # (N, n_zeta, p+1)
    out = np.ones((z.shape[0], basis.size))
    for d in range(basis.n_zeta):
        out *= table[:, d, basis.indices[:, d]]
    return out[0] if single else out


@dataclass(frozen=True)
class InnerProductTensors:
    """Sparse ``<Phi_i Phi_j Phi_k>`` over all ordered nonzero triples.

    ``values`` is keyed by the sorted triple; ``rows/cols/vals`` list every
    ordered permutation, which is what the Galerkin contraction consumes.
    """

    size: int
    norms: np.ndarray
    values: dict
    i: np.ndarray
    j: np.ndarray
    k: np.ndarray
    vals: np.ndarray

    def get(self, i: int, j: int, k: int) -> float:
        return self.values.get(tuple(sorted((i, j, k))), 0.0)

    @property
    def nnz(self) -> int:
        return self.vals.size

    def contraction_matrix(self) -> sp.csr_matrix:
        """Matrix ``T`` with ``(T @ kron(a, b))[k] = sum_ij a_i b_j <Phi_i Phi_j Phi_k>``."""
        m = self.size
        return sp.csr_matrix((self.vals, (self.k, self.i * m + self.j)), shape=(m, m * m))

    def slice_matrix(self, k: int) -> sp.csr_matrix:
        """``S[i, j] = <Phi_k Phi_j Phi_i>``: multiplication by ``Phi_k`` projected on the basis."""
        mask = self.k == k
        return sp.csr_matrix((self.vals[mask], (self.i[mask], self.j[mask])),
                             shape=(self.size, self.size))


def triple_products(basis: MultiIndexBasis) -> InnerProductTensors:
    p = basis.degree
    table = np.zeros((p + 1,) * 3)
    for a, b, c in itertools.product(range(p + 1), repeat=3):
        table[a, b, c] = hermite_triple_1d(a, b, c)

    idx = basis.indices
    m = basis.size
    values = {}
    for a in range(m):
        for b in range(a, m):
            # parity and triangle screening per dimension happens inside the table
            partial = table[idx[a], idx[b]]  # (n_zeta, p+1) per-dimension factor over c
            for c in range(b, m):
                v = 1.0
                for d in range(basis.n_zeta):
                    v *= partial[d, idx[c, d]]
                    if v == 0.0:
                        break
                if v != 0.0:
                    values[(a, b, c)] = v

    ii, jj, kk, vv = [], [], [], []
    for (a, b, c), v in values.items():
        for perm in set(itertools.permutations((a, b, c))):
            ii.append(perm[0])
            jj.append(perm[1])
            kk.append(perm[2])
            vv.append(v)
    order = np.lexsort((jj, ii, kk))
    return InnerProductTensors(
        size=m,
        norms=np.ones(m),
        values=values,
        i=np.asarray(ii, dtype=np.int64)[order],
        j=np.asarray(jj, dtype=np.int64)[order],
        k=np.asarray(kk, dtype=np.int64)[order],
        vals=np.asarray(vv, dtype=float)[order],
    )
