"""Exact arithmetic in F_{p^f}.

Elements are polynomial residues modulo a monic irreducible polynomial over
Z/p.  The integer *index* of an element is its coefficient vector read in
base p, low degree first; vectorised routines work on arrays of indices and
use lazily built lookup tables, while :class:`FieldElement` does plain
polynomial arithmetic so the two paths can check each other.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceededError, FieldMismatchError

MAX_ORDER = 1 << 16
# Full q x q add/mul tables are built only up to this order.
TABLE_LIMIT = 1024
CHAR_TABLE_LIMIT = 4096
FULL_SUBGROUP_LIMIT = 1 << 12


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def _prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


# -- polynomials over Z/p as coefficient tuples, low degree first ----------

def _trim(a: Sequence[int]) -> tuple[int, ...]:
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return tuple(a)


def _poly_mod(a: Sequence[int], m: Sequence[int], p: int) -> tuple[int, ...]:
    """Remainder of a modulo the monic polynomial m."""
    r = [c % p for c in a]
    dm = len(m) - 1
    for i in range(len(r) - 1, dm - 1, -1):
        c = r[i]
        if c:
            shift = i - dm
            for j in range(dm + 1):
                r[shift + j] = (r[shift + j] - c * m[j]) % p
    return _trim(r[:dm])


def _poly_mul(a: Sequence[int], b: Sequence[int], p: int) -> tuple[int, ...]:
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim(c % p for c in out)


def _monic_polys(p: int, deg: int) -> Iterator[tuple[int, ...]]:
    """Monic polynomials of the given degree, by increasing index of the lower part."""
    for low in itertools.product(range(p), repeat=deg):
        yield tuple(reversed(low)) + (1,)


def is_irreducible(poly: Sequence[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree <= deg/2."""
    poly = _trim(poly)
    deg = len(poly) - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for g in _monic_polys(p, d):
            if not _poly_mod(poly, g, p):
                return False
    return True


def gaussian_binomial(n: int, k: int, q: int) -> int:
    """Number of k-dimensional subspaces of F_q^n."""
    if k < 0 or k > n:
        return 0
    num = den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


def iter_rref(q: int, n: int, k: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Every k x n reduced row echelon matrix with entries indexed 0..q-1.

    The shape of an RREF matrix does not depend on the field law, only on the
    index of 0 (=0) and 1 (=1), so this serves prime and extension fields alike.
    """
    for pivots in itertools.combinations(range(n), k):
        pivot_set = set(pivots)
        free = [(i, j) for i, c in enumerate(pivots) for j in range(c + 1, n) if j not in pivot_set]
        for values in itertools.product(range(q), repeat=len(free)):
            rows = [[0] * n for _ in range(k)]
            for i, c in enumerate(pivots):
                rows[i][c] = 1
            for (i, j), v in zip(free, values):
                rows[i][j] = v
            yield tuple(tuple(r) for r in rows)


@dataclass(frozen=True)
class FieldSpec:
    """The field Z/p[x] / (modulus).  ``modulus`` is low-to-high and monic."""

    p: int
    f: int
    modulus: tuple[int, ...]

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if self.f < 1:
            raise ValueError("extension degree must be >= 1")
        if self.p ** self.f > MAX_ORDER:
            raise ValueError(f"q = {self.p}^{self.f} exceeds the supported order {MAX_ORDER}")
        mod = tuple(int(c) % self.p for c in self.modulus)
        if len(mod) != self.f + 1 or mod[-1] != 1:
            raise ValueError("modulus must be monic of degree f")
        if not is_irreducible(mod, self.p):
            raise ValueError(f"modulus {mod} is reducible over Z/{self.p}")
        object.__setattr__(self, "modulus", mod)

    @property
    def q(self) -> int:
        return self.p ** self.f

    def __repr__(self):
        return f"F_{self.q}"

    # -- element construction ------------------------------------------------

    def encode(self, coeffs: Sequence[int]) -> int:
        return sum((int(c) % self.p) * self.p ** i for i, c in enumerate(coeffs))

    def decode(self, index: int) -> tuple[int, ...]:
        index = int(index)
        if not 0 <= index < self.q:
            raise ValueError(f"element index {index} out of range for F_{self.q}")
        out = []
        for _ in range(self.f):
            index, c = divmod(index, self.p)
            out.append(c)
        return tuple(out)

    def element(self, x) -> FieldElement:
        if isinstance(x, FieldElement):
            if x.spec != self:
                raise FieldMismatchError(f"{x!r} is not in {self!r}")
            return x
        if isinstance(x, (int, np.integer)):
            return FieldElement(self, self.decode(int(x)))
        coeffs = [int(c) % self.p for c in x]
        if len(coeffs) > self.f:
            coeffs = list(_poly_mod(coeffs, self.modulus, self.p))
        coeffs += [0] * (self.f - len(coeffs))
        return FieldElement(self, tuple(coeffs))

    def prime_element(self, k: int) -> FieldElement:
        """Image of k under Z/p -> F_q."""
        return self.element([k % self.p])

    @property
    def zero(self) -> FieldElement:
        return self.element(0)

    @property
    def one(self) -> FieldElement:
        return self.element(1)

    def elements(self) -> list[FieldElement]:
        return [self.element(i) for i in range(self.q)]

    def to_json(self) -> dict:
        return {"p": self.p, "f": self.f, "modulus": list(self.modulus)}

    @classmethod
    def from_json(cls, data: dict) -> FieldSpec:
        return cls(int(data["p"]), int(data["f"]), tuple(int(c) for c in data["modulus"]))

    # -- scalar polynomial arithmetic on indices ------------------------------

    def _mul_index(self, a: int, b: int) -> int:
        prod = _poly_mul(_trim(self.decode(a)), _trim(self.decode(b)), self.p)
        return self.encode(_poly_mod(prod, self.modulus, self.p))

    def _pow_index(self, a: int, e: int) -> int:
        result, base = 1, a
        while e:
            if e & 1:
                result = self._mul_index(result, base)
            base = self._mul_index(base, base)
            e >>= 1
        return result

    def _mul_matrix(self, c: int) -> np.ndarray:
        """f x f matrix over Z/p of x -> c*x acting on digit vectors."""
        m = np.zeros((self.f, self.f), dtype=np.int64)
        for j in range(self.f):
            m[:, j] = self.decode(self._mul_index(c, self.p ** j))
        return m

    # -- vectorised tables ---------------------------------------------------

    @cached_property
    def powers(self) -> np.ndarray:
        return self.p ** np.arange(self.f, dtype=np.int64)

    @cached_property
    def digits(self) -> np.ndarray:
        idx = np.arange(self.q, dtype=np.int64)
        return (idx[:, None] // self.powers) % self.p

    @cached_property
    def primitive(self) -> int:
        if self.q == 2:
            return 1
        factors = _prime_factors(self.q - 1)
        for g in range(2, self.q):
            if all(self._pow_index(g, (self.q - 1) // r) != 1 for r in factors):
                return g
        raise AssertionError("no primitive element found")  # impossible for a field

    @cached_property
    def _exp_log(self) -> tuple[np.ndarray, np.ndarray]:
        q = self.q
        exp = np.zeros(q - 1, dtype=np.int64)
        exp[0] = 1
        filled, g_pow = 1, self.primitive
        while filled < q - 1:
            take = min(filled, q - 1 - filled)
            block = (self.digits[exp[:take]] @ self._mul_matrix(g_pow).T) % self.p
            exp[filled:filled + take] = block @ self.powers
            filled += take
            g_pow = self._pow_index(self.primitive, filled)
        log = np.zeros(q, dtype=np.int64)
        log[exp] = np.arange(q - 1)
        return exp, log

    @property
    def has_tables(self) -> bool:
        return self.q <= TABLE_LIMIT

    @cached_property
    def add_table(self) -> np.ndarray:
        d = self.digits
        return ((d[:, None, :] + d[None, :, :]) % self.p) @ self.powers

    @cached_property
    def neg_table(self) -> np.ndarray:
        return ((-self.digits) % self.p) @ self.powers

    @cached_property
    def sub_table(self) -> np.ndarray:
        return self.add_table[:, self.neg_table]

    @cached_property
    def mul_table(self) -> np.ndarray:
        exp, log = self._exp_log
        la = log[:, None] + log[None, :]
        t = exp[la % (self.q - 1)]
        t[0, :] = 0
        t[:, 0] = 0
        return t

    @cached_property
    def inv_table(self) -> np.ndarray:
        exp, log = self._exp_log
        t = exp[(-log) % (self.q - 1)]
        t[0] = 0
        return t

    def add(self, a, b):
        if self.p == 2:
            return np.bitwise_xor(a, b)
        if self.has_tables:
            return self.add_table[a, b]
        return ((self.digits[a] + self.digits[b]) % self.p) @ self.powers

    def neg(self, a):
        if self.p == 2:
            return np.asarray(a)
        return ((-self.digits[a]) % self.p) @ self.powers

    def sub(self, a, b):
        if self.p == 2:
            return np.bitwise_xor(a, b)
        if self.has_tables:
            return self.sub_table[a, b]
        return ((self.digits[a] - self.digits[b]) % self.p) @ self.powers

    def mul(self, a, b):
        if self.has_tables:
            return self.mul_table[a, b]
        exp, log = self._exp_log
        a = np.asarray(a)
        b = np.asarray(b)
        r = exp[(log[a] + log[b]) % (self.q - 1)]
        return np.where((a == 0) | (b == 0), 0, r)

    def inv(self, a):
        a = np.asarray(a)
        if np.any(a == 0):
            raise ZeroDivisionError("inverse of zero in a finite field")
        if self.has_tables:
            return self.inv_table[a]
        exp, log = self._exp_log
        return exp[(-log[a]) % (self.q - 1)]

    @cached_property
    def trace_table(self) -> np.ndarray:
        """Tr of every element, via linearity from the traces of 1, x, ..., x^{f-1}."""
        basis = np.array([trace(self.element(self.p ** j)) for j in range(self.f)], dtype=np.int64)
        return (self.digits @ basis) % self.p

    @cached_property
    def char_matrix(self) -> np.ndarray:
        """Exponents Tr(t*x) mod p for all t (rows) and x (columns)."""
        if self.q > CHAR_TABLE_LIMIT:
            raise BudgetExceededError("character table", self.q, CHAR_TABLE_LIMIT)
        # Tr(t x) = sum_ij t_i x_j Tr(x^(i+j)): a bilinear form on digit vectors.
        form = np.array(
            [[trace(self.element(self._mul_index(self.p ** i, self.p ** j))) for j in range(self.f)]
             for i in range(self.f)],
            dtype=np.int64,
        )
        left = (self.digits @ form) % self.p
        out = np.empty((self.q, self.q), dtype=np.int16)
        step = max(1, (1 << 22) // self.q)
        for lo in range(0, self.q, step):
            out[lo:lo + step] = (left[lo:lo + step] @ self.digits.T) % self.p
        return out


@functools.lru_cache(maxsize=None)
def make_field(p: int, f: int = 1) -> FieldSpec:
    """F_{p^f} with the monic irreducible modulus of smallest index.

    Candidates x^f + c_{f-1}x^{f-1} + ... + c_0 are scanned by increasing
    sum c_i p^i, i.e. lexicographically from the x^{f-1} coefficient down.
    """
    if not is_prime(p):
        raise ValueError(f"p={p} is not prime")
    if f < 1:
        raise ValueError("extension degree must be >= 1")
    if p ** f > MAX_ORDER:
        raise ValueError(f"q = {p}^{f} exceeds the supported order {MAX_ORDER}")
    for poly in _monic_polys(p, f):
        if is_irreducible(poly, p):
            return FieldSpec(p, f, poly)
    raise AssertionError("irreducible polynomials exist in every degree")


def field_of_order(q: int) -> FieldSpec:
    for p in range(2, q + 1):
        if is_prime(p):
            f, r = 0, q
            while r % p == 0:
                r //= p
                f += 1
            if r == 1 and f >= 1:
                return make_field(p, f)
            if f:
                break
    raise ValueError(f"{q} is not a prime power")


@dataclass(frozen=True)
class FieldElement:
    spec: FieldSpec
    coeffs: tuple[int, ...]

    def _other(self, other) -> FieldElement:
        if isinstance(other, FieldElement):
            if other.spec != self.spec:
                raise FieldMismatchError(f"cannot combine elements of {self.spec!r} and {other.spec!r}")
            return other
        if isinstance(other, (int, np.integer)):
            return self.spec.prime_element(int(other))
        return NotImplemented

    def __int__(self):
        return self.spec.encode(self.coeffs)

    __index__ = __int__

    def __bool__(self):
        return any(self.coeffs)

    def __repr__(self):
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                mono = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
                terms.append(str(c) if i == 0 else (mono if c == 1 else f"{c}{mono}"))
        return f"{self.spec!r}({'+'.join(terms) or '0'})"

    def __add__(self, other):
        other = self._other(other)
        if other is NotImplemented:
            return other
        p = self.spec.p
        return FieldElement(self.spec, tuple((a + b) % p for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        p = self.spec.p
        return FieldElement(self.spec, tuple((-a) % p for a in self.coeffs))

    def __sub__(self, other):
        other = self._other(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._other(other)
        if other is NotImplemented:
            return other
        s = self.spec
        prod = _poly_mul(_trim(self.coeffs), _trim(other.coeffs), s.p)
        return s.element(_poly_mod(prod, s.modulus, s.p))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result, base = self.spec.one, self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def inverse(self) -> FieldElement:
        if not self:
            raise ZeroDivisionError("inverse of zero in a finite field")
        return self ** (self.spec.q - 2)

    def __truediv__(self, other):
        other = self._other(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def in_prime_field(self) -> bool:
        return not any(self.coeffs[1:])


def trace(a: FieldElement) -> int:
    """Tr(a) = a + a^p + ... + a^(p^(f-1)), returned as an integer mod p."""
    s = a.spec
    total, frob = s.zero, a
    for _ in range(s.f):
        total = total + frob
        frob = frob ** s.p
    assert total.in_prime_field(), "trace left the prime field"
    return total.coeffs[0]


def char_value(t: FieldElement, x: FieldElement) -> int:
    """Exponent k of the character value e^(2 pi i k / p) of psi_t at x."""
    if t.spec != x.spec:
        raise FieldMismatchError("character label and argument in different fields")
    return trace(t * x)


@dataclass(frozen=True)
class AdditiveSubgroup:
    """A Z/p-subspace of F_q given by a Z/p-independent basis."""

    spec: FieldSpec
    basis: tuple[FieldElement, ...]

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def size(self) -> int:
        return self.spec.p ** self.dim

    @property
    def is_maximal(self) -> bool:
        return self.dim == self.spec.f - 1

    @cached_property
    def elements(self) -> tuple[int, ...]:
        s = self.spec
        if not self.basis:
            return (0,)
        rows = np.array([b.coeffs for b in self.basis], dtype=np.int64)
        combos = np.array(list(itertools.product(range(s.p), repeat=self.dim)), dtype=np.int64)
        return tuple(sorted(int(v) for v in ((combos @ rows) % s.p) @ s.powers))

    @cached_property
    def element_set(self) -> frozenset[int]:
        return frozenset(self.elements)

    def __contains__(self, x) -> bool:
        return int(x) in self.element_set

    def cosets(self) -> list[tuple[int, ...]]:
        """Partition of F_q into cosets of this subgroup, each sorted."""
        seen, out = set(), []
        for s in range(self.spec.q):
            if s in seen:
                continue
            coset = tuple(sorted(int(self.spec.add(s, h)) for h in self.elements))
            seen.update(coset)
            out.append(coset)
        return out


def enumerate_additive_subgroups(
    spec: FieldSpec,
    maximal_only: bool = False,
    include_whole: bool = False,
    budget: int = 10**6,
) -> list[AdditiveSubgroup]:
    """Additive subgroups of F_q, sorted by basis indices.

    With ``maximal_only`` only the index-p subgroups are returned.  Otherwise
    all proper subgroups (and F_q itself when ``include_whole``).
    """
    p, f = spec.p, spec.f
    if maximal_only:
        dims = [f - 1]
    else:
        if spec.q > FULL_SUBGROUP_LIMIT:
            raise BudgetExceededError("subgroup enumeration order", spec.q, FULL_SUBGROUP_LIMIT)
        dims = list(range(f + (1 if include_whole else 0)))
    count = sum(gaussian_binomial(f, k, p) for k in dims)
    if count > budget:
        raise BudgetExceededError("subgroup enumeration", count, budget)
    out = []
    for k in dims:
        for rows in iter_rref(p, f, k):
            out.append(AdditiveSubgroup(spec, tuple(FieldElement(spec, r) for r in rows)))
    out.sort(key=lambda h: (h.dim, tuple(int(b) for b in h.basis)))
    return out
