"""Exact bi-graded symbol algebra on the product torus.

A symbol is a finite sum of terms ``coefficient(x) * f1(xi1) * f2(xi2)``
where the coefficient is a trigonometric polynomial on T^{n1} x T^{n2}
and each ``fi`` is drawn from a family of frequency factors (monomials,
bracket/shifted powers, tabulated rapid-decay profiles, constants) that
is closed under differentiation, products and reciprocals of its atoms.

Conventions: the torus is [0, 2pi)^n per factor, x-derivatives default to
D = -i * d/dx (plain d/dx is available behind a flag), and frequency
factors evaluate on real covectors with exact arithmetic wherever the
inputs are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

NEG_INF = float("-inf")

__all__ = [
    "NEG_INF",
    "BiOrder",
    "MultiIndexPair",
    "TrigPoly",
    "TabProfile",
    "XiAtom",
    "XiFactor",
    "BiSymbol",
    "UnsupportedFactor",
    "SampleSpec",
    "EstimateReport",
    "estimate_check",
    "estimate_check_fn",
]


class UnsupportedFactor(Exception):
    """A frequency factor cannot be differentiated or evaluated as asked."""


# ---------------------------------------------------------------------------
# orders and multi-indices
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=False)
class BiOrder:
    """Pair of growth exponents (m1, m2); -inf marks a smoothing slot.

    Addition is componentwise with (-inf) + anything = -inf, and the
    ordering is the componentwise partial order.
    """

    m1: float
    m2: float

    def __add__(self, other: "BiOrder") -> "BiOrder":
        return BiOrder(self.m1 + other.m1, self.m2 + other.m2)

    def shifted(self, d1: float, d2: float) -> "BiOrder":
        m1 = self.m1 + d1 if self.m1 != NEG_INF else NEG_INF
        m2 = self.m2 + d2 if self.m2 != NEG_INF else NEG_INF
        return BiOrder(m1, m2)

    def dominates(self, other: "BiOrder") -> bool:
        return self.m1 >= other.m1 and self.m2 >= other.m2

    def join(self, other: "BiOrder") -> "BiOrder":
        return BiOrder(max(self.m1, other.m1), max(self.m2, other.m2))

    def is_zero_symbol(self) -> bool:
        return self.m1 == NEG_INF and self.m2 == NEG_INF

    def as_tuple(self) -> tuple[float, float]:
        return (self.m1, self.m2)

    def __str__(self) -> str:
        def fmt(m: float) -> str:
            if m == NEG_INF:
                return "-inf"
            if float(m).is_integer():
                return str(int(m))
            return f"{m:g}"

        return f"({fmt(self.m1)},{fmt(self.m2)})"


ZERO_ORDER = BiOrder(0.0, 0.0)
BOTTOM_ORDER = BiOrder(NEG_INF, NEG_INF)


@dataclass(frozen=True)
class MultiIndexPair:
    """Multi-indices (alpha1, alpha2), one tuple per torus factor."""

    alpha1: tuple[int, ...]
    alpha2: tuple[int, ...]

    def __post_init__(self):
        if any(a < 0 for a in self.alpha1 + self.alpha2):
            raise ValueError("multi-index entries must be non-negative")

    @property
    def norm1(self) -> int:
        return sum(self.alpha1)

    @property
    def norm2(self) -> int:
        return sum(self.alpha2)


def _sortable(obj):
    """Recursively map complex numbers to (re, im) so tuples sort cleanly."""
    if isinstance(obj, complex):
        return (obj.real, obj.imag)
    if isinstance(obj, tuple):
        return tuple(_sortable(o) for o in obj)
    return obj


def _multi_indices(n: int, total: int) -> list[tuple[int, ...]]:
    """All length-n multi-indices with |alpha| == total."""
    if n == 1:
        return [(total,)]
    out = []
    for first in range(total + 1):
        for rest in _multi_indices(n - 1, total - first):
            out.append((first,) + rest)
    return out


def _factorial_mi(alpha: Sequence[int]) -> float:
    out = 1.0
    for a in alpha:
        out *= math.factorial(a)
    return out


# ---------------------------------------------------------------------------
# trigonometric polynomials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrigPoly:
    """Finitely supported Fourier coefficient table on T^{n1} x T^{n2}.

    Keys are lattice points (k1..., k2...) of length n1 + n2; the value at
    x is sum_k c(k) * exp(i k . x).  Factor-only polynomials simply have
    zero frequencies in the other slot.
    """

    dims: tuple[int, int]
    coeffs: Mapping[tuple[int, ...], complex]

    def __post_init__(self):
        n = self.dims[0] + self.dims[1]
        clean = {}
        for k, v in self.coeffs.items():
            if len(k) != n:
                raise ValueError(f"lattice key {k} has wrong length for dims {self.dims}")
            v = complex(v)
            if v != 0:
                clean[tuple(int(i) for i in k)] = v
        object.__setattr__(self, "coeffs", clean)

    # -- constructors ----------------------------------------------------

    @staticmethod
    def constant(value: complex, dims: tuple[int, int] = (1, 1)) -> "TrigPoly":
        n = dims[0] + dims[1]
        return TrigPoly(dims, {(0,) * n: complex(value)})

    @staticmethod
    def wave(k1: Sequence[int], k2: Sequence[int], dims: tuple[int, int] = (1, 1),
             amplitude: complex = 1.0) -> "TrigPoly":
        """exp(i(k1.x1 + k2.x2)) scaled by amplitude."""
        key = tuple(k1) + tuple(k2)
        return TrigPoly(dims, {key: complex(amplitude)})

    # -- structure -------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_constant(self) -> bool:
        n = self.dims[0] + self.dims[1]
        zero = (0,) * n
        return all(k == zero for k in self.coeffs)

    def constant_value(self) -> complex:
        n = self.dims[0] + self.dims[1]
        return complex(self.coeffs.get((0,) * n, 0.0))

    def bandwidth(self, slot: int | None = None) -> int:
        """Max |k|_inf with nonzero coefficient, overall or per slot."""
        if not self.coeffs:
            return 0
        n1 = self.dims[0]
        best = 0
        for k in self.coeffs:
            if slot == 1:
                part = k[:n1]
            elif slot == 2:
                part = k[n1:]
            else:
                part = k
            best = max(best, max((abs(i) for i in part), default=0))
        return best

    def is_real_valued(self, tol: float = 0.0) -> bool:
        """True iff c(-k) == conj(c(k)) for all k (checked, not assumed)."""
        for k, v in self.coeffs.items():
            mk = tuple(-i for i in k)
            w = self.coeffs.get(mk, 0.0)
            if abs(w - np.conj(v)) > tol:
                return False
        return True

    # -- algebra ---------------------------------------------------------

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        if self.dims != other.dims:
            raise ValueError("dimension mismatch")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0.0) + v
        return TrigPoly(self.dims, out)

    def __neg__(self) -> "TrigPoly":
        return TrigPoly(self.dims, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        return self + (-other)

    def scale(self, c: complex) -> "TrigPoly":
        return TrigPoly(self.dims, {k: c * v for k, v in self.coeffs.items()})

    def __mul__(self, other: "TrigPoly") -> "TrigPoly":
        if self.dims != other.dims:
            raise ValueError("dimension mismatch")
        out: dict[tuple[int, ...], complex] = {}
        for ka, va in self.coeffs.items():
            for kb, vb in other.coeffs.items():
                key = tuple(a + b for a, b in zip(ka, kb))
                out[key] = out.get(key, 0.0) + va * vb
        return TrigPoly(self.dims, out)

    def derivative(self, slot: int, coord: int = 0, plain: bool = False) -> "TrigPoly":
        """D-derivative in x_slot (coordinate coord); plain=True gives d/dx.

        D = -i d/dx maps the coefficient at k to k_coord * c(k).
        """
        n1 = self.dims[0]
        idx = coord if slot == 1 else n1 + coord
        out = {}
        for k, v in self.coeffs.items():
            factor = (1j * k[idx]) if plain else complex(k[idx])
            if factor != 0:
                out[k] = factor * v
        return TrigPoly(self.dims, out)

    def eval(self, x1: Sequence[float], x2: Sequence[float]) -> complex:
        x = tuple(x1) + tuple(x2)
        total = 0.0 + 0.0j
        for k, v in self.coeffs.items():
            total += v * np.exp(1j * sum(ki * xi for ki, xi in zip(k, x)))
        return complex(total)

    def key(self) -> tuple:
        return tuple(sorted((k, v) for k, v in self.coeffs.items()))

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for k in sorted(self.coeffs):
            parts.append(f"{self.coeffs[k]:.6g}*e(i{k}.x)")
        return " + ".join(parts)


# standard named coefficients on T x T used by the grammar and tests
def named_coefficient(name: str, dims: tuple[int, int] = (1, 1)) -> TrigPoly:
    if dims != (1, 1):
        raise ValueError("named coefficients are defined for n1 = n2 = 1")
    half = 0.5
    halfi = -0.5j
    table: dict[str, dict[tuple[int, int], complex]] = {
        "one": {(0, 0): 1.0},
        "sin_x1": {(1, 0): halfi, (-1, 0): -halfi},
        "cos_x1": {(1, 0): half, (-1, 0): half},
        "sin_x2": {(0, 1): halfi, (0, -1): -halfi},
        "cos_x2": {(0, 1): half, (0, -1): half},
        "exp_ix1": {(1, 0): 1.0},
        "exp_ix2": {(0, 1): 1.0},
    }
    if name not in table:
        raise KeyError(f"unknown coefficient name {name!r}; known: {sorted(table)}")
    return TrigPoly(dims, table[name])


# ---------------------------------------------------------------------------
# frequency factors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TabProfile:
    """Tabulated rapid-decay multiplier on the integer lattice of one factor.

    Values cover |k|_inf <= reach; the profile is zero beyond.  Lattice
    derivatives are central differences, available up to ``depth`` levels.
    """

    name: str
    reach: int
    values: tuple[complex, ...]  # flattened over the (2*reach+1)^n grid
    n: int = 1
    depth: int = 2

    @staticmethod
    def from_function(name: str, reach: int, fn: Callable[[np.ndarray], np.ndarray],
                      n: int = 1, depth: int = 2) -> "TabProfile":
        if n != 1:
            raise UnsupportedFactor("tabulated profiles are 1-d only")
        ks = np.arange(-reach, reach + 1)
        vals = np.asarray(fn(ks), dtype=complex)
        return TabProfile(name, reach, tuple(vals.tolist()), n=n, depth=depth)

    def table(self, level: int = 0) -> np.ndarray:
        if level > self.depth:
            raise UnsupportedFactor(
                f"tabulated factor {self.name!r} differentiated beyond depth {self.depth}")
        vals = np.asarray(self.values, dtype=complex)
        for _ in range(level):
            padded = np.pad(vals, 1)
            vals = (padded[2:] - padded[:-2]) / 2.0
        return vals

    def eval_int(self, k: np.ndarray, level: int = 0) -> np.ndarray:
        vals = self.table(level)
        k = np.asarray(k)
        out = np.zeros(k.shape, dtype=complex)
        inside = np.abs(k) <= self.reach
        out[inside] = vals[k[inside] + self.reach]
        return out

    def key(self) -> tuple:
        return ("tab", self.name, self.reach, self.values)


@dataclass(frozen=True)
class XiAtom:
    """coef * xi^beta * prod_i (|xi|^2 + c_i)^{s_i} [* tabulated profile].

    c_i >= 0; c_i = 0 encodes the pure homogeneous power |xi|^{2 s_i} that
    arises in leading parts.  The family is closed under d/dxi.
    """

    coef: complex
    beta: tuple[int, ...]
    powers: tuple[tuple[float, float], ...] = ()  # sorted (c, s), s != 0
    tab: TabProfile | None = None
    tab_level: int = 0

    def __post_init__(self):
        merged: dict[float, float] = {}
        for c, s in self.powers:
            if c < 0:
                raise ValueError("shifted powers need c >= 0")
            merged[float(c)] = merged.get(float(c), 0.0) + float(s)
        canon = tuple(sorted((c, s) for c, s in merged.items() if s != 0))
        object.__setattr__(self, "powers", canon)
        object.__setattr__(self, "coef", complex(self.coef))
        object.__setattr__(self, "beta", tuple(int(b) for b in self.beta))

    @property
    def n(self) -> int:
        return len(self.beta)

    def order(self) -> float:
        if self.coef == 0:
            return NEG_INF
        if self.tab is not None:
            return NEG_INF
        return sum(self.beta) + 2.0 * sum(s for _, s in self.powers)

    def key(self) -> tuple:
        return (self.beta, self.powers,
                self.tab.key() if self.tab is not None else None, self.tab_level)

    def mul(self, other: "XiAtom") -> "XiAtom":
        if self.tab is not None and other.tab is not None:
            raise UnsupportedFactor("cannot multiply two tabulated factors")
        tab = self.tab or other.tab
        level = self.tab_level if self.tab is not None else other.tab_level
        return XiAtom(self.coef * other.coef,
                      tuple(a + b for a, b in zip(self.beta, other.beta)),
                      self.powers + other.powers, tab, level)

    def dxi(self, coord: int) -> list["XiAtom"]:
        """Plain d/dxi_coord, as a list of atoms."""
        out: list[XiAtom] = []
        if self.beta[coord] > 0:
            beta = list(self.beta)
            beta[coord] -= 1
            out.append(XiAtom(self.coef * self.beta[coord], tuple(beta),
                              self.powers, self.tab, self.tab_level))
        for i, (c, s) in enumerate(self.powers):
            # d/dxi (|xi|^2+c)^s = 2 s xi_coord (|xi|^2+c)^(s-1)
            beta = list(self.beta)
            beta[coord] += 1
            powers = list(self.powers)
            powers[i] = (c, s - 1.0)
            out.append(XiAtom(self.coef * 2.0 * s, tuple(beta),
                              tuple(powers), self.tab, self.tab_level))
        if self.tab is not None:
            if self.n != 1:
                raise UnsupportedFactor("tabulated factors are 1-d only")
            if self.tab_level + 1 > self.tab.depth:
                raise UnsupportedFactor(
                    f"tabulated factor {self.tab.name!r} differentiated beyond "
                    f"stored depth {self.tab.depth}")
            out.append(XiAtom(self.coef, self.beta, self.powers,
                              self.tab, self.tab_level + 1))
        return out

    def eval(self, xi: np.ndarray, lattice: bool = False) -> np.ndarray:
        """Evaluate on covectors; xi has shape (..., n).

        Tabulated profiles require integer covectors.
        """
        xi = np.asarray(xi, dtype=float)
        out = np.full(xi.shape[:-1], self.coef, dtype=complex)
        for coord in range(self.n):
            if self.beta[coord]:
                out = out * xi[..., coord] ** self.beta[coord]
        if self.powers:
            sq = np.sum(xi * xi, axis=-1)
            for c, s in self.powers:
                base = sq + c
                if c == 0:
                    with np.errstate(divide="raise"):
                        out = out * np.power(base, s)
                else:
                    out = out * np.power(base, s)
        if self.tab is not None:
            ki = np.rint(xi[..., 0]).astype(int)
            if not lattice and np.max(np.abs(xi[..., 0] - ki)) > 1e-9:
                raise UnsupportedFactor(
                    "tabulated factors evaluate on integer covectors only")
            out = out * self.tab.eval_int(ki, self.tab_level)
        return out

    def leading(self) -> "XiAtom":
        """Homogeneous leading part; tabulated atoms have none."""
        if self.tab is not None:
            raise UnsupportedFactor("tabulated factor has no homogeneous leading part")
        powers = tuple((0.0, s) for c, s in self.powers)
        return XiAtom(self.coef, self.beta, powers, None, 0)

    def reciprocal(self) -> "XiAtom":
        if self.tab is not None or any(self.beta):
            raise UnsupportedFactor("reciprocal leaves the factor family")
        return XiAtom(1.0 / self.coef, self.beta,
                      tuple((c, -s) for c, s in self.powers))

    def has_lattice_pole(self) -> bool:
        return any(c == 0 and s < 0 for c, s in self.powers)

    def homogeneity(self) -> tuple[float, int]:
        """(degree, parity) of the homogeneous atom, for n = 1 comparisons."""
        deg = self.order()
        parity = self.beta[0] % 2 if self.n == 1 else -1
        return (deg, parity)


def _merge_atoms(atoms: Iterable[XiAtom]) -> tuple[XiAtom, ...]:
    merged: dict[tuple, XiAtom] = {}
    for a in atoms:
        if a.coef == 0:
            continue
        k = a.key()
        if k in merged:
            prev = merged[k]
            coef = prev.coef + a.coef
            if coef == 0:
                del merged[k]
            else:
                merged[k] = XiAtom(coef, a.beta, a.powers, a.tab, a.tab_level)
        else:
            merged[k] = a
    return tuple(sorted(merged.values(), key=lambda a: _sortable(a.key())))


@dataclass(frozen=True)
class XiFactor:
    """A finite sum of XiAtoms living on one covector slot (R^n)."""

    n: int
    atoms: tuple[XiAtom, ...]

    def __post_init__(self):
        for a in self.atoms:
            if a.n != self.n:
                raise ValueError("atom dimension mismatch")
        object.__setattr__(self, "atoms", _merge_atoms(self.atoms))

    # -- constructors ----------------------------------------------------

    @staticmethod
    def constant(c: complex, n: int = 1) -> "XiFactor":
        return XiFactor(n, (XiAtom(c, (0,) * n),))

    @staticmethod
    def one(n: int = 1) -> "XiFactor":
        return XiFactor.constant(1.0, n)

    @staticmethod
    def monomial(beta: Sequence[int] | int, coef: complex = 1.0) -> "XiFactor":
        beta = (beta,) if isinstance(beta, int) else tuple(beta)
        return XiFactor(len(beta), (XiAtom(coef, beta),))

    @staticmethod
    def bracket_power(s: float, n: int = 1) -> "XiFactor":
        """<xi>^s = (1 + |xi|^2)^(s/2)."""
        return XiFactor(n, (XiAtom(1.0, (0,) * n, ((1.0, s / 2.0),)),))

    @staticmethod
    def shifted_power(c: float, s: float, n: int = 1) -> "XiFactor":
        """(|xi|^2 + c)^s with c > 0 (c = 0 allowed for homogeneous parts)."""
        return XiFactor(n, (XiAtom(1.0, (0,) * n, ((float(c), float(s)),)),))

    @staticmethod
    def tabulated(profile: TabProfile) -> "XiFactor":
        return XiFactor(profile.n, (XiAtom(1.0, (0,) * profile.n, (), profile),))

    # -- queries ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.atoms

    def is_constant(self) -> bool:
        return all(a.order() == 0 and not a.powers and a.tab is None for a in self.atoms)

    def constant_value(self) -> complex:
        return sum((a.coef for a in self.atoms if not any(a.beta)
                    and not a.powers and a.tab is None), 0j)

    def is_monomial_class(self) -> bool:
        """True if every atom is a plain monomial (differential class)."""
        return all(not a.powers and a.tab is None for a in self.atoms)

    def has_tab(self) -> bool:
        return any(a.tab is not None for a in self.atoms)

    def order(self) -> float:
        return max((a.order() for a in self.atoms), default=NEG_INF)

    def xi_derivative_depth(self) -> float:
        """Number of xi-derivatives after which the factor vanishes (inf if never)."""
        if self.is_zero():
            return 0
        if self.is_monomial_class():
            return max(sum(a.beta) for a in self.atoms) + 1
        return math.inf

    def key(self) -> tuple:
        return tuple(((a.key(), a.coef) for a in self.atoms))

    def structure_key(self) -> tuple:
        return tuple(a.key() for a in self.atoms)

    # -- algebra ----------------------------------------------------------

    def __add__(self, other: "XiFactor") -> "XiFactor":
        return XiFactor(self.n, self.atoms + other.atoms)

    def scale(self, c: complex) -> "XiFactor":
        return XiFactor(self.n, tuple(
            XiAtom(c * a.coef, a.beta, a.powers, a.tab, a.tab_level) for a in self.atoms))

    def __mul__(self, other: "XiFactor") -> "XiFactor":
        atoms = []
        for a in self.atoms:
            for b in other.atoms:
                atoms.append(a.mul(b))
        return XiFactor(self.n, tuple(atoms))

    def dxi(self, coord: int = 0) -> "XiFactor":
        atoms: list[XiAtom] = []
        for a in self.atoms:
            atoms.extend(a.dxi(coord))
        return XiFactor(self.n, tuple(atoms))

    def eval(self, xi, lattice: bool = False) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if xi.ndim == 0 or xi.shape[-1] != self.n:
            xi = xi.reshape(xi.shape + (1,)) if self.n == 1 else xi
        total = np.zeros(xi.shape[:-1], dtype=complex)
        for a in self.atoms:
            total = total + a.eval(xi, lattice=lattice)
        return total

    def lattice_values(self, ks: np.ndarray) -> np.ndarray:
        """Evaluate on integer covectors (n = 1: ks is an int array)."""
        if self.n != 1:
            raise UnsupportedFactor("lattice evaluation is 1-d here")
        if any(a.has_lattice_pole() for a in self.atoms) and np.any(ks == 0):
            raise UnsupportedFactor("factor has a pole at the lattice origin")
        xi = np.asarray(ks, dtype=float)[..., None]
        return self.eval(xi, lattice=True)

    def leading_part(self) -> "XiFactor":
        """Sum of leading parts of the atoms attaining the top order."""
        top = self.order()
        if top == NEG_INF:
            return XiFactor(self.n, ())
        atoms = [a.leading() for a in self.atoms if a.order() == top]
        return XiFactor(self.n, tuple(atoms))

    def as_single_atom(self) -> XiAtom | None:
        """Recognize the factor as one atom, folding n=1 binomials.

        Returns None when the sum is not expressible as a single atom; this
        is what decides membership of the reciprocal in the family.
        """
        if len(self.atoms) == 1:
            return self.atoms[0]
        if self.n != 1 or not self.is_monomial_class():
            return None
        # try a * (xi^2 + c)^m against the monomial coefficients
        degs = {a.beta[0]: a.coef for a in self.atoms}
        top = max(degs)
        if top % 2 or any(d % 2 for d in degs):
            return None
        m = top // 2
        lead = degs[top]
        const = degs.get(0, 0.0)
        if m == 0 or lead == 0 or const == 0:
            return None
        c = (const / lead) ** (1.0 / m)
        if abs(c.imag if isinstance(c, complex) else 0.0) > 1e-12:
            return None
        c = float(np.real(c))
        if c <= 0:
            return None
        for d in range(0, top + 2, 2):
            i = d // 2
            expect = lead * math.comb(m, i) * c ** (m - i)
            if abs(degs.get(d, 0.0) - expect) > 1e-12 * max(1.0, abs(expect)):
                return None
        return XiAtom(lead, (0,), ((c, float(m)),))

    def __str__(self) -> str:
        if not self.atoms:
            return "0"
        bits = []
        for a in self.atoms:
            s = f"{a.coef:.6g}"
            for coord, b in enumerate(a.beta):
                if b:
                    v = f"xi_{coord}" if self.n > 1 else "xi"
                    s += f"*{v}^{b}" if b != 1 else f"*{v}"
            for c, p in a.powers:
                s += f"*(|xi|^2+{c:g})^{p:g}"
            if a.tab is not None:
                s += f"*{a.tab.name}" + ("'" * a.tab_level)
            bits.append(s)
        return " + ".join(bits)


# ---------------------------------------------------------------------------
# bi-graded symbols
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BiSymbol:
    """Finite sum of terms coefficient(x) * f1(xi1) * f2(xi2)."""

    dims: tuple[int, int]
    terms: tuple[tuple[TrigPoly, XiFactor, XiFactor], ...]
    declared_order: BiOrder = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        n1, n2 = self.dims
        kept = []
        for coeff, f1, f2 in self.terms:
            if coeff.dims != self.dims or f1.n != n1 or f2.n != n2:
                raise ValueError("term dimension mismatch")
            if coeff.is_zero() or f1.is_zero() or f2.is_zero():
                continue
            kept.append((coeff, f1, f2))
        object.__setattr__(self, "terms", tuple(kept))
        computed = self._computed_order()
        if self.declared_order is None:
            object.__setattr__(self, "declared_order", computed)
        elif not self.declared_order.dominates(computed):
            raise ValueError(
                f"declared order {self.declared_order} does not dominate {computed}")

    # -- constructors ----------------------------------------------------

    @staticmethod
    def zero(dims: tuple[int, int] = (1, 1)) -> "BiSymbol":
        return BiSymbol(dims, ())

    @staticmethod
    def constant(value: complex, dims: tuple[int, int] = (1, 1)) -> "BiSymbol":
        n1, n2 = dims
        return BiSymbol(dims, ((TrigPoly.constant(value, dims),
                                XiFactor.one(n1), XiFactor.one(n2)),))

    @staticmethod
    def from_factors(f1: XiFactor, f2: XiFactor, coeff: TrigPoly | None = None,
                     dims: tuple[int, int] = (1, 1)) -> "BiSymbol":
        coeff = coeff if coeff is not None else TrigPoly.constant(1.0, dims)
        return BiSymbol(dims, ((coeff, f1, f2),))

    # -- structure -------------------------------------------------------

    def _computed_order(self) -> BiOrder:
        out = BOTTOM_ORDER
        for _, f1, f2 in self.terms:
            out = out.join(BiOrder(f1.order(), f2.order()))
        return out

    def bi_order(self) -> BiOrder:
        """Least componentwise order dominating every term."""
        return self._computed_order()

    @property
    def class_tag(self) -> str:
        if all(f1.is_monomial_class() and f2.is_monomial_class()
               for _, f1, f2 in self.terms):
            return "differential"
        if all(c.is_constant() for c, _, _ in self.terms):
            return "multiplier"
        return "mixed"

    def is_zero(self) -> bool:
        return not self.normalized().terms

    def is_x_independent(self) -> bool:
        return all(c.is_constant() for c, _, _ in self.terms)

    def coefficient_bandwidth(self, slot: int | None = None) -> int:
        return max((c.bandwidth(slot) for c, _, _ in self.terms), default=0)

    def has_tab(self, slot: int | None = None) -> bool:
        for _, f1, f2 in self.terms:
            if slot in (None, 1) and f1.has_tab():
                return True
            if slot in (None, 2) and f2.has_tab():
                return True
        return False

    def normalized(self) -> "BiSymbol":
        """Merge terms sharing the same factor pair; canonical term order."""
        merged: dict[tuple, tuple[TrigPoly, XiFactor, XiFactor]] = {}
        for coeff, f1, f2 in self.terms:
            # fold the scalar weight of each factor into the coefficient so
            # structurally equal factors merge regardless of scaling
            scale = 1.0 + 0j
            c1 = f1.atoms[0].coef
            if c1 != 1:
                f1 = f1.scale(1.0 / c1)
                scale *= c1
            c2 = f2.atoms[0].coef
            if c2 != 1:
                f2 = f2.scale(1.0 / c2)
                scale *= c2
            k = (f1.structure_key(), f2.structure_key(),
                 _sortable(tuple(a.coef for a in f1.atoms)),
                 _sortable(tuple(a.coef for a in f2.atoms)))
            coeff = coeff.scale(scale)
            if k in merged:
                prev = merged[k]
                merged[k] = (prev[0] + coeff, f1, f2)
            else:
                merged[k] = (coeff, f1, f2)
        kept = tuple(sorted((t for t in merged.values() if not t[0].is_zero()),
                            key=lambda t: _sortable((t[1].key(), t[2].key(), t[0].key()))))
        return BiSymbol(self.dims, kept)

    def equals(self, other: "BiSymbol") -> bool:
        """Exact equality of normalized symbols."""
        a, b = self.normalized(), other.normalized()
        if len(a.terms) != len(b.terms):
            return False
        for (ca, f1a, f2a), (cb, f1b, f2b) in zip(a.terms, b.terms):
            if ca.coeffs != cb.coeffs:
                return False
            if f1a.key() != f1b.key() or f2a.key() != f2b.key():
                return False
        return True

    # -- algebra ----------------------------------------------------------

    def __add__(self, other: "BiSymbol") -> "BiSymbol":
        if self.dims != other.dims:
            raise ValueError("dimension mismatch")
        return BiSymbol(self.dims, self.terms + other.terms).normalized()

    def __neg__(self) -> "BiSymbol":
        return self.scale(-1.0)

    def __sub__(self, other: "BiSymbol") -> "BiSymbol":
        return self + (-other)

    def scale(self, c: complex) -> "BiSymbol":
        return BiSymbol(self.dims, tuple((coeff.scale(c), f1, f2)
                                         for coeff, f1, f2 in self.terms))

    def __mul__(self, other: "BiSymbol") -> "BiSymbol":
        if self.dims != other.dims:
            raise ValueError("dimension mismatch")
        terms = []
        for ca, f1a, f2a in self.terms:
            for cb, f1b, f2b in other.terms:
                terms.append((ca * cb, f1a * f1b, f2a * f2b))
        return BiSymbol(self.dims, tuple(terms)).normalized()

    def eval(self, x1, x2, xi1, xi2) -> complex:
        """Pointwise value; x on the torus, xi real covectors."""
        x1 = (x1,) if np.isscalar(x1) else tuple(x1)
        x2 = (x2,) if np.isscalar(x2) else tuple(x2)
        xi1 = np.atleast_1d(np.asarray(xi1, dtype=float))
        xi2 = np.atleast_1d(np.asarray(xi2, dtype=float))
        total = 0j
        for coeff, f1, f2 in self.terms:
            total += (coeff.eval(x1, x2)
                      * f1.eval(xi1[None, :])[0] * f2.eval(xi2[None, :])[0])
        return complex(total)

    def derivative(self, kind: str, alpha: Sequence[int] | int = 1,
                   plain: bool = False) -> "BiSymbol":
        """Exact symbolic derivative.

        kind is one of xi1, xi2, x1, x2; alpha is a multi-index for that
        slot (an int means a power of the single coordinate).  x-derivatives
        use D = -i d/dx unless plain=True.
        """
        if kind not in ("xi1", "xi2", "x1", "x2"):
            raise ValueError(f"unknown derivative kind {kind!r}")
        slot = 1 if kind.endswith("1") else 2
        n = self.dims[slot - 1]
        alpha = (alpha,) + (0,) * (n - 1) if isinstance(alpha, int) else tuple(alpha)
        if len(alpha) != n:
            raise ValueError("multi-index length mismatch")
        out = self
        for coord, reps in enumerate(alpha):
            for _ in range(reps):
                out = out._derive_once(kind, coord, plain)
        return out

    def _derive_once(self, kind: str, coord: int, plain: bool) -> "BiSymbol":
        terms = []
        for coeff, f1, f2 in self.terms:
            if kind == "xi1":
                terms.append((coeff, f1.dxi(coord), f2))
            elif kind == "xi2":
                terms.append((coeff, f1, f2.dxi(coord)))
            elif kind == "x1":
                terms.append((coeff.derivative(1, coord, plain), f1, f2))
            else:
                terms.append((coeff.derivative(2, coord, plain), f1, f2))
        return BiSymbol(self.dims, tuple(terms)).normalized()

    def poisson_bracket(self, other: "BiSymbol", j: int) -> "BiSymbol":
        """{a,b}_j = sum_l (d_xi_l a * d_x_l b - d_x_l a * d_xi_l b) in slot j.

        Plain derivatives throughout.
        """
        if j not in (1, 2):
            raise ValueError("slot must be 1 or 2")
        xik, xk = (f"xi{j}", f"x{j}")
        n = self.dims[j - 1]
        out = BiSymbol.zero(self.dims)
        for coord in range(n):
            e = tuple(1 if i == coord else 0 for i in range(n))
            out = out + (self.derivative(xik, e) * other.derivative(xk, e, plain=True)
                         - self.derivative(xk, e, plain=True) * other.derivative(xik, e))
        return out.normalized()

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"[{c}]*({f1})*({f2})" for c, f1, f2 in self.terms)


# ---------------------------------------------------------------------------
# numeric verification of the defining estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleSpec:
    """Sampling plan for the symbol-estimate check.

    Covector samples are integers, log-spaced per sign up to 2**max_exponent,
    so tabulated factors can participate.
    """

    x_points: int = 8
    max_exponent: int = 10
    samples_per_octave: int = 2
    derivative_depth: int = 2
    trend_factor: float = 1.1

    def xi_samples(self) -> np.ndarray:
        mags: list[int] = [0]
        k = 1.0
        while k <= 2 ** self.max_exponent:
            mags.append(int(round(k)))
            k *= 2 ** (1.0 / self.samples_per_octave)
        mags = sorted(set(mags))
        return np.array([-m for m in mags[1:][::-1]] + mags, dtype=int)


@dataclass
class EstimateReport:
    passed: bool
    worst_ratio: float
    claimed: BiOrder
    failures: list[str]
    band_trends: dict[str, float]


def _bracket(v: np.ndarray) -> np.ndarray:
    return np.sqrt(1.0 + v * v)


def estimate_check_fn(deriv_fn: Callable[[int, int, int, int], Callable],
                      claimed: BiOrder, spec: SampleSpec = SampleSpec(),
                      dims: tuple[int, int] = (1, 1)) -> EstimateReport:
    """Core estimate check against |D^a_xi D^b_x a| <= C <xi1>^(m1-a1) <xi2>^(m2-a2).

    ``deriv_fn(a1, a2, b1, b2)`` returns a vectorized evaluator
    ``f(x1, x2, XI1, XI2) -> values`` for the corresponding derivative.
    Passing means the worst ratio shows no residual growth across the two
    largest dyadic bands (factor <= trend_factor) in either slot.
    """
    if dims != (1, 1):
        raise NotImplementedError("estimate sampling is wired for n1 = n2 = 1")
    xs = np.linspace(0.0, 2 * np.pi, spec.x_points, endpoint=False)
    kline = spec.xi_samples().astype(float)
    XI1, XI2 = np.meshgrid(kline, kline, indexing="ij")
    W1, W2 = _bracket(XI1), _bracket(XI2)
    band1 = np.floor(np.log2(np.maximum(np.abs(XI1), 1.0))).astype(int)
    band2 = np.floor(np.log2(np.maximum(np.abs(XI2), 1.0))).astype(int)

    worst = 0.0
    failures: list[str] = []
    trends: dict[str, float] = {}
    depth = spec.derivative_depth
    for a1 in range(depth + 1):
        for a2 in range(depth + 1):
            for b1 in range(depth + 1):
                for b2 in range(depth + 1):
                    f = deriv_fn(a1, a2, b1, b2)
                    w = W1 ** (claimed.m1 - a1) * W2 ** (claimed.m2 - a2)
                    ratio = None
                    for x1 in xs:
                        for x2 in xs:
                            vals = np.abs(f(x1, x2, XI1, XI2)) / w
                            ratio = vals if ratio is None else np.maximum(ratio, vals)
                    worst = max(worst, float(np.max(ratio)))
                    label = f"a=({a1},{a2}) b=({b1},{b2})"
                    for slot, band in ((1, band1), (2, band2)):
                        top = band.max()
                        hi = float(np.max(ratio[band == top]))
                        lo = float(np.max(ratio[band == top - 1]))
                        trend = hi / lo if lo > 0 else (math.inf if hi > 0 else 1.0)
                        trends[f"{label} slot{slot}"] = trend
                        if trend > spec.trend_factor:
                            failures.append(f"{label} slot{slot} trend {trend:.3f}")
    return EstimateReport(not failures, worst, claimed, failures, trends)


def estimate_check(a: BiSymbol, claimed: BiOrder,
                   spec: SampleSpec = SampleSpec()) -> EstimateReport:
    """Numerically verify the defining bi-graded estimate for a symbol."""
    cache: dict[tuple[int, int, int, int], BiSymbol] = {}

    def deriv_fn(a1: int, a2: int, b1: int, b2: int):
        key = (a1, a2, b1, b2)
        if key not in cache:
            d = a.derivative("xi1", a1).derivative("xi2", a2)
            d = d.derivative("x1", b1).derivative("x2", b2)
            cache[key] = d
        d = cache[key]

        def f(x1, x2, XI1, XI2):
            out = np.zeros(XI1.shape, dtype=complex)
            for coeff, f1, f2 in d.terms:
                cval = coeff.eval((x1,), (x2,))
                out += cval * f1.eval(XI1[..., None]) * f2.eval(XI2[..., None])
            return out

        return f

    return estimate_check_fn(deriv_fn, claimed, spec, a.dims)
