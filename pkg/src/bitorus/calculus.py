"""Principal-symbol triples, composition expansions, bi-ellipticity and
characteristic sets for bi-graded symbols.

The composition of two operators with symbols a, b (left quantization) has
the exact Leibniz symbol  sum_{a1,a2} 1/(a1! a2!) d_xi^(a1,a2) a * D_x^(a1,a2) b.
The expansion below regroups that sum into levels j with three blocks:
c12_j collects the indices with |a1| = |a2| = j, c1_j those with |a2| = j and
|a1| > j (one extra order drop in slot 1), c2_j the mirror image.  For
differential symbols the regrouping is finite and sums to the exact
composition symbol; otherwise the expansion is truncated at a requested
depth and the remainder order is reported.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .grammar import parse_symbol
from .symbols import (
    BOTTOM_ORDER,
    NEG_INF,
    BiOrder,
    BiSymbol,
    TrigPoly,
    XiFactor,
    _factorial_mi,
    _multi_indices,
)

__all__ = [
    "NotClassical",
    "NotInvertible",
    "OutsideFamily",
    "TruncationNeeded",
    "PrincipalTriple",
    "CompositionExpansion",
    "ConditionReport",
    "BiellReport",
    "RegionDescriptor",
    "CharReport",
    "principal_triple",
    "bihomogeneous_component",
    "compose",
    "commutator",
    "commutator_bracket_residual",
    "is_bielliptic",
    "char_sets",
    "exact_tensor_inverse",
    "MODEL_OPERATORS",
    "model_operator",
    "render_table1",
    "render_table2",
    "K_CHECK",
    "EXPONENT_FIT_TOL",
]


class NotClassical(Exception):
    """The symbol has no homogeneous leading part in the requested slot."""


class NotInvertible(Exception):
    """A multiplier factor vanishes somewhere on the integer lattice."""


class OutsideFamily(Exception):
    """The requested reciprocal is not representable in the factor family."""


class TruncationNeeded(UserWarning):
    """Non-differential inputs: the expansion was truncated at finite depth."""


K_CHECK = 64
EXPONENT_FIT_TOL = 0.1


# ---------------------------------------------------------------------------
# principal symbols
# ---------------------------------------------------------------------------


def _slot_leading(a: BiSymbol, slot: int, degree: float) -> BiSymbol:
    """Terms attaining the given order in one slot, that slot leading-ized."""
    if degree == NEG_INF:
        return BiSymbol.zero(a.dims)
    terms = []
    for coeff, f1, f2 in a.terms:
        f = f1 if slot == 1 else f2
        if f.order() == degree:
            lead = f.leading_part()
            terms.append((coeff, lead, f2) if slot == 1 else (coeff, f1, lead))
    return BiSymbol(a.dims, tuple(terms)).normalized()


def bihomogeneous_component(a: BiSymbol, i: float, j: float) -> BiSymbol:
    """The (i, j)-bihomogeneous component of the leading expansion."""
    terms = []
    for coeff, f1, f2 in a.terms:
        if f1.order() == i and f2.order() == j:
            terms.append((coeff, f1.leading_part(), f2.leading_part()))
    return BiSymbol(a.dims, tuple(terms)).normalized()


@dataclass(frozen=True)
class PrincipalTriple:
    """(sigma1, sigma2, sigma12) with the shared doubly-leading part.

    sigma1 evaluated at a fixed (x1, xi1-direction) is the factor-2
    operator symbol of the leading slot-1 part; sigma2 mirrors it; sigma12
    is the scalar bihomogeneous part of bi-degree ``order``.
    """

    order: BiOrder
    sigma1: BiSymbol
    sigma2: BiSymbol
    sigma12: BiSymbol

    def compatibility_holds(self) -> bool:
        lead_of_1 = _slot_leading(self.sigma1, 2, self.order.m2)
        lead_of_2 = _slot_leading(self.sigma2, 1, self.order.m1)
        return lead_of_1.equals(self.sigma12) and lead_of_2.equals(self.sigma12)


def principal_triple(a: BiSymbol) -> PrincipalTriple:
    """Extract the homogeneous principal triple of a classical symbol.

    Raises NotClassical when a slot's declared order is finite but only
    tabulated (rapid-decay) factors live there, so no homogeneous leading
    part exists at that order.
    """
    a = a.normalized()
    order = a.bi_order()
    for slot in (1, 2):
        declared = a.declared_order.m1 if slot == 1 else a.declared_order.m2
        computed = order.m1 if slot == 1 else order.m2
        if declared != NEG_INF and computed == NEG_INF and a.has_tab(slot):
            raise NotClassical(
                f"slot {slot} carries only rapid-decay factors; no homogeneous "
                f"part exists at claimed order {declared}")
    sigma1 = _slot_leading(a, 1, order.m1)
    sigma2 = _slot_leading(a, 2, order.m2)
    sigma12 = bihomogeneous_component(a, order.m1, order.m2)
    return PrincipalTriple(order, sigma1, sigma2, sigma12)


# ---------------------------------------------------------------------------
# composition and commutator expansions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompositionLevel:
    c1: BiSymbol
    c2: BiSymbol
    c12: BiSymbol


@dataclass(frozen=True)
class CompositionExpansion:
    levels: tuple[CompositionLevel, ...]
    total: BiSymbol
    J: int
    terminated: bool
    remainder_order: BiOrder

    def level(self, j: int) -> CompositionLevel:
        if j < len(self.levels):
            return self.levels[j]
        z = BiSymbol.zero(self.total.dims)
        return CompositionLevel(z, z, z)


def _xi_depth(a: BiSymbol, slot: int) -> float:
    """Smallest d such that d xi-derivatives in the slot annihilate a."""
    depth = 0.0
    for _, f1, f2 in a.terms:
        f = f1 if slot == 1 else f2
        depth = max(depth, f.xi_derivative_depth())
    return depth


def _x_depth(b: BiSymbol, slot: int) -> float:
    """Smallest d such that d x-derivatives in the slot annihilate b."""
    return 1.0 if b.coefficient_bandwidth(slot) == 0 else math.inf


def compose(a: BiSymbol, b: BiSymbol, J: int | None = None) -> CompositionExpansion:
    """Composition expansion of Op(a) ∘ Op(b), grouped into c1/c2/c12 blocks.

    For differential (or otherwise finitely expanding) inputs the result is
    exact and ``total`` equals the full Leibniz composition symbol.  For
    non-terminating inputs the sum is truncated at derivative depth J per
    slot (default 4) and a TruncationNeeded warning is emitted; the dropped
    tail lies one full level below ``remainder_order`` in the level order.
    """
    if a.dims != b.dims:
        raise ValueError("dimension mismatch")
    n1, n2 = a.dims
    cap1 = min(_xi_depth(a, 1), _x_depth(b, 1))
    cap2 = min(_xi_depth(a, 2), _x_depth(b, 2))
    terminated = math.isfinite(cap1) and math.isfinite(cap2)
    if not terminated:
        if J is None:
            J = 4
        warnings.warn("composition expansion truncated at depth "
                      f"J={J}; inputs do not terminate", TruncationNeeded)
        d1 = int(min(cap1, J + 1))
        d2 = int(min(cap2, J + 1))
    else:
        d1, d2 = int(cap1), int(cap2)
        if J is not None:
            d1, d2 = min(d1, J + 1), min(d2, J + 1)

    da: dict[tuple, BiSymbol] = {}
    db: dict[tuple, BiSymbol] = {}

    def deriv_a(a1: tuple[int, ...], a2: tuple[int, ...]) -> BiSymbol:
        key = (a1, a2)
        if key not in da:
            da[key] = a.derivative("xi1", a1).derivative("xi2", a2)
        return da[key]

    def deriv_b(a1: tuple[int, ...], a2: tuple[int, ...]) -> BiSymbol:
        key = (a1, a2)
        if key not in db:
            db[key] = b.derivative("x1", a1).derivative("x2", a2)
        return db[key]

    def t_term(a1: tuple[int, ...], a2: tuple[int, ...]) -> BiSymbol:
        fa = deriv_a(a1, a2)
        if fa.is_zero():
            return fa
        fb = deriv_b(a1, a2)
        if fb.is_zero():
            return fb
        return (fa * fb).scale(1.0 / (_factorial_mi(a1) * _factorial_mi(a2)))

    zero = BiSymbol.zero(a.dims)
    max_level = max(d1, d2) - 1 if max(d1, d2) > 0 else 0
    levels: list[CompositionLevel] = []
    total = zero
    for j in range(max_level + 1):
        c1 = c2 = c12 = zero
        for a2t in (_multi_indices(n2, j) if j < d2 else []):
            for k1 in range(j + 1, d1):
                for a1t in _multi_indices(n1, k1):
                    c1 = c1 + t_term(a1t, a2t)
        for a1t in (_multi_indices(n1, j) if j < d1 else []):
            for k2 in range(j + 1, d2):
                for a2t in _multi_indices(n2, k2):
                    c2 = c2 + t_term(a1t, a2t)
        if j < d1 and j < d2:
            for a1t in _multi_indices(n1, j):
                for a2t in _multi_indices(n2, j):
                    c12 = c12 + t_term(a1t, a2t)
        levels.append(CompositionLevel(c1, c2, c12))
        total = total + c1 + c2 + c12
    J_used = max_level
    if terminated:
        remainder = BOTTOM_ORDER
    else:
        base = a.bi_order() + b.bi_order()
        remainder = base.shifted(-(J_used + 1), -(J_used + 1))
    return CompositionExpansion(tuple(levels), total.normalized(), J_used,
                                terminated, remainder)


def commutator(a: BiSymbol, b: BiSymbol, J: int | None = None) -> CompositionExpansion:
    """Expansion of [A, B] = AB - BA, blockwise difference of compositions.

    The level-0 c12 block cancels exactly; the remaining level-0 blocks
    equal -i({a,b}_1 + {a,b}_2) modulo terms two orders down (slotwise).
    """
    ab = compose(a, b, J)
    ba = compose(b, a, J)
    nlev = max(len(ab.levels), len(ba.levels))
    zero = BiSymbol.zero(a.dims)
    levels = []
    for j in range(nlev):
        la, lb = ab.level(j), ba.level(j)
        levels.append(CompositionLevel(la.c1 - lb.c1, la.c2 - lb.c2,
                                       la.c12 - lb.c12))
    total = (ab.total - ba.total).normalized()
    if not levels[0].c12.is_zero():
        raise AssertionError("commutator level-0 c12 block must vanish exactly")
    remainder = (BOTTOM_ORDER if ab.terminated and ba.terminated
                 else ab.remainder_order.join(ba.remainder_order))
    return CompositionExpansion(tuple(levels), total, max(ab.J, ba.J),
                                ab.terminated and ba.terminated, remainder)


def commutator_bracket_residual(a: BiSymbol, b: BiSymbol,
                                J: int | None = None) -> BiSymbol:
    """Level-0 commutator blocks minus -i({a,b}_1 + {a,b}_2).

    The residual sits two orders below a.bi_order() + b.bi_order() in one
    slot (per term), which the calculus tests assert.
    """
    comm = commutator(a, b, J)
    j0 = comm.level(0)
    bracket = (a.poisson_bracket(b, 1) + a.poisson_bracket(b, 2)).scale(-1j)
    return ((j0.c1 + j0.c2 + j0.c12) - bracket).normalized()


# ---------------------------------------------------------------------------
# bi-ellipticity and characteristic sets
# ---------------------------------------------------------------------------


@dataclass
class ConditionReport:
    passed: bool
    details: dict


@dataclass
class BiellReport:
    verdict: bool | None  # None = unsupported-heuristic
    order: BiOrder
    cond_i: ConditionReport
    cond_ii: ConditionReport
    cond_iii: ConditionReport
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "bi_order": list(self.order.as_tuple()),
            "cond_i": {"passed": self.cond_i.passed, **self.cond_i.details},
            "cond_ii": {"passed": self.cond_ii.passed, **self.cond_ii.details},
            "cond_iii": {"passed": self.cond_iii.passed, **self.cond_iii.details},
            "notes": self.notes,
        }


@dataclass
class RegionDescriptor:
    """One characteristic-set component: empty, full, or explicit flags."""

    kind: str  # empty | full | flags
    flags: list[tuple] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_empty(self) -> bool:
        return self.kind == "empty"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "flags": [list(f) for f in self.flags],
                "diagnostics": self.diagnostics}


@dataclass
class CharReport:
    char1: RegionDescriptor
    char2: RegionDescriptor
    char12: RegionDescriptor
    reading: str
    notes: list[str] = field(default_factory=list)

    def all_empty(self) -> bool:
        return self.char1.is_empty and self.char2.is_empty and self.char12.is_empty

    def to_dict(self) -> dict:
        return {"char1": self.char1.to_dict(), "char2": self.char2.to_dict(),
                "char12": self.char12.to_dict(), "reading": self.reading,
                "notes": self.notes}


def _tensor_split(sym: BiSymbol, probe_slot: int):
    """Factor sym as (probe-slot factor) x (multiplier on the other slot).

    Returns (probe: XiFactor, mult: XiFactor) or None when the symbol does
    not factor; constants are folded into the multiplier factor.
    """
    sym = sym.normalized()
    if sym.dims != (1, 1):
        raise NotImplementedError("verdict class is wired for n1 = n2 = 1")
    if not sym.terms:
        return None
    parts = []
    for coeff, f1, f2 in sym.terms:
        if not coeff.is_constant():
            return None
        c = coeff.constant_value()
        probe, op = (f1, f2) if probe_slot == 1 else (f2, f1)
        parts.append((c, probe, op))
    c0, probe0, op0 = parts[0]
    if all(p.key() == probe0.key() for _, p, _ in parts):
        mult = XiFactor(op0.n, ())
        for c, _, op in parts:
            mult = mult + op.scale(c)
        return probe0, mult
    if all(op.key() == op0.key() for _, _, op in parts):
        probe = XiFactor(probe0.n, ())
        for c, p, _ in parts:
            probe = probe + p.scale(c)
        return probe, op0.scale(c0 / c0)  # keep op0 as-is; weights live in probe
    return None


def _multiplier_checks(mult: XiFactor, target_order: float) -> dict:
    """Check g(k) != 0 up to K_CHECK and |g| ~ <k>^target via exponent fit."""
    ks = np.arange(-K_CHECK, K_CHECK + 1)
    try:
        vals = np.abs(mult.lattice_values(ks))
    except Exception as e:  # lattice poles count as failure, not a crash
        return {"nonvanishing": False, "error": str(e), "exponent_ok": False}
    nonvanishing = bool(np.all(vals > 0))
    out: dict = {"nonvanishing": nonvanishing,
                 "min_abs": float(vals.min()), "k_check": K_CHECK}
    if not nonvanishing:
        zero_ks = ks[vals == 0].tolist()
        out["zeros_at"] = zero_ks[:8]
        out["exponent_ok"] = False
        return out
    fit_ks = np.unique(np.round(np.logspace(np.log10(8), np.log10(K_CHECK), 12))
                       .astype(int))
    w = np.sqrt(1.0 + fit_ks.astype(float) ** 2)
    g = np.abs(mult.lattice_values(fit_ks))
    slope = float(np.polyfit(np.log(w), np.log(g), 1)[0])
    ratios = vals / np.sqrt(1.0 + ks.astype(float) ** 2) ** target_order
    out.update({
        "fitted_exponent": slope,
        "target_exponent": float(target_order),
        "exponent_ok": bool(abs(slope - target_order) <= EXPONENT_FIT_TOL),
        "two_sided_c1": float(ratios.min()),
        "two_sided_c2": float(ratios.max()),
    })
    return out


def _sigma12_sign_values(sigma12: BiSymbol, x_samples: int = 1) -> dict:
    """|sigma12| at the four direction sign pairs (n=1), max over x-grid."""
    out = {}
    xs = np.linspace(0, 2 * np.pi, max(x_samples, 1), endpoint=False)
    for s1 in (+1, -1):
        for s2 in (+1, -1):
            worst = math.inf
            for x1 in xs:
                for x2 in xs:
                    v = abs(sigma12.eval(x1, x2, float(s1), float(s2)))
                    worst = min(worst, v)
            out[(s1, s2)] = worst
    return out


def _axis_extension_nonzero(sigma12: BiSymbol, slot: int, sign: int) -> bool:
    """Reading B: bihomogeneous extension of sigma12 at the slot axis.

    Negative homogeneity in the dead slot diverges (counts as nonzero);
    positive homogeneity vanishes there.
    """
    if sigma12.is_zero():
        return False
    dead_order = sigma12.bi_order().m2 if slot == 1 else sigma12.bi_order().m1
    if dead_order < 0:
        return True
    xi = (float(sign), 0.0) if slot == 1 else (0.0, float(sign))
    try:
        v = sigma12.eval(0.0, 0.0, xi[0], xi[1])
    except FloatingPointError:
        return True
    return abs(v) > 0


def is_bielliptic(a: BiSymbol) -> BiellReport:
    """Bi-ellipticity verdict for factor-multiplier (tensor-type) symbols.

    Condition (i): the doubly-leading part never vanishes off the axes.
    Conditions (ii)/(iii): each principal family factors as a nonvanishing
    homogeneous scalar times a Fourier multiplier whose modulus is two-sided
    comparable to <k>^(slot order); the exponent fit encodes invertibility
    with inverse of the opposite order.
    """
    a = a.normalized()
    triple = principal_triple(a)
    order = triple.order
    notes: list[str] = []

    if not a.is_x_independent():
        # sampled lower bounds only; explicitly non-conclusive
        vals = _sigma12_sign_values(triple.sigma12, x_samples=16)
        rep = ConditionReport(False, {"sampled_min_abs_sigma12": min(vals.values())})
        notes.append("x-dependent symbol: verdict is unsupported-heuristic; "
                     "sampled lower bounds only")
        return BiellReport(None, order, rep, rep, rep, notes)

    vals = _sigma12_sign_values(triple.sigma12)
    cond_i = ConditionReport(all(v > 0 for v in vals.values()),
                             {"direction_values": {f"{s1},{s2}": v
                                                   for (s1, s2), v in vals.items()}})

    def family_condition(sigma: BiSymbol, probe_slot: int, m_op: float) -> ConditionReport:
        if sigma.is_zero():
            return ConditionReport(False, {"reason": "principal family vanishes"})
        split = _tensor_split(sigma, probe_slot)
        if split is None:
            return ConditionReport(False, {"reason": "family does not factor as "
                                                     "scalar x multiplier"})
        probe, mult = split
        scal = {s: abs(complex(probe.eval(np.array([[float(s)]]))[0]))
                for s in (+1, -1)}
        checks = _multiplier_checks(mult, m_op)
        ok = (all(v > 0 for v in scal.values())
              and checks.get("nonvanishing", False)
              and checks.get("exponent_ok", False))
        return ConditionReport(ok, {"scalar_at_signs": {str(k): v for k, v in scal.items()},
                                    **checks})

    cond_ii = family_condition(triple.sigma1, 1, order.m2)
    cond_iii = family_condition(triple.sigma2, 2, order.m1)
    verdict = cond_i.passed and cond_ii.passed and cond_iii.passed
    return BiellReport(verdict, order, cond_i, cond_ii, cond_iii, notes)


def char_sets(a: BiSymbol, reading: str = "A") -> CharReport:
    """The three characteristic-set components as region descriptors.

    Reading A evaluates the doubly-leading part only where both covariables
    are nonzero; reading B additionally tests its bihomogeneous extension on
    the axis (where positive-order symbols always vanish).
    """
    if reading not in ("A", "B"):
        raise ValueError("reading must be 'A' or 'B'")
    a = a.normalized()
    triple = principal_triple(a)
    order = triple.order
    notes: list[str] = []

    if not a.is_x_independent():
        vals = _sigma12_sign_values(triple.sigma12, x_samples=16)
        desc = RegionDescriptor("flags", [],
                                {"heuristic": True,
                                 "sampled_min_abs_sigma12": min(vals.values())})
        notes.append("x-dependent symbol: sampled heuristic only")
        return CharReport(desc, desc, desc, reading, notes)

    sign_vals = _sigma12_sign_values(triple.sigma12)

    # char12: zero set of sigma12 over the four quadrants
    if triple.sigma12.is_zero():
        char12 = RegionDescriptor("full", diagnostics={"sigma12": "identically zero"})
    else:
        zeros = [(s1, s2) for (s1, s2), v in sign_vals.items() if v == 0]
        if not zeros:
            char12 = RegionDescriptor("empty")
        elif len(zeros) == 4:
            char12 = RegionDescriptor("full")
        else:
            char12 = RegionDescriptor("flags",
                                      [("all", f"{'+' if s1 > 0 else '-'}"
                                               f"{'+' if s2 > 0 else '-'}")
                                       for s1, s2 in zeros])

    def axis_component(slot: int) -> RegionDescriptor:
        sigma = triple.sigma1 if slot == 1 else triple.sigma2
        m_op = order.m2 if slot == 1 else order.m1
        diag: dict = {}
        bad_signs = []
        for s in (+1, -1):
            quadrants = [(s, +1), (s, -1)] if slot == 1 else [(+1, s), (-1, s)]
            cond1 = (not triple.sigma12.is_zero()
                     and all(sign_vals[q] > 0 for q in quadrants))
            if reading == "B":
                cond1 = cond1 and _axis_extension_nonzero(triple.sigma12, slot, s)
            cond2 = False
            if not sigma.is_zero():
                split = _tensor_split(sigma, slot)
                if split is not None:
                    probe, mult = split
                    sval = abs(complex(probe.eval(np.array([[float(s)]]))[0]))
                    checks = _multiplier_checks(mult, m_op)
                    cond2 = (sval > 0 and checks.get("nonvanishing", False)
                             and checks.get("exponent_ok", False))
                    diag[f"sign {s:+d}"] = {"scalar": sval, **checks}
            if not (cond1 and cond2):
                bad_signs.append(s)
                diag.setdefault("failures", []).append(
                    {"sign": s, "cond1": cond1, "cond2": cond2})
        if not bad_signs:
            return RegionDescriptor("empty", diagnostics=diag)
        if len(bad_signs) == 2:
            return RegionDescriptor("full", diagnostics=diag)
        return RegionDescriptor("flags", [("all", "+" if s > 0 else "-")
                                          for s in bad_signs], diag)

    char1 = axis_component(1)
    char2 = axis_component(2)
    return CharReport(char1, char2, char12, reading, notes)


def exact_tensor_inverse(a: BiSymbol) -> BiSymbol:
    """Exact inverse of a nonvanishing tensor Fourier multiplier g1(xi1) g2(xi2).

    Raises NotInvertible when a factor vanishes on the integer lattice and
    OutsideFamily when the reciprocal leaves the factor family.
    """
    a = a.normalized()
    if not a.is_x_independent() or len(a.terms) != 1:
        raise OutsideFamily("inverse supported for single-term multiplier tensors")
    coeff, f1, f2 = a.terms[0]
    c = coeff.constant_value()
    if c == 0:
        raise NotInvertible("zero symbol")
    inv_factors = []
    for f in (f1, f2):
        atom = f.as_single_atom()
        if atom is None:
            raise OutsideFamily(f"factor {f} is not a single-atom multiplier")
        if any(atom.beta):
            raise NotInvertible(f"factor {f} vanishes at the lattice origin")
        if atom.tab is not None:
            raise OutsideFamily("tabulated factors have no family reciprocal")
        inv_factors.append(XiFactor(f.n, (atom.reciprocal(),)))
    out = BiSymbol.from_factors(inv_factors[0], inv_factors[1],
                                coeff=TrigPoly.constant(1.0 / c, a.dims),
                                dims=a.dims)
    return out.normalized()


# ---------------------------------------------------------------------------
# model cases
# ---------------------------------------------------------------------------

MODEL_OPERATORS: tuple[tuple[str, str], ...] = (
    ("I ⊗ I", "1"),
    ("-Δ₁ ⊗ I + I ⊗ (-Δ₂)", "(+ (sq xi1) (sq xi2))"),
    ("-Δ₁ ⊗ (-Δ₂)", "(* (sq xi1) (sq xi2))"),
    ("-Δ₁ ⊗ (-Δ₂+I)", "(* (sq xi1) (+ (sq xi2) 1))"),
    ("(-Δ₁+I) ⊗ (-Δ₂+I)", "(* (+ (sq xi1) 1) (+ (sq xi2) 1))"),
    ("(-Δ₁+I)⁻¹ ⊗ (-Δ₂+I)⁻¹", "(* (shpow xi1 1 -1) (shpow xi2 1 -1))"),
)

TRANSPOSED_ROW = "-Δ₁ ⊗ (-Δ₂+I)"
TRANSPOSITION_NOTE = (
    "Char¹/Char² for -Δ₁ ⊗ (-Δ₂+I) are derived from the definition "
    "(σ¹ = ξ₁²(-Δ₂+I) is invertible with inverse of order -2, σ² = ξ₂²(-Δ₁) "
    "is not); reference tabulations list this pair transposed."
)


def model_operator(name: str) -> BiSymbol:
    for n, expr in MODEL_OPERATORS:
        if n == name:
            return parse_symbol(expr)
    raise KeyError(name)


def _region_str(desc: RegionDescriptor, component: str) -> str:
    if desc.kind == "empty":
        return "∅"
    if desc.kind == "full":
        return {"1": "Ω×R₀^{n₁}×{0}", "2": "Ω×{0}×R₀^{n₂}",
                "12": "Ω×R₀^{n₁₂}"}[component]
    return "{" + ", ".join(f"({c},{s})" for c, s in desc.flags) + "}"


def render_table1() -> str:
    lines = ["| Operator | Bi-order | Bi-elliptic |", "|---|---|---|"]
    for name, expr in MODEL_OPERATORS:
        sym = parse_symbol(expr)
        rep = is_bielliptic(sym)
        mark = "√" if rep.verdict else "×"
        lines.append(f"| {name} | {rep.order} | {mark} |")
    return "\n".join(lines) + "\n"


def render_table2(reading: str = "A") -> str:
    lines = ["| Operator | Char¹ | Char² | Char¹² |", "|---|---|---|---|"]
    flagged = False
    for name, expr in MODEL_OPERATORS:
        sym = parse_symbol(expr)
        rep = char_sets(sym, reading=reading)
        mark = " (*)" if name == TRANSPOSED_ROW else ""
        flagged = flagged or bool(mark)
        lines.append(f"| {name}{mark} | {_region_str(rep.char1, '1')} "
                     f"| {_region_str(rep.char2, '2')} "
                     f"| {_region_str(rep.char12, '12')} |")
    out = "\n".join(lines) + "\n"
    if flagged:
        out += f"\n(*) {TRANSPOSITION_NOTE}\n"
    return out
