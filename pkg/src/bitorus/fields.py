"""Distributions on the product torus as truncated Fourier coefficient
arrays, spectral operator application, cutoffs and cone localizers.

Normalization: a field u is sum_k u_hat(k) exp(i k.x), i.e. coefficients are
u_hat(k) = <u, exp(-i k.x)> / (2 pi)^2.  The constant 1 has the indicator
coefficient table; a delta at a has u_hat(k) = exp(-i k.a) / (2 pi)^2.
Everything stays Fourier-side; grids appear only for evaluation and as the
exact band-limited route for products with trigonometric polynomials.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .grammar import ParseError, tokenize
from .symbols import BiSymbol, TabProfile, TrigPoly, UnsupportedFactor, XiFactor

__all__ = [
    "AliasRisk",
    "ClassUnsupported",
    "CoeffField",
    "Field1D",
    "Cutoff",
    "ConeLocalizer",
    "FactorOperator",
    "synthesize",
    "synthesize_1d",
    "apply_operator",
    "apply_factor_operator",
    "evaluate_on_grid",
    "save_field",
    "load_field",
    "prolate_window",
    "bump_coeffs",
    "bump_multiplier_profile",
    "grid_size",
]

TWO_PI = 2.0 * np.pi


class AliasRisk(Exception):
    """Requested spatial grid is too coarse for the stored band."""


class ClassUnsupported(Exception):
    """The symbol cannot be applied exactly on the lattice."""


# ---------------------------------------------------------------------------
# window / bump construction
# ---------------------------------------------------------------------------


def prolate_window(half_bw: int, x0: float) -> np.ndarray:
    """Coefficients w(-B..B) maximizing spatial concentration in |x| <= x0.

    Top eigenvector of the sinc concentration kernel; real, even, positive
    at the center, normalized to unit peak value of the synthesized g(0).
    """
    B = int(half_bw)
    idx = np.arange(-B, B + 1)
    diff = idx[:, None] - idx[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        kernel = np.where(diff == 0, x0 / np.pi, np.sin(x0 * diff) / (np.pi * diff))
    vals, vecs = np.linalg.eigh(kernel)
    w = vecs[:, -1]
    if w.sum() < 0:
        w = -w
    return w / w.sum()  # g(0) = sum w = 1


def bump_coeffs(half_bw: int, x0: float) -> np.ndarray:
    """Coefficients of a non-negative torus bump chi = g^2, bandwidth 2*half_bw.

    chi(0) = 1, chi >= 0 everywhere, and chi decays below its leakage level
    outside roughly |x| > 2 x0.
    """
    w = prolate_window(half_bw, x0)
    c = np.convolve(w, w)  # autocorrelation of an even window = its square's coeffs
    return c  # length 4*half_bw + 1, centered


def eval_trig_1d(coeffs: np.ndarray, x: np.ndarray, center: float = 0.0) -> np.ndarray:
    B = (len(coeffs) - 1) // 2
    ks = np.arange(-B, B + 1)
    return np.real_if_close(
        np.exp(1j * np.outer(np.asarray(x) - center, ks)) @ coeffs)


def bump_multiplier_profile(width: float, half_bw: int,
                            name: str | None = None) -> TabProfile:
    """Symbol table of convolution by a torus bump: sigma(k) = 2*pi*phi_hat(k)."""
    c = bump_coeffs(max(2, half_bw // 2), width / 2.0)
    name = name or f"bumphat(w={width:g},B={half_bw})"
    reach = (len(c) - 1) // 2
    return TabProfile(name, reach, tuple((TWO_PI * c).astype(complex).tolist()))


def grid_size(N: int, extra_bw: int = 0) -> int:
    """Power-of-two grid resolving products up to bandwidth N + extra_bw."""
    need = 2 * (N + extra_bw) + 1
    M = 1
    while M < need:
        M *= 2
    return M


# ---------------------------------------------------------------------------
# coefficient fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoeffField:
    """Truncated Fourier coefficient array u_hat(k1, k2), |k_i| <= N.

    safe_band marks the sub-band unaffected by truncation after operator
    application; growth_order is a declared polynomial bound |u_hat| <=
    C <k>^growth_order.  ``comp`` (optional) is the accumulated modulus of
    applied multiplier symbols, and ``shift`` the accumulated bi-order of
    applied non-multiplier symbols; detectors may divide these out.
    """

    N: int
    coeffs: np.ndarray
    growth_order: float = 0.0
    safe_band: int | None = None
    shift: tuple[float, float] = (0.0, 0.0)
    comp: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=complex)
        if arr.shape != (2 * self.N + 1, 2 * self.N + 1):
            raise ValueError("coefficient array must be (2N+1) x (2N+1)")
        object.__setattr__(self, "coeffs", arr)
        if self.safe_band is None:
            object.__setattr__(self, "safe_band", self.N)

    # -- basics ------------------------------------------------------------

    def ks(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def at(self, k1: int, k2: int) -> complex:
        return complex(self.coeffs[k1 + self.N, k2 + self.N])

    def __add__(self, other: "CoeffField") -> "CoeffField":
        if self.N != other.N:
            raise ValueError("band mismatch")
        return CoeffField(self.N, self.coeffs + other.coeffs,
                          max(self.growth_order, other.growth_order),
                          min(self.safe_band, other.safe_band),
                          self.shift if self.shift == other.shift else (0.0, 0.0),
                          None,
                          label=f"({self.label})+({other.label})")

    def scale(self, c: complex) -> "CoeffField":
        return replace(self, coeffs=self.coeffs * c,
                       label=f"{c:g}*({self.label})" if self.label else "")

    def swap(self) -> "CoeffField":
        """Exchange the two factors: new u_hat(k1,k2) = old u_hat(k2,k1)."""
        comp = self.comp.T.copy() if self.comp is not None else None
        return CoeffField(self.N, self.coeffs.T.copy(), self.growth_order,
                          self.safe_band, (self.shift[1], self.shift[0]), comp,
                          label=f"swap({self.label})")

    def max_abs(self, band: int | None = None) -> float:
        b = self.safe_band if band is None else band
        sl = slice(self.N - b, self.N + b + 1)
        return float(np.max(np.abs(self.coeffs[sl, sl]))) if b >= 0 else 0.0


@dataclass(frozen=True)
class Field1D:
    """One-factor analog of CoeffField, for the 1-d detectors and oracles."""

    N: int
    coeffs: np.ndarray
    safe_band: int | None = None
    label: str = ""

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=complex)
        if arr.shape != (2 * self.N + 1,):
            raise ValueError("coefficient array must have length 2N+1")
        object.__setattr__(self, "coeffs", arr)
        if self.safe_band is None:
            object.__setattr__(self, "safe_band", self.N)

    def ks(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)


# ---------------------------------------------------------------------------
# cutoffs and cone localizers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cutoff:
    """Non-negative trig-poly bump on one factor, ~1 near center.

    Invariants (verified in tests): values within [-1e-6, 1+1e-6], at least
    1 - 1e-6 on the width/2 ball, at most 1e-6 outside the width ball.
    """

    factor: int
    center: float
    width: float
    bandwidth: int
    coeffs: np.ndarray  # centered at 0; the center shift is applied on use

    @staticmethod
    def design(factor: int, center: float, half_bw: int, x0: float) -> "Cutoff":
        c = bump_coeffs(half_bw, x0)
        B = (len(c) - 1) // 2
        xs = np.linspace(0, np.pi, 4096)
        vals = np.abs(eval_trig_1d(c, xs))
        outside = xs[vals <= 1e-6]
        width = 2 * float(outside[0]) if len(outside) else 2 * np.pi
        return Cutoff(factor, float(center), width, B, c)

    def values(self, x: np.ndarray) -> np.ndarray:
        return eval_trig_1d(self.coeffs, x, center=self.center)

    def shifted_coeffs(self) -> np.ndarray:
        B = self.bandwidth
        ks = np.arange(-B, B + 1)
        return self.coeffs * np.exp(-1j * ks * self.center)


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


@dataclass(frozen=True)
class ConeLocalizer:
    """Direction localizer on the frequency lattice.

    which = 1 or 2 with a sign gives the half-line sector of one factor:
    zero below r0, smooth ramp on (r0, 2 r0), exactly one beyond 2 r0 (so it
    is 0-homogeneous there).  which = 12 with a sign pair gives the tensor
    corner cone of a quadrant.
    """

    which: int  # 1, 2, or 12
    sign: tuple[int, ...]
    r0: int = 2

    def line_values(self, ks: np.ndarray, sign: int) -> np.ndarray:
        t = (sign * ks - self.r0) / float(self.r0)
        return _smoothstep(t)

    def mask(self, ks: np.ndarray) -> np.ndarray:
        if self.which in (1, 2):
            return self.line_values(ks, self.sign[0])
        m1 = self.line_values(ks, self.sign[0])
        m2 = self.line_values(ks, self.sign[1])
        return np.outer(m1, m2)


@dataclass(frozen=True)
class FactorOperator:
    """chi(x_i) * psi(D_i) acting on one factor; either part may be absent."""

    chi: np.ndarray | None  # centered coefficient vector (2B+1,), complex
    psi: np.ndarray | None  # multiplier values on ks = -N..N
    order: float = 0.0
    label: str = ""

    @staticmethod
    def identity() -> "FactorOperator":
        return FactorOperator(None, None, 0.0, "I")

    @staticmethod
    def from_cutoff_and_cone(cut: Cutoff | None, cone: ConeLocalizer | None,
                             ks: np.ndarray) -> "FactorOperator":
        chi = cut.shifted_coeffs() if cut is not None else None
        psi = cone.mask(ks) if cone is not None else None
        return FactorOperator(chi, psi, 0.0,
                              f"chi@{getattr(cut, 'center', None)}*psi")

    @staticmethod
    def convolution(profile: TabProfile, ks: np.ndarray) -> "FactorOperator":
        return FactorOperator(None, profile.eval_int(ks), 0.0,
                              f"conv[{profile.name}]")


# ---------------------------------------------------------------------------
# builtins
# ---------------------------------------------------------------------------

DEFAULT_BUMP_WIDTH = 1.1


def _bump_half_bw(N: int) -> int:
    return max(4, min(N // 8, 10))


def synthesize_1d(desc, N: int, rng: np.random.Generator | None = None) -> Field1D:
    """One-factor builtins: one, delta [a], ddelta [q [a]], bump [c w], smooth."""
    if isinstance(desc, str):
        desc = desc.split()
    head, *args = desc
    ks = np.arange(-N, N + 1)
    if head == "one":
        c = np.zeros(2 * N + 1, dtype=complex)
        c[N] = 1.0
        return Field1D(N, c, label="one")
    if head == "delta":
        a = float(args[0]) if args else 0.0
        return Field1D(N, np.exp(-1j * ks * a) / TWO_PI, label=f"delta@{a:g}")
    if head == "ddelta":
        q = int(args[0]) if args else 1
        a = float(args[1]) if len(args) > 1 else 0.0
        return Field1D(N, (1j * ks.astype(float)) ** q * np.exp(-1j * ks * a) / TWO_PI,
                       label=f"ddelta^{q}@{a:g}")
    if head == "bump":
        center = float(args[0]) if args else 0.0
        width = float(args[1]) if len(args) > 1 else DEFAULT_BUMP_WIDTH
        half_bw = int(args[2]) if len(args) > 2 else _bump_half_bw(N)
        c = bump_coeffs(half_bw, width / 2.0)
        B = (len(c) - 1) // 2
        if B > N:
            raise ValueError("bump bandwidth exceeds field band")
        out = np.zeros(2 * N + 1, dtype=complex)
        out[N - B:N + B + 1] = c * np.exp(-1j * np.arange(-B, B + 1) * center)
        return Field1D(N, out, label=f"bump@{center:g}")
    if head == "smooth":
        seed = int(args[0]) if args else 0
        rng = rng or np.random.default_rng(seed)
        decay = (1.0 + ks.astype(float) ** 2) ** (-6.0)
        phase = rng.standard_normal(2 * N + 1) + 1j * rng.standard_normal(2 * N + 1)
        c = decay * phase
        c = 0.5 * (c + np.conj(c[::-1]))  # hermitian: real-valued field
        c[N] = 1.0
        return Field1D(N, c, label=f"smooth#{seed}")
    raise ParseError(f"unknown 1-d builtin {head!r}", 0)


def _tensor(u1: Field1D, u2: Field1D, growth: float = 0.0) -> CoeffField:
    return CoeffField(u1.N, np.outer(u1.coeffs, u2.coeffs), growth,
                      label=f"{u1.label}⊗{u2.label}")


def _parse_sexpr_words(src: str):
    toks = tokenize(src)
    if not toks:
        raise ParseError("empty descriptor", 0)

    def walk(i):
        tok = toks[i]
        if tok.text == "(":
            items = []
            i += 1
            while i < len(toks) and toks[i].text != ")":
                node, i = walk(i)
                items.append(node)
            if i >= len(toks):
                raise ParseError("missing closing parenthesis", tok.pos)
            return items, i + 1
        return tok.text, i + 1

    if toks[0].text == "(":
        node, i = walk(0)
        if i != len(toks):
            raise ParseError("trailing tokens after descriptor", toks[i].pos)
        return node
    # bare words get implicit outer parentheses: "tensor delta one"
    items = []
    i = 0
    while i < len(toks):
        node, i = walk(i)
        items.append(node)
    return items if len(items) > 1 else items[0]


def synthesize(desc, N: int, seed: int = 0) -> CoeffField:
    """Build a named distribution with exact coefficients on |k_i| <= N.

    Descriptors: ``one``, ``(tensor F G)`` with 1-d builtins F, G,
    ``(sum D D)``, ``(scale c D)``, ``(mulcoef "name" D)``, ``diag_delta``,
    ``smooth [seed]``, ``delta [a1 a2]``, ``dz [q1 q2]`` (derivative of the
    delta at 0).  Whitespace-only strings get implicit parentheses, so
    ``"tensor delta one"`` works.
    """
    if N < 16:
        raise ValueError("band limit must be at least 16")
    rng = np.random.default_rng(seed)
    node = _parse_sexpr_words(desc) if isinstance(desc, str) else desc
    return _synth_node(node, N, rng)


def _synth_node(node, N: int, rng) -> CoeffField:
    if isinstance(node, str):
        node = [node]
    head, *args = node
    ks = np.arange(-N, N + 1)
    if head == "one":
        return _tensor(synthesize_1d("one", N), synthesize_1d("one", N))
    if head == "delta":
        a1 = float(args[0]) if args else 0.0
        a2 = float(args[1]) if len(args) > 1 else 0.0
        return _tensor(synthesize_1d(["delta", str(a1)], N),
                       synthesize_1d(["delta", str(a2)], N))
    if head == "dz":
        q1 = int(args[0]) if args else 1
        q2 = int(args[1]) if len(args) > 1 else 0
        return _tensor(synthesize_1d(["ddelta", str(q1)], N) if q1 else
                       synthesize_1d("delta", N),
                       synthesize_1d(["ddelta", str(q2)], N) if q2 else
                       synthesize_1d("delta", N), growth=float(q1 + q2))
    if head == "diag_delta":
        c = np.zeros((2 * N + 1, 2 * N + 1), dtype=complex)
        c[ks + N, -ks + N] = 1.0 / TWO_PI
        return CoeffField(N, c, label="diag_delta")
    if head == "smooth":
        s = int(args[0]) if args else 0
        r = np.random.default_rng(s)
        K1, K2 = np.meshgrid(ks, ks, indexing="ij")
        decay = (1.0 + K1.astype(float) ** 2 + K2.astype(float) ** 2) ** (-6.0)
        phase = r.standard_normal(K1.shape) + 1j * r.standard_normal(K1.shape)
        c = decay * phase
        c = 0.5 * (c + np.conj(c[::-1, ::-1]))
        c[N, N] = 1.0
        return CoeffField(N, c, label=f"smooth#{s}")
    if head == "tensor":
        if len(args) != 2:
            raise ParseError("tensor expects two 1-d builtins", 0)
        u1 = _synth_1d_node(args[0], N, rng)
        u2 = _synth_1d_node(args[1], N, rng)
        growth = sum(_growth_1d(a) for a in args)
        return _tensor(u1, u2, growth)
    if head == "sum":
        if len(args) != 2:
            raise ParseError("sum expects two descriptors", 0)
        return _synth_node(args[0], N, rng) + _synth_node(args[1], N, rng)
    if head == "scale":
        return _synth_node(args[1], N, rng).scale(complex(float(args[0])))
    if head == "mulcoef":
        from .symbols import named_coefficient
        name = str(args[0]).strip('"')
        poly = named_coefficient(name)
        sym = BiSymbol.from_factors(XiFactor.one(), XiFactor.one(), coeff=poly)
        return apply_operator(sym, _synth_node(args[1], N, rng))
    raise ParseError(f"unknown builtin {head!r}", 0)


def _synth_1d_node(node, N: int, rng) -> Field1D:
    if isinstance(node, str):
        node = [node]
    return synthesize_1d(node, N, rng)


def _growth_1d(node) -> float:
    if isinstance(node, str):
        node = [node]
    if node[0] == "ddelta":
        return float(node[1]) if len(node) > 1 else 1.0
    return 0.0


# ---------------------------------------------------------------------------
# operator application
# ---------------------------------------------------------------------------


def _coeff_convolve(w: np.ndarray, coeff: TrigPoly, N: int) -> np.ndarray:
    """Exact convolution of the array w with the coefficient's table."""
    B1 = coeff.bandwidth(1)
    B2 = coeff.bandwidth(2)
    canvas = np.zeros((2 * N + 1 + 2 * B1, 2 * N + 1 + 2 * B2), dtype=complex)
    for key, c in coeff.coeffs.items():
        j1, j2 = key[0], key[1]
        canvas[B1 + j1:B1 + j1 + 2 * N + 1, B2 + j2:B2 + j2 + 2 * N + 1] += c * w
    return canvas[B1:B1 + 2 * N + 1, B2:B2 + 2 * N + 1]


def apply_operator(a: BiSymbol, u: CoeffField) -> CoeffField:
    """Left-quantized application: v_hat(l) = sum_j c_hat(j) sigma(l-j) u_hat(l-j).

    The multiplier part of each term acts at the input frequency, then the
    coefficient convolves; exact on the stored band, with the safe band
    shrunk by the coefficient bandwidth.
    """
    if a.dims != (1, 1):
        raise ClassUnsupported("operator application is wired for n1 = n2 = 1")
    N = u.N
    ks = u.ks()
    out = np.zeros_like(u.coeffs)
    sigma_total: np.ndarray | None = (np.zeros_like(u.coeffs)
                                      if a.is_x_independent() else None)
    for coeff, f1, f2 in a.normalized().terms:
        try:
            m1 = f1.lattice_values(ks)
            m2 = f2.lattice_values(ks)
        except UnsupportedFactor as e:
            raise ClassUnsupported(str(e)) from None
        sig = np.outer(m1, m2)
        w = sig * u.coeffs
        if coeff.is_constant():
            c = coeff.constant_value()
            out += c * w
            if sigma_total is not None:
                sigma_total += c * sig
        else:
            out += _coeff_convolve(w, coeff, N)
    B = a.coefficient_bandwidth()
    order = a.bi_order()
    growth = u.growth_order + max(order.m1, 0.0) + max(order.m2, 0.0)
    if sigma_total is not None:
        comp = np.abs(sigma_total)
        if u.comp is not None:
            comp = comp * u.comp
        shift = u.shift
    else:
        comp = None
        s1 = u.shift[0] + (order.m1 if np.isfinite(order.m1) else 0.0)
        s2 = u.shift[1] + (order.m2 if np.isfinite(order.m2) else 0.0)
        shift = (s1, s2)
    return CoeffField(N, out, growth, min(u.safe_band, N) - B, shift, comp,
                      label=f"Op@({u.label})")


def apply_factor_operator(A: FactorOperator, which: int, u: CoeffField) -> CoeffField:
    """Apply chi(x_i) psi(D_i) along one factor, identity in the other.

    psi multiplies along slot ``which``; chi then convolves along the same
    slot, shrinking the safe band there only.
    """
    if which not in (1, 2):
        raise ValueError("factor must be 1 or 2")
    N = u.N
    w = u.coeffs
    if A.psi is not None:
        psi = np.asarray(A.psi, dtype=complex)
        if psi.shape != (2 * N + 1,):
            raise ClassUnsupported("multiplier table does not match the band")
        w = w * (psi[:, None] if which == 1 else psi[None, :])
    shrink = 0
    if A.chi is not None:
        chi = np.asarray(A.chi, dtype=complex)
        B = (len(chi) - 1) // 2
        shrink = B
        pad = np.zeros((2 * N + 1 + 2 * B, w.shape[1]) if which == 1 else
                       (w.shape[0], 2 * N + 1 + 2 * B), dtype=complex)
        for j, c in zip(range(-B, B + 1), chi):
            if c == 0:
                continue
            if which == 1:
                pad[B + j:B + j + 2 * N + 1, :] += c * w
            else:
                pad[:, B + j:B + j + 2 * N + 1] += c * w
        w = (pad[B:B + 2 * N + 1, :] if which == 1 else pad[:, B:B + 2 * N + 1])
    growth = u.growth_order + max(A.order, 0.0)
    return CoeffField(N, w, growth, min(u.safe_band, N) - shrink, u.shift,
                      None, label=f"({A.label})_{which}({u.label})")


def evaluate_on_grid(u: CoeffField, M: int) -> np.ndarray:
    """Samples on the M x M grid x_m = 2 pi m / M via zero-padded inverse FFT."""
    if M < 2 * u.N + 1:
        raise AliasRisk(f"grid {M} cannot resolve band {u.N}")
    pad = np.zeros((M, M), dtype=complex)
    N = u.N
    ks = np.arange(-N, N + 1)
    pad[np.ix_(ks % M, ks % M)] = u.coeffs
    return np.fft.ifft2(pad) * M * M


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_MAGIC = b"BTCF"


def save_field(u: CoeffField, path: str | Path) -> tuple[Path, Path]:
    """Write flat little-endian complex64 data plus a JSON sidecar."""
    path = Path(path)
    bin_path = path.with_suffix(".bin")
    json_path = path.with_suffix(".json")
    header = _MAGIC + struct.pack("<IIId", 1, u.N, u.safe_band, u.growth_order)
    data = u.coeffs.astype("<c8").tobytes()
    bin_path.write_bytes(header + data)
    sidecar = {
        "schema": "bitorus.coefffield.v1",
        "N": u.N,
        "safe_band": u.safe_band,
        "growth_order": u.growth_order,
        "shift": list(u.shift),
        "dtype": "complex64-le",
        "shape": [2 * u.N + 1, 2 * u.N + 1],
        "label": u.label,
    }
    json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return bin_path, json_path


def load_field(path: str | Path) -> CoeffField:
    path = Path(path)
    raw = path.with_suffix(".bin").read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError("not a coefficient-field file")
    _, N, safe, growth = struct.unpack("<IIId", raw[4:4 + 20])
    side = 2 * N + 1
    arr = np.frombuffer(raw[4 + 20:], dtype="<c8").reshape(side, side)
    shift = (0.0, 0.0)
    json_path = path.with_suffix(".json")
    if json_path.exists():
        meta = json.loads(json_path.read_text())
        shift = tuple(meta.get("shift", [0.0, 0.0]))
    return CoeffField(N, arr.astype(complex), growth, safe, shift)
