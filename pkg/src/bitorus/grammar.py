"""Prefix-expression grammar for symbol literals.

Symbols parse from parenthesized prefix forms, e.g.::

    (* (+ (sq xi1) 1) (+ (sq xi2) 1))     the tensor Helmholtz multiplier
    (coef "sin_x1" (mono xi1 1))          sin(x1) * xi1

Forms
-----
- number literals (int/float, optional trailing ``i`` for imaginary)
- ``(mono xiJ b)``          monomial xiJ^b, b >= 0
- ``(sq xiJ)``              shorthand for (mono xiJ 2)
- ``(bracket xiJ s)``       <xiJ>^s = (1+|xiJ|^2)^(s/2)
- ``(shpow xiJ c s)``       (|xiJ|^2 + c)^s, c > 0
- ``(bumphat xiJ width B)`` tabulated multiplier: coefficients of a torus
                            bump of the given width and bandwidth
- ``(coef "name" expr)``    multiply expr by a named coefficient, one of
                            one, sin_x1, cos_x1, sin_x2, cos_x2, exp_ix1, exp_ix2
- ``(wave k1 k2 expr)``     multiply expr by exp(i(k1 x1 + k2 x2))
- ``(+ e1 e2 ...)``, ``(* e1 e2 ...)``, ``(- e1 e2)``, ``(neg e)``

Everything parses to a BiSymbol on T^1 x T^1.
"""

from __future__ import annotations

from dataclasses import dataclass

from .symbols import BiSymbol, TabProfile, TrigPoly, XiFactor, named_coefficient

__all__ = ["ParseError", "parse_symbol", "tokenize"]

DIMS = (1, 1)


class ParseError(ValueError):
    """Malformed symbol expression; carries the offending position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


@dataclass
class _Token:
    text: str
    pos: int


def tokenize(src: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    while i < len(src):
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "()":
            tokens.append(_Token(ch, i))
            i += 1
            continue
        if ch == '"':
            j = src.find('"', i + 1)
            if j < 0:
                raise ParseError("unterminated string", i)
            tokens.append(_Token(src[i:j + 1], i))
            i = j + 1
            continue
        j = i
        while j < len(src) and not src[j].isspace() and src[j] not in "()":
            j += 1
        tokens.append(_Token(src[i:j], i))
        i = j
    return tokens


def _parse_sexpr(tokens: list[_Token], i: int):
    if i >= len(tokens):
        raise ParseError("unexpected end of input", tokens[-1].pos if tokens else 0)
    tok = tokens[i]
    if tok.text == "(":
        items = []
        i += 1
        while i < len(tokens) and tokens[i].text != ")":
            node, i = _parse_sexpr(tokens, i)
            items.append(node)
        if i >= len(tokens):
            raise ParseError("missing closing parenthesis", tok.pos)
        return (tok.pos, items), i + 1
    if tok.text == ")":
        raise ParseError("unbalanced closing parenthesis", tok.pos)
    return tok, i + 1


def _number(tok: _Token) -> complex:
    text = tok.text
    try:
        if text.endswith(("i", "j")) and text not in ("i", "j"):
            return complex(0.0, float(text[:-1]))
        if text in ("i", "j"):
            return 1j
        return complex(float(text))
    except ValueError:
        raise ParseError(f"expected a number, got {text!r}", tok.pos) from None


def _slot(tok) -> int:
    if not isinstance(tok, _Token) or tok.text not in ("xi1", "xi2"):
        pos = tok.pos if isinstance(tok, _Token) else tok[0]
        raise ParseError("expected xi1 or xi2", pos)
    return 1 if tok.text == "xi1" else 2


def _factor_symbol(slot: int, factor: XiFactor) -> BiSymbol:
    f1 = factor if slot == 1 else XiFactor.one()
    f2 = factor if slot == 2 else XiFactor.one()
    return BiSymbol.from_factors(f1, f2, dims=DIMS)


def _fused_add(a: BiSymbol, b: BiSymbol) -> BiSymbol:
    """Addition that keeps single-slot sums as one tensor term.

    (+ (sq xi1) 1) becomes the single factor (xi1^2 + 1) x 1 rather than two
    terms, so shifted-power recognition (and exact inversion) can see it.
    """
    if len(a.terms) == 1 and len(b.terms) == 1:
        (ca, f1a, f2a), (cb, f1b, f2b) = a.terms[0], b.terms[0]
        if ca.coeffs == cb.coeffs:
            if f2a.key() == f2b.key():
                return BiSymbol(a.dims, ((ca, f1a + f1b, f2a),))
            if f1a.key() == f1b.key():
                return BiSymbol(a.dims, ((ca, f1a, f2a + f2b),))
    return a + b


def _build(node) -> BiSymbol:
    if isinstance(node, _Token):
        return BiSymbol.constant(_number(node), DIMS)
    pos, items = node
    if not items:
        raise ParseError("empty form", pos)
    head = items[0]
    if not isinstance(head, _Token):
        raise ParseError("form head must be an operator name", pos)
    op = head.text
    args = items[1:]

    def need(n: int):
        if len(args) != n:
            raise ParseError(f"{op} expects {n} argument(s), got {len(args)}", pos)

    if op == "+":
        if not args:
            raise ParseError("+ needs at least one argument", pos)
        out = _build(args[0])
        for a in args[1:]:
            out = _fused_add(out, _build(a))
        return out
    if op == "*":
        if not args:
            raise ParseError("* needs at least one argument", pos)
        out = _build(args[0])
        for a in args[1:]:
            out = out * _build(a)
        return out
    if op == "-":
        need(2)
        return _build(args[0]) - _build(args[1])
    if op == "neg":
        need(1)
        return -_build(args[0])
    if op == "sq":
        need(1)
        return _factor_symbol(_slot(args[0]), XiFactor.monomial(2))
    if op == "mono":
        need(2)
        slot = _slot(args[0])
        b = _number(args[1])
        if b.imag or b.real != int(b.real) or b.real < 0:
            raise ParseError("monomial exponent must be a non-negative integer", pos)
        return _factor_symbol(slot, XiFactor.monomial(int(b.real)))
    if op == "bracket":
        need(2)
        slot = _slot(args[0])
        return _factor_symbol(slot, XiFactor.bracket_power(float(_number(args[1]).real)))
    if op == "shpow":
        need(3)
        slot = _slot(args[0])
        c = float(_number(args[1]).real)
        s = float(_number(args[2]).real)
        if c <= 0:
            raise ParseError("shifted power needs c > 0", pos)
        return _factor_symbol(slot, XiFactor.shifted_power(c, s))
    if op == "bumphat":
        need(3)
        slot = _slot(args[0])
        width = float(_number(args[1]).real)
        bw = int(_number(args[2]).real)
        from .fields import bump_multiplier_profile  # circular-free at call time
        prof = bump_multiplier_profile(width, bw)
        return _factor_symbol(slot, XiFactor.tabulated(prof))
    if op == "coef":
        need(2)
        name_tok = args[0]
        if not isinstance(name_tok, _Token) or not name_tok.text.startswith('"'):
            raise ParseError('coef expects a quoted name, e.g. "sin_x1"', pos)
        name = name_tok.text.strip('"')
        try:
            poly = named_coefficient(name, DIMS)
        except KeyError as e:
            raise ParseError(str(e), name_tok.pos) from None
        return BiSymbol.from_factors(XiFactor.one(), XiFactor.one(),
                                     coeff=poly, dims=DIMS) * _build(args[1])
    if op == "wave":
        need(3)
        k1 = int(_number(args[0]).real)
        k2 = int(_number(args[1]).real)
        poly = TrigPoly.wave((k1,), (k2,), DIMS)
        return BiSymbol.from_factors(XiFactor.one(), XiFactor.one(),
                                     coeff=poly, dims=DIMS) * _build(args[2])
    raise ParseError(f"unknown operator {op!r}", head.pos)


def parse_symbol(src: str) -> BiSymbol:
    """Parse a prefix expression into a BiSymbol (raises ParseError)."""
    tokens = tokenize(src)
    if not tokens:
        raise ParseError("empty expression", 0)
    node, i = _parse_sexpr(tokens, 0)
    if i != len(tokens):
        raise ParseError("trailing tokens after expression", tokens[i].pos)
    return _build(node).normalized()
