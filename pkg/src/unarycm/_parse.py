"""Tokenizer for the plain-text polynomial syntax shared by both symbolic layers.

A text is a signed sum of terms; a term is a product of factors separated by
whitespace or ``*``.  Factors are numbers (``3``, ``3/2``, ``0.25``, ``2j``),
the imaginary unit ``j``, or symbols with an optional ``^k`` power.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ._numbers import ONE, CRational

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?(?:/\d+)?j?)"
    r"|(?P<sym>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*^()])"
    r")"
)


class ParseError(ValueError):
    """Malformed polynomial text."""


def _tokens(text: str):
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        pos = m.end()
        for kind in ("num", "sym", "op"):
            if m.group(kind) is not None:
                yield kind, m.group(kind)
                break


def _number(tok: str):
    imag = tok.endswith("j")
    if imag:
        tok = tok[:-1]
    val = Fraction(tok)
    return CRational(0, val) if imag else CRational(val)


def parse_terms(text: str, symbols):
    """Split ``text`` into ``[(coeff, [(symbol, power), ...]), ...]``.

    Factor order inside a term is preserved, which matters for the
    noncommutative layer.
    """
    symbols = set(symbols)
    toks = list(_tokens(text))
    if not toks:
        raise ParseError("empty expression")
    terms = []
    i = 0
    sign = 1
    expect_term = True
    coeff, factors = ONE, []

    def flush():
        nonlocal coeff, factors
        terms.append((coeff * sign, factors))
        coeff, factors = ONE, []

    while i < len(toks):
        kind, tok = toks[i]
        if kind == "op" and tok in "+-":
            if not expect_term:
                flush()
                sign = 1
            if tok == "-":
                sign = -sign
            expect_term = True
            i += 1
            continue
        if kind == "op" and tok == "*":
            if expect_term:
                raise ParseError("dangling '*'")
            i += 1
            continue
        if kind == "op":
            raise ParseError(f"unsupported operator {tok!r}")
        power = 1
        if i + 1 < len(toks) and toks[i + 1] == ("op", "^"):
            if i + 2 >= len(toks) or toks[i + 2][0] != "num" or not toks[i + 2][1].isdigit():
                raise ParseError("'^' must be followed by a non-negative integer")
            power = int(toks[i + 2][1])
            i += 2
        if kind == "num":
            coeff = coeff * _number(tok) ** power
        elif tok == "j":
            coeff = coeff * CRational(0, 1) ** power
        elif tok in symbols:
            if power:
                factors.append((tok, power))
        else:
            raise ParseError(f"unknown symbol {tok!r}; expected one of {sorted(symbols)}")
        expect_term = False
        i += 1
    if expect_term:
        raise ParseError("expression ends with an operator")
    flush()
    return terms


def format_terms(pairs) -> str:
    """Render ``[(coeff, monomial_text), ...]`` in the same syntax ``parse_terms`` reads."""
    from ._numbers import format_coeff

    parts = []
    split = []
    for coeff, mono in pairs:
        re_, im_ = coeff.real, coeff.imag
        if re_ and im_:
            # keeps the output parseable: no parenthesized complex literals
            split.append((type(coeff)(re_) if not isinstance(coeff, complex) else complex(re_), mono))
            split.append((coeff - split[-1][0], mono))
        else:
            split.append((coeff, mono))
    for coeff, mono in split:
        ctext = format_coeff(coeff)
        if mono:
            if coeff == 1:
                ctext = ""
            elif coeff == -1:
                ctext = "-"
            else:
                ctext += " "
        parts.append(ctext + mono)
    if not parts:
        return "0"
    text = parts[0]
    for part in parts[1:]:
        text += " - " + part[1:] if part.startswith("-") else " + " + part
    return text
