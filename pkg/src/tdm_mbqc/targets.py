"""Parser for single-mode gate expressions such as ``R(30)*S(20)``.

Grammar (angles in degrees, whitespace ignored)::

    expr    := factor (('*' | '@')? factor)*
    factor  := NAME '(' number ')' | 'I' | matrix
    NAME    := 'R' | 'S' | 'P' | 'RS'
    matrix  := '[[' number ',' number '],[' number ',' number ']]'

``R`` is a rotation, ``S`` a squeeze diag(1/tan, tan), ``P`` a shear and ``RS``
the squeeze followed by a 90 degree rotation. Products read left to right as
matrix products, so ``R(30)*S(20)`` applies S first.
"""

from __future__ import annotations

import re

import numpy as np

from .gates import GateError, check_target, rotation, shear, squeeze

_NUMBER = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")


class TargetParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos}\n  {text}\n  {' ' * pos}^")
        self.pos = pos


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str):
        raise TargetParseError(message, self.text, self.pos)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def number(self) -> float:
        self.skip()
        m = _NUMBER.match(self.text, self.pos)
        if not m:
            self.error("expected a number")
        self.pos = m.end()
        return float(m.group())

    def factor(self) -> np.ndarray:
        ch = self.peek()
        start = self.pos
        if ch == "[":
            return self.matrix()
        if ch == "I":
            self.pos += 1
            return np.eye(2)
        for name in ("RS", "R", "S", "P"):
            if self.text.startswith(name, self.pos):
                self.pos += len(name)
                break
        else:
            self.error("expected a gate (R, S, P, RS, I) or a matrix")
        self.expect("(")
        phi = np.deg2rad(self.number())
        self.expect(")")
        try:
            if name == "R":
                return rotation(phi)
            if name == "S":
                return squeeze(phi)
            if name == "P":
                if abs(np.cos(phi)) < 1e-12:
                    raise GateError("shear angle is unbounded")
                return shear(phi)
            return rotation(np.pi / 2) @ squeeze(phi)
        except GateError as exc:
            self.pos = start
            self.error(str(exc))

    def matrix(self) -> np.ndarray:
        start = self.pos
        rows = []
        self.expect("[")
        for r in range(2):
            if r:
                self.expect(",")
            self.expect("[")
            a = self.number()
            self.expect(",")
            b = self.number()
            self.expect("]")
            rows.append([a, b])
        self.expect("]")
        m = np.array(rows)
        try:
            return check_target(m)
        except GateError as exc:
            self.pos = start
            self.error(str(exc))

    def parse(self) -> np.ndarray:
        if not self.peek():
            self.error("empty gate expression")
        out = self.factor()
        while self.peek():
            if self.peek() in "*@":
                self.pos += 1
            out = out @ self.factor()
        return out


def parse_target(text: str) -> np.ndarray:
    """Parse a gate expression into its 2x2 symplectic matrix."""
    return _Parser(text).parse()
