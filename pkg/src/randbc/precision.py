"""Arithmetic environments: native binary64/binary32 plus an emulated base-10 toy machine.

A ScalarMode fixes the representable value set and the rounding applied to
scalar operations, realizing the model fl(x op y) = (x op y)(1 + d) with
|d| <= epsilon_machine.  The decimal mode keeps t significant digits using
exact integer-mantissa arithmetic (the stdlib decimal module), which is
platform independent; it never touches native floats between operations, so
ties round exactly as specified.

Two granularities are exposed.  The scalar primitives fl, rounded_op and
sequential_sum implement the strict per-operation model: every result, sums
included, is rounded once to the representable set.  The matrix engine
follows the classic convention of worked t-digit examples for the decimal
kind: multiplications, divisions, and square roots round to t significant
digits while additions and subtractions are carried exactly, mantissas
merged at full length (1.98 stays 1.98, fl(1.98 * 1.98) = 3.9).  Both
granularities satisfy the (1 + d) model; the engine's additions simply take
d = 0, which is unconditional here: every addend has at most 2t significant
digits and an adjusted exponent in [-99, 99], so any chain of sums spans
fewer than 220 digits, far below the additive working precision.
"""

from __future__ import annotations

import decimal
from contextlib import nullcontext
from dataclasses import dataclass
from decimal import Decimal

import numpy as np

HALF_EVEN = "half_even"
HALF_AWAY = "half_away"

_DECIMAL_ROUNDING = {
    HALF_EVEN: decimal.ROUND_HALF_EVEN,
    HALF_AWAY: decimal.ROUND_HALF_UP,
}

# Exponent range of the decimal toy machine: adjusted exponents with |e| <= 99.
_DECIMAL_EMAX = 99
_DECIMAL_EMIN = -99

# Working precision of the exact-addition context.  Addends carry <= 2t
# digits with adjusted exponents in [-99, 99], so exact sums need fewer than
# max-exponent - min-exponent + 2t + carry ~ 220 digits for any t <= 10.
_DECIMAL_ADD_PREC = 500


@dataclass(frozen=True)
class ScalarMode:
    """One arithmetic environment.

    kind     : "double" (binary64), "single" (binary32) or "decimal"
    digits   : significant decimal digits kept per operation (decimal kind only)
    rounding : tie rule for the decimal kind; binary kinds are always
               round-to-nearest, ties-to-even
    """

    kind: str
    digits: int | None = None
    rounding: str = HALF_EVEN

    def __post_init__(self):
        if self.kind not in ("double", "single", "decimal"):
            raise ValueError(f"unknown mode kind: {self.kind!r}")
        if self.kind == "decimal":
            if not self.digits or self.digits < 1:
                raise ValueError("decimal mode needs digits >= 1")
            if self.rounding not in _DECIMAL_ROUNDING:
                raise ValueError(f"unknown tie rule: {self.rounding!r}")
        elif self.digits is not None:
            raise ValueError("digits only apply to the decimal kind")

    # -- structural properties ------------------------------------------------

    @property
    def epsilon_machine(self) -> float:
        """Unit roundoff: 2^-53, 2^-24, or 0.5 * 10^(1-t)."""
        if self.kind == "double":
            return 2.0 ** -53
        if self.kind == "single":
            return 2.0 ** -24
        return 0.5 * 10.0 ** (1 - self.digits)

    @property
    def dtype(self):
        """numpy dtype used for matrices held in this mode."""
        if self.kind == "double":
            return np.float64
        if self.kind == "single":
            return np.float32
        return object

    @property
    def label(self) -> str:
        """Command-line token for this mode: f64, f32, or dec<t>."""
        if self.kind == "double":
            return "f64"
        if self.kind == "single":
            return "f32"
        return f"dec{self.digits}"

    # -- value handling --------------------------------------------------------

    def _decimal_context(self, prec: int):
        ctx = decimal.Context(
            prec=prec,
            rounding=_DECIMAL_ROUNDING[self.rounding],
            Emin=_DECIMAL_EMIN,
            Emax=_DECIMAL_EMAX,
            traps=[decimal.Overflow, decimal.InvalidOperation, decimal.DivisionByZero],
        )
        return decimal.localcontext(ctx)

    def context(self):
        """Ambient context: exact additive arithmetic for the decimal kind."""
        if self.kind != "decimal":
            return nullcontext()
        return self._decimal_context(_DECIMAL_ADD_PREC)

    def product_context(self):
        """Context rounding multiplicative operations to t significant digits."""
        if self.kind != "decimal":
            return nullcontext()
        return self._decimal_context(self.digits)

    def zero(self):
        return Decimal(0) if self.kind == "decimal" else 0.0

    def array(self, a) -> np.ndarray:
        """Round an array-like into this mode's representable set (idempotent)."""
        if self.kind == "decimal" and isinstance(a, np.ndarray) and a.dtype == object:
            return a
        x = np.asarray(a, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise ValueError("input contains non-finite entries")
        if self.kind == "double":
            return x.copy() if x is a else x
        if self.kind == "single":
            y = x.astype(np.float32)
            if not np.all(np.isfinite(y)):
                raise OverflowError("value outside binary32 range")
            return y
        out = np.empty(x.shape, dtype=object)
        flat_in = x.ravel()
        flat_out = out.ravel()
        with self.product_context():
            ctx = decimal.getcontext()
            for i in range(flat_in.size):
                flat_out[i] = ctx.create_decimal(Decimal(float(flat_in[i])))
        return out

    def to_double(self, a) -> np.ndarray:
        """Nearest binary64 image of a mode-typed array."""
        if isinstance(a, np.ndarray) and a.dtype == object:
            return np.asarray(a, dtype=np.float64)
        return np.asarray(a, dtype=np.float64)


DOUBLE = ScalarMode("double")
SINGLE = ScalarMode("single")


def decimal_mode(digits: int, rounding: str = HALF_EVEN) -> ScalarMode:
    """Toy base-10 machine keeping `digits` significant digits per operation."""
    return ScalarMode("decimal", digits=digits, rounding=rounding)


def parse_precision(token: str) -> ScalarMode:
    """Parse a CLI precision token: f64, f32, or dec<t> (e.g. dec2)."""
    if token == "f64":
        return DOUBLE
    if token == "f32":
        return SINGLE
    if token.startswith("dec"):
        try:
            digits = int(token[3:])
        except ValueError:
            raise ValueError(f"bad precision token: {token!r}") from None
        return decimal_mode(digits)
    raise ValueError(f"bad precision token: {token!r}")


def fl(x, mode: ScalarMode):
    """Round one real to the mode's representable set.

    Idempotent: fl(fl(x)) == fl(x).  Raises OverflowError when the rounded
    magnitude leaves the mode's exponent range.
    """
    if mode.kind == "double":
        y = float(x)
        if y != y or y in (float("inf"), float("-inf")):
            raise ValueError("non-finite input")
        return y
    if mode.kind == "single":
        xf = float(x)
        if xf != xf or xf in (float("inf"), float("-inf")):
            raise ValueError("non-finite input")
        y = np.float32(xf)
        if not np.isfinite(y):
            raise OverflowError("value outside binary32 range")
        return float(y)
    with mode.product_context():
        ctx = decimal.getcontext()
        if isinstance(x, Decimal):
            exact = x
        elif isinstance(x, int):
            exact = Decimal(x)
        elif isinstance(x, str):
            exact = Decimal(x)
        else:
            exact = Decimal(float(x))
        try:
            return ctx.create_decimal(exact)
        except decimal.Overflow:
            raise OverflowError("value outside decimal exponent range") from None


def rounded_op(x, y, op: str, mode: ScalarMode):
    """One scalar operation rounded once: fl(x op y), with op in {'+', '-', '*'}.

    The exact result is formed first and then rounded to the mode's
    representable set, so |fl(x op y) - (x op y)| <= epsilon * |x op y|.
    """
    if op not in ("+", "-", "*"):
        raise ValueError(f"unsupported op: {op!r}")
    if mode.kind == "decimal":
        a = x if isinstance(x, Decimal) else Decimal(float(x))
        b = y if isinstance(y, Decimal) else Decimal(float(y))
        try:
            with mode.context():
                if op == "+":
                    exact = a + b
                elif op == "-":
                    exact = a - b
                else:
                    exact = a * b
            with mode.product_context():
                return decimal.getcontext().create_decimal(exact)
        except decimal.Overflow:
            raise OverflowError("value outside decimal exponent range") from None
    if mode.kind == "single":
        a, b = np.float32(x), np.float32(y)
        with np.errstate(over="ignore", invalid="ignore"):
            if op == "+":
                z = a + b
            elif op == "-":
                z = a - b
            else:
                z = a * b
        if not np.isfinite(z):
            raise OverflowError("value outside binary32 range")
        return float(z)
    a, b = float(x), float(y)
    if op == "+":
        z = a + b
    elif op == "-":
        z = a - b
    else:
        z = a * b
    if z != z or z in (float("inf"), float("-inf")):
        raise OverflowError("value outside binary64 range")
    return z


def sequential_sum(values, mode: ScalarMode):
    """Left-to-right fold of rounded additions; the empty sum is zero.

    The order of `values` is part of the contract: each partial sum is
    rounded before the next addend arrives.
    """
    acc = None
    for v in values:
        acc = v if acc is None else rounded_op(acc, v, "+", mode)
    return mode.zero() if acc is None else acc
