"""Exact real quadratic irrationals ``(p + q*sqrt(s)) / r``.

Comparisons never touch floating point: the sign of a sum of at most two
square roots plus a rational is decided by squaring.
"""

from __future__ import annotations

import functools
import math
import re
from fractions import Fraction

_SMALL_PRIMES = None
_FACTOR_LIMIT = 10 ** 24


def _small_primes(limit=1000):
    global _SMALL_PRIMES
    if _SMALL_PRIMES is None:
        sieve = bytearray([1]) * (limit + 1)
        sieve[0:2] = b"\x00\x00"
        for i in range(2, int(limit ** 0.5) + 1):
            if sieve[i]:
                sieve[i * i :: i] = bytearray(len(sieve[i * i :: i]))
        _SMALL_PRIMES = [i for i, v in enumerate(sieve) if v]
    return _SMALL_PRIMES


def square_part(s: int) -> tuple:
    """Split ``s = m**2 * t`` with ``t`` squarefree (best effort beyond 10**24)."""
    if s < 0:
        raise ValueError("negative radicand")
    if s == 0:
        return 0, 0
    root = math.isqrt(s)
    if root * root == s:
        return root, 1
    m = 1
    if s < _FACTOR_LIMIT:
        from sympy import factorint

        t = 1
        for prime, e in factorint(s).items():
            m *= prime ** (e // 2)
            t *= prime ** (e % 2)
        return m, t
    for prime in _small_primes():
        pp = prime * prime
        while s % pp == 0:
            s //= pp
            m *= prime
    root = math.isqrt(s)
    if root * root == s:
        return m * root, 1
    return m, s


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def sign_sqrt1(u, v, t) -> int:
    """Sign of ``u + v*sqrt(t)`` for rationals ``u, v`` and integer ``t >= 0``."""
    su = _sign(u)
    sv = _sign(v) if t else 0
    if sv == 0:
        return su
    if su == 0 or su == sv:
        return sv
    # opposite signs: compare magnitudes by squaring
    return su * _sign(u * u - v * v * t)


def sign_sqrt2(u, a, s1, b, s2) -> int:
    """Sign of ``u + a*sqrt(s1) + b*sqrt(s2)``."""
    if not s1:
        a = 0
    if not s2:
        b = 0
    ya, yb = _sign(a), _sign(b)
    if ya == 0:
        y_sign = yb
    elif yb == 0 or ya == yb:
        y_sign = ya
    else:
        y_sign = ya * _sign(a * a * s1 - b * b * s2)
    su = _sign(u)
    if y_sign == 0:
        return su
    if su == 0 or su == y_sign:
        return y_sign
    # opposite signs: sign(u + y) = sign(u) * sign(u^2 - y^2),
    # y^2 = a^2 s1 + b^2 s2 + 2ab sqrt(s1 s2)
    return su * sign_sqrt1(u * u - a * a * s1 - b * b * s2, -2 * a * b, s1 * s2)


@functools.total_ordering
class QuadraticRoot:
    """The real number ``(p + q*sqrt(s)) / r``.

    Canonical form: integers, ``r > 0``, ``s`` squarefree (or ``q = s = 0``
    for rationals) and ``gcd(p, q, r) = 1``.
    """

    __slots__ = ("p", "q", "s", "r", "_approx")

    def __init__(self, p, q=0, s=0, r=1):
        p, q, s, r = Fraction(p), Fraction(q), int(s), Fraction(r)
        if r == 0:
            raise ZeroDivisionError("denominator r must be nonzero")
        if s < 0:
            raise ValueError("radicand must be nonnegative")
        m, t = square_part(s)
        # q*sqrt(s) = q*m*sqrt(t)
        q = q * m
        s = t
        if q == 0 or s == 0:
            q, s = Fraction(0), 0
        elif s == 1:
            p, q, s = p + q, Fraction(0), 0
        L = math.lcm(p.denominator, q.denominator, r.denominator)
        P, Qn, R = int(p * L), int(q * L), int(r * L)
        if R < 0:
            P, Qn, R = -P, -Qn, -R
        g = math.gcd(math.gcd(P, Qn), R)
        self.p, self.q, self.s, self.r = P // g, Qn // g, s, R // g
        self._approx = None

    # construction ---------------------------------------------------------
    @classmethod
    def rational(cls, value) -> "QuadraticRoot":
        value = Fraction(value)
        return cls(value.numerator, 0, 0, value.denominator)

    @classmethod
    def coerce(cls, value) -> "QuadraticRoot":
        if isinstance(value, QuadraticRoot):
            return value
        return cls.rational(value)

    @property
    def is_rational(self) -> bool:
        return self.q == 0

    def as_fraction(self) -> Fraction:
        if not self.is_rational:
            raise ValueError(f"{self} is irrational")
        return Fraction(self.p, self.r)

    # arithmetic that stays in Q(sqrt s) ------------------------------------
    def affine(self, a, b) -> "QuadraticRoot":
        """``a + b * self`` for rationals ``a, b``."""
        a, b = Fraction(a), Fraction(b)
        return QuadraticRoot(a * self.r + b * self.p, b * self.q, self.s, self.r)

    def parts(self) -> tuple:
        """``(u, v)`` rationals with ``self = u + v*sqrt(s)``."""
        return Fraction(self.p, self.r), Fraction(self.q, self.r)

    def eval_poly_sign(self, coeffs) -> int:
        """Sign of ``sum(c_k * self**k)`` for rational coefficients (low degree first)."""
        u, v = self.parts()
        s = self.s
        # accumulate value as A + B*sqrt(s)
        A, B = Fraction(0), Fraction(0)
        pa, pb = Fraction(1), Fraction(0)
        for c in coeffs:
            A += c * pa
            B += c * pb
            pa, pb = pa * u + pb * v * s, pa * v + pb * u
        return sign_sqrt1(A, B, s)

    # order ----------------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, (QuadraticRoot, int, Fraction)):
            return NotImplemented
        return compare_roots(self, QuadraticRoot.coerce(other)) == 0

    def __lt__(self, other):
        if not isinstance(other, (QuadraticRoot, int, Fraction)):
            return NotImplemented
        return compare_roots(self, QuadraticRoot.coerce(other)) < 0

    def __hash__(self):
        return hash((self.p, self.q, self.s, self.r))

    # approximation ----------------------------------------------------------
    def bounds(self, bits: int) -> tuple:
        """Rational ``(lo, hi)`` enclosing the value, width about ``|q|/r * 2**-bits``."""
        if self.q == 0:
            v = Fraction(self.p, self.r)
            return v, v
        scale = 1 << bits
        root_lo = Fraction(math.isqrt(self.s * scale * scale), scale)
        root_hi = root_lo + Fraction(1, scale)
        a = Fraction(self.p, self.r) + Fraction(self.q, self.r) * root_lo
        b = Fraction(self.p, self.r) + Fraction(self.q, self.r) * root_hi
        return (a, b) if a <= b else (b, a)

    def __float__(self):
        if self._approx is None:
            lo, hi = self.bounds(64)
            self._approx = float((lo + hi) / 2)
        return self._approx

    def to_string(self) -> str:
        if self.q == 0:
            return f"{self.p}/{self.r}"
        return f"({self.p}+{self.q}*sqrt({self.s}))/{self.r}"

    __str__ = to_string

    def __repr__(self):
        return f"QuadraticRoot({self.p}, {self.q}, {self.s}, {self.r})"

    @classmethod
    def parse(cls, text: str) -> "QuadraticRoot":
        text = text.replace(" ", "")
        m = re.fullmatch(r"\((-?\d+)\+(-?\d+)\*sqrt\((\d+)\)\)/(\d+)", text)
        if m:
            return cls(*(int(g) for g in m.groups()))
        m = re.fullmatch(r"(-?\d+)(?:/(\d+))?", text)
        if m:
            return cls.rational(Fraction(int(m.group(1)), int(m.group(2) or 1)))
        raise ValueError(f"cannot parse quadratic root {text!r}")


def compare_roots(a, b) -> int:
    """Exact three-way comparison: -1, 0 or 1."""
    a = QuadraticRoot.coerce(a)
    b = QuadraticRoot.coerce(b)
    # a - b = (p1 r2 - p2 r1 + q1 r2 sqrt s1 - q2 r1 sqrt s2) / (r1 r2), r1 r2 > 0
    u = a.p * b.r - b.p * a.r
    return sign_sqrt2(u, a.q * b.r, a.s, -b.q * a.r, b.s)


def rational_between(a: QuadraticRoot, b: QuadraticRoot) -> Fraction:
    """A rational strictly between ``a < b``, chosen with small height."""
    if not a < b:
        raise ValueError("need a < b")
    bits = 32
    while True:
        _, a_hi = a.bounds(bits)
        b_lo, _ = b.bounds(bits)
        if a_hi < b_lo:
            lo, hi = a_hi, b_lo
            mid = (lo + hi) / 2
            # prefer a short fraction inside (lo, hi)
            for den in (1, 2, 4, 8, 16, 64, 256, 1024):
                cand = Fraction(round(mid * den), den)
                if lo < cand < hi:
                    return cand
            return mid
        bits *= 2


def quadratic_roots(c0, c1, c2) -> list:
    """Distinct real roots of ``c2 x^2 + c1 x + c0`` (rational coefficients), sorted.

    Identically zero and root-free polynomials yield an empty list; callers
    treat those by sign.
    """
    c0, c1, c2 = Fraction(c0), Fraction(c1), Fraction(c2)
    if c2 == 0:
        if c1 == 0:
            return []
        return [QuadraticRoot.rational(-c0 / c1)]
    disc = c1 * c1 - 4 * c2 * c0
    if disc < 0:
        return []
    if disc == 0:
        return [QuadraticRoot.rational(-c1 / (2 * c2))]
    # sqrt(disc) with disc = N/D -> sqrt(N*D)/D
    N, D = disc.numerator, disc.denominator
    r1 = QuadraticRoot(-c1, Fraction(-1, D), N * D, 2 * c2)
    r2 = QuadraticRoot(-c1, Fraction(1, D), N * D, 2 * c2)
    return sorted([r1, r2])
