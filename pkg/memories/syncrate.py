"""
Tasa analítica de sincronización de N fotones.

r_N = tau_c^-1 q^N (1 + (1-R)(1-q) eta0 / (b + (R + q - 2Rq)(1 - b)))^N, con
b = 1 - e^{-1/f} la probabilidad de pérdida por ciclo y R la tasa de intentos
de lectura, derivada de la raíz Y de (1-2q) Y^N + q^2 Y^(N-1) + qY - q = 0.

La potencia de Y que reproduce R = 0.0024 en (N=6, q=1e-3) es Y^(N-1) y no la
Y^N escrita junto a la fórmula; por eso R se elige con una política explícita.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import bisect, newton

from .exceptions import DomainError, SolverError

TABLE_R = 0.0024
TABLE_N = 6
TABLE_Q = 1e-3

BRACKET_EPS = 1e-12
BISECT_XTOL = 1e-8

SECONDS_PER_MINUTE = 60.0


class RPolicyKind(enum.StrEnum):
    ROOT_AS_STATED = 'root_as_stated'
    ROOT_TABLE_CONSISTENT = 'root_table_consistent'
    LITERAL = 'literal'


@dataclass(frozen=True)
class RPolicy:
    """Cómo obtener R: Y^N, Y^(N-1) o un valor literal."""
    kind: RPolicyKind
    value: float | None = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', RPolicyKind(self.kind))
        if self.kind is RPolicyKind.LITERAL:
            if self.value is None or not 0.0 <= self.value < 1.0:
                raise DomainError("la política literal necesita un valor en [0, 1)")
        elif self.value is not None:
            raise DomainError(f"la política {self.kind} no admite valor")

    @classmethod
    def literal(cls, value):
        return cls(RPolicyKind.LITERAL, float(value))

    @classmethod
    def as_stated(cls):
        return cls(RPolicyKind.ROOT_AS_STATED)

    @classmethod
    def table_consistent(cls):
        return cls(RPolicyKind.ROOT_TABLE_CONSISTENT)

    @classmethod
    def parse(cls, text):
        """Acepta 'root_as_stated', 'root_table_consistent', 'literal(0.0024)' o un número."""
        text = str(text).strip()
        if text.startswith('literal(') and text.endswith(')'):
            return cls.literal(float(text[len('literal('):-1]))
        try:
            return cls(RPolicyKind(text))
        except ValueError:
            pass
        try:
            return cls.literal(float(text))
        except ValueError:
            raise DomainError(f"política de R desconocida: '{text}'") from None

    def __str__(self):
        if self.kind is RPolicyKind.LITERAL:
            return f"literal({self.value!r})"
        return self.kind.value


def default_policy(n: int, q: float) -> RPolicy:
    """Literal 0.0024 en el punto de operación de las tablas, si no Y^(N-1)."""
    if n == TABLE_N and math.isclose(q, TABLE_Q, rel_tol=1e-12):
        return RPolicy.literal(TABLE_R)
    return RPolicy.table_consistent()


@dataclass(frozen=True)
class SyncParams:
    n_sources: int
    q: float
    tau_c: float
    eta0: float
    f: float
    r_policy: RPolicy | None = None

    def __post_init__(self):
        if int(self.n_sources) != self.n_sources or self.n_sources < 1:
            raise DomainError("n_sources debe ser un entero >= 1")
        if not 0.0 < self.q < 0.5:
            raise DomainError("q debe estar en (0, 0.5)")
        if not 0.0 <= self.eta0 <= 1.0:
            raise DomainError("eta0 debe estar en [0, 1]")
        if not self.f > 0 or not self.tau_c > 0:
            raise DomainError("f y tau_c deben ser positivos")

    @property
    def policy(self):
        return self.r_policy or default_policy(self.n_sources, self.q)


@dataclass(frozen=True)
class SyncTemplate:
    """Valores fijos de la comparación (N, q, política) a completar por memoria."""
    n_sources: int = TABLE_N
    q: float = TABLE_Q
    r_policy: RPolicy | None = None

    def bind(self, tau_c, eta0, f):
        return SyncParams(self.n_sources, self.q, tau_c, eta0, f, self.r_policy)


@dataclass(frozen=True)
class RateResult:
    rate: float
    enhancement: float
    b: float
    R: float
    Y: float
    policy: str = ''

    @property
    def rate_per_minute(self):
        return per_minute(self.rate)


def per_minute(rate_per_second: float) -> float:
    return rate_per_second * SECONDS_PER_MINUTE


def loss_prob_b(f: float) -> float:
    """Probabilidad de pérdida por ciclo b = 1 - e^{-1/f}."""
    if not f > 0:
        raise DomainError(f"f debe ser positivo, se recibió {f}")
    return -math.expm1(-1.0 / f)


def readout_polynomial(n: int, q: float) -> Polynomial:
    """(1-2q) Y^N + q^2 Y^(N-1) + qY - q como polinomio en Y."""
    coef = np.zeros(n + 1)
    coef[0] -= q
    coef[1] += q
    coef[n - 1] += q * q
    coef[n] += 1.0 - 2.0 * q
    return Polynomial(coef)


def scaled_residual(n: int, q: float, y: float) -> float:
    poly = readout_polynomial(n, q)
    return abs(poly(y)) / np.max(np.abs(poly.coef))


def solve_Y(n: int, q: float) -> float:
    """
    Única raíz del polinomio de lectura en (0, 1).

    Bisección acotada en (eps, 1-eps) hasta 1e-8 y pulido de Newton.
    """
    if int(n) != n or n < 1:
        raise DomainError("N debe ser un entero >= 1")
    if not 0.0 < q < 0.5:
        raise DomainError("solve_Y requiere 0 < q < 0.5")
    n = int(n)
    poly = readout_polynomial(n, q)
    lo, hi = BRACKET_EPS, 1.0 - BRACKET_EPS
    f_lo, f_hi = poly(lo), poly(hi)
    if np.sign(f_lo) == np.sign(f_hi):
        raise SolverError(f"sin cambio de signo en (0, 1) para N={n}, q={q}")
    y = bisect(poly, lo, hi, xtol=BISECT_XTOL)
    polished = newton(poly, y, fprime=poly.deriv(), tol=1e-16, maxiter=50, disp=False)
    if lo < polished < hi and abs(poly(polished)) <= abs(poly(y)):
        y = float(polished)
    return float(y)


def readout_rate_R(n: int, q: float, policy: RPolicy | None = None) -> float:
    policy = policy or default_policy(n, q)
    if policy.kind is RPolicyKind.LITERAL:
        return policy.value
    y = solve_Y(n, q)
    if policy.kind is RPolicyKind.ROOT_AS_STATED:
        return y ** n
    return y ** (n - 1)


def enhancement_factor(eta0: float, q: float, R: float, b: float) -> float:
    """Factor por unidad 1 + (1-R)(1-q) eta0 / (b + (R + q - 2Rq)(1 - b))."""
    denominator = b + (R + q - 2.0 * R * q) * (1.0 - b)
    if denominator <= 0:
        raise DomainError("denominador nulo en el factor de mejora")
    return 1.0 + (1.0 - R) * (1.0 - q) * eta0 / denominator


def n_photon_rate(p: SyncParams) -> RateResult:
    """Tasa de eventos de N fotones en s^-1 (rate_per_minute para min^-1)."""
    policy = p.policy
    b = loss_prob_b(p.f)
    y = solve_Y(p.n_sources, p.q)
    if policy.kind is RPolicyKind.LITERAL:
        r = policy.value
    else:
        r = y ** p.n_sources if policy.kind is RPolicyKind.ROOT_AS_STATED else y ** (p.n_sources - 1)
    enhancement = enhancement_factor(p.eta0, p.q, r, b)
    rate = (p.q * enhancement) ** p.n_sources / p.tau_c
    return RateResult(rate=rate, enhancement=enhancement, b=b, R=r, Y=y, policy=str(policy))
