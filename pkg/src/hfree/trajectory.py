"""Closed-form trajectory functions for the process: the open-pair density
q(t), the closure rate c(t), extension densities x(t), the error envelope
machinery (P, e, gamma, theta), tail bounds, and the independent-set size
target alpha.

All exponent arithmetic stays rational until the final substitution of n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .graphs import forbidden_graph


@dataclass(frozen=True)
class TrajectoryParams:
    """The constants of the analysis for a given forbidden graph and n.

    Defaults deliberately break the asymptotic ordering mu << eps << 1/W
    << 1/V at desk scale; they are configuration, not derived quantities.
    """

    h: object
    n: int
    mu: float = 0.1
    epsilon: float = 0.01
    W: float = 10.0
    V: float = 0.0   # 0 means: largest default pattern size plus one

    def __post_init__(self):
        object.__setattr__(self, "h", forbidden_graph(self.h))
        if self.n < 3:
            raise ValueError("n must be at least 3")
        for name in ("mu", "epsilon", "W"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.V <= 0:
            # every default catalogue pattern has at most v_H vertices and
            # e_H - 1 edges; both must stay strictly below V
            g = self.h.graph
            object.__setattr__(
                self, "V", float(max(g.vertex_count, g.edge_count - 1) + 1))

    @property
    def e_h(self):
        return self.h.graph.edge_count

    @property
    def aut_h(self):
        return self.h.aut_count

    @property
    def a_h(self):
        """Closure-rate constant 4 e_H (e_H - 1) / aut(H)."""
        return Fraction(4 * self.e_h * (self.e_h - 1), self.aut_h)

    @property
    def rho(self):
        return self.h.rho

    @property
    def p(self):
        return float(self.n) ** float(-self.rho)

    @property
    def s(self):
        """Time scale p n^2."""
        return float(self.n) ** float(2 - self.rho)

    @property
    def s_e(self):
        """Relative error scale n^(1/(2 e_H) - eps)."""
        return float(self.n) ** (1.0 / (2 * self.e_h) - self.epsilon)

    @property
    def t_max(self):
        return self.mu * math.log(self.n) ** (1.0 / (self.e_h - 1))

    @property
    def m(self):
        """Analysed step horizon round(t_max * p * n^2)."""
        return int(round(self.t_max * self.s))

    def t_of(self, i):
        return i / self.s

    def step_of(self, t):
        return int(round(t * self.s))


@dataclass(frozen=True)
class EnvelopeRow:
    t: float
    q: float
    e_t: float
    theta_t: float
    gamma_t: float


def q_of_t(params, t):
    """Open-pair density exp(-2 e_H aut(H)^{-1} (2t)^{e_H - 1})."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return math.exp(-2.0 * params.e_h / params.aut_h
                    * (2.0 * t) ** (params.e_h - 1))


def c_of_t(params, t):
    """Closure rate a_H (2t)^{e_H - 2} q(t); satisfies q' = -c."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return float(params.a_h) * (2.0 * t) ** (params.e_h - 2) * q_of_t(params, t)


def _x_from_counts(params, e_j, e_gamma, t):
    if e_j == 0:
        base = 1.0
    else:
        base = (2.0 * t) ** e_j
    return base * q_of_t(params, t) ** (e_gamma - e_j)


def x_of_t(params, pattern, t):
    """Extension density (2t)^{e_J} q(t)^{e_Gamma - e_J}."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return _x_from_counts(params, pattern.e_j, pattern.e_gamma, t)


def p_of_t(params, t):
    """Error-growth exponent W (t^{e_H - 1} + t)."""
    return params.W * (t ** (params.e_h - 1) + t)


def e_of_t(params, t):
    """Relative error amplitude exp(P(t)) - 1; zero at t = 0."""
    return math.expm1(p_of_t(params, t))


# gamma saturates just below the hard cap 1/2 so theta stays in [1/2, 1)
_GCAP = 0.499


def gamma_of_t(params, t):
    """A smooth increasing representative of the drift-correction function:
    initial slope 40 V exp(40 V), saturating at 0.499 < 1/2."""
    if t <= 0:
        return 0.0
    # slope * t computed in log space: the slope overflows double for V >= 16
    ln_arg = math.log(40.0 * params.V) + 40.0 * params.V + math.log(t / _GCAP)
    if ln_arg > 40.0:
        return _GCAP
    return _GCAP * math.tanh(math.exp(ln_arg))


def theta_of_t(params, t):
    return 0.5 + gamma_of_t(params, t)


def envelope_row(params, t):
    return EnvelopeRow(t=t, q=q_of_t(params, t), e_t=e_of_t(params, t),
                       theta_t=theta_of_t(params, t),
                       gamma_t=gamma_of_t(params, t))


def envelope(params, t, scaling_exp, x_t):
    """Bounds (1 -+ e(t)/s_e)(x_t -+ theta(t)/s_e) n^scaling_exp, the lower
    one clamped at 0."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    scale = float(params.n) ** float(scaling_exp)
    rel = e_of_t(params, t) / params.s_e
    add = theta_of_t(params, t) / params.s_e
    lo = max(0.0, (1.0 - rel) * (x_t - add) * scale)
    hi = (1.0 + rel) * (x_t + add) * scale
    return lo, hi


def ode_residual(params, pattern, t, step_h=1e-5):
    """Defect of the extension-density differential equation

        q x' = 2 sum_{e in J} x_{J minus e} - (e_Gamma - e_J) c x

    with x' by central finite difference; near zero for the closed forms."""
    if t <= 0:
        raise ValueError("t must be positive")
    if step_h <= 0 or step_h >= t:
        raise ValueError("step_h must lie in (0, t)")
    e_j, e_g = pattern.e_j, pattern.e_gamma
    xp = (_x_from_counts(params, e_j, e_g, t + step_h)
          - _x_from_counts(params, e_j, e_g, t - step_h)) / (2 * step_h)
    lhs = q_of_t(params, t) * xp
    rhs = 2.0 * e_j * _x_from_counts(params, e_j - 1, e_g, t) if e_j else 0.0
    rhs -= (e_g - e_j) * c_of_t(params, t) * _x_from_counts(params, e_j, e_g, t)
    return abs(lhs - rhs)


def martingale_tail(eta, N, m, a, supermartingale=False):
    """Tail probability bound exp(-a^2 / (3 eta m N)) for a martingale with
    increment spread eta and variance proxy N over m steps; the
    supermartingale flag additionally enforces a <= eta m / 10."""
    if eta > N / 10:
        raise ValueError(f"precondition eta <= N/10 violated: {eta} > {N / 10}")
    if m < 1:
        raise ValueError(f"precondition m >= 1 violated: m = {m}")
    if a <= 0:
        raise ValueError(f"precondition a > 0 violated: a = {a}")
    if supermartingale and a > eta * m / 10:
        raise ValueError(
            f"precondition a <= eta*m/10 violated: {a} > {eta * m / 10}")
    return math.exp(-a * a / (3.0 * eta * m * N))


def alpha_bound(params):
    """Independent-set size target 3 mu^{-1} (log n)^{1 - 1/(e_H - 1)} p^{-1}."""
    if params.n < 3:
        raise ValueError("n must be at least 3")
    return (3.0 / params.mu
            * math.log(params.n) ** (1.0 - 1.0 / (params.e_h - 1))
            * float(params.n) ** float(params.rho))
