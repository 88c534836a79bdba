# src/kato_scat/potential/potential.py

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate, optimize, special

from kato_scat.errors import ConfigError, NonIntegrableTail

FAMILIES = ("zero", "stack", "exponential", "gaussian", "sampled")
TAIL_KINDS = ("exponential", "power")


class KatoVerdict(str, Enum):
    GUARANTEED_SIMILAR = "guaranteed_similar"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, eq=False)
class Potential:
    """
    A bounded complex potential V on the half-line.

    Families:
        zero:        V = 0.
        stack:       piecewise constant, `intervals` holds (x0, x1, value) triples.
        exponential: V = amplitude * exp(-rate * x).
        gaussian:    V = amplitude * exp(-(x / width)**2).
        sampled:     linear interpolation of `samples` on `abscissae`, continued past the
                     last abscissa by the declared tail (exponential rate or power exponent).
    """

    family: str = "zero"
    intervals: tuple = ()
    amplitude: complex = 0j
    rate: float = 1.0
    width: float = 1.0
    abscissae: np.ndarray | None = None
    samples: np.ndarray | None = None
    tail_kind: str = "exponential"
    tail_rate: float = 1.0
    label: str = field(default="")

    # --- constructors ---

    @classmethod
    def zero(cls) -> "Potential":
        return cls(family="zero", label="zero")

    @classmethod
    def step(cls, v0: float, a: float, theta: float = 0.0) -> "Potential":
        """V = v0 * exp(i theta) on [0, a], zero beyond."""
        if a <= 0:
            raise ConfigError(f"step width must be positive, got {a}")
        value = complex(v0 * np.exp(1j * theta))
        if value == 0:
            return cls.zero()
        return cls(family="stack", intervals=((0.0, float(a), value),), label=f"step({v0}, {a}, {theta})")

    @classmethod
    def stack(cls, intervals) -> "Potential":
        cleaned = []
        for x0, x1, value in sorted(intervals, key=lambda item: item[0]):
            if not 0 <= x0 < x1:
                raise ConfigError(f"stack interval [{x0}, {x1}] is not an increasing sub-interval of [0, inf)")
            if cleaned and x0 < cleaned[-1][1]:
                raise ConfigError(f"stack intervals overlap at x = {x0}")
            cleaned.append((float(x0), float(x1), complex(value)))
        if not cleaned or all(v == 0 for _, _, v in cleaned):
            return cls.zero()
        return cls(family="stack", intervals=tuple(cleaned), label="stack")

    @classmethod
    def exponential(cls, amplitude: complex, rate: float) -> "Potential":
        if rate <= 0:
            raise ConfigError(f"exponential rate must be positive, got {rate}")
        return cls(family="exponential", amplitude=complex(amplitude), rate=float(rate),
                   label=f"exponential({amplitude}, {rate})")

    @classmethod
    def gaussian(cls, amplitude: complex, width: float) -> "Potential":
        if width <= 0:
            raise ConfigError(f"gaussian width must be positive, got {width}")
        return cls(family="gaussian", amplitude=complex(amplitude), width=float(width),
                   label=f"gaussian({amplitude}, {width})")

    @classmethod
    def sampled(cls, abscissae, samples, tail_kind: str = "exponential", tail_rate: float = 1.0) -> "Potential":
        x = np.asarray(abscissae, dtype=float)
        v = np.asarray(samples, dtype=complex)
        if x.ndim != 1 or x.shape != v.shape or x.size < 2:
            raise ConfigError("sampled potential needs matching one-dimensional abscissae and values")
        if x[0] != 0.0 or np.any(np.diff(x) <= 0):
            raise ConfigError("sampled abscissae must start at 0 and increase strictly")
        if tail_kind not in TAIL_KINDS:
            raise ConfigError(f"unknown tail kind '{tail_kind}', expected one of {TAIL_KINDS}")
        if tail_rate <= 0:
            raise ConfigError(f"tail constant must be positive, got {tail_rate}")
        return cls(family="sampled", abscissae=x, samples=v, tail_kind=tail_kind, tail_rate=float(tail_rate),
                   label=f"sampled({x.size} points, {tail_kind} tail)")

    # --- evaluation ---

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.family == "zero":
            return np.zeros(x.shape, dtype=complex)
        if self.family == "stack":
            values = np.zeros(x.shape, dtype=complex)
            for x0, x1, value in self.intervals:
                values[(x >= x0) & (x < x1)] = value
            return values
        if self.family == "exponential":
            return self.amplitude * np.exp(-self.rate * x)
        if self.family == "gaussian":
            return self.amplitude * np.exp(-(x / self.width) ** 2)
        return self._sampled_values(x)

    def _sampled_values(self, x: np.ndarray) -> np.ndarray:
        x_last = self.abscissae[-1]
        inside = np.interp(np.minimum(x, x_last), self.abscissae, self.samples.real) \
            + 1j * np.interp(np.minimum(x, x_last), self.abscissae, self.samples.imag)
        beyond = x > x_last
        if not np.any(beyond):
            return inside
        profile = self._tail_profile(x[beyond])
        inside[beyond] = self.samples[-1] * profile
        return inside

    def _tail_profile(self, x):
        x_last = self.abscissae[-1]
        if self.tail_kind == "exponential":
            return np.exp(-self.tail_rate * (x - x_last))
        return (x_last / x) ** self.tail_rate

    def scaled(self, factor: complex) -> "Potential":
        """Pointwise multiple c*V of the same family."""
        if self.family == "zero" or factor == 0:
            return Potential.zero()
        if self.family == "stack":
            return Potential.stack([(x0, x1, factor * v) for x0, x1, v in self.intervals])
        if self.family == "exponential":
            return Potential.exponential(factor * self.amplitude, self.rate)
        if self.family == "gaussian":
            return Potential.gaussian(factor * self.amplitude, self.width)
        return Potential.sampled(self.abscissae, factor * self.samples, self.tail_kind, self.tail_rate)

    def conjugate(self) -> "Potential":
        """The potential conj(V) of the adjoint operator."""
        if self.family == "zero":
            return self
        if self.family == "stack":
            return Potential.stack([(x0, x1, np.conj(v)) for x0, x1, v in self.intervals])
        if self.family == "exponential":
            return Potential.exponential(np.conj(self.amplitude), self.rate)
        if self.family == "gaussian":
            return Potential.gaussian(np.conj(self.amplitude), self.width)
        return Potential.sampled(self.abscissae, np.conj(self.samples), self.tail_kind, self.tail_rate)

    # --- structural data ---

    @property
    def is_zero(self) -> bool:
        return self.family == "zero"

    @property
    def is_piecewise_constant(self) -> bool:
        return self.family in ("zero", "stack")

    @property
    def is_real(self) -> bool:
        if self.family == "zero":
            return True
        if self.family == "stack":
            return all(v.imag == 0 for _, _, v in self.intervals)
        if self.family == "sampled":
            return bool(np.all(self.samples.imag == 0))
        return self.amplitude.imag == 0

    @property
    def sup_norm(self) -> float:
        if self.family == "zero":
            return 0.0
        if self.family == "stack":
            return max(abs(v) for _, _, v in self.intervals)
        if self.family == "sampled":
            return float(np.max(np.abs(self.samples)))
        return abs(self.amplitude)

    def breakpoints(self) -> list:
        """Interior discontinuities of V; grids put panel edges on them."""
        if self.family != "stack":
            return []
        edges = set()
        for x0, x1, _ in self.intervals:
            edges.update((x0, x1))
        edges.discard(0.0)
        return sorted(edges)

    def support_hint(self, tol: float = 1e-10) -> float:
        """Smallest X with tail_moment(X) <= tol; exact right end for compactly supported V."""
        if self.family == "zero":
            return 0.0
        if self.family == "stack":
            return max(x1 for _, x1, _ in self.intervals)
        upper = 1.0
        while self.tail_moment(upper) > tol:
            upper *= 2.0
            if upper > 1e6:
                raise NonIntegrableTail(f"tail of {self.label} stays above {tol} beyond x = 1e6")
        lower = upper / 2.0 if upper > 1.0 else 0.0
        if self.tail_moment(lower) <= tol:
            return upper
        return float(optimize.brentq(lambda x: self.tail_moment(x) - tol, lower, upper, xtol=1e-8))

    # --- tail integrals ---

    def tail_mass(self, x: float) -> float:
        """Integral of |V| over [x, inf)."""
        x = max(float(x), 0.0)
        if self.family == "zero":
            return 0.0
        if self.family == "stack":
            return sum(abs(v) * (x1 - max(x0, x)) for x0, x1, v in self.intervals if x1 > x)
        if self.family == "exponential":
            return abs(self.amplitude) * np.exp(-self.rate * x) / self.rate
        if self.family == "gaussian":
            return abs(self.amplitude) * self.width * np.sqrt(np.pi) / 2 * special.erfc(x / self.width)
        return self._sampled_tail(x, moment=False)

    def tail_moment(self, x: float) -> float:
        """Integral of xi*|V(xi)| over [x, inf)."""
        x = max(float(x), 0.0)
        if self.family == "zero":
            return 0.0
        if self.family == "stack":
            return sum(abs(v) * (x1 ** 2 - max(x0, x) ** 2) / 2 for x0, x1, v in self.intervals if x1 > x)
        if self.family == "exponential":
            r = self.rate
            return abs(self.amplitude) * np.exp(-r * x) * (x / r + 1 / r ** 2)
        if self.family == "gaussian":
            return abs(self.amplitude) * self.width ** 2 / 2 * np.exp(-(x / self.width) ** 2)
        return self._sampled_tail(x, moment=True)

    def _sampled_tail(self, x: float, moment: bool) -> float:
        x_last = float(self.abscissae[-1])
        v_last = abs(self.samples[-1])
        start = max(x, x_last)
        r = self.tail_rate
        if self.tail_kind == "exponential":
            decay = np.exp(-r * (start - x_last))
            tail = v_last * decay * ((start / r + 1 / r ** 2) if moment else 1 / r)
        else:
            exponent = r - 2 if moment else r - 1
            if exponent <= 0:
                raise NonIntegrableTail(
                    f"power tail x^-{r} has a divergent {'first moment' if moment else 'mass'}"
                )
            tail = v_last * x_last ** r * start ** (-exponent) / exponent
        if x >= x_last:
            return float(tail)
        weight = (lambda xi: xi * abs(self(xi))) if moment else (lambda xi: abs(self(xi)))
        inside = _piecewise_quad(weight, self.abscissae[self.abscissae >= x], x, x_last, 1e-12)
        return float(inside + tail)

    def cumulative_moment(self, x) -> np.ndarray:
        """Integral of xi*|V(xi)| over [0, x], vectorized in x."""
        total = first_moment(self)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.array([total - self.tail_moment(value) for value in x])

    def tail_majorant(self, x, k_abs: float) -> np.ndarray:
        """Integral of min(xi, 1/|k|)*|V(xi)| over [x, inf), vectorized in x."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if k_abs <= 0:
            return np.array([self.tail_moment(value) for value in x])
        c = 1.0 / k_abs
        out = np.empty(x.shape)
        for i, value in enumerate(x):
            split = max(value, c)
            out[i] = self.tail_moment(value) - self.tail_moment(split) + c * self.tail_mass(split)
        return out


def _piecewise_quad(func, points, a: float, b: float, rel_tol: float) -> float:
    """Adaptive quadrature on [a, b], restarting at every listed kink."""
    edges = np.unique(np.concatenate([[a, b], np.asarray(points, dtype=float)]))
    edges = edges[(edges >= a) & (edges <= b)]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, _ = integrate.quad(func, lo, hi, epsrel=rel_tol, epsabs=0.0, limit=200)
        total += value
    return total


def first_moment(potential: Potential, rel_tol: float = 1e-10) -> float:
    """
    Kato moment of V, the integral of x*|V(x)| over the half-line.

    Closed form for piecewise-constant potentials, otherwise adaptive quadrature up to
    the support hint plus the closed-form tail beyond it.

    Raises:
        NonIntegrableTail: a sampled potential declares a tail with divergent moment.
    """
    if potential.family in ("zero", "stack"):
        return float(potential.tail_moment(0.0))

    if potential.family == "sampled":
        return float(potential.tail_moment(0.0))

    x_hint = potential.support_hint(tol=rel_tol * 1e-2)
    value = _piecewise_quad(lambda xi: xi * abs(potential(xi)), [], 0.0, x_hint, rel_tol)
    return float(value + potential.tail_moment(x_hint))


def kato_verdict(potential: Potential) -> KatoVerdict:
    moment = first_moment(potential)
    verdict = KatoVerdict.GUARANTEED_SIMILAR if moment < 1.0 else KatoVerdict.INCONCLUSIVE
    logging.info(f"Kato moment of {potential.label}: {moment:.12g} -> {verdict.value}")
    return verdict


def resolvent_bound_constant(potential: Potential) -> float:
    """Bound constant exp(<a>^2) for |e(k)| * ||Q_V(k^2)|| <= K <a><b>."""
    return float(np.exp(first_moment(potential)))


def regular_majorant(potential: Potential, x, k: complex) -> np.ndarray:
    """Pointwise bound for |s(x,k) exp(ikx)|."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k_abs = abs(k)
    reach = np.minimum(x, 1.0 / k_abs) if k_abs > 0 else x
    return reach * np.exp(potential.cumulative_moment(x))


def jost_majorant(potential: Potential, x, k: complex) -> np.ndarray:
    """Pointwise bound for |e(x,k) exp(-ikx) - 1|."""
    return np.expm1(potential.tail_majorant(x, abs(k)))


@dataclass(frozen=True, eq=False)
class FactorPair:
    """Polar factors a = sqrt|V| and b = sign(conj V) a, so that V = conj(b) a."""

    potential: Potential
    a_weighted: float
    b_weighted: float

    def a(self, x) -> np.ndarray:
        return np.sqrt(np.abs(self.potential(x)))

    def b(self, x) -> np.ndarray:
        values = np.conj(self.potential(x))
        modulus = np.abs(values)
        phase = np.divide(values, modulus, out=np.zeros_like(values), where=modulus > 0)
        return phase * np.sqrt(modulus)

    def reconstruct(self, x) -> np.ndarray:
        return np.conj(self.b(x)) * self.a(x)


def factorize(potential: Potential) -> FactorPair:
    weighted = float(np.sqrt(first_moment(potential)))
    return FactorPair(potential=potential, a_weighted=weighted, b_weighted=weighted)
