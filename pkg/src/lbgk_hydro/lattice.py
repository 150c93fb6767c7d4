"""Velocity lattices and the isotropy moment conditions.

A lattice is a finite velocity set with positive weights and an associated
speed of sound ``c_s``.  It is *isotropic* when its weighted velocity moments
up to order four match those of a Gaussian with variance ``c_s**2``::

    sum w_i                         = 1
    sum w_i v_a                     = 0
    sum w_i v_a v_b                 = c_s^2 d_ab
    sum w_i v_a v_b v_c             = 0
    sum w_i v_a v_b v_c v_d         = c_s^4 (d_ab d_cd + d_ac d_bd + d_ad d_bc)
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Sequence, Tuple

import numpy as np

DEFAULT_TOLERANCE = 1e-12

# Rational reconstruction bound for float family parameters (1/72, 1/216, ...).
_MAX_DENOMINATOR = 10**9


class LatticeError(ValueError):
    """Raised for invalid lattice data or out-of-domain lattice arguments."""


@dataclass(frozen=True, eq=False)
class Lattice:
    """Velocity set, weights and speed of sound of a discrete-velocity model.

    ``velocities`` has shape ``(q, dim)`` and ``weights`` shape ``(q,)``; both
    are stored as read-only float arrays.
    """

    dim: int
    velocities: np.ndarray
    weights: np.ndarray
    sound_speed: float
    name: str = field(default="", compare=False)

    def __post_init__(self):
        v = np.array(self.velocities, dtype=float)
        w = np.array(self.weights, dtype=float).ravel()
        if v.ndim == 1 and self.dim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[1] != self.dim:
            raise LatticeError(
                f"velocities must have shape (q, {self.dim}), got {v.shape}"
            )
        if v.shape[0] != w.shape[0]:
            raise LatticeError(
                f"{v.shape[0]} velocities but {w.shape[0]} weights"
            )
        if v.shape[0] == 0:
            raise LatticeError("a lattice needs at least one velocity")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
            raise LatticeError("velocities and weights must be finite")
        if np.any(w <= 0):
            raise LatticeError("all weights must be strictly positive")
        if len({tuple(row) for row in v.tolist()}) != v.shape[0]:
            raise LatticeError("velocities must be pairwise distinct")
        if not (self.sound_speed > 0 and math.isfinite(self.sound_speed)):
            raise LatticeError("sound_speed must be a positive finite number")
        v.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "velocities", v)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "sound_speed", float(self.sound_speed))

    @property
    def q(self) -> int:
        """Number of discrete velocities (``n + 1``)."""
        return self.weights.shape[0]

    @property
    def max_speed(self) -> float:
        return float(np.max(np.linalg.norm(self.velocities, axis=1)))

    def __eq__(self, other):
        if not isinstance(other, Lattice):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.sound_speed == other.sound_speed
            and np.array_equal(self.velocities, other.velocities)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.dim, self.q, self.sound_speed, self.weights.tobytes()))

    def __repr__(self):
        label = self.name or f"D{self.dim}Q{self.q}"
        return f"Lattice({label}, c_s={self.sound_speed:.17g})"


@dataclass(frozen=True)
class IsotropyReport:
    """Outcome of :func:`validate_isotropy`.

    ``residuals`` maps a nondecreasing multi-index (empty tuple for order 0)
    to ``moment - target``.
    """

    satisfied: bool
    max_residual: float
    tolerance: float
    residuals: Dict[Tuple[int, ...], float]

    def by_order(self, order: int) -> Dict[Tuple[int, ...], float]:
        return {k: r for k, r in self.residuals.items() if len(k) == order}

    def format_table(self) -> str:
        lines = [f"{'order':>5}  {'indices':<12} {'residual':>24}"]
        for key, res in self.residuals.items():
            idx = ",".join(str(i) for i in key) or "-"
            lines.append(f"{len(key):>5}  {idx:<12} {res:>24.6e}")
        verdict = "PASS" if self.satisfied else "FAIL"
        lines.append(
            f"max |residual| = {self.max_residual:.3e}  "
            f"(tol {self.tolerance:.1e})  {verdict}"
        )
        return "\n".join(lines)


def moment(lattice: Lattice, indices: Sequence[int]) -> float:
    """Weighted velocity moment ``sum_i w_i prod_k v_{i, indices[k]}``."""
    indices = list(indices)
    if len(indices) > 4:
        raise LatticeError(f"moments are defined up to order 4, got {len(indices)} indices")
    for a in indices:
        if not (0 <= int(a) < lattice.dim) or int(a) != a:
            raise LatticeError(
                f"axis index {a!r} out of range for a {lattice.dim}D lattice"
            )
    prod = np.ones(lattice.q)
    for a in indices:
        prod = prod * lattice.velocities[:, int(a)]
    return float(np.dot(lattice.weights, prod))


def _delta(a: int, b: int) -> float:
    return 1.0 if a == b else 0.0


def isotropic_target(indices: Sequence[int], sound_speed: float) -> float:
    """Gaussian moment that an isotropic lattice must reproduce."""
    k = len(indices)
    cs2 = sound_speed**2
    if k == 0:
        return 1.0
    if k in (1, 3):
        return 0.0
    if k == 2:
        a, b = indices
        return cs2 * _delta(a, b)
    if k == 4:
        a, b, c, d = indices
        return cs2**2 * (
            _delta(a, b) * _delta(c, d)
            + _delta(a, c) * _delta(b, d)
            + _delta(a, d) * _delta(b, c)
        )
    raise LatticeError("isotropy conditions are defined up to order 4")


def validate_isotropy(
    lattice: Lattice, tolerance: float = DEFAULT_TOLERANCE
) -> IsotropyReport:
    """Check all moment conditions of order 0 through 4.

    Only nondecreasing multi-indices are evaluated; the remaining entries of
    each moment tensor follow by symmetry.
    """
    if not tolerance > 0:
        raise LatticeError("tolerance must be positive")
    residuals: Dict[Tuple[int, ...], float] = {}
    for order in range(5):
        for idx in itertools.combinations_with_replacement(range(lattice.dim), order):
            residuals[idx] = moment(lattice, idx) - isotropic_target(
                idx, lattice.sound_speed
            )
    max_res = max(abs(r) for r in residuals.values())
    return IsotropyReport(
        satisfied=max_res <= tolerance,
        max_residual=max_res,
        tolerance=float(tolerance),
        residuals=residuals,
    )


def _from_rationals(dim, velocities, weights, sound_speed, name) -> Lattice:
    total = sum(weights, Fraction(0))
    if total != 1:
        raise LatticeError(f"weights sum to {total}, not 1")
    return Lattice(
        dim=dim,
        velocities=np.array(velocities, dtype=float),
        weights=np.array([float(w) for w in weights]),
        sound_speed=sound_speed,
        name=name,
    )


def d2q9() -> Lattice:
    """The D2Q9 lattice with ``c_s = 1/sqrt(3)``."""
    velocities = [
        (0, 0),
        (1, 0), (0, 1), (-1, 0), (0, -1),
        (1, 1), (-1, 1), (-1, -1), (1, -1),
    ]
    weights = [Fraction(4, 9)] + [Fraction(1, 9)] * 4 + [Fraction(1, 36)] * 4
    return _from_rationals(2, velocities, weights, 1 / math.sqrt(3), "D2Q9")


def d2q7() -> Lattice:
    """Hexagonal D2Q7 lattice: rest particle plus six unit vectors, ``c_s = 1/2``."""
    h = math.sqrt(3) / 2
    # v_j = (cos(2 pi j/6), sin(2 pi j/6)), j = 1..6, with exact zeros.
    velocities = [
        (0.0, 0.0),
        (0.5, h), (-0.5, h), (-1.0, 0.0),
        (-0.5, -h), (0.5, -h), (1.0, 0.0),
    ]
    weights = [Fraction(1, 2)] + [Fraction(1, 12)] * 6
    return _from_rationals(2, velocities, weights, 0.5, "D2Q7")


@dataclass(frozen=True)
class D3FamilyParams:
    """Free parameters ``(c, c_1, c_2, c_3)`` of the 27-point 3D family.

    ``c_alpha``, ``c_beta`` and ``c_gamma`` attach to axes 0, 1 and 2.
    """

    c: float
    c_alpha: float = 0.0
    c_beta: float = 0.0
    c_gamma: float = 0.0

    def as_fractions(self) -> Tuple[Fraction, Fraction, Fraction, Fraction]:
        out = []
        for x in (self.c, self.c_alpha, self.c_beta, self.c_gamma):
            if isinstance(x, Fraction):
                out.append(x)
            else:
                if not math.isfinite(float(x)):
                    raise LatticeError("family parameters must be finite")
                out.append(Fraction(float(x)).limit_denominator(_MAX_DENOMINATOR))
        return tuple(out)

    def check(self) -> None:
        """Raise :class:`LatticeError` naming the first violated inequality."""
        c, *cs = self.as_fractions()
        bound = Fraction(1, 72)
        if not 0 <= c <= bound:
            raise LatticeError(f"need 0 <= c <= 1/72, got c = {float(c):.6g}")
        for name, cz in zip(("c_alpha", "c_beta", "c_gamma"), cs):
            if abs(cz) > bound:
                raise LatticeError(f"need |{name}| <= 1/72, got {float(cz):.6g}")
        if sum(abs(x) for x in cs) > c:
            raise LatticeError(
                "need |c_alpha| + |c_beta| + |c_gamma| <= c, got "
                f"{float(sum(abs(x) for x in cs)):.6g} > {float(c):.6g}"
            )
        names = ("c_alpha", "c_beta", "c_gamma")
        for i, j in itertools.combinations(range(3), 2):
            if c + abs(cs[i]) + abs(cs[j]) > bound:
                raise LatticeError(
                    f"need c + |{names[i]}| + |{names[j]}| <= 1/72, got "
                    f"{float(c + abs(cs[i]) + abs(cs[j])):.6g}"
                )


def d3_family_probability(v: Sequence[int], params: D3FamilyParams) -> Fraction:
    """Weight of velocity ``v`` in ``{-1, 0, 1}^3`` for the given family member."""
    c, *cz = params.as_fractions()
    nonzero = [(axis, s) for axis, s in enumerate(v) if s != 0]
    k = len(nonzero)
    if k == 0:
        return Fraction(1, 3) - 8 * c
    if k == 1:
        (a, s), = nonzero
        return Fraction(1, 18) + 4 * c + 4 * s * cz[a]
    if k == 2:
        return Fraction(1, 36) - 2 * c - sum(2 * s * cz[a] for a, s in nonzero)
    return c + sum(s * cz[a] for a, s in nonzero)


def d3_family(params: D3FamilyParams) -> Lattice:
    """Member of the isotropic 3D lattice family on ``{-1, 0, 1}^3``, ``c_s = 1/sqrt(3)``.

    Velocities whose probability is exactly zero are left out, so
    ``(1/72, 0, 0, 0)`` gives D3Q15, ``(0, 0, 0, 0)`` D3Q19 and
    ``(1/216, 0, 0, 0)`` D3Q27.
    """
    params.check()
    # rest, faces, edges, corners
    shells = sorted(
        itertools.product((-1, 0, 1), repeat=3),
        key=lambda v: (sum(map(abs, v)), [-x for x in v]),
    )
    velocities, weights = [], []
    for v in shells:
        p = d3_family_probability(v, params)
        if p < 0:
            raise LatticeError(f"negative probability {float(p)} at velocity {v}")
        if p > 0:
            velocities.append(v)
            weights.append(p)
    return _from_rationals(3, velocities, weights, 1 / math.sqrt(3), f"D3Q{len(weights)}")


def scale(lattice: Lattice, lam: float) -> Lattice:
    """Lattice ``(lam V, w)``.

    Every moment of order k picks up ``lam**k``, so the scaled lattice is
    isotropic with speed of sound ``lam * c_s``.
    """
    if not lam > 0:
        raise LatticeError(f"scale factor must be positive, got {lam!r}")
    name = lattice.name if lam == 1 else f"{lattice.name or 'lattice'}x{lam:g}"
    return Lattice(
        dim=lattice.dim,
        velocities=lattice.velocities * lam,
        weights=lattice.weights,
        sound_speed=lattice.sound_speed * lam,
        name=name,
    )


BUILTIN_LATTICES = {
    "d2q9": d2q9,
    "d2q7": d2q7,
    "d3q15": lambda: d3_family(D3FamilyParams(Fraction(1, 72))),
    "d3q19": lambda: d3_family(D3FamilyParams(Fraction(0))),
    "d3q27": lambda: d3_family(D3FamilyParams(Fraction(1, 216))),
}


def builtin(name: str) -> Lattice:
    try:
        return BUILTIN_LATTICES[name.lower()]()
    except KeyError:
        raise LatticeError(
            f"unknown lattice {name!r}; choose from {', '.join(BUILTIN_LATTICES)}"
        ) from None
