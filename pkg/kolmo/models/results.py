"""Result records produced by the services. All are immutable values."""
import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from kolmo.models.system import QuadraticField


class EquilibriumClass(str, enum.Enum):
    CC = "CC-equilibrium"
    FOCUS_FOCUS = "focus-focus"
    MIXED = "mixed"
    NON_MONODROMIC = "non-monodromic"

    @property
    def monodromic(self) -> bool:
        return self is not EquilibriumClass.NON_MONODROMIC


class SigmaClass(str, enum.Enum):
    CROSSING = "crossing"
    SLIDING = "sliding"
    ESCAPING = "escaping"
    TANGENCY = "tangency"


class Stability(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    UNDETERMINED = "undetermined-at-order-N"


@dataclass(frozen=True)
class EquilibriumData:
    x0: float
    y0: float
    traces: Tuple[float, float]
    dets: Tuple[float, float]
    D: Tuple[float, float]
    classification: EquilibriumClass
    on_sigma: bool = True
    counter_clockwise: Optional[bool] = None

    @property
    def point(self) -> Tuple[float, float]:
        return (self.x0, self.y0)


@dataclass(frozen=True)
class SigmaClassification:
    point: Tuple[float, float]
    kind: SigmaClass
    lie_derivatives: Tuple[float, float]


@dataclass(frozen=True, eq=False)
class FrameTransform:
    """q = M(p − p₀); p = p₀ + Mᵀq. ``reflected`` records an x ↦ −x flip."""

    offset: Tuple[float, float]
    matrix: np.ndarray
    reflected: bool

    def forward(self, p) -> np.ndarray:
        return self.matrix @ (np.asarray(p, dtype=float) - np.asarray(self.offset))

    def inverse(self, q) -> np.ndarray:
        return np.asarray(self.offset) + self.matrix.T @ np.asarray(q, dtype=float)

    @property
    def sigma_direction(self) -> np.ndarray:
        """Unit vector of the canonical x-axis in original coordinates."""
        return self.matrix[0]


@dataclass(frozen=True, eq=False)
class CanonicalSystem:
    """Both zones in the canonical frame: Σ = {y = 0}, zone 1 above, counter-clockwise."""

    zone1: QuadraticField
    zone2: QuadraticField
    transform: FrameTransform

    def zone(self, i: int) -> QuadraticField:
        return self.zone1 if i == 1 else self.zone2


@dataclass(frozen=True)
class FirstIntegralForm:
    """H = X^p Y^q Λ(X, Y) in normalized coordinates X = x/x₀, Y = y/y₀."""

    p: object
    q: object
    lam: Tuple[object, object, object]  # Λ = lam[0]·X + lam[1]·Y + lam[2]
    x0: object = 1
    y0: object = 1
    scale: object = 1  # time rescaling D used in the normalization

    def evaluate(self, x, y) -> float:
        X, Y = x / self.x0, y / self.y0
        return X ** self.p * Y ** self.q * (self.lam[0] * X + self.lam[1] * Y + self.lam[2])

    def log_abs(self, x, y) -> float:
        X, Y = float(x / self.x0), float(y / self.y0)
        lam = float(self.lam[0]) * X + float(self.lam[1]) * Y + float(self.lam[2])
        return float(self.p) * np.log(X) + float(self.q) * np.log(Y) + np.log(abs(lam))


@dataclass(frozen=True)
class ReturnCoefficients:
    """Normalized restriction S(ρ)/A = ρ² + h₃ρ³ + … of one zone's first integral to Σ."""

    h: Tuple  # h[k] for k = 0..N with h[0] = h[1] = 0, h[2] = 1
    A: object
    zone: int = 0

    @property
    def order(self) -> int:
        return len(self.h) - 1

    def __getitem__(self, k):
        return self.h[k] if k < len(self.h) else 0


@dataclass(frozen=True)
class LyapunovSequence:
    """W_1..W_N with Δ(ρ) = −Σ W_k ρ^k."""

    W: Tuple  # W[k-1] is W_k
    order: Optional[int]
    stability: Stability
    noise: Tuple = ()
    reduced: Dict[int, object] = field(default_factory=dict)

    def __getitem__(self, k: int):
        return self.W[k - 1]

    @property
    def center_suspected(self) -> bool:
        return self.order is None

    def as_floats(self) -> List[float]:
        return [float(w) for w in self.W]


@dataclass(frozen=True)
class DisplacementSample:
    rho: float
    delta: float
    pi1: float = float("nan")
    pi2_inv: float = float("nan")
    t1: float = float("nan")
    t2: float = float("nan")


@dataclass(frozen=True, eq=False)
class LimitCycle:
    rho_star: float
    period: float
    stability: Stability
    margin: float
    polyline: np.ndarray = field(default=None, repr=False)
    residual: float = 0.0


@dataclass(frozen=True)
class CycleScan:
    cycles: Tuple[LimitCycle, ...]
    samples: Tuple[DisplacementSample, ...]
    center_suspected: bool = False
    truncated_at: Optional[float] = None
    warnings: Tuple[str, ...] = ()


@dataclass(frozen=True)
class JetDisplacement:
    """W_j^[k]: homogeneous λ-degree-k part of W_j, as coefficient dicts over λ-monomials."""

    parts: Dict[Tuple[int, int], Dict[Tuple[int, ...], float]]
    m: int
    order: int
    degree: int

    def linear_row(self, j: int) -> np.ndarray:
        part = self.parts.get((j, 1), {})
        row = np.zeros(self.m)
        for alpha, value in part.items():
            row[alpha.index(1)] = value
        return row

    def evaluate(self, j: int, k: int, lam) -> float:
        lam = np.asarray(lam, dtype=float)
        total = 0.0
        for alpha, value in self.parts.get((j, k), {}).items():
            total += value * float(np.prod(lam ** np.array(alpha)))
        return total


@dataclass(frozen=True)
class WeakFocusLocus:
    gamma_lo: object
    gamma_hi: object
    b_star: float
    e_star: float
    m4_exact: bool
    m6_exact: bool
    w8_sign: int
    jac_sign: int
    notes: Tuple[str, ...] = ()

    @property
    def gamma(self) -> float:
        return float((self.gamma_lo + self.gamma_hi) / 2)


@dataclass
class StageReport:
    name: str
    parameters: Dict[str, float]
    lyapunov: List[float]
    sign_pattern: List[int]
    cycles: List[Dict[str, float]]
    precision: str
    notes: List[str] = field(default_factory=list)


@dataclass
class UnfoldSchedule:
    scenario: str
    precision: str
    stages: List[StageReport] = field(default_factory=list)
    verified_stage: Optional[str] = None
    checks: Dict[str, object] = field(default_factory=dict)

    @property
    def max_nested(self) -> int:
        return max((len(s.cycles) for s in self.stages), default=0)


@dataclass(frozen=True, eq=False)
class ClosedOrbit:
    """One full turn from (ρ, 0): zone 1 above Σ, then zone 2 below it."""

    rho: float
    returned: float
    period: float
    crossings: int
    polyline: np.ndarray = field(repr=False)

    @property
    def closure(self) -> float:
        return abs(self.returned - self.rho)


@dataclass(frozen=True)
class PseudoHopfOption:
    zone: int
    sign: int
    segment: Optional[SigmaClass]
    born: bool


@dataclass(frozen=True, eq=False)
class PseudoHopfResult:
    system: object  # the perturbed PiecewiseKolmogorov
    eps: float
    zone: int
    equilibrium_stability: Stability
    segment: Optional[Tuple[float, float, SigmaClass]] = None
    predicted: bool = False
    cycle: Optional[LimitCycle] = None
    notes: Tuple[str, ...] = ()

    @property
    def segment_length(self) -> float:
        return 0.0 if self.segment is None else self.segment[1] - self.segment[0]


@dataclass(frozen=True, eq=False)
class SecondOrderJets:
    """Degree-2 jets with the ω-coordinates ω = T·λ taken from the linear parts of ``rows``."""

    jets: JetDisplacement
    rows: Tuple[int, ...]
    omega_matrix: np.ndarray
    linear_in_omega: Dict[int, np.ndarray]  # W_j^[1] = c_j · ω
    reduced: Dict[int, Dict[Tuple[int, ...], float]]  # W̃_j^[2] over λ-monomials

    def lambda_for(self, omega) -> np.ndarray:
        return np.linalg.solve(self.omega_matrix, np.asarray(omega, dtype=float))

    def reduced_value(self, j: int, lam) -> float:
        lam = np.asarray(lam, dtype=float)
        return sum(v * float(np.prod(lam ** np.array(a))) for a, v in self.reduced[j].items())


@dataclass(frozen=True)
class LocusVerification:
    m4_exact: bool
    m6_exact: bool
    w8_nonzero_mod_g: bool
    det_jac_nonzero_mod_g: bool
    remainders: Dict[str, str] = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.m4_exact and self.m6_exact
