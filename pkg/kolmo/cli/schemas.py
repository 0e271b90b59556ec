"""
Input documents of the command line.

A system file gives the piecewise system in exactly one of three ways:
explicit zones plus a line, a ``cc_build`` block, or a perturbation
``family`` around the shared center. Numbers may be written as strings
("4/3", "-1/2") to keep them exact in rational mode.
"""
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Union

from pydantic import AfterValidator, BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from kolmo.core.config import IntegratorConfig, Precision, settings
from kolmo.core.errors import InputError
from kolmo.models.system import KolmogorovField, PiecewiseKolmogorov, SeparationLine
from kolmo.services.flow_service import ENGINES
from kolmo.services.model_service import cc_build
from kolmo.services.unfold_service import FAMILIES

log = logging.getLogger("kolmo.cli")

COMMANDS = ("classify", "lyapunov", "center-check", "displacement", "cycles", "unfold", "portrait", "verify")
NEEDS_INPUT = {"classify", "lyapunov", "center-check", "displacement", "cycles", "portrait"}


def exact(value):
    """Ints and fraction strings become Fraction; floats stay floats."""
    if isinstance(value, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"not a number: {value!r}") from None
    return float(value)


def _number(value):
    exact(value)
    return value


Number = Annotated[Union[int, float, str], AfterValidator(_number)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ZoneInput(_Strict):
    a: Number
    b: Number
    c: Number
    d: Number
    e: Number
    f: Number

    def build(self) -> KolmogorovField:
        return KolmogorovField(*(exact(getattr(self, k)) for k in "abcdef"))


class LineInput(_Strict):
    alpha: Number
    beta: Number
    gamma0: Optional[Number] = None
    through: Optional[Tuple[Number, Number]] = None

    @model_validator(mode="after")
    def _one_offset(self):
        if (self.gamma0 is None) == (self.through is None):
            raise ValueError("line needs exactly one of gamma0 or through")
        return self

    def build(self) -> SeparationLine:
        alpha, beta = exact(self.alpha), exact(self.beta)
        if self.through is not None:
            return SeparationLine.through(alpha, beta, tuple(exact(v) for v in self.through))
        return SeparationLine(alpha, beta, exact(self.gamma0))


class CCZoneInput(_Strict):
    b: Number
    e: Number
    D: Number = 1


class CCBuildInput(_Strict):
    x0: Number = 1
    y0: Number = 1
    zones: List[CCZoneInput]
    line: Optional[LineInput] = None

    @field_validator("zones")
    @classmethod
    def _two_zones(cls, v):
        if len(v) != 2:
            raise ValueError(f"cc_build needs exactly two zones, got {len(v)}")
        return v


class FamilyInput(_Strict):
    name: Literal["ps", "ff"]
    mu: Tuple[float, float]
    lam: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)


class ScanInput(_Strict):
    rho_min: float = 1e-3
    rho_max: float = 0.2
    rhos: Optional[List[float]] = None
    engine: str = "event"

    @field_validator("engine")
    @classmethod
    def _known_engine(cls, v):
        if v not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        return v

    @model_validator(mode="after")
    def _window(self):
        if not 0 < self.rho_min < self.rho_max:
            raise ValueError(f"need 0 < rho_min < rho_max, got [{self.rho_min}, {self.rho_max}]")
        return self


class PseudoHopfInput(_Strict):
    """Without ``zone`` the first homothety predicted to release a cycle is used, with |eps|."""

    zone: Optional[Literal[1, 2]] = None
    eps: float


class SystemInput(_Strict):
    name: str = "system"
    zone1: Optional[ZoneInput] = None
    zone2: Optional[ZoneInput] = None
    line: Optional[LineInput] = None
    cc_build: Optional[CCBuildInput] = None
    family: Optional[FamilyInput] = None
    point: Optional[Tuple[Number, Number]] = None
    scan: ScanInput = ScanInput()
    pseudo_hopf: Optional[PseudoHopfInput] = None
    trajectories: List[float] = []

    @model_validator(mode="after")
    def _one_description(self):
        explicit = self.zone1 is not None or self.zone2 is not None
        given = sum([explicit, self.cc_build is not None, self.family is not None])
        if given != 1:
            raise ValueError("give exactly one of zone1/zone2/line, cc_build or family")
        if explicit and (self.zone1 is None or self.zone2 is None or self.line is None):
            missing = [k for k in ("zone1", "zone2", "line") if getattr(self, k) is None]
            raise ValueError(f"explicit system is missing {', '.join(missing)}")
        return self

    def build(self) -> PiecewiseKolmogorov:
        if self.cc_build is not None:
            cc = self.cc_build
            zones = [(exact(z.b), exact(z.e), exact(z.D)) for z in cc.zones]
            line = cc.line.build() if cc.line else None
            return cc_build(exact(cc.x0), exact(cc.y0), zones, line)
        if self.family is not None:
            return FAMILIES[self.family.name](self.family.mu, self.family.lam)
        return PiecewiseKolmogorov(self.zone1.build(), self.zone2.build(), self.line.build())

    def equilibrium(self):
        return None if self.point is None else tuple(exact(v) for v in self.point)


class RunConfig(_Strict):
    """Everything a command needs; validated before dispatch."""

    command: Literal["classify", "lyapunov", "center-check", "displacement", "cycles", "unfold", "portrait", "verify"]
    input: Optional[Path] = None
    precision: Precision = settings.PRECISION
    order: int = 8
    scenario: str = "bclcc"
    out: Path = Path(settings.OUTPUT_DIR)
    rtol: float = settings.RTOL
    atol: float = settings.ATOL
    only: Optional[int] = None
    list_only: bool = False

    @field_validator("order")
    @classmethod
    def _order(cls, v):
        if not 2 <= v <= 40:
            raise ValueError(f"order must lie in [2, 40], got {v}")
        return v

    @model_validator(mode="after")
    def _input_present(self):
        if self.command in NEEDS_INPUT and self.input is None:
            raise ValueError(f"{self.command} needs --input")
        return self

    def integrator(self, flow: bool = True) -> IntegratorConfig:
        """Flows have no rational mode; they fall back to binary64."""
        precision = self.precision
        if flow and precision is Precision.RATIONAL:
            log.warning("rational precision is not available for flows; using f64")
            precision = Precision.F64
        event_tol = min(settings.EVENT_TOL, max(self.rtol, self.atol))
        return IntegratorConfig.from_settings(rtol=self.rtol, atol=self.atol, event_tol=event_tol, precision=precision)


def _describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        where = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{where}: {err['msg']}")
    return "; ".join(parts)


def parse_system(data: dict) -> SystemInput:
    try:
        return SystemInput.model_validate(data)
    except ValidationError as exc:
        raise InputError(f"invalid system: {_describe(exc)}") from None


def load_system(path: Union[str, Path]) -> SystemInput:
    path = Path(path)
    if not path.exists():
        raise InputError(f"input file {path} not found")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None
    return parse_system(data)


def make_run_config(**values) -> RunConfig:
    try:
        return RunConfig(**values)
    except ValidationError as exc:
        raise InputError(_describe(exc)) from None
