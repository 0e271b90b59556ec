from kolmo.models.results import (
    CanonicalSystem,
    ClosedOrbit,
    CycleScan,
    DisplacementSample,
    EquilibriumClass,
    EquilibriumData,
    FirstIntegralForm,
    FrameTransform,
    JetDisplacement,
    LimitCycle,
    LocusVerification,
    LyapunovSequence,
    PseudoHopfOption,
    PseudoHopfResult,
    ReturnCoefficients,
    SecondOrderJets,
    SigmaClass,
    SigmaClassification,
    Stability,
    StageReport,
    UnfoldSchedule,
    WeakFocusLocus,
)
from kolmo.models.system import (
    MONOMIALS,
    KolmogorovField,
    PiecewiseKolmogorov,
    QuadraticField,
    SeparationLine,
    linear_center,
)
