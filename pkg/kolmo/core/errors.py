"""Exception hierarchy. Every error knows the CLI exit code it maps to."""


class KolmoError(Exception):
    exit_code = 2


# ─── Input (exit 1) ───

class InputError(KolmoError):
    exit_code = 1


class ParametrizationError(KolmoError):
    exit_code = 1


class OffLineError(KolmoError):
    exit_code = 1


# ─── Series kernel ───

class SingularSeriesError(KolmoError):
    pass


class SeriesDomainError(KolmoError):
    pass


class NonInvertibleError(KolmoError):
    pass


class DegenerateBranchError(KolmoError):
    pass


# ─── Model / analytic ───

class DegenerateEquilibriumError(KolmoError):
    pass


class NotSlidingError(KolmoError):
    pass


class MonodromyError(KolmoError):
    pass


class RepresentationUnavailableError(KolmoError):
    pass


# ─── Flow ───

class CrossingViolatedError(KolmoError):
    pass


class BasinExceededError(KolmoError):
    pass


class NoEventError(KolmoError):
    pass


class StiffnessError(KolmoError):
    pass


class PrecisionError(KolmoError):
    pass


class ReparametrizationUnavailableError(KolmoError):
    pass


# ─── Exact algebra / verification (exit 3) ───

class InconclusiveSignError(KolmoError):
    pass


class UnavailableEntryError(KolmoError):
    pass


class TranscriptionMismatchError(KolmoError):
    exit_code = 3


class VerificationError(KolmoError):
    exit_code = 3
