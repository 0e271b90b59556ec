from kolmo.series.fields import F64, RATIONAL, CoefficientField, ExtendedField, field_for
from kolmo.series.multijet import MultiJet
from kolmo.series.truncated import (
    TruncatedSeries,
    implicit_series_solve,
    level_set_branch,
    series_arith,
    series_exp,
    series_log,
    series_pow,
    series_reversion,
    series_transcendental,
)
