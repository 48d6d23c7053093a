"""Core survival-data containers and nonparametric estimators.

The whole package works from three small building blocks:

* :class:`SurvivalDataset` -- per-subject ``(time, event, group)`` records
  for a two-group comparison.
* :class:`RiskTable` -- the classical table of distinct observed event
  times with per-group event and at-risk counts.  Every test statistic in
  the package is a function of this table.
* :class:`StepFunction` -- a right-continuous piecewise-constant function,
  used for Kaplan-Meier and Nelson-Aalen curves and their integrals.

Ties between events and censorings at the same time are resolved by the
standard convention that events happen first (a subject censored at ``t``
is still at risk for events at ``t``).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, InvalidDataError, NoEventsError

__all__ = [
    "SurvivalDataset",
    "RiskTable",
    "StepFunction",
    "TestOutcome",
    "build_risk_table",
    "kaplan_meier",
    "nelson_aalen",
    "default_tau",
    "event_counts",
    "load_csv",
]


class SurvivalDataset:
    """Right-censored two-sample survival data.

    Parameters
    ----------
    time : array-like of float
        Observed times (event or censoring), all finite and >= 0.
    event : array-like of bool
        True where the event was observed, False where censored.
    group : array-like of int
        Group label, 1 or 2.  Both groups must be non-empty.

    The arrays are copied and frozen; instances are immutable and safe to
    share across threads or processes.
    """

    __slots__ = ("time", "event", "group", "n1", "n2")

    def __init__(self, time, event, group):
        time = np.asarray(time, dtype=np.float64).copy()
        event = np.asarray(event, dtype=bool).copy()
        group = np.asarray(group, dtype=np.int8).copy()
        if not (time.ndim == event.ndim == group.ndim == 1):
            raise InvalidDataError("time, event and group must be 1-d arrays")
        if not (len(time) == len(event) == len(group)):
            raise InvalidDataError("time, event and group must have equal length")
        if len(time) == 0:
            raise InvalidDataError("empty dataset")
        if not np.all(np.isfinite(time)):
            raise InvalidDataError("times must be finite")
        if np.any(time < 0):
            raise InvalidDataError("times must be non-negative")
        bad = ~np.isin(group, (1, 2))
        if np.any(bad):
            raise InvalidDataError(f"group labels must be 1 or 2, got {group[bad][0]}")
        n1 = int(np.sum(group == 1))
        n2 = int(np.sum(group == 2))
        if n1 == 0 or n2 == 0:
            raise InvalidDataError("both groups must be non-empty")
        for a in (time, event, group):
            a.flags.writeable = False
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "event", event)
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "n1", n1)
        object.__setattr__(self, "n2", n2)

    def __setattr__(self, name, value):
        raise AttributeError("SurvivalDataset is immutable")

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def n_events(self) -> int:
        return int(np.sum(self.event))

    def group_arrays(self, label: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(time, event)`` for one group."""
        mask = self.group == label
        return self.time[mask], self.event[mask]

    def with_groups(self, group) -> "SurvivalDataset":
        """Same subjects with a new group-label vector (used by permutation tests)."""
        return SurvivalDataset(self.time, self.event, group)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return (
            f"SurvivalDataset(n1={self.n1}, n2={self.n2}, "
            f"events={self.n_events})"
        )


@dataclass(frozen=True)
class RiskTable:
    """Distinct observed event times with event and at-risk counts.

    Attributes
    ----------
    t : ndarray
        Strictly increasing distinct event times, one row each.
    d1, d2, d : ndarray
        Events at ``t[i]`` in group 1, group 2 and pooled.
    y1, y2, y : ndarray
        Numbers at risk just before ``t[i]`` (subjects with time >= t[i]).
    n1, n2 : int
        Group sample sizes of the dataset the table was built from.
    """

    t: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    y: np.ndarray
    n1: int
    n2: int

    @property
    def n_rows(self) -> int:
        return len(self.t)

    @property
    def n(self) -> int:
        return self.n1 + self.n2


def build_risk_table(data: SurvivalDataset) -> RiskTable:
    """Tabulate distinct event times with per-group counts.

    Tied events aggregate into a single row; times where only censoring
    occurs never create a row.  Raises :class:`NoEventsError` when the
    dataset has no observed events.
    """
    if data.n_events == 0:
        raise NoEventsError("no observed events in dataset")
    t_all = np.sort(data.time)
    g1 = data.group == 1
    t_g1 = np.sort(data.time[g1])
    ev_all = np.sort(data.time[data.event])
    ev_g1 = np.sort(data.time[data.event & g1])

    t = np.unique(ev_all)
    # at risk just before t: subjects with observed time >= t
    y = len(t_all) - np.searchsorted(t_all, t, side="left")
    y1 = len(t_g1) - np.searchsorted(t_g1, t, side="left")
    d = np.searchsorted(ev_all, t, side="right") - np.searchsorted(ev_all, t, side="left")
    d1 = np.searchsorted(ev_g1, t, side="right") - np.searchsorted(ev_g1, t, side="left")
    table = RiskTable(
        t=t,
        d1=d1.astype(np.int64),
        d2=(d - d1).astype(np.int64),
        d=d.astype(np.int64),
        y1=y1.astype(np.int64),
        y2=(y - y1).astype(np.int64),
        y=y.astype(np.int64),
        n1=data.n1,
        n2=data.n2,
    )
    for a in (table.t, table.d1, table.d2, table.d, table.y1, table.y2, table.y):
        a.flags.writeable = False
    return table


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous piecewise-constant function on [0, inf).

    ``f(t) = initial`` for ``t < knots[0]`` and ``f(t) = values[k]`` for
    ``knots[k] <= t < knots[k+1]``.  Beyond the last knot the function is
    extended as a constant.
    """

    knots: np.ndarray
    values: np.ndarray
    initial: float = 1.0

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if knots.shape != values.shape:
            raise ValueError("knots and values must have equal length")
        if len(knots) > 1 and not np.all(np.diff(knots) > 0):
            raise ValueError("knots must be strictly increasing")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    def _extended(self) -> np.ndarray:
        return np.concatenate(([self.initial], self.values))

    def __call__(self, t):
        """Evaluate right-continuously at scalar or array ``t``."""
        idx = np.searchsorted(self.knots, t, side="right")
        out = self._extended()[idx]
        return float(out) if np.isscalar(t) else out

    def left_limit(self, t):
        """Evaluate the left limit ``f(t-)`` at scalar or array ``t``."""
        idx = np.searchsorted(self.knots, t, side="left")
        out = self._extended()[idx]
        return float(out) if np.isscalar(t) else out

    def area(self, upper: float) -> float:
        """Exact integral of the step function over ``[0, upper]``."""
        if upper < 0:
            raise ValueError("upper must be >= 0")
        pts = np.concatenate(([0.0], np.clip(self.knots, 0.0, upper), [upper]))
        widths = np.diff(pts)
        vals = self._extended()[: len(widths)]
        return float(np.dot(widths, vals))


def event_counts(time, event):
    """Distinct event times of one sample with event and at-risk counts."""
    time = np.asarray(time, dtype=np.float64)
    event = np.asarray(event, dtype=bool)
    if time.size == 0:
        raise InvalidDataError("empty group")
    ev = np.sort(time[event])
    t_all = np.sort(time)
    t = np.unique(ev)
    y = len(t_all) - np.searchsorted(t_all, t, side="left")
    d = np.searchsorted(ev, t, side="right") - np.searchsorted(ev, t, side="left")
    return t, d, y


def kaplan_meier(time, event) -> StepFunction:
    """Product-limit estimate of the survival function of one sample.

    With no observed events the estimate is identically 1.
    """
    t, d, y = event_counts(time, event)
    if len(t) == 0:
        return StepFunction(knots=np.empty(0), values=np.empty(0), initial=1.0)
    surv = np.cumprod(1.0 - d / y)
    return StepFunction(knots=t, values=surv, initial=1.0)


def nelson_aalen(time, event) -> StepFunction:
    """Nelson-Aalen estimate of the cumulative hazard of one sample."""
    t, d, y = event_counts(time, event)
    if len(t) == 0:
        return StepFunction(knots=np.empty(0), values=np.empty(0), initial=0.0)
    cumhaz = np.cumsum(d / y)
    return StepFunction(knots=t, values=cumhaz, initial=0.0)


def default_tau(data: SurvivalDataset) -> float:
    """Default truncation time for area-under-curve statistics.

    90% of the smaller of the two group maxima, where the maximum is taken
    over all observed times regardless of event status.
    """
    m1 = float(np.max(data.time[data.group == 1]))
    m2 = float(np.max(data.time[data.group == 2]))
    return 0.9 * min(m1, m2)


@dataclass
class TestOutcome:
    """Result of a two-sample test.

    ``detail`` carries method-specific metadata: resample counts, the
    truncation time used, per-weight standardized statistics, the stage
    reached, and similar.
    """

    __test__ = False  # keep pytest from collecting this as a test class

    statistic: float
    p_value: float
    method: str
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.p_value <= 1.0 or np.isnan(self.p_value)):
            raise ValueError(f"p-value out of [0, 1]: {self.p_value}")


_CSV_COLUMNS = ("time", "event", "group")


def load_csv(path) -> SurvivalDataset:
    """Read a ``time,event,group`` CSV into a :class:`SurvivalDataset`.

    The header is required.  ``event`` must be 0 or 1, ``group`` 1 or 2,
    ``time`` a finite non-negative number.  Errors carry 1-based line
    numbers.
    """
    times: list[float] = []
    events: list[int] = []
    groups: list[int] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        header = [h.strip().lower() for h in header]
        if sorted(header) != sorted(_CSV_COLUMNS):
            raise DataFormatError(
                f"{path}: header must contain exactly {', '.join(_CSV_COLUMNS)}"
            )
        col = {name: header.index(name) for name in _CSV_COLUMNS}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise DataFormatError(f"{path}: line {lineno}: expected 3 fields")
            try:
                t = float(row[col["time"]])
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: bad time {row[col['time']]!r}"
                ) from None
            if not np.isfinite(t) or t < 0:
                raise DataFormatError(
                    f"{path}: line {lineno}: time must be finite and >= 0"
                )
            e = row[col["event"]].strip()
            if e not in ("0", "1"):
                raise DataFormatError(f"{path}: line {lineno}: event must be 0 or 1")
            g = row[col["group"]].strip()
            if g not in ("1", "2"):
                raise DataFormatError(f"{path}: line {lineno}: group must be 1 or 2")
            times.append(t)
            events.append(int(e))
            groups.append(int(g))
    if not times:
        raise DataFormatError(f"{path}: no data rows")
    try:
        return SurvivalDataset(times, events, groups)
    except InvalidDataError as exc:
        raise DataFormatError(f"{path}: {exc}") from None
