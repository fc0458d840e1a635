"""Uniform time grids shared by the propagation engines.

A :class:`PropagationGrid` fixes the integration window ``[t0, t1]``, the
integration ``substep``, and the ``record_every`` cadence at which states are
stored.  The recording grid always includes both endpoints, so a grid yields
``n_records = (t1 - t0) / record_every + 1`` states including the initial one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = ["PropagationGrid"]

_RATIO_TOL = 1e-9


def _integer_ratio(num: float, den: float, what: str) -> int:
    ratio = num / den
    rounded = int(round(ratio))
    if rounded < 1 or abs(ratio - rounded) > _RATIO_TOL * max(ratio, 1.0):
        raise ValueError(f"{what}: {num} is not an integer multiple of {den}")
    return rounded


@dataclass(frozen=True)
class PropagationGrid:
    """Integration window with recording cadence.

    ``substep_fs`` is the integrator step; states are recorded every
    ``record_every_fs``, which must be an integer multiple of the substep so
    records land exactly on integration steps.  The window length must in turn
    be an integer multiple of the record cadence.
    """

    t0_fs: float
    t1_fs: float
    record_every_fs: float
    substep_fs: float = 0.005

    def __post_init__(self):
        if not self.t0_fs < self.t1_fs:
            raise ValueError(f"need t0 < t1, got [{self.t0_fs}, {self.t1_fs}]")
        if self.record_every_fs <= 0:
            raise ValueError("record_every_fs must be positive")
        if self.substep_fs <= 0:
            raise ValueError("substep_fs must be positive")
        if self.substep_fs > self.record_every_fs * (1.0 + _RATIO_TOL):
            raise ValueError(
                f"substep {self.substep_fs} fs exceeds record cadence "
                f"{self.record_every_fs} fs"
            )
        _integer_ratio(
            self.record_every_fs, self.substep_fs, "record_every_fs / substep_fs"
        )
        _integer_ratio(
            self.t1_fs - self.t0_fs, self.record_every_fs,
            "(t1_fs - t0_fs) / record_every_fs",
        )

    @classmethod
    def window(
        cls,
        t_max_fs: float,
        record_every_fs: float,
        substep_fs: float = 0.005,
        t0_fs: float = 0.0,
    ) -> "PropagationGrid":
        return cls(t0_fs, t0_fs + t_max_fs, record_every_fs, substep_fs)

    @property
    def substeps_per_record(self) -> int:
        return _integer_ratio(self.record_every_fs, self.substep_fs, "ratio")

    @property
    def n_intervals(self) -> int:
        return _integer_ratio(self.t1_fs - self.t0_fs, self.record_every_fs, "window")

    @property
    def n_records(self) -> int:
        return self.n_intervals + 1

    @property
    def effective_substep_fs(self) -> float:
        """Exact step used by the integrators (record cadence subdivided)."""
        return self.record_every_fs / self.substeps_per_record

    @property
    def record_times_fs(self) -> np.ndarray:
        return self.t0_fs + self.record_every_fs * np.arange(self.n_records)

    def halved(self) -> "PropagationGrid":
        """Same window and cadence at half the substep (convergence checks)."""
        return replace(self, substep_fs=self.substep_fs / 2.0)
