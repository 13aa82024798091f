"""Input/output datasets for identification, with CSV persistence.

CSV layout: header row, then ``time_s, u1..u20, y1..y6[, aux1..aux8]``.
Powers are in W, temperatures in degrees C.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class IoDataset:
    """Sampled input/output data from a transient plant run.

    U holds one row of heater powers per sample, Y the matching sensor
    temperatures in degrees C (6 control columns, optionally followed by
    8 auxiliary columns).
    """

    sample_period: float
    U: np.ndarray
    Y: np.ndarray
    time: np.ndarray = field(default=None)

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=float)
        self.Y = np.asarray(self.Y, dtype=float)
        if self.sample_period <= 0:
            raise ValueError("sample_period must be positive")
        if self.U.shape[0] != self.Y.shape[0]:
            raise ValueError(
                f"U has {self.U.shape[0]} rows but Y has {self.Y.shape[0]}"
            )
        if self.time is None:
            self.time = np.arange(self.U.shape[0]) * self.sample_period
        else:
            self.time = np.asarray(self.time, dtype=float)

    @property
    def n_samples(self) -> int:
        return self.U.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.U.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.Y.shape[1]

    def control_only(self) -> "IoDataset":
        """Dataset restricted to the 6 control-sensor columns."""
        return IoDataset(self.sample_period, self.U.copy(), self.Y[:, :6].copy(),
                         time=self.time.copy())

    def save_csv(self, path) -> None:
        nu, ny = self.n_inputs, self.n_outputs
        cols = ["time_s"] + [f"u{i + 1}" for i in range(nu)]
        cols += [f"y{i + 1}" for i in range(min(ny, 6))]
        cols += [f"aux{i + 1}" for i in range(max(ny - 6, 0))]
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for k in range(self.n_samples):
                row = [self.time[k], *self.U[k], *self.Y[k]]
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def load_csv(cls, path) -> "IoDataset":
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            rows = [[float(v) for v in line.strip().split(",")]
                    for line in fh if line.strip()]
        data = np.array(rows, dtype=float)
        nu = sum(1 for c in header if c.startswith("u") and not c.startswith("aux"))
        time = data[:, 0]
        U = data[:, 1:1 + nu]
        Y = data[:, 1 + nu:]
        if len(time) > 1:
            period = float(time[1] - time[0])
        else:
            period = 1.0
        return cls(period, U, Y, time=time)
