"""Container for a positive real-valued sample."""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class Sample:
    """Positive observations stored sorted ascending.

    ``order`` holds the permutation that sorted the input, so
    ``values[inverse]`` (see :meth:`original`) gives the data as supplied.
    ``years`` is kept aligned with ``values`` when present.
    """

    values: np.ndarray
    order: np.ndarray
    label: str = ""
    deflator_base: str | None = None
    years: np.ndarray | None = field(default=None)

    @classmethod
    def from_values(cls, values, label="", years=None, deflator_base=None):
        x = np.asarray(values, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("empty sample")
        if not np.all(np.isfinite(x)) or np.any(x <= 0):
            raise ValueError("sample values must be finite and strictly positive")
        order = np.argsort(x, kind="stable")
        yrs = None
        if years is not None:
            yrs = np.asarray(years).ravel()
            if yrs.shape != x.shape:
                raise ValueError("years must align with values")
            yrs = yrs[order]
        return cls(x[order], order, label, deflator_base, yrs)

    def __len__(self):
        return self.values.size

    @property
    def n(self):
        return self.values.size

    def original(self):
        out = np.empty_like(self.values)
        out[self.order] = self.values
        return out

    def mean(self):
        return float(np.mean(self.values))

    def rms(self):
        return float(np.sqrt(np.mean(self.values ** 2)))

    def std(self):
        return float(np.std(self.values))
