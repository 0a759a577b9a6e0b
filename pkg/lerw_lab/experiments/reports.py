"""
Report Models - Structured results shared by every experiment.
"""

import math
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

# Large stream offset for reference runs inside one experiment, so they never
# reuse the replica streams of the main estimate.
REFERENCE_STREAM_OFFSET = 1 << 32


class ExperimentConfig(BaseModel):
    """Experiment plumbing: scales, sample counts, seed, speed choice and test points."""

    n_values: List[int] = Field(default_factory=lambda: [16, 32, 64])
    samples: int = Field(default=1000, ge=1)
    seed: int = Field(default=0, ge=0)
    speed: Literal['empirical', 'ideal'] = 'empirical'
    eps: List[float] = Field(default_factory=list)
    z: List[Tuple[float, float]] = Field(default_factory=list)
    workers: int = Field(default=1, ge=1)

    @field_validator('n_values')
    @classmethod
    def _positive_scales(cls, values: List[int]) -> List[int]:
        if any(n < 1 for n in values):
            raise ValueError("every n must be at least 1")
        return values

    @field_validator('eps')
    @classmethod
    def _eps_range(cls, values: List[float]) -> List[float]:
        if any(not 0 < e < 1 for e in values):
            raise ValueError("every eps must lie in (0, 1)")
        return values

    @model_validator(mode='after')
    def _balls_inside_disk(self) -> "ExperimentConfig":
        for x, y in self.z:
            for e in self.eps:
                if math.hypot(x, y) + e >= 1:
                    raise ValueError(f"B(({x}, {y}), {e}) is not inside the unit disk")
        return self


class EstimateReport(BaseModel):
    """A Monte Carlo point estimate with its standard error."""

    estimate: float
    stderr: float = Field(ge=0)
    samples: int = Field(ge=0)
    seed: int
    label: str = "estimate"
    metadata: Dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def from_values(cls, values: Sequence[float], seed: int, **kwargs: Any) -> "EstimateReport":
        """Sample mean and standard error of the mean (zero for a single value)."""
        arr = np.asarray(values, dtype=float)
        count = len(arr)
        mean = math.fsum(arr.tolist()) / count if count else float('nan')
        stderr = float(arr.std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0
        return cls(estimate=mean, stderr=stderr, samples=count, seed=seed, **kwargs)

    @classmethod
    def from_proportion(cls, hits: int, count: int, seed: int, **kwargs: Any) -> "EstimateReport":
        p = hits / count if count else float('nan')
        stderr = math.sqrt(p * (1 - p) / count) if count else 0.0
        return cls(estimate=p, stderr=stderr, samples=count, seed=seed, **kwargs)

    def to_row(self) -> Dict[str, Any]:
        """Flat CSV row: metadata columns first, then the estimate columns."""
        row = {key: value for key, value in self.metadata.items()
               if isinstance(value, (int, float, str, bool)) or value is None}
        row.update({
            'label': self.label,
            'estimate': self.estimate,
            'stderr': self.stderr,
            'count': self.samples,
            'seed': self.seed,
        })
        return row


class ExponentFit(BaseModel):
    """Least-squares fit of log y against log x."""

    slope: float
    intercept: float
    residuals: List[float]
    half_width: float = Field(ge=0)
    x_values: List[float]

    def to_row(self) -> Dict[str, Any]:
        return {
            'slope': self.slope,
            'intercept': self.intercept,
            'half_width': self.half_width,
            'max_abs_residual': max((abs(r) for r in self.residuals), default=0.0),
            'points': len(self.x_values),
        }


def ratio_report(num: EstimateReport, den: EstimateReport, seed: int, label: str = "diagnostic",
                 metadata: Optional[Dict[str, Any]] = None) -> EstimateReport:
    """num / den with a delta-method standard error (independence assumed)."""
    ratio = num.estimate / den.estimate
    rel = math.sqrt((num.stderr / num.estimate) ** 2 + (den.stderr / den.estimate) ** 2) \
        if num.estimate and den.estimate else 0.0
    return EstimateReport(estimate=ratio, stderr=abs(ratio) * rel, samples=min(num.samples, den.samples),
                          seed=seed, label=label, metadata=metadata or {})
