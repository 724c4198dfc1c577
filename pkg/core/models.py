"""
Domain types shared by every layer of srmkit.
"""

from dataclasses import dataclass, field, asdict
from typing import Dict, List, Optional, Any

import numpy as np

import config
from core.errors import InvalidMatrix, DimensionMismatch

RSM_KINDS = ("within", "inter")
TRANSFORM_FAMILIES = ("orthogonal", "permutation", "haar")
SOURCES = ("gaussian", "supplied-matrix")


@dataclass(frozen=True)
class ThinSvd:
    """Compact SVD a = u @ diag(sigma) @ vt with sign-fixed factors."""

    u: np.ndarray
    sigma: np.ndarray
    vt: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.sigma.shape[0])

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.vt


@dataclass(frozen=True)
class ActivityMatrix:
    """Activity of one network layer: n units (rows) x m examples (columns)."""

    network_id: str
    layer_id: str
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise DimensionMismatch(
                f"activity for network '{self.network_id}' must be 2-D, got {data.ndim}-D"
            )
        if data.shape[0] < 1 or data.shape[1] < 2:
            raise DimensionMismatch(
                f"activity for network '{self.network_id}' needs >= 1 unit and >= 2 examples, "
                f"got {data.shape[0]}x{data.shape[1]}"
            )
        if not np.all(np.isfinite(data)):
            raise InvalidMatrix(f"activity for network '{self.network_id}' has non-finite entries")
        object.__setattr__(self, 'data', data)

    @property
    def units(self) -> int:
        return int(self.data.shape[0])

    @property
    def examples(self) -> int:
        return int(self.data.shape[1])

    def with_columns(self, columns: np.ndarray) -> 'ActivityMatrix':
        return ActivityMatrix(self.network_id, self.layer_id, self.data[:, columns])


@dataclass(frozen=True)
class Rsm:
    """An m x m similarity matrix; `within` is symmetric with unit diagonal."""

    values: np.ndarray
    kind: str

    @property
    def size(self) -> int:
        return int(self.values.shape[0])


@dataclass
class SrmModel:
    """Fitted shared response model: X_i ~ W_i S with W_i^T W_i = I_k."""

    k: int
    transforms: List[np.ndarray]
    shared: np.ndarray
    fit_trace: List[float]
    converged: bool
    network_ids: List[str]
    layer_id: str = ""
    standardized: bool = True
    iterations: int = 0
    tol: float = 0.0
    max_iters: int = 0
    init: str = "svd"
    seed: Optional[int] = None
    orthonormality_trace: List[float] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def networks(self) -> int:
        return len(self.transforms)

    @property
    def units(self) -> List[int]:
        return [int(w.shape[0]) for w in self.transforms]

    @property
    def final_objective(self) -> float:
        return float(self.fit_trace[-1]) if self.fit_trace else float('nan')


@dataclass(frozen=True)
class BootstrapCi:
    mean: float
    lo: float
    hi: float
    level: float
    resamples: int
    degenerate: bool = False
    axis: str = "samples"

    def to_dict(self) -> Dict[str, Any]:
        return {
            'mean': self.mean,
            'lo': self.lo,
            'hi': self.hi,
            'level': self.level,
            'resamples': self.resamples,
            'degenerate': self.degenerate,
            'axis': self.axis,
        }


@dataclass(frozen=True)
class SimulationSpec:
    """Parameters of the synthetic-recovery experiment."""

    units: int = config.SIM_UNITS
    examples: int = config.SIM_EXAMPLES
    networks: int = config.SIM_NETWORKS
    transform_family: str = "orthogonal"
    source: str = "gaussian"
    source_path: Optional[str] = None
    noise_sigma: float = 0.0
    split_fraction: float = config.SIM_SPLIT_FRACTION
    runs: int = config.SIM_RUNS
    seed: int = config.DEFAULT_SEED
    k: Optional[int] = None
    max_iters: int = config.MAX_ITERS
    tol: float = config.TOL
    resamples: int = config.BOOTSTRAP_RESAMPLES
    level: float = config.CI_LEVEL

    @property
    def shared_dim(self) -> int:
        return self.k if self.k is not None else self.units

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['k'] = self.shared_dim
        return data


@dataclass
class SyntheticRun:
    """One generated run: alignment/test splits plus ground truth."""

    run_index: int
    seed: int
    source: np.ndarray
    transforms: List[np.ndarray]
    alignment: List[ActivityMatrix]
    test: List[ActivityMatrix]
    alignment_columns: np.ndarray
    test_columns: np.ndarray


@dataclass(frozen=True)
class RunRecord:
    run_index: int
    seed: int
    shared_pearson: float
    shared_spearman: float
    native_pearson: float
    native_spearman: float
    variance_explained: float
    iterations: int
    converged: bool
    final_objective: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


RUN_METRICS = (
    "shared_pearson",
    "shared_spearman",
    "native_pearson",
    "native_spearman",
    "variance_explained",
)


@dataclass
class SimulationResult:
    spec: SimulationSpec
    records: List[RunRecord]
    aggregates: Dict[str, BootstrapCi]
    shared_beats_native_all: bool
    example_rsms: Optional[Dict[str, Rsm]] = None


@dataclass
class AlignmentReport:
    """Per-layer alignment metrics computed on held-out activations."""

    layer_id: str
    k: int
    networks: int
    examples: int
    units: Dict[str, int]
    shared_pearson: float
    shared_spearman: float
    native_pearson: float
    native_spearman: float
    variance_explained: float
    wrsm_consistency_mean: float
    wrsm_consistency_pairs: List[float]
    shared_pair_ci: BootstrapCi
    wrsm_consistency_ci: BootstrapCi
    wrsm_source: str = "evaluated"

    def to_metrics(self) -> Dict[str, Any]:
        return {
            'layer_id': self.layer_id,
            'k': self.k,
            'networks': self.networks,
            'examples': self.examples,
            'units': dict(self.units),
            'shared_pearson': self.shared_pearson,
            'shared_spearman': self.shared_spearman,
            'native_pearson': self.native_pearson,
            'native_spearman': self.native_spearman,
            'variance_explained': self.variance_explained,
            'wrsm_consistency': {
                'mean': self.wrsm_consistency_mean,
                'pairs': list(self.wrsm_consistency_pairs),
                'ci': self.wrsm_consistency_ci.to_dict(),
            },
            'shared_pair_correlation_ci': self.shared_pair_ci.to_dict(),
            'wrsm_source': self.wrsm_source,
        }
