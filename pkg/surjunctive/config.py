import os
from contextlib import contextmanager
from typing import Dict, Iterator, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

from .errors import ParameterError

load_dotenv()


class NumericsConfig(BaseModel):
    """Sizes, tolerances and iteration limits for the numerical kernels."""

    ball_size_cap: int = Field(default=250_000, description="Largest ball enumerated")
    support_radius_limit: int = Field(
        default=256, description="Longest word searched when locating an element"
    )
    coordinate_limit: int = Field(
        default=2**62, description="Bound on |coordinate| for Z^d and H3 elements"
    )
    finite_order_cap: int = Field(
        default=1000, description="Largest finite group with a multiplication table"
    )
    dense_limit: int = Field(
        default=4000, description="Largest dimension handled by dense linear algebra"
    )
    canonical_threshold: float = Field(
        default=1e-15, description="Float coefficients below this modulus are dropped"
    )
    hermitian_tol: float = Field(
        default=1e-12, description="Allowed max |M - M*| entry for Hermitian input"
    )
    eig_clamp: float = Field(
        default=1e-12, description="Negative eigenvalues above -eig_clamp become 0"
    )
    lp_tolerance: float = Field(default=1e-9, description="LP optimality tolerance")
    lp_directions: int = Field(
        default=8, description="Initial phase directions for the complex l1 LP"
    )
    lp_max_directions: int = Field(
        default=64, description="Direction count at which LP refinement stops"
    )
    lp_refine_gap: float = Field(
        default=0.01, description="Relative LP bracket that ends refinement"
    )
    power_tol: float = Field(default=1e-10, description="p-norm power iteration tol")
    power_max_iter: int = Field(default=10_000, description="p-norm power iterations")
    descent_iterations: int = Field(
        default=300, description="Steps per restart of the modulus descent"
    )
    plateau_spread: float = Field(
        default=0.05, description="Relative spread of the last three radii"
    )
    convergence_tol: float = Field(
        default=1e-4, description="Relative change flagging nc-Lp convergence"
    )
    herz_cp_candidate: float = Field(
        default=1.0, description="Candidate Herz constant tested for violations"
    )


class OutputConfig(BaseModel):
    """Result file configuration."""

    results_dir: str = Field(default="results", description="Default output directory")


class Config:
    """Main configuration class combining all sub-configurations."""

    def __init__(
        self,
        numerics: NumericsConfig,
        output: OutputConfig,
        log_level: str = "INFO",
        log_file: Optional[str] = None,
    ):
        self.numerics = numerics
        self.output = output
        self.log_level = log_level
        self.log_file = log_file


def _env(name: str, cast, default):
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    return cast(raw)


def load_config() -> Config:
    """Load configuration from environment variables."""

    defaults = NumericsConfig()
    numerics = NumericsConfig(
        ball_size_cap=_env("SURJ_BALL_SIZE_CAP", int, defaults.ball_size_cap),
        coordinate_limit=_env(
            "SURJ_COORDINATE_LIMIT", int, defaults.coordinate_limit
        ),
        dense_limit=_env("SURJ_DENSE_LIMIT", int, defaults.dense_limit),
        lp_tolerance=_env("SURJ_LP_TOLERANCE", float, defaults.lp_tolerance),
        descent_iterations=_env(
            "SURJ_DESCENT_ITERATIONS", int, defaults.descent_iterations
        ),
    )

    output = OutputConfig(
        results_dir=os.getenv("SURJ_RESULTS_DIR", "results"),
    )

    return Config(
        numerics=numerics,
        output=output,
        log_level=os.getenv("LOG_LEVEL", "INFO"),
        log_file=os.getenv("LOG_FILE"),
    )


@contextmanager
def numerics_overrides(overrides: Dict[str, float]) -> Iterator[NumericsConfig]:
    """Temporarily replace numerics fields on the global config."""
    previous = config.numerics
    unknown = set(overrides) - set(NumericsConfig.model_fields)
    if unknown:
        raise ParameterError(f"Unknown tolerance override(s): {sorted(unknown)}")
    config.numerics = NumericsConfig.model_validate(
        {**previous.model_dump(), **overrides}
    )
    try:
        yield config.numerics
    finally:
        config.numerics = previous


# Global configuration instance
config = load_config()
