"""
Pydantic models for experiment configuration, budgets and reports.

Provides type-safe configuration with automatic validation.
"""

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

SUBCOMMANDS = (
    "density",
    "series",
    "theta",
    "least-prime",
    "pair-corr",
    "dispersion",
    "model-verify",
    "conic",
    "bundle",
    "chatelet",
    "prob",
)

# Default task per subcommand; the first entry of each tuple is the default.
TASKS: dict[str, tuple[str, ...]] = {
    "density": ("constant", "odd-primes", "box"),
    "series": ("value",),
    "theta": ("value",),
    "least-prime": ("inputs", "linnik", "hit-fraction"),
    "pair-corr": ("value",),
    "dispersion": ("report", "bdh", "cool"),
    "model-verify": ("moments", "joint", "gamma"),
    "conic": ("solve", "q", "nu"),
    "bundle": ("search", "identity"),
    "chatelet": ("solve", "proportion"),
    "prob": ("rd", "lower-bound"),
}

Subcommand = Literal[
    "density",
    "series",
    "theta",
    "least-prime",
    "pair-corr",
    "dispersion",
    "model-verify",
    "conic",
    "bundle",
    "chatelet",
    "prob",
]


class Budgets(BaseModel):
    """Resource caps shared by factoring, enumeration and sieving."""

    factor_iterations: int = Field(default=2_000_000, ge=1)
    enumeration: int = Field(default=10_000_000, ge=1)
    sieve_limit: int = Field(default=10_000_000, ge=100)


class ExperimentConfig(BaseModel):
    """One experiment: a subcommand plus every parameter it may read."""

    subcommand: Subcommand
    task: Optional[str] = None

    degrees: list[int] = Field(default_factory=lambda: [1])
    height: int = Field(default=10, ge=1)
    modulus: int = Field(default=1, ge=1)
    anchor: int = 0
    residues: Optional[list[list[int]]] = None

    polys: Optional[list[list[int]]] = None
    groups: Optional[list[int]] = None
    coefficients: Optional[list[int]] = None
    primes: Optional[list[list[int]]] = None
    norm: int = Field(default=1, ge=1)

    x: Optional[float] = Field(default=None, ge=0)
    bound: Optional[int] = Field(default=None, ge=0)
    samples: int = Field(default=1000, ge=1)
    ell: Optional[int] = Field(default=None, ge=2)
    k: int = Field(default=1, ge=1)
    m: int = Field(default=2, ge=1)
    epsilon: float = Field(default=1.0, gt=0)
    exponent: float = Field(default=3.0, gt=0)
    c: float = Field(default=0.4, gt=0, lt=0.5)
    mode: Literal["exhaustive", "sampled"] = "exhaustive"
    d: Optional[int] = Field(default=None, ge=1)

    seed: int = Field(default=0, ge=0, lt=2**64)
    threads: int = Field(default=1, ge=1, le=256)
    truncation: int = Field(default=1_000_000, ge=2)
    format: Literal["json", "csv"] = "json"
    out: Optional[str] = None

    @field_validator("degrees")
    @classmethod
    def validate_degrees(cls, v: list[int]) -> list[int]:
        """Every degree must be a positive integer and the list non-empty."""
        if not v:
            raise ValueError("degrees must not be empty")
        if any(d < 1 for d in v):
            raise ValueError(f"degrees must be >= 1, got {v}")
        return v

    @field_validator("polys")
    @classmethod
    def validate_polys(cls, v: Optional[list[list[int]]]) -> Optional[list[list[int]]]:
        """Polynomials are constant-first coefficient lists with a nonzero leading term."""
        if v is None:
            return v
        if not v:
            raise ValueError("polys must not be empty")
        for coeffs in v:
            if not coeffs or coeffs[-1] == 0:
                raise ValueError(f"polynomial {coeffs} has no nonzero leading coefficient")
        return v

    @field_validator("coefficients")
    @classmethod
    def validate_coefficients(cls, v: Optional[list[int]]) -> Optional[list[int]]:
        """Conic coefficients are three nonzero integers."""
        if v is None:
            return v
        if len(v) != 3 or any(a == 0 for a in v):
            raise ValueError(f"coefficients must be three nonzero integers, got {v}")
        return v

    @model_validator(mode="after")
    def validate_consistency(self) -> "ExperimentConfig":
        """Cross-field checks: task names, residue shapes, grouping sizes."""
        tasks = TASKS[self.subcommand]
        if self.task is None:
            self.task = tasks[0]
        elif self.task not in tasks:
            raise ValueError(
                f"Unknown task '{self.task}' for {self.subcommand}. Valid tasks: {list(tasks)}"
            )

        if self.residues is not None:
            if len(self.residues) != len(self.degrees):
                raise ValueError("residues must give one polynomial per degree")
            for residue, degree in zip(self.residues, self.degrees):
                if len(residue) > degree + 1:
                    raise ValueError(f"residue {residue} has degree above {degree}")

        if self.groups is not None:
            if len(self.groups) != 3 or self.groups[0] < 1 or self.groups[1] < 1:
                raise ValueError("groups must be (n1, n2, n3) with n1, n2 >= 1 and n3 >= 0")
            if self.groups[2] < 0:
                raise ValueError("groups must be (n1, n2, n3) with n3 >= 0")
            if self.polys is not None and sum(self.groups) != len(self.polys):
                raise ValueError(
                    f"groups {self.groups} do not add up to {len(self.polys)} polynomials"
                )

        if self.subcommand == "pair-corr" and self.k == self.m:
            raise ValueError("pair correlation needs k != m")
        return self

    @property
    def total_degree(self) -> int:
        return sum(self.degrees)


class ExperimentReport(BaseModel):
    """Serializable record of one experiment run."""

    schema_version: int = 1
    tool: str = "schinzel-lab"
    version: str
    config: dict[str, Any]
    wall_time_s: float = 0.0
    provenance: dict[str, Any] = Field(default_factory=dict)
    results: Any = None
    rows: Optional[list[dict[str, Any]]] = None
    columns: Optional[list[str]] = None

    def payload(self) -> dict[str, Any]:
        """Everything except the wall time; two equal runs give equal payloads."""
        return {
            "schema": self.schema_version,
            "tool": self.tool,
            "version": self.version,
            "config": self.config,
            "provenance": self.provenance,
            "results": self.results,
        }
