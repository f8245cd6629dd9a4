"""
Experiment execution runner with comprehensive error handling.
"""

import math
import time
from typing import Any, Callable, Optional

from . import __version__
from .arith import Place, is_probable_regime
from .bernoulli import (
    OmegaSpec,
    euler_factor_table,
    fraction_str,
    verify_gamma_moment,
    verify_independence,
    verify_joint,
    verify_moments,
)
from .chatelet import (
    ChateletSpec,
    lower_bound,
    rd_enumerate,
    rd_exact,
    solvability_proportion,
    solve_chatelet,
)
from .config import get_budgets
from .conic import (
    ConicSpec,
    bundle_search,
    identity_check,
    local_solvable,
    nu_profile,
    obstruction,
    q_indicator,
    q_value,
    sample_profile_primes,
    solve_conic,
)
from .counting import (
    bdh_exceptional_fraction,
    dispersion,
    least_prime_inputs,
    linnik_experiment,
    pair_correlation,
    prime_hit_fraction,
    theorem_cool_fraction,
    theta,
)
from .errors import BudgetExceededError, HypothesisError, InvariantViolationError
from .logger import logger
from .models import ExperimentConfig, ExperimentReport
from .polyff import CoeffBox, IntPoly, PolyTuple
from .series import (
    box_schinzel_proportion,
    schinzel_density,
    odd_prime_product,
    series_floor_diag,
    singular_series,
)

# Oracle cross-check of r_d by listing coefficient vectors stays below this degree.
_RD_ORACLE_MAX_DEGREE = 8

# Prime groupings drawn for a nu profile.
_PROFILE_DRAWS = 5

LINNIK_COLUMNS = ["poly", "height", "bound", "m", "least_prime", "within_bound"]
PROPORTION_COLUMNS = ["sample", "f", "solvable", "m", "x", "y", "path", "skipped"]
DISPERSION_COLUMNS = ["coefficients", "theta", "series", "residual"]


class ExperimentExecutionError(Exception):
    """Raised when an experiment fails for a reason other than a domain error."""

    pass


class ExperimentRunner:
    """
    Dispatches one validated experiment to the module operations and wraps the
    outcome in an ExperimentReport.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        progress_callback: Optional[Callable[[int, str], None]] = None,
    ):
        """
        Initialize experiment runner.

        Args:
            config: Validated ExperimentConfig instance
            progress_callback: Optional function(percent: int, message: str) called during execution
        """
        self.config = config
        self.progress_callback = progress_callback
        self.metrics: dict[str, float] = {}
        self.provenance: dict[str, Any] = {}
        self.rows: Optional[list[dict]] = None
        self.columns: Optional[list[str]] = None
        self._handlers: dict[tuple[str, str], Callable[[], Any]] = {
            ("density", "constant"): self._density_constant,
            ("density", "odd-primes"): self._density_odd_primes,
            ("density", "box"): self._density_box,
            ("series", "value"): self._series_value,
            ("theta", "value"): self._theta_value,
            ("least-prime", "inputs"): self._least_prime_inputs,
            ("least-prime", "linnik"): self._least_prime_linnik,
            ("least-prime", "hit-fraction"): self._least_prime_hit_fraction,
            ("pair-corr", "value"): self._pair_corr,
            ("dispersion", "report"): self._dispersion_report,
            ("dispersion", "bdh"): self._dispersion_bdh,
            ("dispersion", "cool"): self._dispersion_cool,
            ("model-verify", "moments"): self._model_moments,
            ("model-verify", "joint"): self._model_joint,
            ("model-verify", "gamma"): self._model_gamma,
            ("conic", "solve"): self._conic_solve,
            ("conic", "q"): self._conic_q,
            ("conic", "nu"): self._conic_nu,
            ("bundle", "search"): self._bundle_search,
            ("bundle", "identity"): self._bundle_identity,
            ("chatelet", "solve"): self._chatelet_solve,
            ("chatelet", "proportion"): self._chatelet_proportion,
            ("prob", "rd"): self._prob_rd,
            ("prob", "lower-bound"): self._prob_lower_bound,
        }

    def _report_progress(self, percent: int, message: str):
        """Invoke progress callback if configured."""
        if self.progress_callback:
            self.progress_callback(percent, message)

    def run(self) -> ExperimentReport:
        """
        Execute the experiment.

        Domain errors (budget, invariant, hypothesis and validation errors) pass
        through unchanged so the caller can map them to exit codes; anything else
        is wrapped in ExperimentExecutionError.
        """
        config = self.config
        logger.info("=" * 60)
        logger.info(f"Starting experiment: {config.subcommand} / {config.task}")
        logger.info(f"Seed: {config.seed}, threads: {config.threads}")
        logger.info("=" * 60)

        self._report_progress(5, "Validating experiment...")
        start_time = time.perf_counter()
        self.provenance = {
            "budgets": get_budgets().model_dump(),
            "probable_prime": False,
            "truncation_tail": None,
        }

        try:
            handler = self._handlers[(config.subcommand, config.task)]
            self._report_progress(10, f"Running {config.subcommand}...")
            results = self._timed("compute_s", handler)
        except (BudgetExceededError, InvariantViolationError) as e:
            logger.error(f"Experiment aborted: {e}")
            raise
        except ValueError as e:
            logger.error(f"Invalid experiment: {e}")
            raise
        except Exception as e:
            logger.exception(f"Experiment execution failed: {e}")
            raise ExperimentExecutionError(f"Experiment failed: {e}") from e

        total_time = time.perf_counter() - start_time
        self.metrics["total_s"] = round(total_time, 4)
        self._report_progress(100, "Done")

        logger.info("=" * 60)
        logger.info(f"Experiment completed successfully in {total_time:.2f}s")
        logger.info("=" * 60)

        return ExperimentReport(
            version=__version__,
            config=config.model_dump(mode="json"),
            wall_time_s=round(total_time, 4),
            provenance=self.provenance,
            results=results,
            rows=self.rows,
            columns=self.columns,
        )

    def _timed(self, name: str, fn: Callable[[], Any]) -> Any:
        start = time.perf_counter()
        result = fn()
        elapsed = time.perf_counter() - start
        self.metrics[name] = round(elapsed, 4)
        logger.debug(f"{name}: {elapsed:.2f}s")
        return result

    # ------------------------------------------------------------------
    # Shared inputs
    # ------------------------------------------------------------------

    def _box(self) -> CoeffBox:
        c = self.config
        residues = None if c.residues is None else tuple(tuple(q) for q in c.residues)
        return CoeffBox(tuple(c.degrees), c.height, c.modulus, residues, c.anchor)

    def _polys(self) -> PolyTuple:
        if self.config.polys is None:
            raise ValueError(f"{self.config.subcommand} needs --polys")
        return PolyTuple.of(*self.config.polys)

    def _require(self, name: str) -> Any:
        value = getattr(self.config, name)
        if value is None:
            raise ValueError(f"{self.config.subcommand} {self.config.task} needs --{name}")
        return value

    def _degree(self) -> int:
        return self.config.d if self.config.d is not None else self.config.degrees[0]

    def _coefficients(self) -> tuple[int, int, int]:
        return tuple(self._require("coefficients"))

    def _record_tail(self, low: float, high: float, truncation: int):
        self.provenance["truncation_tail"] = {
            "truncation": truncation,
            "low": low,
            "high": high,
        }

    def _flag_probable(self, values: list[int]):
        if any(is_probable_regime(v) for v in values):
            self.provenance["probable_prime"] = True

    # ------------------------------------------------------------------
    # density / series / theta
    # ------------------------------------------------------------------

    def _density_constant(self) -> dict:
        c = self.config
        constant = schinzel_density(c.degrees, c.modulus, c.truncation)
        self._record_tail(constant.tail_low, constant.tail_high, constant.truncation)
        return constant.to_json()

    def _density_odd_primes(self) -> dict:
        constant = odd_prime_product(self._degree(), self.config.truncation)
        self._record_tail(constant.tail_low, constant.tail_high, constant.truncation)
        return constant.to_json()

    def _density_box(self) -> dict:
        c = self.config
        result = box_schinzel_proportion(
            self._box(), c.mode, samples=c.samples, seed=c.seed, truncation=c.truncation
        )
        density = result["density"]
        self._record_tail(float(density["tail_low"]), float(density["tail_high"]), c.truncation)
        return result

    def _series_value(self) -> dict:
        c = self.config
        polys = self._polys()
        x = self._require("x")
        value = singular_series(polys, x, c.anchor, c.modulus)
        return {
            "series": value.to_json(),
            "floor": series_floor_diag(polys, x, c.anchor, c.modulus),
        }

    def _theta_value(self) -> dict:
        c = self.config
        value = theta(self._polys(), self._require("x"), c.anchor, c.modulus)
        if value.probable:
            self.provenance["probable_prime"] = True
        return value.to_json()

    # ------------------------------------------------------------------
    # least-prime
    # ------------------------------------------------------------------

    def _least_prime_inputs(self) -> dict:
        c = self.config
        polys = self._polys()
        hits = least_prime_inputs(polys, c.exponent, c.anchor, c.modulus, m_bound=c.bound)
        if hits.hits:
            self._flag_probable(list(polys.values(hits.hits[-1])))
        self.rows = [{"m": m, "values": list(polys.values(m))} for m in hits.hits]
        self.columns = ["m", "values"]
        return hits.to_json()

    def _least_prime_linnik(self) -> dict:
        c = self.config
        result = linnik_experiment(self._degree(), c.height, c.samples, c.epsilon, c.seed)
        self.rows = result["records"]
        self.columns = LINNIK_COLUMNS
        return result

    def _least_prime_hit_fraction(self) -> dict:
        c = self.config
        m_bound = self._require("bound")
        fraction = prime_hit_fraction(self._box(), m_bound, c.samples, c.seed)
        return {"m_bound": m_bound, "samples": c.samples, "fraction": fraction}

    # ------------------------------------------------------------------
    # pair-corr / dispersion
    # ------------------------------------------------------------------

    def _pair_corr(self) -> dict:
        c = self.config
        value = pair_correlation(
            c.height, self._degree(), c.k, c.m, mode=c.mode, samples=c.samples, seed=c.seed
        )
        return value.to_json()

    def _dispersion_x(self) -> float:
        c = self.config
        if c.x is not None:
            return c.x
        if c.height < 3:
            raise HypothesisError("height >= 3", "x defaults to (log H)^exponent")
        return math.log(c.height) ** c.exponent

    def _dispersion_report(self) -> dict:
        c = self.config
        keep_rows = c.format == "csv"
        report = dispersion(
            self._box(),
            self._dispersion_x(),
            mode=c.mode,
            seed=c.seed,
            samples=c.samples,
            threads=c.threads,
            keep_rows=keep_rows,
        )
        if keep_rows:
            self.rows = report.rows or []
            self.columns = DISPERSION_COLUMNS
        return report.to_json()

    def _dispersion_bdh(self) -> dict:
        c = self.config
        x = self._dispersion_x()
        fraction = bdh_exceptional_fraction(self._box(), x, c.c, c.seed, c.samples)
        return {"x": x, "c": c.c, "samples": c.samples, "exceptional_fraction": fraction}

    def _dispersion_cool(self) -> dict:
        c = self.config
        fraction = theorem_cool_fraction(self._box(), c.exponent, c.seed, c.samples)
        return {"A": c.exponent, "samples": c.samples, "fraction": fraction}

    # ------------------------------------------------------------------
    # model-verify
    # ------------------------------------------------------------------

    def _model_moments(self) -> dict:
        c = self.config
        ell = self._require("ell")
        spec = OmegaSpec(ell, tuple(c.degrees))
        report = verify_moments(spec, anchor=c.anchor)
        checks = list(report.checks)
        result = report.to_json()
        if spec.n == 1:
            independence = verify_independence(ell, c.degrees[0])
            checks.extend(independence)
            result["independence"] = [check.to_json() for check in independence]
        result["euler_factors"] = euler_factor_table(ell, c.degrees).to_json()
        self._assert_checks(checks)
        return result

    def _model_joint(self) -> dict:
        spec = OmegaSpec(self._require("ell"), tuple(self.config.degrees))
        checks = verify_joint(spec)
        self._assert_checks(checks)
        return {
            "ell": spec.ell,
            "degrees": list(spec.degrees),
            "tuples": spec.size,
            "checks": [check.to_json() for check in checks],
        }

    def _model_gamma(self) -> dict:
        check = verify_gamma_moment(self.config.modulus, self.config.degrees)
        self._assert_checks([check])
        return check.to_json()

    def _assert_checks(self, checks: list) -> None:
        failed = [check.name for check in checks if not check.equal]
        if failed:
            raise InvariantViolationError(f"Exhaustive counts differ from closed forms: {failed}")
        logger.info(f"All {len(checks)} exact checks agree")

    # ------------------------------------------------------------------
    # conic / bundle
    # ------------------------------------------------------------------

    def _conic_solve(self) -> dict:
        a, b, c = self._coefficients()
        return solve_conic(a, b, c).to_json()

    def _conic_q(self) -> dict:
        primes = self._require("primes")
        spec = ConicSpec(self._coefficients(), tuple(tuple(g) for g in primes))
        q = q_indicator(spec)
        A, B, C = spec.coefficients
        place = obstruction(A, B, C, spec.all_primes())
        if (q == 1) != (place is None):
            raise InvariantViolationError(f"Q = {q} disagrees with the Hilbert symbol test")
        return {
            "conic": spec.to_json(),
            "Q": fraction_str(q_value(spec)),
            "indicator": q,
            "obstruction": None if place is None else str(place),
        }

    def _conic_nu(self) -> dict:
        c = self.config
        groups = self._require("groups")
        profile = nu_profile(*self._coefficients(), *groups)
        draws = sample_profile_primes(profile, _PROFILE_DRAWS, c.seed)
        for draw in draws:
            spec = ConicSpec(profile.a, draw)
            A, B, C = spec.coefficients
            if not all(local_solvable(A, B, C, Place(p)) for p in spec.bad_primes):
                raise InvariantViolationError(f"nu profile draw {draw} is locally obstructed")
        return {"profile": profile.to_json(), "draws": draws}

    def _bundle_search(self) -> dict:
        c = self.config
        result = bundle_search(
            self._coefficients(),
            self._polys(),
            self._require("groups"),
            c.anchor,
            c.modulus,
            m_bound=c.bound if c.bound is not None else 1000,
        )
        self.rows = [attempt.to_json() for attempt in result.attempts]
        self.columns = ["m", "reason"]
        return result.to_json()

    def _bundle_identity(self) -> dict:
        c = self.config
        report = identity_check(
            self._coefficients(),
            self._polys(),
            self._require("groups"),
            self._require("x"),
            c.anchor,
            c.modulus,
        )
        if not report.holds:
            raise InvariantViolationError(f"Subset-sum identity fails at m = {report.mismatches}")
        return report.to_json()

    # ------------------------------------------------------------------
    # chatelet / prob
    # ------------------------------------------------------------------

    def _chatelet_solve(self) -> dict:
        c = self.config
        polys = self._require("polys")
        spec = ChateletSpec(c.norm, IntPoly(tuple(polys[0])), c.anchor, c.modulus)
        m_bound = c.bound if c.bound is not None else 1000
        solution = solve_chatelet(spec, m_bound)
        self.rows = [{"m": m, "reason": reason} for m, reason in solution.log]
        self.columns = ["m", "reason"]
        return solution.to_json()

    def _chatelet_proportion(self) -> dict:
        c = self.config
        m_bound = c.bound if c.bound is not None else 10_000
        report = solvability_proportion(
            self._degree(), c.height, m_bound, c.samples, c.seed, c.threads
        )
        self.rows = report.records
        self.columns = PROPORTION_COLUMNS
        return report.to_json()

    def _prob_rd(self) -> dict:
        d = self._require("d")
        value = rd_exact(d)
        result = {"d": d, "r_d": fraction_str(value)}
        if d <= _RD_ORACLE_MAX_DEGREE:
            listed = rd_enumerate(d)
            if listed != value:
                raise InvariantViolationError(f"r_{d}: {value} from value vectors, {listed} listed")
            result["enumerated"] = fraction_str(listed)
        return result

    def _prob_lower_bound(self) -> dict:
        table = lower_bound(self._require("d"), self.config.truncation)
        self._record_tail(table.tail_low, table.tail_high, table.truncation)
        return table.to_json()


def run_experiment(experiment: dict) -> ExperimentReport:
    """Convenience function: validate a raw experiment mapping and run it."""
    config = ExperimentConfig(**experiment)
    return ExperimentRunner(config).run()
