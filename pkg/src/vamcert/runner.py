"""Experiment orchestration: build rates from a config, run, verify, report.

Rate identifiers map to certificate constructors and to the residual column
(or point sequence) they certify:

  linear_step / linear_moving / linear_frozen   harmonic preset closed forms
  shifted_linear_step                           shifted harmonic closed form
  step / moving / frozen                        witness-composed rates
  companion_gap                                 gap to the implicit companion
  limit_residual / moving_via_limit / frozen_via_limit
                                                the limit-member suite
  family_cauchy                                 the frozen orbit (T_n x0)
  window:<L>:<id>                               fixed-window metastability
  companion_meta / anchored_meta / viscosity_meta
                                                metastability witnesses

Unknown identifiers are rejected with the list of valid names.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from . import rates as rl
from .config import ConfigError, Experiment
from .engine import (
    BoundConstant,
    IterationConfig,
    Trace,
    browder_point,
    compute_bound_constant,
    run_iteration,
)
from .moduli import MetaRate, Modulus, ceil_frac
from .operators import ConstantMap, family_eval
from .schedules import MissingWitnessError
from .spaces import Ball, check_axioms
from .verify import (
    Status,
    Verdict,
    parse_counter,
    verify_cauchy_modulus,
    verify_conv_rate,
    verify_metastability,
)

__all__ = ["RateBundle", "build_rates", "ExperimentResult", "run_experiment",
           "VALID_RATE_IDS", "exit_code_for"]

VALID_RATE_IDS = [
    "linear_step", "linear_moving", "linear_frozen", "shifted_linear_step",
    "step", "moving", "frozen", "companion_gap",
    "limit_residual", "moving_via_limit", "frozen_via_limit",
    "family_cauchy", "window:<L>:<id>",
    "companion_meta", "anchored_meta", "viscosity_meta",
]


@dataclass
class BuiltRate:
    rate_id: str
    kind: str  # "column" | "cauchy_orbit" | "window" | "meta_trace" | "meta_companion"
    witness: object  # Modulus | MetaRate | callable
    column: Optional[str] = None
    consumed: List[str] = field(default_factory=list)
    extra_slack: float = 0.0
    window: Optional[int] = None


@dataclass
class RateBundle:
    rates: Dict[str, BuiltRate]
    K: BoundConstant
    M: Optional[int]
    needs_browder: bool
    needs_tilde: bool


def _rate_spec(entry: Union[str, dict]) -> Tuple[str, dict]:
    if isinstance(entry, str):
        return entry, {}
    if isinstance(entry, dict) and "id" in entry:
        return entry["id"], {k: v for k, v in entry.items() if k != "id"}
    raise ConfigError("rates", f"rate entry must be a string or an object with 'id', got {entry!r}")


def _diameter_bound(exp: Experiment) -> Optional[int]:
    subset = exp.space.subset
    if isinstance(subset, Ball):
        return max(1, ceil_frac(Fraction(2 * subset.radius).limit_denominator(10**9)))
    return None


def build_rates(exp: Experiment, K: BoundConstant) -> RateBundle:
    """Construct every requested certificate, failing loudly on missing
    witnesses or inapplicable schedules."""
    schedule = exp.schedule
    alpha = Fraction(exp.contraction.alpha).limit_denominator(10**9) \
        if exp.contraction.alpha else Fraction(0)
    built: Dict[str, BuiltRate] = {}
    needs_browder = False
    needs_tilde = False
    M_override = exp.overrides.get("M")
    M_default = _diameter_bound(exp)

    def M_for(rate_id: str, fallback_3K: bool) -> int:
        if M_override is not None:
            return int(M_override)
        if M_default is not None:
            return M_default
        if fallback_3K:
            return 3 * K.value
        raise ConfigError(f"rates.{rate_id}",
                          "needs a bounded subset (ball) or an explicit M override")

    cache: Dict[str, object] = {}

    def step_rate(opts: dict) -> Modulus:
        if "step" not in cache:
            cache["step"] = rl.step_asreg_rate(schedule, alpha, K.value,
                                               variant=opts.get("variant", "auto"))
        return cache["step"]

    def moving_rate(opts: dict) -> Modulus:
        if "moving" not in cache:
            cache["moving"] = rl.moving_asreg_rate(step_rate(opts), schedule, K.value)
        return cache["moving"]

    def gap_rate() -> Modulus:
        if "gap" not in cache:
            cache["gap"] = rl.companion_gap_rate(schedule, alpha, K.value)
        return cache["gap"]

    def suite(opts: dict):
        if "suite" not in cache:
            gaps = {m: None for m in exp.tm_indices}
            cache["suite"] = rl.limit_map_suite(gap_rate(), schedule, K.value,
                                                frozen_gaps=gaps)
        return cache["suite"]

    def require_preset(rate_id: str, preset: str) -> None:
        if schedule.name != preset:
            raise ConfigError(f"rates.{rate_id}",
                              f"requires the {preset} preset, got {schedule.name}")
        if schedule.built_for_alpha is not None and schedule.built_for_alpha != alpha:
            raise ConfigError(
                f"rates.{rate_id}",
                f"schedule was built for contraction factor {schedule.built_for_alpha}, "
                f"but the configured contraction has {alpha}")

    for entry in exp.rates:
        rate_id, opts = _rate_spec(entry)
        try:
            if rate_id == "linear_step":
                require_preset(rate_id, "harmonic")
                step, _, _ = rl.linear_rate_suite(alpha, K.value)
                built[rate_id] = BuiltRate(rate_id, "column", step, column="step",
                                           consumed=["harmonic closed form"])
            elif rate_id == "linear_moving":
                require_preset(rate_id, "harmonic")
                _, moving, _ = rl.linear_rate_suite(alpha, K.value)
                built[rate_id] = BuiltRate(rate_id, "column", moving, column="tn",
                                           consumed=["harmonic closed form"])
            elif rate_id == "linear_frozen":
                require_preset(rate_id, "harmonic")
                _, _, frozen = rl.linear_rate_suite(alpha, K.value)
                for m in exp.tm_indices:
                    built[f"{rate_id}[{m}]"] = BuiltRate(
                        rate_id, "column", frozen, column=f"tm_{m}",
                        consumed=["harmonic closed form"])
            elif rate_id == "shifted_linear_step":
                require_preset(rate_id, "shifted_harmonic")
                built[rate_id] = BuiltRate(
                    rate_id, "column", rl.shifted_linear_asreg_rate(alpha, K.value),
                    column="step", consumed=["shifted harmonic closed form"])
            elif rate_id == "step":
                built[rate_id] = BuiltRate(
                    rate_id, "column", step_rate(opts), column="step",
                    consumed=["alpha_divergence", "alpha_diff_cauchy", "step-size witnesses"])
            elif rate_id == "moving":
                built[rate_id] = BuiltRate(
                    rate_id, "column", moving_rate(opts), column="tn",
                    consumed=["alpha_to_zero", "step rate"])
            elif rate_id == "frozen":
                for m in exp.tm_indices:
                    witness = rl.frozen_asreg_rate(moving_rate(opts), schedule, m)
                    built[f"{rate_id}[{m}]"] = BuiltRate(
                        rate_id, "column", witness, column=f"tm_{m}",
                        consumed=["moving rate", "lambda floor"])
            elif rate_id == "companion_gap":
                needs_browder = True
                built[rate_id] = BuiltRate(
                    rate_id, "column", gap_rate(), column="browder_gap",
                    consumed=["alpha_divergence", "alpha_ratio_to_zero", "lambda_to_limit"],
                    extra_slack=2 * exp.eps_fp)
            elif rate_id == "limit_residual":
                needs_tilde = True
                tilde, _, _ = suite(opts)
                built[rate_id] = BuiltRate(
                    rate_id, "column", tilde, column="tildeT",
                    consumed=["companion gap rate", "alpha_to_zero"])
            elif rate_id == "moving_via_limit":
                _, moving_t, _ = suite(opts)
                built[rate_id] = BuiltRate(
                    rate_id, "column", moving_t, column="tn",
                    consumed=["limit residual rate", "lambda_to_limit"])
            elif rate_id == "frozen_via_limit":
                _, _, frozen_t = suite(opts)
                for m, witness in frozen_t.items():
                    built[f"{rate_id}[{m}]"] = BuiltRate(
                        rate_id, "column", witness, column=f"tm_{m}",
                        consumed=["limit residual rate", "step-size gaps"])
            elif rate_id == "family_cauchy":
                d_xz = exp.space.dist(exp.x0, exp.z)
                witness = rl.family_cauchy_rate(schedule, d_xz,
                                                x_in_fixed_set=d_xz <= exp.metric_tol)
                built[rate_id] = BuiltRate(rate_id, "cauchy_orbit", witness,
                                           consumed=["lambda_to_limit", "limit_gap"])
            elif rate_id.startswith("window:"):
                parts = rate_id.split(":")
                if len(parts) != 3:
                    raise ConfigError("rates", f"window rate must be window:<L>:<id>, got {rate_id}")
                L = int(parts[1])
                base_id = parts[2]
                base_map = {
                    "linear_step": lambda: rl.linear_rate_suite(alpha, K.value)[0],
                    "shifted_linear_step": lambda: rl.shifted_linear_asreg_rate(alpha, K.value),
                    "step": lambda: step_rate(opts),
                }
                if base_id not in base_map:
                    raise ConfigError("rates", f"window base must be one of {sorted(base_map)}")
                from .moduli import lmeta_from_asreg

                witness = lmeta_from_asreg(base_map[base_id](), L)
                built[rate_id] = BuiltRate(rate_id, "window", witness, window=L,
                                           consumed=[f"{base_id} rate"])
            elif rate_id == "companion_meta":
                M = M_for(rate_id, fallback_3K=True)
                witness = rl.companion_meta_rate(M, schedule,
                                                 variant=opts.get("variant", "auto"))
                built[rate_id] = BuiltRate(rate_id, "meta_companion", witness,
                                           consumed=["nonincreasing or vanishing damping"],
                                           extra_slack=2 * exp.eps_fp)
            elif rate_id == "anchored_meta":
                if not isinstance(exp.contraction, ConstantMap):
                    raise ConfigError("rates.anchored_meta",
                                      "requires a constant contraction (anchored scheme)")
                M = M_for(rate_id, fallback_3K=True)
                omega = rl.companion_meta_rate(M, schedule,
                                               variant=opts.get("variant", "auto"))
                witness = rl.anchored_meta_rate(gap_rate(), omega)
                built[rate_id] = BuiltRate(rate_id, "meta_trace", witness,
                                           consumed=["companion gap rate", "companion meta rate"])
            elif rate_id == "viscosity_meta":
                M = M_for(rate_id, fallback_3K=False)
                gap_M = rl.companion_gap_rate(schedule, Fraction(0), M)
                omega_M = rl.companion_meta_rate(M, schedule,
                                                 variant=opts.get("variant", "auto"))
                anchored_M = rl.anchored_meta_rate(gap_M, omega_M)
                witness = rl.viscosity_meta_rate(anchored_M, schedule, alpha, M)
                built[rate_id] = BuiltRate(rate_id, "meta_trace", witness,
                                           consumed=["anchored meta rate at the diameter bound"])
            else:
                raise ConfigError(
                    "rates", f"unknown rate identifier {rate_id!r}; valid: {VALID_RATE_IDS}")
        except MissingWitnessError as exc:
            raise ConfigError(f"rates.{rate_id}", str(exc))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"rates.{rate_id}", str(exc))
    return RateBundle(rates=built, K=K, M=M_override or M_default,
                      needs_browder=needs_browder, needs_tilde=needs_tilde)


# --------------------------------------------------------------------------
# running and reporting


@dataclass
class ExperimentResult:
    verdicts: List[Verdict]
    trace: Optional[Trace]
    bundle: Optional[RateBundle]
    exit_code: int
    artifacts: Dict[str, Path] = field(default_factory=dict)


def exit_code_for(verdicts: List[Verdict], partial_ok: bool) -> int:
    if any(v.status is Status.FAIL for v in verdicts):
        return 1
    if any(v.status is Status.PARTIAL for v in verdicts):
        return 0 if partial_ok else 2
    return 0


def run_experiment(exp: Experiment) -> ExperimentResult:
    """Run the configured iteration, verify every requested certificate, and
    write the trace, bounds and report artifacts."""
    config = IterationConfig(
        space=exp.space, family=exp.family, contraction=exp.contraction,
        schedule=exp.schedule, x0=exp.x0, z=exp.z,
        budget=max(exp.iterations, 10**6), metric_tol=exp.metric_tol,
        eps_fp=exp.eps_fp)
    K = compute_bound_constant(config, override=exp.overrides.get("K"))
    bundle = build_rates(exp, K)

    trace = run_iteration(
        config, exp.iterations, tm_indices=exp.tm_indices,
        with_tilde=bundle.needs_tilde, with_browder=bundle.needs_browder)

    meta_cfg = exp.metastability or {}
    k_list = meta_cfg.get("k", [0, 1, 2])
    counter_names = meta_cfg.get("g", ["const:1", "const:5", "identity", "affine:2:5"])
    counters = {name: parse_counter(name) for name in counter_names}
    ceiling = meta_cfg.get("ceiling", 10**12)
    max_ops = meta_cfg.get("max_ops", 10**7)

    verdicts: List[Verdict] = []
    for key, built in bundle.rates.items():
        if built.kind == "column":
            values = trace.column(built.column)
            verdicts.append(verify_conv_rate(
                values, built.witness, exp.k_max,
                slack=exp.slack + built.extra_slack, check_id=key))
        elif built.kind == "window":
            omega = (lambda w: (lambda k, g: w(k)))(built.witness)
            verdicts.append(verify_metastability(
                trace.points, omega, list(range(0, exp.k_max + 1)),
                {f"const:{built.window}": (lambda L: (lambda n: L))(built.window)},
                slack=exp.slack, dist=exp.space.dist, ceiling=ceiling,
                max_ops=max_ops, check_id=key))
        elif built.kind == "cauchy_orbit":
            orbit = [family_eval(exp.family, exp.space, n, exp.x0)
                     for n in range(min(exp.iterations, 2000) + 1)]
            verdicts.append(verify_cauchy_modulus(
                orbit, built.witness, exp.k_max, slack=exp.slack,
                dist=exp.space.dist, check_id=key))
        elif built.kind == "meta_trace":
            verdicts.append(verify_metastability(
                trace.points, built.witness, k_list, counters,
                slack=exp.slack + built.extra_slack, dist=exp.space.dist,
                ceiling=ceiling, max_ops=max_ops, check_id=key))
        elif built.kind == "meta_companion":
            horizon = int(meta_cfg.get("companion_points", min(exp.iterations, 400)))
            companions = [browder_point(config, n) for n in range(horizon + 1)]
            verdicts.append(verify_metastability(
                companions, built.witness, k_list, counters,
                slack=exp.slack + built.extra_slack, dist=exp.space.dist,
                ceiling=ceiling, max_ops=max_ops, check_id=key))
        else:  # pragma: no cover - exhaustive by construction
            raise RuntimeError(f"unhandled rate kind {built.kind}")

    code = exit_code_for(verdicts, exp.partial_ok)
    artifacts: Dict[str, Path] = {}
    if exp.output_dir is not None:
        artifacts = write_artifacts(exp, trace, bundle, verdicts, code)
    return ExperimentResult(verdicts=verdicts, trace=trace, bundle=bundle,
                            exit_code=code, artifacts=artifacts)


# --------------------------------------------------------------------------
# artifacts


def _fmt(x: float) -> str:
    return repr(float(x))


def write_artifacts(exp: Experiment, trace: Trace, bundle: RateBundle,
                    verdicts: List[Verdict], exit_code: int) -> Dict[str, Path]:
    out = exp.output_dir
    out.mkdir(parents=True, exist_ok=True)
    artifacts: Dict[str, Path] = {}

    # trace.csv: n plus the fixed residual schema
    names = ["step", "tn"] + [f"tm_{m}" for m in exp.tm_indices]
    for optional in ("tildeT", "browder_gap"):
        if optional in trace.columns:
            names.append(optional)
    lines = ["n," + ",".join(names)]
    for n in range(trace.n_recorded):
        row = [str(n)] + [_fmt(trace.columns[c][n]) for c in names]
        lines.append(",".join(row))
    trace_path = out / "trace.csv"
    trace_path.write_text("\n".join(lines) + "\n")
    artifacts["trace"] = trace_path

    # bounds.csv: k rows, one column per threshold-style certificate
    column_rates = {key: b for key, b in bundle.rates.items() if b.kind == "column"}
    if column_rates:
        lines = ["k," + ",".join(column_rates)]
        for k in range(exp.k_max + 1):
            row = [str(k)] + [str(b.witness(k)) for b in column_rates.values()]
            lines.append(",".join(row))
        bounds_path = out / "bounds.csv"
        bounds_path.write_text("\n".join(lines) + "\n")
        artifacts["bounds"] = bounds_path

    digest = hashlib.sha256(
        json.dumps(exp.raw, sort_keys=True).encode()).hexdigest()[:16]
    report = {
        "config_digest": digest,
        "seed": exp.seed,
        "K": bundle.K.value,
        "M": bundle.M,
        "exit_code": exit_code,
        "verdicts": [
            {
                "check": v.check_id,
                "status": v.status.value,
                "slack": float(v.slack),
                "detail": v.detail,
                "violation": _jsonable(v.violation),
                "certified": _jsonable(v.certified),
                "coverage": v.coverage,
                "info": _jsonable(v.info),
            }
            for v in verdicts
        ],
    }
    report_path = out / "report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    artifacts["report"] = report_path

    text_lines = [f"exit_code: {exit_code}", f"K: {bundle.K.value}"]
    for v in verdicts:
        text_lines.append(f"[{v.status.value.upper():7s}] {v.check_id}"
                          + (f" - {v.detail}" if v.detail else ""))
    text_path = out / "report.txt"
    text_path.write_text("\n".join(text_lines) + "\n")
    artifacts["report_txt"] = text_path
    return artifacts


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def run_axiom_check(exp: Experiment) -> Tuple[object, int]:
    """The axiom-check entry point: samples and tolerance from the config."""
    samples = int(exp.axioms.get("samples", 10_000))
    tol = float(exp.axioms.get("tol", 1e-9))
    report = check_axioms(exp.space, samples, tol, seed=exp.seed)
    return report, 0 if report.passed else 1
