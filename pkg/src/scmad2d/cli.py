"""Command-line front end: config files, figure-style sweeps, CSV output,
and the optimization reports."""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, replace

from .analytics import CoverageReport, analytic_report
from .optimizer import (
    exhaustive_search_jc,
    grid_search_qd,
    optimal_jc_dense,
    optimal_qd_full_d2d,
    optimal_qd_sparse,
    utility_overlaid,
    utility_underlaid,
)
from .simulator import estimate_coverage
from .specialfn import ConvergenceError, TruncationError
from .topology import NetworkConfig, derive_intensities

_FLOAT_KEYS = ("lambda_bs", "lambda_u", "lambda_d", "p_u", "p_d", "alpha",
               "xi", "tau_dis", "tau_bs", "tau_dr", "q_d")
_INT_KEYS = ("k_tones", "n_c", "j_codebooks", "j_cell")
_STR_KEYS = ("access_scheme", "coexistence")
# dB-scaled aliases; converted to the linear fields they shadow.
_DB_KEYS = {"tau_bs_db": "tau_bs", "tau_dr_db": "tau_dr",
            "p_u_dbmw": "p_u", "p_d_dbmw": "p_d"}


def load_config(path) -> NetworkConfig:
    """Parse a `key = value` file into a NetworkConfig.

    Unknown keys and re-assignments are rejected with their line number;
    missing keys keep the default values. `inf` is accepted for tau_dis;
    *_db / *_dbmw keys take decibel values.
    """
    fields = {}
    sources = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected `key = value`, got {raw.strip()!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            target = _DB_KEYS.get(key, key)
            if target not in _FLOAT_KEYS + _INT_KEYS + _STR_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            if target in sources:
                raise ValueError(
                    f"{path}:{lineno}: {key!r} re-assigns {target!r} "
                    f"(first set on line {sources[target]})"
                )
            sources[target] = lineno
            try:
                if target in _STR_KEYS:
                    fields[target] = value
                elif target in _INT_KEYS:
                    fields[target] = int(value)
                elif key in _DB_KEYS:
                    fields[target] = 10.0 ** (float(value) / 10.0)
                else:
                    fields[target] = float(value)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    return NetworkConfig(**fields)


_ENGINE_NAMES = {"analytic": "analytic", "mc": "monte_carlo", "monte_carlo": "monte_carlo"}
_SCENARIOS = ("fig3a", "fig3b", "fig4", "fig5", "fig6a", "fig6b", "fig7a", "fig7b", "custom")


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: which config field varies, over which values, on which
    engines, against which base configuration."""

    scenario: str
    swept_key: str
    values: tuple
    engines: tuple
    trials: int
    seed: int
    output_path: str
    base_cfg: NetworkConfig

    def __post_init__(self):
        if self.scenario not in _SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        diffs = [b - a for a, b in zip(self.values, self.values[1:])]
        if any(d <= 0 for d in diffs) and any(d >= 0 for d in diffs):
            raise ValueError("sweep values must be strictly monotone")
        bad = [e for e in self.engines if e not in ("analytic", "monte_carlo")]
        if bad or not self.engines:
            raise ValueError(f"engines must be a subset of analytic, monte_carlo; got {self.engines}")
        if "monte_carlo" in self.engines and self.trials < 1000:
            raise ValueError("monte_carlo sweeps need trials >= 1000")


# Scenario presets mirror the parameter sets the figures were drawn at:
# a base configuration, the swept field, and (for the comparison plots)
# how to build the reference config a row is measured against.

_CAPTION = dict(lambda_bs=5e-5, xi=5e-5)


def _preset(scenario: str):
    inf = math.inf
    if scenario in ("fig3a", "fig3b"):
        base = NetworkConfig(**_CAPTION, lambda_u=1e-3, lambda_d=2.5e-4,
                             tau_dis=inf, access_scheme="scma")
        if scenario == "fig3a":
            key, values = "lambda_u", (1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2)
        else:
            key, values = "lambda_d", (1e-4, 2.5e-4, 5e-4, 1e-3, 2.5e-3, 5e-3, 1e-2)
        return base, key, values, lambda c: replace(c, access_scheme="ofdma"), False
    if scenario == "fig4":
        base = NetworkConfig(**_CAPTION, lambda_u=5e-4, lambda_d=2.5e-4,
                             coexistence="overlaid", j_cell=10)
        values = (25.0, 50.0, 75.0, 100.0, 150.0, 200.0, 300.0, 500.0)
        return base, "tau_dis", values, (
            lambda c: replace(c, coexistence="underlaid", j_cell=None)
        ), False
    if scenario == "fig5":
        base = NetworkConfig(lambda_bs=5e-5, lambda_d=0.0, tau_dis=math.inf)
        return base, "k_tones", (4, 6, 8, 10), lambda c: replace(c, access_scheme="ofdma"), False
    if scenario in ("fig6a", "fig6b"):
        base = NetworkConfig(**_CAPTION, lambda_u=1e-3, lambda_d=2.5e-3, tau_dis=inf)
        values = tuple(round(0.05 * i, 2) for i in range(1, 21))
        return base, "q_d", values, None, scenario == "fig6b"
    if scenario in ("fig7a", "fig7b"):
        base = NetworkConfig(**_CAPTION, lambda_u=1e-3, lambda_d=2.5e-3,
                             tau_dis=inf, coexistence="overlaid", j_cell=10)
        return base, "j_cell", tuple(range(1, 30)), None, scenario == "fig7b"
    raise ValueError(f"scenario {scenario!r} has no preset")


def _row_config(spec: SweepSpec, value) -> NetworkConfig:
    cfg = replace(spec.base_cfg, **{spec.swept_key: value})
    if spec.scenario == "fig5":
        # Overloading comparison: J tracks C(K, 2) and the cellular tier
        # is saturated relative to it.
        j = value * (value - 1) // 2
        cfg = replace(cfg, j_codebooks=j, lambda_u=20.0 * j * cfg.lambda_bs)
    return cfg


CSV_HEADER = ("swept_value", "engine", "cp_cell", "cp_d2d", "ase_cell",
              "ase_d2d", "ase_total", "ase_gain", "utility", "ci_halfwidth",
              "error")


@dataclass(frozen=True)
class SweepResult:
    """Emitted table held as formatted strings, so a written file parses
    back to an equal object."""

    header: tuple
    rows: tuple

    def write(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.header)
            writer.writerows(self.rows)

    @classmethod
    def read(cls, path) -> "SweepResult":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            rows = tuple(tuple(r) for r in reader)
        return cls(header=header, rows=rows)


def _fmt_value(key: str, value) -> str:
    if key in ("lambda_u", "lambda_d", "lambda_bs", "xi"):
        return f"{value:.5e}"
    if key in _INT_KEYS:
        return str(int(value))
    return f"{value:g}"


def _report_row(spec: SweepSpec, value, engine: str, report: CoverageReport,
                gain, utility) -> tuple:
    return (
        _fmt_value(spec.swept_key, value),
        engine,
        f"{report.cp_cellular:.6f}",
        f"{report.cp_d2d:.6f}",
        f"{report.ase_cellular:.5e}",
        f"{report.ase_d2d:.5e}",
        f"{report.ase_total:.5e}",
        "" if gain is None else f"{gain:.6f}",
        "" if utility is None else f"{utility:.6f}",
        f"{report.ci_halfwidth:.6f}",
        "",
    )


def _error_row(spec: SweepSpec, value, engine: str, exc: Exception) -> tuple:
    return (_fmt_value(spec.swept_key, value), engine, "", "", "", "", "",
            "", "", "", f"{type(exc).__name__}: {exc}")


def _evaluate(cfg: NetworkConfig, engine: str, trials: int, seed: int) -> CoverageReport:
    if engine == "analytic":
        return analytic_report(cfg)
    return estimate_coverage(cfg, trials, seed)


def run_sweep(spec: SweepSpec, reference=None, want_utility: bool = False) -> SweepResult:
    """Evaluate every (value, engine) cell; per-row failures land in the
    error column instead of aborting the sweep."""
    rows = []
    for i, value in enumerate(spec.values):
        cfg = _row_config(spec, value)
        ref_cfg = reference(cfg) if reference is not None else None
        for engine in spec.engines:
            try:
                report = _evaluate(cfg, engine, spec.trials, spec.seed + 2 * i)
                gain = None
                if ref_cfg is not None:
                    ref = _evaluate(ref_cfg, engine, spec.trials, spec.seed + 2 * i + 1)
                    if ref.ase_total == 0.0:
                        raise ZeroDivisionError("reference total ASE is zero")
                    gain = report.ase_total / ref.ase_total
                utility = None
                if want_utility:
                    if report.ase_cellular > 0.0 and report.ase_d2d > 0.0:
                        utility = math.log(report.ase_cellular) + math.log(report.ase_d2d)
                    else:
                        utility = -math.inf
                rows.append(_report_row(spec, value, engine, report, gain, utility))
            except Exception as exc:                       # noqa: BLE001
                rows.append(_error_row(spec, value, engine, exc))
    return SweepResult(header=CSV_HEADER, rows=tuple(rows))


def run_optimize(cfg: NetworkConfig, mode: str, out=None) -> None:
    """Print the closed-form optimum next to its brute-force validator."""
    out = sys.stdout if out is None else out
    derived = derive_intensities(cfg)
    if mode == "qd":
        if math.isinf(cfg.tau_dis):
            closed = optimal_qd_full_d2d(cfg, derived)
            label = "activation optimum (all pairs in D2D mode)"
        else:
            closed = optimal_qd_sparse(cfg, derived)
            label = "activation optimum (sparse regime)"
        step = 1e-3
        best = grid_search_qd(cfg, derived, step=step)
        at_closed = utility_underlaid(cfg, derived, closed)
        agree = abs(closed - best.decision) <= step + 1e-12
        print(label, file=out)
        print(f"closed form : q_d* = {closed:.6f}  utility = {at_closed.u:.6f}", file=out)
        print(f"grid search : q_d* = {best.decision:.6f}  utility = {best.u:.6f} "
              f"(step {step:g})", file=out)
        print(f"agreement   : {'within one grid step' if agree else 'MISMATCH'}", file=out)
    elif mode == "jc":
        closed = optimal_jc_dense(cfg, derived)
        best = exhaustive_search_jc(cfg, derived, dense=True)
        at_closed = utility_overlaid(cfg, derived, closed, dense=True)
        agree = closed == best.decision
        print("codebook split optimum (dense cellular tier)", file=out)
        print(f"closed form : j_c* = {closed}  utility = {at_closed.u:.6f}", file=out)
        print(f"exhaustive  : j_c* = {int(best.decision)}  utility = {best.u:.6f}", file=out)
        print(f"agreement   : {'exact' if agree else 'MISMATCH'}", file=out)
    else:
        raise ValueError(f"unknown optimize mode {mode!r}")


def _parse_sweep_flag(text: str, cfg: NetworkConfig):
    try:
        key, _, rng = text.partition("=")
        start_s, stop_s, steps_s = rng.split(":")
        key = key.strip()
        start, stop, steps = float(start_s), float(stop_s), int(steps_s)
    except ValueError:
        raise ValueError(f"--sweep expects KEY=start:stop:steps, got {text!r}") from None
    if key not in _FLOAT_KEYS + _INT_KEYS:
        raise ValueError(f"--sweep key {key!r} is not a numeric config field")
    if steps < 1:
        raise ValueError("--sweep needs steps >= 1")
    if steps == 1:
        values = [start]
    else:
        values = [start + (stop - start) * i / (steps - 1) for i in range(steps)]
    if key in _INT_KEYS:
        values = [round(v) for v in values]
        if len(set(values)) != len(values):
            raise ValueError("--sweep produced duplicate integer values")
    return key, tuple(values)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="scmad2d",
        description="Coverage and spectral-efficiency experiments for SCMA/OFDMA "
                    "cellular networks with D2D links.",
    )
    p.add_argument("--config", metavar="PATH", help="key = value config file")
    p.add_argument("--scenario", choices=_SCENARIOS, default="custom")
    p.add_argument("--sweep", metavar="KEY=start:stop:steps",
                   help="swept field for the custom scenario")
    p.add_argument("--engines", default="analytic",
                   help="comma list from {analytic, mc}")
    p.add_argument("--trials", type=int, default=5000, help="Monte Carlo trials per row")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="PATH", default="sweep.csv")
    p.add_argument("--optimize", choices=("qd", "jc"),
                   help="print an optimization report instead of sweeping")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else NetworkConfig()
        if args.optimize:
            run_optimize(cfg, args.optimize)
            return 0
        engines = []
        for name in args.engines.split(","):
            name = name.strip()
            if name not in _ENGINE_NAMES:
                raise ValueError(f"unknown engine {name!r}")
            engines.append(_ENGINE_NAMES[name])
        if args.scenario == "custom":
            if not args.sweep:
                raise ValueError("custom scenario needs --sweep KEY=start:stop:steps")
            key, values = _parse_sweep_flag(args.sweep, cfg)
            base, reference, want_utility = cfg, None, False
        else:
            base, key, values, reference, want_utility = _preset(args.scenario)
            if args.config:
                raise ValueError("--config and a figure scenario are mutually exclusive")
        spec = SweepSpec(
            scenario=args.scenario,
            swept_key=key,
            values=tuple(values),
            engines=tuple(dict.fromkeys(engines)),
            trials=args.trials,
            seed=args.seed,
            output_path=args.out,
            base_cfg=base,
        )
        result = run_sweep(spec, reference=reference, want_utility=want_utility)
        result.write(spec.output_path)
        print(f"wrote {len(result.rows)} rows to {spec.output_path}")
        return 0
    except (ConvergenceError, TruncationError, ZeroDivisionError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
