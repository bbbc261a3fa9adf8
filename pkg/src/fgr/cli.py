"""Command-line front end: rate curves, onset reports, figure data, verification.

Configs are JSON (schema below); curve output is CSV with a fixed column
set, onset reports and figure markers are JSON. All output is
deterministic: identical configs produce byte-identical files.

Config schema (version 1)::

    {
      "schema_version": 1,
      "unit": "omega0" | "rad_per_s",
      "model": {"type": "broadband", "coupling": ..., "eta": ...,
                "omega_x": ..., "cutoff": {"kind": "exponential"}}
            or {"type": "broadband", ..., "cutoff": {"kind": "power_lorentz",
                "mu": ...}}
            or {"type": "narrowband", "g": ..., "kappa": ..., "omega_c": ...},
      "emitter": {"omega0": ...},
      "time_grid": {"t_min": ..., "t_max": ..., "points_per_decade": ...},
      "quadrature": {...},          # optional, QuadratureConfig fields
      "onset_epsilon": ...,         # optional
      "output": {"path": ..., "format": "csv" | "json"}   # optional
    }

Exit codes: 0 ok, 1 config error, 2 partial convergence, 3 onset not
found, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .analytic import (
    narrowband_rate_detuned,
    onset_time_broadband,
    onset_time_narrowband,
)
from .errors import ConvergenceError
from .onset import OnsetReport, RateCurve, empirical_onset
from .quadrature import (
    QuadratureConfig,
    decay_rate_numeric,
    decay_rate_numeric_oracle,
    rate_curve,
)
from .reservoir import (
    BroadbandReservoir,
    EmitterSpec,
    ExponentialCutoff,
    NarrowbandReservoir,
    PowerLorentzCutoff,
    golden_rule_rate,
    zeno_slope,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2
EXIT_NO_ONSET = 3
EXIT_VERIFY = 4

CSV_COLUMNS = ("t", "t_dimensionless", "gamma_ratio", "abs_err_est", "regime", "flagged")

_FIG1_ETAS = (0.5, 1.0, 1.5, 2.0, 3.0)
_FIG2_QS = (1.0, 10.0, 100.0, 1000.0)
_FIG3_DETUNINGS = (0.0, 0.4, 1.0, 2.0, 5.0)  # in units of kappa


class ConfigError(ValueError):
    """Configuration validation failure with a dotted field path."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def _require(mapping, key, path, kind):
    if key not in mapping:
        raise ConfigError(f"{path}.{key}", "missing required field")
    value = mapping[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}.{key}", f"expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}.{key}", f"expected an integer, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}.{key}", f"expected a string, got {value!r}")
        return value
    if kind is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{path}.{key}", f"expected an object, got {value!r}")
        return value
    raise TypeError(kind)


@dataclass(frozen=True)
class TimeGridSpec:
    t_min: float
    t_max: float
    points_per_decade: int

    def __post_init__(self):
        if not 0.0 < self.t_min < self.t_max:
            raise ValueError("time grid requires 0 < t_min < t_max")
        if self.points_per_decade < 1:
            raise ValueError("points_per_decade must be >= 1")

    def times(self):
        decades = math.log10(self.t_max / self.t_min)
        n = max(2, int(round(decades * self.points_per_decade)) + 1)
        return np.geomspace(self.t_min, self.t_max, n)


@dataclass(frozen=True)
class OutputSpec:
    path: str
    format: str = "csv"

    def __post_init__(self):
        if self.format not in ("csv", "json"):
            raise ValueError(f"unsupported output format {self.format!r}")


@dataclass(frozen=True)
class FigureSpec:
    """One of the three reference figures plus optional overrides."""

    figure_id: str
    overrides: dict | None = None

    def __post_init__(self):
        if self.figure_id not in ("fig1", "fig2", "fig3"):
            raise ValueError(f"unknown figure {self.figure_id!r}")


@dataclass(frozen=True)
class RunConfig:
    model: BroadbandReservoir | NarrowbandReservoir
    emitter: EmitterSpec
    time_grid: TimeGridSpec
    quadrature: QuadratureConfig
    onset_epsilon: float | None = None
    output: OutputSpec | None = None
    unit: str = "omega0"
    schema_version: int = 1

    @classmethod
    def from_json_dict(cls, data, path="config"):
        if not isinstance(data, dict):
            raise ConfigError(path, "top level must be an object")
        version = data.get("schema_version", 1)
        if version != 1:
            raise ConfigError(f"{path}.schema_version", f"unsupported version {version}")
        unit = data.get("unit", "omega0")
        if unit not in ("omega0", "rad_per_s"):
            raise ConfigError(f"{path}.unit", f"unknown unit {unit!r}")

        model_d = _require(data, "model", path, dict)
        mtype = _require(model_d, "type", f"{path}.model", str)
        try:
            if mtype == "broadband":
                cutoff_d = _require(model_d, "cutoff", f"{path}.model", dict)
                kind = _require(cutoff_d, "kind", f"{path}.model.cutoff", str)
                if kind == "exponential":
                    cutoff = ExponentialCutoff()
                elif kind == "power_lorentz":
                    cutoff = PowerLorentzCutoff(
                        mu=_require(cutoff_d, "mu", f"{path}.model.cutoff", float)
                    )
                else:
                    raise ConfigError(
                        f"{path}.model.cutoff.kind", f"unknown cutoff {kind!r}"
                    )
                model = BroadbandReservoir(
                    coupling=_require(model_d, "coupling", f"{path}.model", float),
                    eta=_require(model_d, "eta", f"{path}.model", float),
                    omega_x=_require(model_d, "omega_x", f"{path}.model", float),
                    cutoff=cutoff,
                )
            elif mtype == "narrowband":
                model = NarrowbandReservoir(
                    g=_require(model_d, "g", f"{path}.model", float),
                    kappa=_require(model_d, "kappa", f"{path}.model", float),
                    omega_c=_require(model_d, "omega_c", f"{path}.model", float),
                )
            else:
                raise ConfigError(f"{path}.model.type", f"unknown model type {mtype!r}")

            emitter_d = _require(data, "emitter", path, dict)
            emitter = EmitterSpec(
                omega0=_require(emitter_d, "omega0", f"{path}.emitter", float)
            )

            grid_d = _require(data, "time_grid", path, dict)
            grid = TimeGridSpec(
                t_min=_require(grid_d, "t_min", f"{path}.time_grid", float),
                t_max=_require(grid_d, "t_max", f"{path}.time_grid", float),
                points_per_decade=_require(
                    grid_d, "points_per_decade", f"{path}.time_grid", int
                ),
            )

            quad_d = data.get("quadrature", {})
            if not isinstance(quad_d, dict):
                raise ConfigError(f"{path}.quadrature", "expected an object")
            known = {"rel_tol", "abs_tol", "max_panels", "nodes_per_panel", "tail_epsilon"}
            unknown = set(quad_d) - known
            if unknown:
                raise ConfigError(
                    f"{path}.quadrature", f"unknown fields {sorted(unknown)}"
                )
            quadrature = QuadratureConfig(**quad_d)

            onset_epsilon = data.get("onset_epsilon")
            if onset_epsilon is not None:
                onset_epsilon = float(onset_epsilon)
                if onset_epsilon <= 0.0:
                    raise ConfigError(f"{path}.onset_epsilon", "must be > 0")

            output = None
            if "output" in data and data["output"] is not None:
                out_d = _require(data, "output", path, dict)
                output = OutputSpec(
                    path=_require(out_d, "path", f"{path}.output", str),
                    format=out_d.get("format", "csv"),
                )
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(path, str(exc)) from exc

        return cls(
            model=model,
            emitter=emitter,
            time_grid=grid,
            quadrature=quadrature,
            onset_epsilon=onset_epsilon,
            output=output,
            unit=unit,
            schema_version=1,
        )

    def to_json_dict(self):
        if isinstance(self.model, BroadbandReservoir):
            cutoff = self.model.cutoff
            model = {
                "type": "broadband",
                "coupling": self.model.coupling,
                "eta": self.model.eta,
                "omega_x": self.model.omega_x,
                "cutoff": (
                    {"kind": "exponential"}
                    if isinstance(cutoff, ExponentialCutoff)
                    else {"kind": "power_lorentz", "mu": cutoff.mu}
                ),
            }
        else:
            model = {
                "type": "narrowband",
                "g": self.model.g,
                "kappa": self.model.kappa,
                "omega_c": self.model.omega_c,
            }
        out = {
            "schema_version": self.schema_version,
            "unit": self.unit,
            "model": model,
            "emitter": {"omega0": self.emitter.omega0},
            "time_grid": {
                "t_min": self.time_grid.t_min,
                "t_max": self.time_grid.t_max,
                "points_per_decade": self.time_grid.points_per_decade,
            },
            "quadrature": {
                "rel_tol": self.quadrature.rel_tol,
                "abs_tol": self.quadrature.abs_tol,
                "max_panels": self.quadrature.max_panels,
                "nodes_per_panel": self.quadrature.nodes_per_panel,
                "tail_epsilon": self.quadrature.tail_epsilon,
            },
        }
        if self.onset_epsilon is not None:
            out["onset_epsilon"] = self.onset_epsilon
        if self.output is not None:
            out["output"] = {"path": self.output.path, "format": self.output.format}
        return out


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(path, str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    return RunConfig.from_json_dict(data)


def _dimensionless_scale(model, emitter):
    # omega0*t for broadband curves, kappa*t for narrowband ones
    if isinstance(model, NarrowbandReservoir):
        return model.kappa
    return emitter.omega0


def _format_float(x):
    return repr(float(x))


def write_curve_csv(path, curve, scale, extra_columns=None):
    """Write a curve as CSV with full round-trip float precision.

    extra_columns: optional list of (name, constant_value) appended after
    the fixed column set.
    """
    extra = extra_columns or []
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(CSV_COLUMNS) + [name for name, _ in extra])
        for i, t in enumerate(curve.times):
            row = [
                _format_float(t),
                _format_float(t * scale),
                _format_float(curve.ratios[i]),
                _format_float(curve.error_estimates[i]),
                curve.regime_labels[i],
                "true" if curve.flagged[i] else "false",
            ]
            row.extend(_format_float(v) for _, v in extra)
            writer.writerow(row)


def _default_epsilon(model):
    # calibrated so the detector agrees with the closed-form onset times:
    # ratio(1/kappa) = 1 - 1/e for narrowband, ratio(t_F) ~ 2 for
    # tail-dominated broadband
    if isinstance(model, NarrowbandReservoir):
        return 1.0 - math.exp(-1.0)
    return 1.0 if model.eta > 1.0 else 1.0 - math.exp(-1.0)


def cmd_rate(config, max_workers=None):
    """Compute a rate curve and write it as CSV."""
    curve = rate_curve(
        config.model,
        config.emitter,
        config.time_grid.times(),
        config.quadrature,
        max_workers=max_workers,
    )
    out_path = config.output.path if config.output else "rate_curve.csv"
    scale = _dimensionless_scale(config.model, config.emitter)
    write_curve_csv(out_path, curve, scale)
    return EXIT_PARTIAL if bool(np.any(curve.flagged)) else EXIT_OK


def cmd_onset(config, epsilon=None, max_workers=None, stream=None):
    """Detect the empirical onset time and report it against the formula."""
    stream = stream or sys.stdout
    model, emitter = config.model, config.emitter
    if isinstance(model, NarrowbandReservoir):
        t_f_analytic = onset_time_narrowband(model)
    else:
        t_f_analytic = onset_time_broadband(model, emitter)
    eps = epsilon if epsilon is not None else config.onset_epsilon
    if eps is None:
        eps = _default_epsilon(model)

    curve = rate_curve(
        model, emitter, config.time_grid.times(), config.quadrature,
        max_workers=max_workers,
    )
    t_emp = empirical_onset(curve, eps)
    converged = t_emp is not None and not bool(np.any(curve.flagged))
    report = OnsetReport(
        t_f_analytic=t_f_analytic,
        t_f_empirical=t_emp,
        epsilon=eps,
        agreement_factor=(t_emp / t_f_analytic) if t_emp is not None else None,
        converged=converged,
    )
    payload = {
        "t_f_analytic": report.t_f_analytic,
        "t_f_empirical": report.t_f_empirical,
        "epsilon": report.epsilon,
        "agreement_factor": report.agreement_factor,
        "converged": report.converged,
        "unit": config.unit,
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if config.output is not None:
        with open(config.output.path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stream.write(text)
    return EXIT_OK if t_emp is not None else EXIT_NO_ONSET


def _closed_form_curve(model, emitter, kt_grid):
    times = kt_grid / model.kappa
    ratios = np.array(
        [narrowband_rate_detuned(model, emitter, float(t)) for t in times]
    )
    labels = tuple(
        "zeno" if x < 0.1 else ("fermi" if x > 10.0 else "crossover")
        for x in kt_grid
    )
    return RateCurve(
        times=times,
        ratios=ratios,
        error_estimates=np.zeros_like(times),
        regime_labels=labels,
        model_metadata={
            "model": {
                "type": "narrowband",
                "g": model.g,
                "kappa": model.kappa,
                "omega_c": model.omega_c,
            },
            "emitter": {"omega0": emitter.omega0},
            "t_scale": 1.0 / model.kappa,
            "closed_form": True,
        },
    )


def _write_markers(outdir, figure_id, markers):
    path = os.path.join(outdir, "markers.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"figure": figure_id, **markers}, indent=2, sort_keys=True))
        fh.write("\n")


def cmd_figure(spec, outdir=".", overrides=None, max_workers=None):
    """Emit the data behind one of the three reference figures.

    ``spec`` is a FigureSpec or a bare figure id. The broadband sweep is
    integrated numerically; the narrowband sweeps use the closed forms
    they plot. One CSV per curve plus markers.json with the reference
    lines.
    """
    if isinstance(spec, FigureSpec):
        figure_id = spec.figure_id
        overrides = {**(spec.overrides or {}), **(overrides or {})}
    else:
        figure_id = spec
    overrides = overrides or {}
    os.makedirs(outdir, exist_ok=True)
    ppd = int(overrides.get("points_per_decade", 16))
    status = EXIT_OK

    if figure_id == "fig1":
        coupling = float(overrides.get("coupling", 1e-3))
        omega_x = float(overrides.get("omega_x", 250.0))
        emitter = EmitterSpec(1.0)
        t_min = float(overrides.get("t_min", 1e-4))
        t_max = float(overrides.get("t_max", 1e5))
        grid = TimeGridSpec(t_min, t_max, ppd).times()
        cfg = QuadratureConfig(
            rel_tol=float(overrides.get("rel_tol", 1e-8)),
            tail_epsilon=float(overrides.get("tail_epsilon", 1e-12)),
        )
        vertical = []
        for eta in overrides.get("etas", _FIG1_ETAS):
            model = BroadbandReservoir(coupling=coupling, eta=eta, omega_x=omega_x)
            curve = rate_curve(model, emitter, grid, cfg, max_workers=max_workers)
            if bool(np.any(curve.flagged)):
                status = EXIT_PARTIAL
            name = os.path.join(outdir, f"fig1_eta_{eta:g}.csv")
            write_curve_csv(name, curve, emitter.omega0)
            t_f = onset_time_broadband(model, emitter)
            vertical.append({"eta": eta, "t_f": t_f})
        _write_markers(
            outdir,
            "fig1",
            {
                "horizontal_lines": [{"gamma_ratio": 2.0, "applies_to": "eta>1"}],
                "vertical_lines": vertical,
            },
        )
    elif figure_id == "fig2":
        omega_c = float(overrides.get("omega_c", 1.0))
        g = float(overrides.get("g", 1e-3 * omega_c))
        kt = TimeGridSpec(
            float(overrides.get("kt_min", 1e-3)),
            float(overrides.get("kt_max", 1e3)),
            ppd,
        ).times()
        vertical = []
        for q in overrides.get("qs", _FIG2_QS):
            kappa = omega_c / (2.0 * q)
            model = NarrowbandReservoir(g=g, kappa=kappa, omega_c=omega_c)
            emitter = EmitterSpec(omega_c)
            curve = _closed_form_curve(model, emitter, kt)
            name = os.path.join(outdir, f"fig2_q_{q:g}.csv")
            write_curve_csv(name, curve, kappa)
            vertical.append({"q": q, "t_f": onset_time_narrowband(model)})
        _write_markers(
            outdir,
            "fig2",
            {
                "horizontal_lines": [{"gamma_ratio": 1.0 / math.e}],
                "vertical_lines": vertical,
            },
        )
    elif figure_id == "fig3":
        omega_c = float(overrides.get("omega_c", 1.0))
        q = float(overrides.get("q", 10.0))
        g = float(overrides.get("g", 1e-3 * omega_c))
        kappa = omega_c / (2.0 * q)
        kt = TimeGridSpec(
            float(overrides.get("kt_min", 1e-3)),
            float(overrides.get("kt_max", 1e3)),
            ppd,
        ).times()
        for d in overrides.get("detunings", _FIG3_DETUNINGS):
            model = NarrowbandReservoir(g=g, kappa=kappa, omega_c=omega_c)
            emitter = EmitterSpec(omega_c + d * kappa)
            curve = _closed_form_curve(model, emitter, kt)
            name = os.path.join(outdir, f"fig3_detuning_{d:g}.csv")
            write_curve_csv(name, curve, kappa, extra_columns=[("delta_over_kappa", d)])
        _write_markers(outdir, "fig3", {"horizontal_lines": [], "vertical_lines": []})
    else:
        raise ConfigError("figure_id", f"unknown figure {figure_id!r}")
    return status


def _verify_cases():
    emitter = EmitterSpec(1.0)
    cases = []
    for eta in (0.5, 1.0, 2.0, 3.0):
        model = BroadbandReservoir(coupling=1e-3, eta=eta, omega_x=250.0)
        for t in (4e-6, 0.1, 10.0):
            cases.append((f"broadband eta={eta:g} w0t={t:g}", model, emitter, t))
    narrow = [
        (10.0, 1e-3, 0.0),
        (10.0, 1.0, 0.0),
        (10.0, 100.0, 0.0),
        (10.0, 1.0, 2.0),
        (10.0, 1.0, 5.0),
        (1000.0, 1e-3, 0.0),
        (1000.0, 1.0, 0.0),
        (1.0, 1.0, 0.0),
    ]
    for q, kt, detuning in narrow:
        omega_c = 2.0 * q  # kappa = 1
        model = NarrowbandReservoir(g=1.0, kappa=1.0, omega_c=omega_c)
        em = EmitterSpec(omega_c + detuning)
        cases.append(
            (f"narrowband Q={q:g} kt={kt:g} d/k={detuning:g}", model, em, kt)
        )
    return cases


def cmd_verify(stream=None):
    """Run the oracle-equivalence and regime-consistency checks."""
    stream = stream or sys.stdout
    rel_tol = float(os.environ.get("FGR_RELTOL", "1e-8"))
    cfg = QuadratureConfig(rel_tol=rel_tol)
    threshold = max(rel_tol * 1e2, 1e-8)
    cases = _verify_cases()
    n_points = int(os.environ.get("FGR_VERIFY_POINTS", str(len(cases))))
    cases = cases[: max(1, n_points)]

    failures = 0

    def report(name, ok, detail):
        nonlocal failures
        if not ok:
            failures += 1
        stream.write(f"{'PASS' if ok else 'FAIL'} {name}: {detail}\n")

    for name, model, em, t in cases:
        try:
            main = decay_rate_numeric(model, em, t, cfg)
            oracle = decay_rate_numeric_oracle(model, em, t, cfg)
            rel = abs(main.value - oracle.value) / max(abs(main.value), 1e-300)
            report(f"oracle {name}", rel <= threshold, f"rel diff {rel:.3e}")
        except ConvergenceError as exc:
            report(f"oracle {name}", False, str(exc))

    # short-time law: rate/(slope*t) -> 1 deep in the short-time regime
    for name, model, em, t in cases:
        scale = (
            model.omega_x if isinstance(model, BroadbandReservoir) else model.kappa
        )
        if scale * t > 1e-3:
            continue
        main = decay_rate_numeric(model, em, t, cfg)
        dev = abs(main.value / (zeno_slope(model) * t) - 1.0)
        report(f"short-time law {name}", dev < 1e-2, f"|rate/(A t) - 1| = {dev:.3e}")

    # long-time law: ratio -> 1 well past the onset time
    for eta in (0.5, 1.0, 2.0):
        model = BroadbandReservoir(coupling=1e-3, eta=eta, omega_x=250.0)
        em = EmitterSpec(1.0)
        t = 30.0 * onset_time_broadband(model, em)
        main = decay_rate_numeric(model, em, t, cfg)
        ratio = main.value / golden_rule_rate(model, em)
        report(
            f"golden-rule limit eta={eta:g}",
            abs(ratio - 1.0) < 0.25,
            f"ratio at 30*t_F = {ratio:.4f}",
        )

    stream.write(f"{len(cases)} oracle points, {failures} failures\n")
    return EXIT_OK if failures == 0 else EXIT_VERIFY


def _workers_from_env():
    raw = os.environ.get("FGR_THREADS")
    if raw is None:
        return None
    return int(raw)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="fgr",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_rate = sub.add_parser("rate", help="compute a rate-ratio curve (CSV)")
    p_rate.add_argument("-c", "--config", required=True)

    p_onset = sub.add_parser("onset", help="detect the golden-rule onset time")
    p_onset.add_argument("-c", "--config", required=True)
    p_onset.add_argument("--epsilon", type=float, default=None)

    p_fig = sub.add_parser("figure", help="emit reference-figure data")
    p_fig.add_argument("figure_id", choices=("fig1", "fig2", "fig3"))
    p_fig.add_argument("-o", "--outdir", default=".")
    p_fig.add_argument(
        "--points-per-decade", type=int, default=None, dest="points_per_decade"
    )

    sub.add_parser("verify", help="run the numerical cross-check suite")

    args = parser.parse_args(argv)
    workers = _workers_from_env()

    try:
        if args.command == "rate":
            return cmd_rate(load_config(args.config), max_workers=workers)
        if args.command == "onset":
            return cmd_onset(
                load_config(args.config), epsilon=args.epsilon, max_workers=workers
            )
        if args.command == "figure":
            overrides = {}
            if args.points_per_decade is not None:
                overrides["points_per_decade"] = args.points_per_decade
            return cmd_figure(args.figure_id, args.outdir, overrides, max_workers=workers)
        if args.command == "verify":
            return cmd_verify()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
