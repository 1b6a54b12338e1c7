"""Command-line experiment runner emitting deterministic JSON or CSV reports."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from .braiding import RECIPE_NAMES, m_gate, recipe_by_name
from .codec import LOGICAL_LABELS, code_basis, extract_gate
from .dj import ORACLES, run_dj
from .ite import DEFAULT_ITE_TIME, EvolutionError, run_schedule_with_survival
from .noise import NoiseSpec, corrupted_gate
from .tomography import TomographyPlan, pauli_process_matrix, process_fidelity, simulate_tomography

EXPERIMENTS = ("gates", "dj", "noise", "sweep")
SWEEP_PARAMS = ("tau", "ite_time")
GATE_FIDELITY_MIN = 1 - 1e-6
TOMOGRAPHY_TOL = 1e-8
NOISE_FLAG_THRESHOLD = 0.99

EXIT_OK, EXIT_USAGE, EXIT_NUMERICS = 0, 2, 3


class ConfigError(ValueError):
    """Bad or incomplete experiment configuration."""


class ValidationFailure(RuntimeError):
    """A computed report failed its numerical checks."""

    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


@dataclass
class ExperimentConfig:
    experiment: str = "gates"
    gate: str = "H"
    tau: float = math.pi / 8
    ite_time: float = DEFAULT_ITE_TIME
    noise: list[str] = field(default_factory=list)
    output: str | None = None
    format: str = "json"
    jobs: int = 1
    seed: int = 0
    shots: int | None = None
    sweep_param: str = "tau"
    sweep_values: list[float] = field(default_factory=list)

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"unknown format {self.format!r}")
        if not math.isfinite(self.tau):
            raise ConfigError("tau must be finite")
        if not (math.isfinite(self.ite_time) and self.ite_time > 0):
            raise ConfigError("ite_time must be positive and finite")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        if self.shots is not None and self.shots < 1:
            raise ConfigError("shots must be positive")
        if self.experiment in ("gates", "noise"):
            try:
                recipe_by_name(self.gate, self.ite_time, self.tau)
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"unknown gate {self.gate!r}; known: {', '.join(RECIPE_NAMES)}") from exc
        if self.experiment == "noise":
            if not self.noise:
                raise ConfigError("noise experiment needs at least one --noise spec")
            length = len(recipe_by_name(self.gate, self.ite_time, self.tau).schedule)
            for spec in self.noise_specs():
                if spec.position is not None and spec.position > length:
                    raise ConfigError(f"noise position {spec.position} beyond the {length}-segment schedule")
        if self.experiment == "sweep":
            if self.sweep_param not in SWEEP_PARAMS:
                raise ConfigError(f"sweep_param must be one of {SWEEP_PARAMS}")
            if not self.sweep_values:
                raise ConfigError("sweep range is empty")
            if not all(math.isfinite(v) for v in self.sweep_values):
                raise ConfigError("sweep values must be finite")
            if self.sweep_param == "ite_time" and min(self.sweep_values) <= 0:
                raise ConfigError("ite_time sweep values must be positive")
        return self

    def noise_specs(self) -> list[NoiseSpec]:
        try:
            return [NoiseSpec.parse(s) if isinstance(s, str) else NoiseSpec.from_dict(s) for s in self.noise]
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"bad noise spec: {exc}") from exc


# ---- serialization helpers ----


def _c(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _mat(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"real": m.real.tolist(), "imag": m.imag.tolist()}


def _csv_complex(z) -> str:
    z = complex(z)
    return f"{z.real:.17g}{z.imag:+.17g}i"


def _even(gate) -> np.ndarray:
    return gate.matrix4[np.ix_((0, 3), (0, 3))]


# ---- experiments ----


def cmd_gates(cfg: ExperimentConfig) -> dict:
    recipe = recipe_by_name(cfg.gate, cfg.ite_time, cfg.tau)
    gate = extract_gate(recipe.schedule)
    block = gate.even_block
    fid = process_fidelity(recipe.target_block, block)
    tomo = simulate_tomography(recipe.schedule, TomographyPlan(shots=cfg.shots, seed=cfg.seed))
    deviation = float(np.abs(tomo.gate.matrix4 - gate.matrix4).max())
    report = {
        "gate": recipe.name,
        "matrix4": _mat(gate.matrix4),
        "even_block": _mat(block),
        "target_block": _mat(recipe.target_block),
        "process_fidelity": fid,
        "fidelity_metric": "|tr(U^dag V)|^2 / (||U||_F^2 ||V||_F^2)",
        "leakage": gate.leakage,
        "global_phase": _c(gate.global_phase),
        "global_phase_angle": float(np.angle(gate.global_phase)),
        "pauli_process_matrix": _mat(pauli_process_matrix(block)),
        "tomography": {
            "settings": tomo.plan.size,
            "inputs": ["".join(p) for p in tomo.plan.input_labels],
            "observables": ["".join(p) for p in tomo.plan.setting_labels],
            "expectations": tomo.expectations.tolist(),
            "max_deviation": deviation,
            "choi_purity": tomo.choi_purity,
            "closest_unitary": _mat(tomo.closest_unitary),
        },
    }
    problems = []
    if fid < GATE_FIDELITY_MIN:
        problems.append(f"process fidelity {fid:.3g} below {GATE_FIDELITY_MIN}")
    if cfg.shots is None and deviation > TOMOGRAPHY_TOL:
        problems.append(f"tomography deviates by {deviation:.3g}")
    if problems:
        raise ValidationFailure("; ".join(problems), report)
    return report


def _state_entry(stage: str, state) -> dict:
    return {
        "stage": stage,
        "amplitudes": [_c(a) for a in state.amplitudes],
        "populations": {lab: state.overlap(lab) for lab in LOGICAL_LABELS},
        "residual": state.residual,
    }


def cmd_dj(cfg: ExperimentConfig) -> dict:
    runs = {}
    for kind in ORACLES:
        res = run_dj(kind, cfg.ite_time)
        runs[kind] = {
            "trajectory": [_state_entry(s, st) for s, st in zip(res.stages, res.trajectory)],
            "verdict": res.verdict,
            "ambiguous": res.ambiguous,
        }
    report = {"runs": runs}
    wrong = [k for k in ORACLES if runs[k]["verdict"] != k]
    if wrong:
        raise ValidationFailure(f"wrong Deutsch-Jozsa verdict for {', '.join(wrong)}", report)
    return report


def _noise_entry(recipe, spec: NoiseSpec) -> dict:
    gate, fid, leak = corrupted_gate(recipe, spec)
    placed = spec if spec.position is not None else spec.at(recipe.noise_position)
    schedule = recipe.schedule.with_noise(placed)
    survival = {}
    for k, lab in enumerate(LOGICAL_LABELS):
        try:
            survival[lab] = run_schedule_with_survival(code_basis()[:, k], schedule)[1][0]
        except EvolutionError:
            survival[lab] = 0.0
    even = _even(gate)
    return {
        "noise": str(placed),
        "spec": placed.to_dict(),
        "fidelity": fid,
        "flagged": fid < NOISE_FLAG_THRESHOLD,
        "leakage": leak,
        "survival": survival,
        "matrix4": _mat(gate.matrix4),
        "even_block": _mat(even),
    }


def cmd_noise(cfg: ExperimentConfig) -> dict:
    recipe = recipe_by_name(cfg.gate, cfg.ite_time, cfg.tau)
    try:
        entries = [_noise_entry(recipe, s) for s in cfg.noise_specs()]
    except ArithmeticError as exc:
        raise ValidationFailure(f"noisy evolution failed: {exc}", {}) from exc
    return {
        "gate": recipe.name,
        "ideal_even_block": _mat(recipe.target_block),
        "flag_threshold": NOISE_FLAG_THRESHOLD,
        "results": entries,
    }


def _sweep_point(param: str, value: float, gate: str, tau: float, ite_time: float) -> dict:
    if param == "tau":
        recipe = recipe_by_name("M", ite_time, value)
        closed = m_gate(value)
    else:
        recipe = recipe_by_name(gate, value, tau)
        closed = recipe.target_block
    g = extract_gate(recipe.schedule)
    block = g.even_block
    aligned = closed * np.exp(1j * np.angle(np.vdot(closed, block)))
    row = {
        param: value,
        "fidelity": process_fidelity(closed, block),
        "frobenius_error": float(np.linalg.norm(block - aligned)),
        "leakage": g.leakage,
        "even_block": _mat(block),
        "closed_form": _mat(closed),
    }
    if param == "ite_time":
        row["gap_bound"] = math.exp(-2 * value)
        row["leakage_over_bound"] = g.leakage / row["gap_bound"]
    return row


def cmd_sweep(cfg: ExperimentConfig) -> dict:
    args = [(cfg.sweep_param, float(v), cfg.gate, cfg.tau, cfg.ite_time) for v in cfg.sweep_values]
    if cfg.jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_sweep_point, *zip(*args)))
    else:
        rows = [_sweep_point(*a) for a in args]
    subject = "M" if cfg.sweep_param == "tau" else cfg.gate
    return {"parameter": cfg.sweep_param, "gate": subject, "rows": rows}


COMMANDS = {"gates": cmd_gates, "dj": cmd_dj, "noise": cmd_noise, "sweep": cmd_sweep}


# ---- rendering ----


def _envelope(cfg: ExperimentConfig, report: dict, status: str) -> dict:
    return {"version": __version__, "config": asdict(cfg), "status": status, "report": report}


def render_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _csv_rows(experiment: str, report: dict) -> tuple[list[str], list[list]]:
    def cx(m, i, j):
        return complex(m["real"][i][j], m["imag"][i][j])

    if experiment == "gates":
        rows = []
        for key in ("matrix4", "even_block", "target_block", "pauli_process_matrix"):
            m = report[key]
            n = len(m["real"])
            rows += [[key, i, j, _csv_complex(cx(m, i, j))] for i in range(n) for j in range(n)]
        for key in ("process_fidelity", "leakage"):
            rows.append([key, "", "", repr(report[key])])
        rows.append(["global_phase", "", "", _csv_complex(complex(*report["global_phase"]))])
        rows.append(["tomography_max_deviation", "", "", repr(report["tomography"]["max_deviation"])])
        return ["quantity", "row", "col", "value"], rows
    if experiment == "dj":
        rows = []
        for kind, run in report["runs"].items():
            for step, pt in enumerate(run["trajectory"], start=1):
                amps = [_csv_complex(complex(*a)) for a in pt["amplitudes"]]
                pops = [repr(pt["populations"][lab]) for lab in LOGICAL_LABELS]
                rows.append([kind, step, pt["stage"], *amps, *pops, run["verdict"] or "ambiguous"])
        head = ["oracle", "step", "stage"]
        head += [f"amp_{lab}" for lab in LOGICAL_LABELS] + [f"pop_{lab}" for lab in LOGICAL_LABELS]
        return head + ["verdict"], rows
    if experiment == "noise":
        rows = []
        for r in report["results"]:
            surv = [repr(r["survival"][lab]) for lab in LOGICAL_LABELS]
            even = r["even_block"]
            block = [_csv_complex(cx(even, i, j)) for i in range(2) for j in range(2)]
            rows.append([report["gate"], r["noise"], repr(r["fidelity"]), int(r["flagged"]), repr(r["leakage"]), *surv, *block])
        head = ["gate", "noise", "fidelity", "flagged", "leakage"]
        head += [f"survival_{lab}" for lab in LOGICAL_LABELS] + ["e00", "e01", "e10", "e11"]
        return head, rows
    param = report["parameter"]
    extra = ["gap_bound", "leakage_over_bound"] if param == "ite_time" else []
    rows = []
    for r in report["rows"]:
        block = [_csv_complex(cx(r["even_block"], i, j)) for i in range(2) for j in range(2)]
        rows.append([repr(r[param]), repr(r["fidelity"]), repr(r["frobenius_error"]), repr(r["leakage"]), *[repr(r[k]) for k in extra], *block])
    return [param, "fidelity", "frobenius_error", "leakage", *extra, "e00", "e01", "e10", "e11"], rows


def render_csv(doc: dict) -> str:
    buf = io.StringIO()
    buf.write(f"# version={doc['version']} status={doc['status']}\n")
    buf.write(f"# config={json.dumps(doc['config'], sort_keys=True)}\n")
    head, rows = _csv_rows(doc["config"]["experiment"], doc["report"])
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(head)
    w.writerows(rows)
    return buf.getvalue()


# ---- argument handling ----


def _float_list(text: str) -> list[float]:
    try:
        return [float(parse_real(v)) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def parse_real(text: str) -> float:
    """Parse a float, also accepting ``pi`` multiples such as ``pi/8`` or ``2*pi``."""
    t = text.strip().replace(" ", "")
    try:
        return float(t)
    except ValueError:
        pass
    num, _, den = t.partition("/")
    coef = num.replace("pi", "").rstrip("*") if "pi" in num else None
    if coef is None:
        raise ValueError(f"not a number: {text!r}")
    value = (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * math.pi
    return value / float(den) if den else value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kitaevbraid", description=__doc__)
    # every default is None so that config-file values are only overridden by explicit flags
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--experiment", choices=EXPERIMENTS, default=None)
    p.add_argument("--gate", default=None, help=f"recipe name: {', '.join(RECIPE_NAMES)}")
    p.add_argument("--tau", type=parse_real, default=None, help="M-gate time, e.g. 0.3927 or pi/8")
    p.add_argument("--ite-time", dest="ite_time", type=float, default=None)
    p.add_argument("--noise", action="append", default=None, help="phase:4, flip:3,4, optional @position")
    p.add_argument("--output", default=None, help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--shots", type=int, default=None, help="sample tomography expectations with this many shots")
    p.add_argument("--sweep-param", dest="sweep_param", choices=SWEEP_PARAMS, default=None)
    p.add_argument("--sweep-values", dest="sweep_values", type=_float_list, default=None)
    return p


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(values, dict):
            raise ConfigError("config file must hold a JSON object")
        known = {f.name for f in fields(ExperimentConfig)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        if isinstance(values.get("sweep_values"), str):
            values["sweep_values"] = _float_list(values["sweep_values"])
    for f in fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    try:
        cfg = ExperimentConfig(**values)
        cfg.tau = float(cfg.tau)
        cfg.ite_time = float(cfg.ite_time)
        cfg.sweep_values = [float(v) for v in cfg.sweep_values]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config: {exc}") from exc
    return cfg.validate()


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    render = render_json if cfg.format == "json" else render_csv
    try:
        report = COMMANDS[cfg.experiment](cfg)
    except ValidationFailure as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        if exc.report and cfg.format == "json":
            _emit(render_json(_envelope(cfg, exc.report, "failed")), cfg.output)
        return EXIT_NUMERICS
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    _emit(render(_envelope(cfg, report, "ok")), cfg.output)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
