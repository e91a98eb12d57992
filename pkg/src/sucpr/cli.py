"""Command line front-end.

Subcommands: ``estimate`` fits a system and writes coefficient tables,
``test`` runs the subsampling cointegration tests, ``wald`` tests
selection restrictions, ``simulate`` runs Monte Carlo presets or custom
experiment files, and ``export-schema`` dumps the JSON schemas that the
configuration and output files validate against.

Exit codes: 0 on success, 2 on configuration or data validation
failures, 3 on numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

import sucpr
from sucpr.biam import BiamDecomposition, fit_var_ladder
from sucpr.estimators import (
    fm_gls,
    fm_sols,
    fm_sur,
    ols,
    turning_point,
)
from sucpr.inference import cointegration_test, wald
from sucpr.lrcov import andrews_bandwidth, bartlett_lrcov, biam_lrcov
from sucpr.model import CprSpec, DimensionError, PanelData
from sucpr.montecarlo import CellAbortedError, DgpConfig, run_experiment

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class ValidationFailure(Exception):
    pass


class NumericalFailure(Exception):
    pass


# ---------------------------------------------------------------- helpers


def _fmt(x) -> str:
    """Full round-trip decimal rendering of a double."""
    return format(float(x), ".17g")


def _json_render(obj, indent=0) -> str:
    """JSON serializer writing floats with 17 significant digits."""
    pad = "  " * indent
    pad2 = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad2}{json.dumps(k)}: {_json_render(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad2}{_json_render(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            return json.dumps(None)
        return _fmt(x)
    return json.dumps(obj)


def _write_json(path: Path, obj) -> None:
    path.write_text(_json_render(obj) + "\n", encoding="utf-8")


def _schema(name: str) -> dict:
    text = resources.files("sucpr.schemas").joinpath(name).read_text(encoding="utf-8")
    return json.loads(text)


def _validate(obj, schema_name: str) -> None:
    try:
        jsonschema.validate(obj, _schema(schema_name))
    except jsonschema.ValidationError as exc:
        raise ValidationFailure(f"configuration invalid: {exc.message}") from exc


def _load_config(path: str | None, schema_name: str) -> dict:
    if path is None:
        return {}
    preset = resources.files("sucpr.presets").joinpath(f"{path}.json")
    try:
        if preset.is_file():
            text = preset.read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationFailure(f"cannot read config {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationFailure(f"config {path} is not valid JSON: {exc}") from exc
    _validate(obj, schema_name)
    return obj


def load_dataset(path: str) -> tuple[PanelData, list[str]]:
    """Read a wide CSV: column t, then y_<name>/x_<name> pairs."""
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
    except OSError as exc:
        raise ValidationFailure(f"cannot read dataset {path}: {exc}") from exc
    if not rows or len(rows) < 2:
        raise ValidationFailure("dataset needs a header row and at least one data row")
    header = rows[0]
    if not header or header[0] != "t":
        raise ValidationFailure("first dataset column must be named 't'")
    cols = header[1:]
    if len(cols) % 2 != 0 or not cols:
        raise ValidationFailure("expected y_<name>/x_<name> column pairs after 't'")
    names = []
    for i in range(0, len(cols), 2):
        yc, xc = cols[i], cols[i + 1]
        if not yc.startswith("y_") or not xc.startswith("x_") or yc[2:] != xc[2:]:
            raise ValidationFailure(f"columns {yc!r}, {xc!r} are not a matching y_/x_ pair")
        names.append(yc[2:])
    body = rows[1:]
    width = len(header)
    t_prev = None
    data = np.empty((len(body), width))
    for r, row in enumerate(body):
        if len(row) != width:
            raise ValidationFailure(f"row {r + 2} has {len(row)} cells, expected {width}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise ValidationFailure(f"row {r + 2} has a non-numeric cell") from exc
        if not np.isfinite(vals).all():
            raise ValidationFailure(f"row {r + 2} has a non-finite cell")
        t_val = vals[0]
        if t_val != int(t_val):
            raise ValidationFailure(f"row {r + 2}: t must be an integer")
        if t_prev is not None and t_val <= t_prev:
            raise ValidationFailure(f"row {r + 2}: t must be strictly increasing")
        t_prev = t_val
        data[r] = vals
    y = data[:, 1::2].T
    x = data[:, 2::2].T
    try:
        return PanelData(y=np.ascontiguousarray(y), x=np.ascontiguousarray(x)), names
    except (DimensionError, ValueError) as exc:
        raise ValidationFailure(str(exc)) from exc


def write_dataset(path: Path, data: PanelData, names: list[str], t0: int = 1) -> None:
    """Write the wide CSV layout that load_dataset reads back."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        header = ["t"]
        for name in names:
            header += [f"y_{name}", f"x_{name}"]
        w.writerow(header)
        for t in range(data.T):
            row = [str(t0 + t)]
            for i in range(data.n):
                row += [_fmt(data.y[i, t]), _fmt(data.x[i, t])]
            w.writerow(row)


def _spec_from_config(config: dict, names: list[str]) -> tuple[CprSpec, list[str]]:
    units = config.get("units")
    if units is None:
        return CprSpec(tuple((1, 2) for _ in names)), names
    by_name = {u["name"]: u for u in units}
    missing = [u["name"] for u in units if u["name"] not in names]
    if missing:
        raise ValidationFailure(f"units not present in dataset: {', '.join(missing)}")
    ordered = [n for n in names if n in by_name]
    eqs = tuple((by_name[n].get("d", 1), by_name[n].get("s", 2)) for n in ordered)
    return CprSpec(eqs), ordered


def _subset_data(data: PanelData, names: list[str], keep: list[str]) -> PanelData:
    if keep == names:
        return data
    idx = [names.index(n) for n in keep]
    return PanelData(y=data.y[idx], x=data.x[idx])


def _bundled_data_path() -> str:
    return str(resources.files("sucpr.data").joinpath("ekc_co2_gdp.csv"))


def _fit(config: dict, spec: CprSpec, data: PanelData, method: str, lr_source: str):
    banding = config.get("banding", {})
    if method == "fgls":
        est = fm_gls(spec, data, q=banding.get("q"), rT=banding.get("rT"))
        return est
    u_hat = ols(spec, data).residuals
    xi = np.vstack([u_hat, data.increments()])
    if lr_source == "biam":
        q = banding.get("q")
        if q is None:
            from sucpr.biam import select_banding

            q = select_banding(np.asarray(xi))
        lr = biam_lrcov(xi, qT=q, rT=banding.get("rT"))
    else:
        bw = config.get("bandwidth")
        if bw is None:
            bw = andrews_bandwidth(xi)
        lr = bartlett_lrcov(xi, bw)
    return fm_sols(spec, data, lr) if method == "sols" else fm_sur(spec, data, lr)


def _coef_labels(d_i: int, s_i: int) -> list[str]:
    labels = ["const"] + [f"t^{k}" if k > 1 else "t" for k in range(1, d_i + 1)]
    labels += [f"x^{k}" if k > 1 else "x" for k in range(1, s_i + 1)]
    return labels


# ---------------------------------------------------------------- commands


def cmd_estimate(args) -> int:
    config = _load_config(args.config, "run_config.schema.json")
    data_path = args.data or config.get("data") or _bundled_data_path()
    data, names = load_dataset(data_path)
    spec, keep = _spec_from_config(config, names)
    data = _subset_data(data, names, keep)
    method = args.method or config.get("method", "fgls")
    lr_source = args.lr or config.get("lr", "biam" if method == "fgls" else "kernel")
    try:
        est = _fit(config, spec, data, method, lr_source)
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        raise NumericalFailure(str(exc)) from exc
    sand = est.sandwich
    se = np.sqrt(np.clip(np.diag(sand), 0.0, None))
    out = {
        "command": "estimate",
        "version": sucpr.__version__,
        "method": est.method,
        "lr": lr_source,
        "seed": config.get("seed"),
        "units": [],
    }
    parts = est.split_beta()
    for i, name in enumerate(keep):
        d_i, s_i = spec.equations[i]
        off = spec.offsets[i]
        labels = _coef_labels(d_i, s_i)
        coefs = []
        for k, label in enumerate(labels):
            b = float(parts[i][k])
            s = float(se[off + k])
            coefs.append(
                {
                    "label": label,
                    "estimate": b,
                    "std_error": s,
                    "ci_lower": b - 1.96 * s,
                    "ci_upper": b + 1.96 * s,
                }
            )
        tp = None
        if s_i >= 2 and parts[i][d_i + 2] != 0.0:
            tp = turning_point(float(parts[i][d_i + 1]), float(parts[i][d_i + 2]))
        out["units"].append({"name": name, "coefficients": coefs, "turning_point": tp})
    _validate(out, "result.schema.json")
    outdir = _outdir(args, config)
    _write_json(outdir / "estimate.json", out)
    with open(outdir / "residuals.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["t"] + [f"resid_{n}" for n in keep])
        for t in range(data.T):
            w.writerow([str(t + 1)] + [_fmt(est.residuals[i, t]) for i in range(spec.n)])
    _print_estimate(out)
    return EXIT_OK


def _print_estimate(out: dict) -> None:
    for unit in out["units"]:
        coefs = " ".join(f"{c['label']}={c['estimate']:.3f}" for c in unit["coefficients"])
        line = f"{unit['name']}: {coefs}"
        if unit.get("turning_point"):
            line += f" tp={unit['turning_point']:.0f}"
        print(line)


def cmd_test(args) -> int:
    config = _load_config(args.config, "run_config.schema.json")
    data_path = args.data or config.get("data") or _bundled_data_path()
    data, names = load_dataset(data_path)
    spec, keep = _spec_from_config(config, names)
    data = _subset_data(data, names, keep)
    alpha = config.get("alpha", 0.05)
    want = config.get("variant", "all")
    if args.method:
        want = {"sols": "sols", "sur": "sur", "fgls": "biam"}[args.method]
    variants = ["SOLS", "SUR", "BIAM"] if want == "all" else [want.upper()]
    out = {"command": "test", "version": sucpr.__version__, "tests": []}
    for variant in variants:
        try:
            res = cointegration_test(
                spec, data, variant, alpha=alpha, block_size=config.get("block_size")
            )
        except (np.linalg.LinAlgError, FloatingPointError) as exc:
            raise NumericalFailure(str(exc)) from exc
        out["tests"].append(
            {
                "variant": res.variant,
                "k_max": res.k_max,
                "block_size": res.block_size,
                "num_blocks": res.num_blocks,
                "critical_value": res.critical_value,
                "alpha": res.alpha,
                "reject": res.reject,
                "statistics": list(res.statistics),
            }
        )
        print(
            f"K^{res.variant}: K_max={res.k_max:.2f} b={res.block_size} M={res.num_blocks} "
            f"crit={res.critical_value:.2f} reject={res.reject}"
        )
    _validate(out, "result.schema.json")
    _write_json(_outdir(args, config) / "test.json", out)
    return EXIT_OK


def cmd_wald(args) -> int:
    config = _load_config(args.config, "run_config.schema.json")
    restrictions = config.get("restrictions")
    if not restrictions:
        raise ValidationFailure("wald requires 'restrictions' in the config")
    data_path = args.data or config.get("data") or _bundled_data_path()
    data, names = load_dataset(data_path)
    spec, keep = _spec_from_config(config, names)
    data = _subset_data(data, names, keep)
    method = args.method or config.get("method", "fgls")
    lr_source = args.lr or config.get("lr", "biam" if method == "fgls" else "kernel")
    R = np.zeros((len(restrictions), spec.d))
    r = np.zeros(len(restrictions))
    for k, rest in enumerate(restrictions):
        unit = rest["unit"]
        if isinstance(unit, str):
            if unit not in keep:
                raise ValidationFailure(f"unknown unit {unit!r} in restriction")
            unit = keep.index(unit)
        if not 0 <= unit < spec.n:
            raise ValidationFailure(f"unit index {unit} out of range")
        if not 0 <= rest["coef"] < spec.block_sizes[unit]:
            raise ValidationFailure(f"coefficient index {rest['coef']} out of range")
        R[k, spec.offsets[unit] + rest["coef"]] = 1.0
        r[k] = rest["value"]
    try:
        est = _fit(config, spec, data, method, lr_source)
        res = wald(est, R, r)
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        raise NumericalFailure(str(exc)) from exc
    out = {
        "command": "wald",
        "version": sucpr.__version__,
        "method": est.method,
        "wald": {"statistic": res.statistic, "dof": res.dof, "p_value": res.p_value},
    }
    _validate(out, "result.schema.json")
    _write_json(_outdir(args, config) / "wald.json", out)
    print(f"W={res.statistic:.4f} dof={res.dof} p={res.p_value:.4g}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.config is None:
        raise ValidationFailure("simulate requires --config (preset name or file)")
    config = _load_config(args.config, "simulate_config.schema.json")
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    reports = []
    for cell in config["cells"]:
        dgp = DgpConfig(**cell)
        print(f"running {config['task']} {cell} ...", file=sys.stderr)
        try:
            rep = run_experiment(
                dgp,
                config["task"],
                reps=config["reps"],
                seed=seed,
                parallelism=args.threads,
                wald_null=config.get("wald_null"),
            )
        except CellAbortedError as exc:
            print(f"cell aborted: {exc}", file=sys.stderr)
            raise NumericalFailure(str(exc)) from exc
        reports.append(rep)
    outdir = _outdir(args, config)
    rows = []
    stat_keys = sorted({k for rep in reports for k in rep.stats})
    for rep in reports:
        row = {
            "task": rep.task,
            "setting": rep.config.setting,
            "n": rep.config.n,
            "T": rep.config.T,
            "rho": rep.config.rho,
            "lam_low": rep.config.lam_low,
            "lam_high": rep.config.lam_high,
            "theta": rep.config.theta,
            "J": rep.config.J,
            "reps": rep.reps,
            "failures": rep.failures,
        }
        for k in stat_keys:
            row[k] = rep.stats.get(k)
            row[f"se_{k}"] = rep.std_errors.get(k)
        rows.append(row)
    csv_path = outdir / "report.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        header = list(rows[0].keys())
        w.writerow(header)
        for row in rows:
            w.writerow(["" if row[k] is None else _fmt(row[k]) if isinstance(row[k], float) else str(row[k]) for k in header])
    out = {"command": "simulate", "version": sucpr.__version__, "seed": seed, "report": rows}
    _validate(out, "result.schema.json")
    _write_json(outdir / "report.json", out)
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_export_schema(args) -> int:
    outdir = Path(args.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    for name in ("run_config.schema.json", "simulate_config.schema.json", "result.schema.json"):
        (outdir / name).write_text(
            json.dumps(_schema(name), indent=2) + "\n", encoding="utf-8"
        )
        print(f"wrote {outdir / name}")
    return EXIT_OK


def _outdir(args, config: dict) -> Path:
    out = Path(getattr(args, "out", None) or config.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sucpr",
        description="Estimation and testing for seemingly unrelated cointegrating polynomial regressions.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("estimate", cmd_estimate),
        ("test", cmd_test),
        ("wald", cmd_wald),
        ("simulate", cmd_simulate),
        ("export-schema", cmd_export_schema),
    ):
        sp = sub.add_parser(name)
        sp.set_defaults(fn=fn)
        sp.add_argument("--config", help="config file path or preset name")
        sp.add_argument("--out", help="output directory")
        if name in ("estimate", "test", "wald"):
            sp.add_argument("--data", help="dataset CSV (defaults to the bundled panel)")
            sp.add_argument("--method", choices=["sols", "sur", "fgls"])
            sp.add_argument("--lr", choices=["kernel", "biam"])
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
