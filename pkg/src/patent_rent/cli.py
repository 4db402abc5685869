"""Command-line pipeline: synthesize cohorts, estimate parameters, simulate
values and emit report tables.  Every run writes a manifest sufficient to
reproduce its outputs bit for bit."""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import os
import sys
import traceback
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .data import CovariateSpec, generate_synthetic, parse_records, serialize_records
from .errors import (
    ConfigurationError,
    DegenerateDataError,
    DomainError,
    Error,
    ValidationError,
)
from .estimator import GaConfig, ParamBounds, estimate, result_from_dict, result_to_dict
from .fees import FeeSchedule, builtin_schedule, load_schedule
from .model import ModelConfig, ModelParams
from .reports import (
    age_value_trend,
    expiry_share_table,
    quantile_table,
    render_expiry_share_csv,
    render_expiry_share_text,
    render_grouped_value_csv,
    render_grouped_value_text,
    render_quantile_csv,
    render_quantile_text,
    render_trend_csv,
    render_values_csv,
    value_by_group,
)
from .simulate import apply_ensemble, ensemble_value, simulate_initial_return

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_COMPUTE = 3
EXIT_INTERNAL = 4

_BUILTIN_NAMES = ("india", "china", "us")


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(path.read_bytes())
    return digest.hexdigest()


def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def resolve_schedule(ref: str) -> tuple[FeeSchedule, Path | None]:
    """Builtin name or schedule file path; ambiguity is an explicit error."""
    is_builtin = ref.strip().lower() in _BUILTIN_NAMES
    as_path = Path(ref)
    if is_builtin and as_path.exists():
        raise ValidationError(
            f"schedule reference {ref!r} matches both a builtin name and an "
            "existing file; rename the file or pass an explicit path"
        )
    if is_builtin:
        return builtin_schedule(ref), None
    if not as_path.exists():
        raise ValidationError(
            f"schedule {ref!r} is neither a builtin name {_BUILTIN_NAMES} nor an existing file"
        )
    return load_schedule(as_path.read_text(encoding="utf-8")), as_path


def _load_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from None


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


class OutputSet:
    """Collects output files, then writes them plus the run manifest."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str) -> None:
        self.files[name] = text

    def write(self, command: str, args: dict, inputs: dict[str, str], seed: int, threads: int) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (self.out_dir / name).write_text(text, encoding="utf-8", newline="")
        manifest = {
            "tool": "patent-rent",
            "version": __version__,
            "command": command,
            "args": args,
            "seed": seed,
            "threads": threads,
            "inputs": inputs,
            "outputs": {name: _sha256_text(text) for name, text in self.files.items()},
            "created_utc": datetime.now(timezone.utc).isoformat(),
        }
        (self.out_dir / "run_manifest.json").write_text(
            _json_text(manifest), encoding="utf-8", newline=""
        )


def _read_records(path: Path):
    records, report = parse_records(path.read_text(encoding="utf-8"))
    if not records:
        raise ValidationError(
            [f"{path}: no usable records"]
            + [f"row {line}: {reason}" for line, reason in report.rejected[:10]]
        )
    for line, reason in report.rejected:
        print(f"note: {path.name} row {line} skipped: {reason}", file=sys.stderr)
    for message in report.warnings:
        print(f"note: {path.name}: {message}", file=sys.stderr)
    return records


def run_synth(
    params_path: str,
    n: int,
    schedule_ref: str,
    covariate_spec_path: str | None,
    seed: int,
    out_dir: str,
) -> dict:
    params = ModelParams.from_dict(_load_json(Path(params_path)))
    schedule, schedule_file = resolve_schedule(schedule_ref)
    spec = (
        CovariateSpec.from_dict(_load_json(Path(covariate_spec_path)))
        if covariate_spec_path
        else None
    )
    config = ModelConfig()
    records = generate_synthetic(params, n, schedule, config, spec, seed)

    out = OutputSet(Path(out_dir))
    out.add("records.csv", serialize_records(records))
    inputs = {str(Path(params_path)): _sha256_file(Path(params_path))}
    if schedule_file:
        inputs[str(schedule_file)] = _sha256_file(schedule_file)
    if covariate_spec_path:
        inputs[str(Path(covariate_spec_path))] = _sha256_file(Path(covariate_spec_path))
    out.write(
        "synth",
        {
            "params": str(params_path),
            "n": n,
            "schedule": schedule_ref,
            "covariate_spec": covariate_spec_path,
            "out": str(out_dir),
        },
        inputs,
        seed,
        threads=1,
    )
    return {"records": len(records)}


def run_estimate(
    records_path: str,
    schedule_ref: str,
    ga_config_path: str | None,
    bounds_path: str | None,
    seed: int,
    threads: int,
    out_dir: str,
) -> dict:
    records = _read_records(Path(records_path))
    schedule, schedule_file = resolve_schedule(schedule_ref)
    if ga_config_path:
        ga_payload = dict(_load_json(Path(ga_config_path)))
        ga_payload["seed"] = seed
        try:
            ga = GaConfig(**ga_payload)
        except TypeError as exc:
            raise ValidationError(f"{ga_config_path}: {exc}") from None
    else:
        ga = GaConfig.desk(seed=seed)
    bounds = ParamBounds.from_dict(_load_json(Path(bounds_path))) if bounds_path else None
    config = ModelConfig()

    result = estimate(records, schedule, config, ga, bounds)

    out = OutputSet(Path(out_dir))
    out.add("estimation_result.json", _json_text(result_to_dict(result)))
    inputs = {str(Path(records_path)): _sha256_file(Path(records_path))}
    if schedule_file:
        inputs[str(schedule_file)] = _sha256_file(schedule_file)
    if ga_config_path:
        inputs[str(Path(ga_config_path))] = _sha256_file(Path(ga_config_path))
    if bounds_path:
        inputs[str(Path(bounds_path))] = _sha256_file(Path(bounds_path))
    out.write(
        "estimate",
        {
            "records": str(records_path),
            "schedule": schedule_ref,
            "ga_config": ga_config_path,
            "bounds": bounds_path,
            "out": str(out_dir),
        },
        inputs,
        seed,
        threads,
    )
    return {"best_log_likelihood": result.best_log_likelihood}


def run_value(
    records_path: str,
    result_path: str,
    schedule_ref: str,
    draws: int,
    ensemble: bool,
    ensemble_draws: int,
    seed: int,
    threads: int,
    out_dir: str,
) -> dict:
    records = _read_records(Path(records_path))
    result = result_from_dict(_load_json(Path(result_path)))
    schedule, schedule_file = resolve_schedule(schedule_ref)
    config = ModelConfig()
    params = result.point_estimate
    elite = result.elite_params()
    if ensemble and not elite:
        raise ValidationError(f"{result_path}: no elite set present; cannot run --ensemble")

    sim_root, ens_root = np.random.SeedSequence(seed).spawn(2)
    sim_seeds = sim_root.spawn(len(records))
    ens_seeds = ens_root.spawn(len(records))

    def one(i: int):
        est = simulate_initial_return(params, records[i], schedule, config, draws, sim_seeds[i])
        if ensemble:
            summary = ensemble_value(
                elite, records[i], schedule, config, ensemble_draws, ens_seeds[i]
            )
            est = apply_ensemble(est, summary)
        return est

    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            estimates = list(pool.map(one, range(len(records))))
    else:
        estimates = [one(i) for i in range(len(records))]

    out = OutputSet(Path(out_dir))
    out.add("values.csv", render_values_csv(estimates))

    shares = expiry_share_table(records)
    out.add("expiry_shares.csv", render_expiry_share_csv(shares))
    out.add("expiry_shares.txt", render_expiry_share_text(shares))
    for key in ("technology", "ownership"):
        for money in ("r0", "npv"):
            table = value_by_group(records, estimates, key, money)
            out.add(f"{money}_by_{key}.csv", render_grouped_value_csv(table))
            out.add(f"{money}_by_{key}.txt", render_grouped_value_text(table))
    grid = quantile_table(estimates)
    out.add("npv_quantiles.csv", render_quantile_csv(grid))
    out.add("npv_quantiles.txt", render_quantile_text(grid))
    out.add("age_value_trend.csv", render_trend_csv(age_value_trend(estimates)))

    npv = np.array([e.npv_mean for e in estimates])
    summary = {
        "patents": len(estimates),
        "draws_per_patent": draws,
        "ensemble": ensemble,
        "ensemble_draws": ensemble_draws if ensemble else None,
        "npv_mean": float(npv.mean()),
        "npv_median": float(np.median(npv)),
        "degenerate_patents": int(sum(1 for e in estimates if e.degenerate)),
        "currency": schedule.currency,
    }
    out.add("values_summary.json", _json_text(summary))

    inputs = {
        str(Path(records_path)): _sha256_file(Path(records_path)),
        str(Path(result_path)): _sha256_file(Path(result_path)),
    }
    if schedule_file:
        inputs[str(schedule_file)] = _sha256_file(schedule_file)
    out.write(
        "value",
        {
            "records": str(records_path),
            "result": str(result_path),
            "schedule": schedule_ref,
            "draws": draws,
            "ensemble": ensemble,
            "ensemble_draws": ensemble_draws,
            "out": str(out_dir),
        },
        inputs,
        seed,
        threads,
    )
    return summary


def run_rerun(manifest_path: str, out_dir: str, threads: int) -> dict:
    manifest = _load_json(Path(manifest_path))
    for path_str, digest in manifest.get("inputs", {}).items():
        path = Path(path_str)
        if not path.exists():
            raise ValidationError(f"manifest input {path_str} no longer exists")
        if _sha256_file(path) != digest:
            raise ValidationError(
                f"manifest input {path_str} has changed since the recorded run"
            )
    command = manifest.get("command")
    args = dict(manifest.get("args", {}))
    seed = int(manifest["seed"])
    if command == "synth":
        return run_synth(
            args["params"], int(args["n"]), args["schedule"], args.get("covariate_spec"), seed, out_dir
        )
    if command == "estimate":
        return run_estimate(
            args["records"], args["schedule"], args.get("ga_config"), args.get("bounds"),
            seed, threads, out_dir,
        )
    if command == "value":
        return run_value(
            args["records"], args["result"], args["schedule"], int(args["draws"]),
            bool(args["ensemble"]), int(args["ensemble_draws"]), seed, threads, out_dir,
        )
    raise ValidationError(f"manifest command {command!r} is not re-runnable")


def _threads_value(raw: str | None) -> int:
    if raw is None:
        raw = os.environ.get("PATENT_RENT_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(f"--threads expects an integer, got {raw!r}") from None
    if value < 1:
        raise ValidationError(f"--threads must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patent-rent",
        description="Renewal-based patent valuation: estimate, simulate, report.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic cohort from known parameters")
    synth.add_argument("--params", required=True, help="model parameter JSON file")
    synth.add_argument("--n", type=int, required=True, help="number of synthetic patents")
    synth.add_argument("--schedule", required=True, help="builtin name (india|china|us) or schedule file")
    synth.add_argument("--covariate-spec", help="covariate sampling spec JSON file")
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--out", required=True, help="output directory")

    est = sub.add_parser("estimate", help="fit model parameters to a records file")
    est.add_argument("--records", required=True)
    est.add_argument("--schedule", required=True)
    est.add_argument("--ga-config", help="GA settings JSON (desk-scale defaults otherwise)")
    est.add_argument("--bounds", help="search box JSON overriding the defaults")
    est.add_argument("--seed", type=int, required=True)
    est.add_argument("--threads", default=None)
    est.add_argument("--out", required=True)

    value = sub.add_parser("value", help="simulate per-patent values and emit report tables")
    value.add_argument("--records", required=True)
    value.add_argument("--result", required=True, help="estimation result JSON")
    value.add_argument("--schedule", required=True)
    value.add_argument("--draws", type=int, default=10_000)
    value.add_argument("--ensemble", action="store_true", help="add elite-ensemble uncertainty bands")
    value.add_argument("--ensemble-draws", type=int, default=500)
    value.add_argument("--seed", type=int, required=True)
    value.add_argument("--threads", default=None)
    value.add_argument("--out", required=True)

    rerun = sub.add_parser("rerun", help="re-execute a recorded run bit-identically")
    rerun.add_argument("manifest", help="run_manifest.json of a previous run")
    rerun.add_argument("--threads", default=None)
    rerun.add_argument("--out", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            run_synth(args.params, args.n, args.schedule, args.covariate_spec, args.seed, args.out)
        elif args.command == "estimate":
            run_estimate(
                args.records, args.schedule, args.ga_config, args.bounds,
                args.seed, _threads_value(args.threads), args.out,
            )
        elif args.command == "value":
            if args.draws < 1 or args.ensemble_draws < 1:
                raise ValidationError("--draws and --ensemble-draws must be >= 1")
            run_value(
                args.records, args.result, args.schedule, args.draws, args.ensemble,
                args.ensemble_draws, args.seed, _threads_value(args.threads), args.out,
            )
        elif args.command == "rerun":
            run_rerun(args.manifest, args.out, _threads_value(args.threads))
    except (ValidationError, DomainError, ConfigurationError, DegenerateDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
