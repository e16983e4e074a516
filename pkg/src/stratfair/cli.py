"""Command-line entry point: ``stratfair {fit,evaluate,predict,reproduce}``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .errors import InfeasibleError, IngestionError, StratFairError
from .experiments import (
    DATASETS,
    DEFAULT_SEEDS,
    TARGETS,
    RunConfig,
    evaluate_policy,
    fit_policy,
    format_table,
    prepare,
    run_reproduce,
    versions_stamp,
    write_json,
)
from .metrics import FairnessReport
from .policy import FairPolicy, predict

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_DATA = 0, 2, 3, 4


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", choices=DATASETS, default="fico-synthetic")
    p.add_argument("--lawschool", metavar="CSV", help="Law School CSV (required for --dataset lawschool)")
    p.add_argument("--cdf", metavar="CSV", help="group score CDF table (columns group,score,cdf)")
    p.add_argument("--n-samples", type=int, default=5000, help="synthetic FICO sample size")
    p.add_argument("--normalize", action="store_true", help="rescale FICO scores to [0, 1]")
    p.add_argument("--out", required=True, help="output directory")


def _add_fit_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bins", type=int, help="number of threshold bins K")
    p.add_argument("--lambda", dest="lam", type=float, help="cost multiplier lambda")
    p.add_argument("--alpha", type=float, help="cost scale alpha")
    p.add_argument("--beta", type=float, help="cost exponent beta")
    p.add_argument("--mc", type=float, help="BRC fairness budget M_c")
    p.add_argument("--mp", type=float, help="outcome fairness budget M_p")
    p.add_argument("--cap-l", type=float, help="density cap L used directly")
    p.add_argument("--omega", type=float, default=0.0, help="group-gap relaxation")
    p.add_argument("--group-mode", choices=("none", "parity", "eqopp", "eqodds"), default="none")


def _eval_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strict-alg2", action="store_true", help="compare raw scores to sampled thresholds")
    p.add_argument("--if-subsample", type=int, metavar="M", help="scan IF pairs over M random rows")
    p.add_argument("--exclude-group-feature", action="store_true", help="drop the group column from IF distances")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stratfair", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a randomized threshold policy")
    _add_data_args(p)
    _add_fit_args(p)
    p.add_argument("--seed", type=int, default=0, help="master seed for data generation and split")
    p.add_argument("--dump-weights", action="store_true", help="write per-bin A/B weights")
    p.add_argument("--dump-lp", action="store_true", help="write the assembled LP")

    p = sub.add_parser("evaluate", help="evaluate a policy file over seeds")
    p.add_argument("policy", help="policy JSON written by 'fit'")
    _add_data_args(p)
    p.add_argument("--seeds", type=int, nargs="+", default=list(DEFAULT_SEEDS))
    _eval_args(p)

    p = sub.add_parser("predict", help="apply a policy to a feature CSV")
    p.add_argument("policy")
    p.add_argument("features", help="CSV with a header row; all columns are features")
    p.add_argument("--group-column", help="column holding group ids (kept as a feature)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict-alg2", action="store_true")
    p.add_argument("--out", help="output CSV (stdout if omitted)")

    p = sub.add_parser("reproduce", help="rerun a results-table sweep")
    p.add_argument("target", choices=sorted(TARGETS))
    p.add_argument("--seeds", type=int, nargs="+", default=list(DEFAULT_SEEDS))
    p.add_argument("--lawschool", metavar="CSV")
    p.add_argument("--n-samples", type=int, default=5000)
    p.add_argument("--out", required=True)
    return parser


def _config(args, seeds) -> RunConfig:
    return RunConfig(
        dataset=args.dataset,
        data_path=args.lawschool,
        cdf_path=args.cdf,
        n_samples=args.n_samples,
        normalize=args.normalize,
        lam=getattr(args, "lam", None),
        alpha=getattr(args, "alpha", None),
        beta=getattr(args, "beta", None),
        bins=getattr(args, "bins", None),
        m_c=getattr(args, "mc", None),
        m_p=getattr(args, "mp", None),
        cap_l=getattr(args, "cap_l", None),
        group_mode=getattr(args, "group_mode", "none"),
        omega=getattr(args, "omega", 0.0),
        seeds=tuple(seeds),
        strict_alg2=getattr(args, "strict_alg2", False),
        if_subsample=getattr(args, "if_subsample", None),
        exclude_group_feature=getattr(args, "exclude_group_feature", False),
    )


def _write_run_header(out: Path, config: RunConfig) -> None:
    write_json(out / "config.json", {"config": config.to_dict(), "config_hash": config.config_hash(),
                                     "seeds": list(config.seeds)})
    write_json(out / "versions.json", versions_stamp())


def cmd_fit(args) -> int:
    config = _config(args, [args.seed])
    if config.cap_mode is None:
        raise ValueError("fit needs a density cap: give --cap-l, --mp and/or --mc")
    out = Path(args.out)
    data = prepare(config, args.seed)
    policy, problem, weights = fit_policy(config, data, return_problem=True)
    policy.metadata.update({"seed": args.seed, "config_hash": config.config_hash()})
    _write_run_header(out, config)
    (out / "policy.json").write_text(policy.dumps() + "\n")
    write_json(out / "fit_log.json", {
        "seed": args.seed,
        "config_hash": config.config_hash(),
        "lp_status": policy.metadata.get("lp_status"),
        "objective": policy.metadata.get("objective"),
        "iterations": policy.metadata.get("lp_iterations"),
        "density_cap": policy.density_cap,
    })
    if args.dump_lp:
        write_json(out / "lp.json", {"seed": args.seed, "config_hash": config.config_hash(), "problem": problem.to_dict()})
    if args.dump_weights:
        dumps = {key: w.to_dict() for key, w in sorted(weights.items())}
        write_json(out / "weights.json", {"seed": args.seed, "config_hash": config.config_hash(), "weights": dumps})
    print(f"wrote {out / 'policy.json'} (objective {policy.metadata.get('objective'):.6g})")
    return EXIT_OK


def _load_policy(path) -> FairPolicy:
    try:
        return FairPolicy.from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise IngestionError(f"cannot read policy file {path}: {exc}") from exc


def cmd_evaluate(args) -> int:
    config = _config(args, args.seeds)
    policy = _load_policy(args.policy)
    out = Path(args.out)
    report = FairnessReport()
    for seed in config.seeds:
        data = prepare(config, seed)
        n_features = data.test.features.shape[1]
        if policy.score.variant == "coordinate" and policy.score.index >= n_features:
            raise IngestionError(f"policy reads feature {policy.score.index} but the data has {n_features} columns")
        if policy.score.variant == "linear" and len(policy.score.weights) != n_features:
            raise IngestionError(f"policy expects {len(policy.score.weights)} features, data has {n_features}")
        report.add(evaluate_policy(policy, data.test, data.sample_seed, config.strict_alg2,
                                   config.if_subsample, config.exclude_group_feature))
    result = {
        "policy": str(args.policy),
        "kind": policy.kind,
        "seeds": list(config.seeds),
        "columns": ["policy"],
        "rows": ["f1_macro", "if_ratio_outcome", "if_ratio_brc", "s_dp", "eo_dp", "ed_dp"],
        "results": {"policy": report.to_dict()},
        "config_hash": config.config_hash(),
        "versions": versions_stamp(),
        "note": "std spans both split and sampling randomness; one master seed drives both per run",
    }
    _write_run_header(out, config)
    (out / "policy.json").write_text(policy.dumps() + "\n")
    write_json(out / "report.json", result)
    table = format_table(result)
    (out / "report.txt").write_text(table)
    print(table, end="")
    return EXIT_OK


def _read_feature_csv(path, group_column):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise IngestionError(f"{path}: expected a header and at least one row")
    header, body = rows[0], rows[1:]
    X = np.empty((len(body), len(header)))
    for r, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise IngestionError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        for c, cell in enumerate(row):
            try:
                X[r - 2, c] = float(cell)
            except ValueError:
                raise IngestionError(f"{path}: row {r}, column {header[c]!r}: cannot parse {cell!r}") from None
    groups = None
    if group_column is not None:
        if group_column not in header:
            raise IngestionError(f"{path}: no column named {group_column!r}")
        raw = X[:, header.index(group_column)]
        groups = raw.astype(int) if np.all(raw == np.round(raw)) else raw
    return X, groups


def cmd_predict(args) -> int:
    policy = _load_policy(args.policy)
    X, groups = _read_feature_csv(args.features, args.group_column)
    if policy.grouped and groups is None:
        raise ValueError("this policy is group-specific; pass --group-column")
    yhat = predict(policy, X, groups, seed=args.seed, strict_alg2=args.strict_alg2)
    lines = ["prediction"] + [str(int(v)) for v in yhat]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    if args.target.startswith("law") and not args.lawschool:
        raise ValueError(f"target {args.target} needs --lawschool CSV")
    out = Path(args.out)

    def sink(seed, column, policy):
        slug = column.replace(" ", "").replace("=", "-").replace("_", "")
        (out / f"seed-{seed}").mkdir(parents=True, exist_ok=True)
        (out / f"seed-{seed}" / f"policy-{slug}.json").write_text(policy.dumps() + "\n")

    report = run_reproduce(args.target, args.seeds, args.lawschool, args.n_samples, policy_sink=sink)
    config = {"target": args.target, "seeds": list(args.seeds), "lawschool": args.lawschool,
              "n_samples": args.n_samples, "config_hash": report["config_hash"]}
    write_json(out / "config.json", config)
    write_json(out / "versions.json", report["versions"])
    write_json(out / "report.json", report)
    table = format_table(report)
    (out / "report.txt").write_text(table)
    print(table, end="")
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "evaluate": cmd_evaluate, "predict": cmd_predict, "reproduce": cmd_reproduce}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InfeasibleError as exc:
        print(f"error: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (IngestionError, FileNotFoundError) as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, StratFairError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
