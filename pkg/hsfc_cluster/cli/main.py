from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, NoReturn

import numpy as np

from hsfc_cluster import __version__
from hsfc_cluster.config import Settings, parse_bool
from hsfc_cluster.datagen import TableSpec, generate, spec_from_code
from hsfc_cluster.dataio import (
    load_csv,
    load_labels_csv,
    read_result_json,
    write_csv,
    write_labels_csv,
)
from hsfc_cluster.errors import ClusteringError, DataFormatError, DimensionMismatchError
from hsfc_cluster.evaluation import (
    adjusted_rand_index,
    crisp,
    crisp_within_ss,
    partition_entropy,
    rand_index,
    within_ss,
)
from hsfc_cluster.fcm import FcmConfig
from hsfc_cluster.hsfc import HsfcConfig
from hsfc_cluster.logging_config import setup_logging
from hsfc_cluster.models import CentroidMatrix, DataMatrix, HardPartition, MembershipMatrix
from hsfc_cluster.runner import bench_row, fit_restarts, write_bench, write_run

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_BAD_FLAGS = 1
EXIT_DATA = 2
EXIT_SOLVER = 3


class CliParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_BAD_FLAGS, f"{self.prog}: error: {message}\n")


def _bool_arg(value: str) -> bool:
    try:
        return parse_bool(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _k_list(value: str) -> list[int]:
    parts = [part.strip() for part in str(value).split(",") if part.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("--k needs at least one integer")
    try:
        return [int(part) for part in parts]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid K list: {value!r}") from exc


def _codes(value: str) -> list[str]:
    return [part.strip().upper() for part in str(value).split(",") if part.strip()]


def _fmt(value: float | None) -> str:
    if value is None:
        return "n/a"
    return f"{float(value):.17g}"


def _fcm_config(args: argparse.Namespace, K: int) -> FcmConfig:
    return FcmConfig(K=K, m=args.m, tol=args.tol, max_iter=args.max_iters, seed=args.seed)


def _hsfc_config(args: argparse.Namespace, K: int) -> HsfcConfig:
    return HsfcConfig(
        K=K,
        epsilon=args.eps,
        gamma0=args.gamma0,
        tau0=args.tau0,
        rho1=args.rho1,
        rho2=args.rho2,
        rho3=args.rho3,
        N=args.outer_iters,
        epsilon_fixed=args.eps_fixed,
        seed=args.seed,
    )


def _load_input(args: argparse.Namespace) -> DataMatrix:
    return load_csv(args.input, has_header=args.header, delimiter=args.delimiter)


def cmd_fit(args: argparse.Namespace) -> int:
    if len(args.k) != 1:
        raise ValueError(f"fit takes a single --k value, got {args.k}")
    K = args.k[0]
    cfg = _fcm_config(args, K) if args.method == "fcm" else _hsfc_config(args, K)
    if args.restarts < 1:
        raise ValueError(f"--restarts must be >= 1, got {args.restarts}")
    X = _load_input(args)
    record = fit_restarts(X, cfg, args.restarts, workers=args.workers)
    out = Path(args.output) if args.output else Path(f"{args.method}_k{K}.json")
    record = write_run(record, X, out)

    print(f"method={record.method_tag.value}")
    print(f"K={K}")
    print(f"restarts={len(record.restart_seeds)}")
    print(f"best_seed={record.best_seed}")
    print(f"best_wp={_fmt(record.best_objective_wp)}")
    print(f"crisp_ss={_fmt(crisp_within_ss(X, crisp(record.best.memberships)))}")
    if isinstance(cfg, FcmConfig):
        print(f"eq1_objective={_fmt(record.best.objective)}")
    print(f"line_search_failures={record.line_search_failures}")
    print(f"result={record.result_path}")
    return EXIT_OK


def _table_spec(args: argparse.Namespace) -> TableSpec:
    if args.table:
        return spec_from_code(args.table, p=args.p, separation=args.separation, seed=args.seed)
    if args.n is None or args.clusters is None:
        raise ValueError("generate needs --table or both --n and --clusters")
    return TableSpec(
        n=args.n,
        K=args.clusters,
        equal_card=args.equal_card,
        equal_sd=args.equal_sd,
        p=args.p,
        separation=args.separation,
        seed=args.seed,
    )


def _labels_path(out: Path) -> Path:
    return out.with_name(f"{out.stem}_labels.csv")


def cmd_generate(args: argparse.Namespace) -> int:
    spec = _table_spec(args)
    X, truth = generate(spec)
    out = Path(args.out) if args.out else Path(f"{spec.label}_seed{spec.seed}.csv")
    labels_out = Path(args.labels_out) if args.labels_out else _labels_path(out)
    write_csv(out, X)
    write_labels_csv(labels_out, truth)
    logger.info("table_written code=%s n=%s p=%s path=%s", spec.label, X.n, X.p, out)

    print(f"table={spec.label}")
    print(f"n={X.n}")
    print(f"p={X.p}")
    print(f"K={spec.K}")
    print(f"sizes={','.join(str(int(c)) for c in truth.cardinalities())}")
    print(f"data={out}")
    print(f"labels={labels_out}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    codes = _codes(args.tables) if args.tables else []
    if not codes and not args.input:
        raise ValueError("bench needs --tables and/or --input")
    if args.restarts < 1:
        raise ValueError(f"--restarts must be >= 1, got {args.restarts}")
    fcm_cfg = _fcm_config(args, args.k[0])
    hsfc_cfg = _hsfc_config(args, args.k[0])
    specs = [
        spec_from_code(code, p=args.p, separation=args.separation, seed=args.seed)
        for code in codes
    ]

    datasets: list[tuple[str, DataMatrix, HardPartition | None]] = []
    for spec in specs:
        X, truth = generate(spec)
        datasets.append((spec.label, X, truth))
    if args.input:
        truth = load_labels_csv(args.truth) if args.truth else None
        datasets.append((Path(args.input).stem, _load_input(args), truth))

    rows = []
    for name, X, truth in datasets:
        for K in args.k:
            rows.append(
                bench_row(
                    name,
                    X,
                    K,
                    fcm_cfg,
                    hsfc_cfg,
                    args.restarts,
                    truth=truth,
                    workers=args.workers,
                )
            )

    csv_out = Path(args.output) if args.output else Path("bench.csv")
    meta: dict[str, Any] = {
        "tables": [name for name, _, _ in datasets],
        "k": list(args.k),
        "restarts": args.restarts,
        "seed": args.seed,
        "fcm": {"m": args.m, "tol": args.tol, "max_iters": args.max_iters},
        "hsfc": {
            "eps": args.eps,
            "gamma0": args.gamma0,
            "tau0": args.tau0,
            "rho1": args.rho1,
            "rho2": args.rho2,
            "rho3": args.rho3,
            "outer_iters": args.outer_iters,
            "eps_fixed": args.eps_fixed,
        },
    }
    csv_path, json_path = write_bench(rows, csv_out, csv_out.with_suffix(".json"), meta)
    logger.info("bench_done rows=%s csv=%s", len(rows), csv_path)

    for row in rows:
        print(
            f"table={row.table} K={row.K} SS_HSFC={row.ss_hsfc:.6f} SS_FCM={row.ss_fcm:.6f} "
            f"ARI={row.ari:.6f}"
        )
    print(f"rows={len(rows)}")
    print(f"csv={csv_path}")
    print(f"json={json_path}")
    return EXIT_OK


def _result_matrices(
    payload: dict[str, Any], X: DataMatrix
) -> tuple[CentroidMatrix, MembershipMatrix]:
    try:
        G = CentroidMatrix(g=np.asarray(payload["centroids"], dtype=np.float64))
        U = MembershipMatrix(mu=np.asarray(payload["memberships"], dtype=np.float64))
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"malformed result matrices: {exc}") from exc
    if U.n != X.n:
        raise DimensionMismatchError("n", X.n, U.n, "data vs result memberships")
    return G, U


def cmd_eval(args: argparse.Namespace) -> int:
    payload = read_result_json(args.result)
    X = _load_input(args)
    G, U = _result_matrices(payload, X)
    labels = crisp(U)
    entropy = partition_entropy(U)

    print(f"method={payload['method']}")
    print(f"wp={_fmt(within_ss(X, U, G))}")
    print(f"crisp_ss={_fmt(crisp_within_ss(X, labels))}")
    print(f"mean_entropy={_fmt(float(np.mean(entropy)))}")
    print(f"sizes={','.join(str(int(c)) for c in labels.cardinalities())}")
    if args.truth:
        truth = load_labels_csv(args.truth)
        print(f"ri={_fmt(rand_index(labels, truth))}")
        print(f"ari={_fmt(adjusted_rand_index(labels, truth))}")
    print(f"labels={','.join(str(int(v)) for v in labels.labels)}")
    return EXIT_OK


def build_parser(settings: Settings | None = None) -> argparse.ArgumentParser:
    env = settings or Settings.from_env()
    parser = CliParser(prog="hsfc-cluster", description="Fuzzy clustering benchmark CLI")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    sub = parser.add_subparsers(dest="command", required=True)

    def add_common_args(target: argparse.ArgumentParser) -> None:
        target.add_argument("--seed", default=env.seed, type=int)
        target.add_argument("--log-level", default=env.log_level)

    def add_input_args(target: argparse.ArgumentParser, *, required: bool) -> None:
        target.add_argument("--input", required=required, default=None, help="data CSV")
        target.add_argument("--header", default=False, type=_bool_arg)
        target.add_argument("--delimiter", default=",")

    def add_fit_args(target: argparse.ArgumentParser) -> None:
        target.add_argument("--output", default=None)
        target.add_argument("--k", required=True, type=_k_list, help="K or K1,K2,...")
        target.add_argument("--restarts", default=env.restarts, type=int)
        target.add_argument("--workers", default=env.workers, type=int)
        target.add_argument("--m", default=env.fcm_m, type=float)
        target.add_argument("--tol", default=env.fcm_tol, type=float)
        target.add_argument("--max-iters", default=env.fcm_max_iters, type=int)
        target.add_argument("--eps", default=env.hsfc_eps, type=float)
        target.add_argument("--gamma0", default=env.hsfc_gamma0, type=float)
        target.add_argument("--tau0", default=env.hsfc_tau0, type=float)
        target.add_argument("--rho1", default=env.hsfc_rho1, type=float)
        target.add_argument("--rho2", default=env.hsfc_rho2, type=float)
        target.add_argument("--rho3", default=env.hsfc_rho3, type=float)
        target.add_argument("--outer-iters", default=env.hsfc_outer_iters, type=int)
        target.add_argument("--eps-fixed", default=env.hsfc_eps_fixed, type=_bool_arg)

    def add_table_args(target: argparse.ArgumentParser) -> None:
        target.add_argument("--p", default=env.datagen_p, type=int)
        target.add_argument("--separation", default=env.datagen_separation, type=float)

    p_fit = sub.add_parser("fit", help="best-of-R fit of one method")
    p_fit.add_argument("--method", required=True, choices=["fcm", "hsfc"])
    add_common_args(p_fit)
    add_input_args(p_fit, required=True)
    add_fit_args(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_generate = sub.add_parser("generate", help="write a simulated data table")
    add_common_args(p_generate)
    add_table_args(p_generate)
    p_generate.add_argument("--table", default=None, help="T1..T16")
    p_generate.add_argument("--n", default=None, type=int)
    p_generate.add_argument("--clusters", default=None, type=int)
    p_generate.add_argument("--equal-card", default=True, type=_bool_arg)
    p_generate.add_argument("--equal-sd", default=True, type=_bool_arg)
    p_generate.add_argument("--out", default=None)
    p_generate.add_argument("--labels-out", default=None)
    p_generate.set_defaults(func=cmd_generate)

    p_bench = sub.add_parser("bench", help="compare both methods over tables and K values")
    add_common_args(p_bench)
    add_input_args(p_bench, required=False)
    add_fit_args(p_bench)
    add_table_args(p_bench)
    p_bench.add_argument("--tables", default="", help="comma list of T1..T16")
    p_bench.add_argument("--truth", default=None, help="labels CSV for --input")
    p_bench.set_defaults(func=cmd_bench)

    p_eval = sub.add_parser("eval", help="score a fit result against data")
    add_common_args(p_eval)
    add_input_args(p_eval, required=True)
    p_eval.add_argument("--result", required=True)
    p_eval.add_argument("--truth", default=None)
    p_eval.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    raw = list(argv) if argv is not None else list(sys.argv[1:])
    parser = build_parser()
    args = parser.parse_args(raw)
    try:
        setup_logging(args.log_level)
    except ValueError:
        print(f"FAIL bad_flags unknown log level {args.log_level!r}")
        return EXIT_BAD_FLAGS
    try:
        return int(args.func(args))
    except (OSError, DataFormatError, DimensionMismatchError) as exc:
        logger.error("command_failed command=%s kind=data error=%s", args.command, exc)
        print(f"FAIL data_error {exc}")
        return EXIT_DATA
    except ClusteringError as exc:
        logger.error("command_failed command=%s kind=solver error=%s", args.command, exc)
        print(f"FAIL solver_error {exc}")
        return EXIT_SOLVER
    except ValueError as exc:
        logger.error("command_failed command=%s kind=flags error=%s", args.command, exc)
        print(f"FAIL bad_flags {exc}")
        return EXIT_BAD_FLAGS
    except Exception:
        logger.exception("command_failed command=%s kind=unexpected", args.command)
        print("FAIL unexpected_error")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
