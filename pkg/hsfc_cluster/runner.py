from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import pandas as pd

from .dataio import FLOAT_FORMAT, SCHEMA_VERSION, write_result_json
from .evaluation import adjusted_rand_index, crisp, crisp_within_ss, within_ss
from .fcm import FcmConfig, fcm_fit, fcm_objective
from .hsfc import HsfcConfig, hsfc_fit
from .models import ClusteringResult, DataMatrix, HardPartition, MethodTag

logger = logging.getLogger(__name__)

BENCH_COLUMNS = (
    "table",
    "K",
    "SS_HSFC",
    "SS_FCM",
    "ARI",
    "WP_HSFC",
    "WP_FCM",
    "ARI_HSFC_TRUTH",
    "ARI_FCM_TRUTH",
)

MethodConfig = FcmConfig | HsfcConfig


def restart_seeds(seed: int, restarts: int) -> list[int]:
    if int(restarts) < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    return [int(seed) + r for r in range(int(restarts))]


def method_of(cfg: MethodConfig) -> MethodTag:
    return MethodTag.FCM if isinstance(cfg, FcmConfig) else MethodTag.HSFC


def _fit_once(X: DataMatrix, cfg: MethodConfig) -> ClusteringResult:
    if isinstance(cfg, FcmConfig):
        return fcm_fit(X, cfg)
    return hsfc_fit(X, cfg)


def run_restarts(
    fit_one: Callable[[int], ClusteringResult], seeds: Sequence[int], workers: int = 1
) -> list[ClusteringResult]:
    """Run one fit per seed; results come back in seed order for any worker count."""
    if workers <= 1 or len(seeds) <= 1:
        return [fit_one(seed) for seed in seeds]
    with ThreadPoolExecutor(max_workers=min(int(workers), len(seeds))) as pool:
        return list(pool.map(fit_one, seeds))


@dataclass(frozen=True)
class RunRecord:
    method_tag: MethodTag
    config: dict[str, Any]
    restart_seeds: tuple[int, ...]
    restart_objectives: tuple[float, ...]
    best_objective_wp: float
    wall_ms: int
    best: ClusteringResult = field(repr=False)
    result_path: Path | None = None

    def __post_init__(self) -> None:
        if len(self.restart_seeds) != len(self.restart_objectives):
            raise ValueError("RunRecord needs one objective per restart seed")
        if self.best_objective_wp != min(self.restart_objectives):
            raise ValueError("RunRecord best objective must be the minimum over restarts")

    @property
    def best_seed(self) -> int:
        return self.best.seed

    @property
    def line_search_failures(self) -> int:
        return int(self.best.diagnostics.get("line_search_failures", 0))

    def with_path(self, path: Path) -> "RunRecord":
        return replace(self, result_path=path)


def fit_restarts(
    X: DataMatrix, cfg: MethodConfig, restarts: int, *, workers: int = 1
) -> RunRecord:
    """Best of ``restarts`` seeded fits by W(P); restart r uses seed ``cfg.seed + r``."""
    seeds = restart_seeds(cfg.seed, restarts)
    tag = method_of(cfg)
    started = time.monotonic()
    results = run_restarts(lambda seed: _fit_once(X, replace(cfg, seed=seed)), seeds, workers)
    wall_ms = int((time.monotonic() - started) * 1000)

    objectives = [within_ss(X, res.memberships, res.centroids) for res in results]
    best_index = int(np.argmin(objectives))
    flagged = sum(int(res.diagnostics.get("line_search_failures", 0) > 0) for res in results)
    logger.info(
        "restart_batch_done method=%s K=%s restarts=%s workers=%s best_seed=%s best_wp=%.12g "
        "flagged_fits=%s wall_ms=%s",
        tag.value,
        cfg.K,
        len(seeds),
        workers,
        seeds[best_index],
        objectives[best_index],
        flagged,
        wall_ms,
    )
    snapshot = asdict(cfg)
    snapshot.pop("seed")
    snapshot.update({"seed": int(cfg.seed), "restarts": len(seeds)})
    return RunRecord(
        method_tag=tag,
        config=snapshot,
        restart_seeds=tuple(seeds),
        restart_objectives=tuple(float(v) for v in objectives),
        best_objective_wp=float(objectives[best_index]),
        wall_ms=wall_ms,
        best=results[best_index],
    )


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        return number if math.isfinite(number) else None
    if isinstance(value, MethodTag):
        return value.value
    return value


def result_payload(record: RunRecord, X: DataMatrix) -> dict[str, Any]:
    best = record.best
    labels = crisp(best.memberships)
    payload: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "method": record.method_tag.value,
        "config": record.config,
        "best_objective_wp": record.best_objective_wp,
        "best_seed": record.best_seed,
        "centroids": best.centroids.g,
        "memberships": best.memberships.mu,
        "trace": best.objective_trace,
        "restart_seeds": record.restart_seeds,
        "restart_objectives": record.restart_objectives,
        "wall_ms": record.wall_ms,
        "crisp_ss": crisp_within_ss(X, labels),
        "labels": labels.labels,
        "iterations": best.iterations,
        "diagnostics": best.diagnostics,
    }
    if record.method_tag is MethodTag.FCM:
        payload["eq1_objective"] = fcm_objective(
            X, best.memberships, best.centroids, float(record.config["m"])
        )
    return _jsonable(payload)


def write_run(record: RunRecord, X: DataMatrix, path: str | Path) -> RunRecord:
    out = write_result_json(path, result_payload(record, X))
    logger.info("result_written method=%s path=%s", record.method_tag.value, out)
    return record.with_path(out)


@dataclass(frozen=True)
class BenchRow:
    table: str
    K: int
    ss_hsfc: float
    ss_fcm: float
    ari: float
    wp_hsfc: float
    wp_fcm: float
    ari_hsfc_truth: float | None = None
    ari_fcm_truth: float | None = None

    def as_dict(self) -> dict[str, Any]:
        values = (
            self.table,
            self.K,
            self.ss_hsfc,
            self.ss_fcm,
            self.ari,
            self.wp_hsfc,
            self.wp_fcm,
            self.ari_hsfc_truth,
            self.ari_fcm_truth,
        )
        return dict(zip(BENCH_COLUMNS, values))


def bench_row(
    table: str,
    X: DataMatrix,
    K: int,
    fcm_cfg: FcmConfig,
    hsfc_cfg: HsfcConfig,
    restarts: int,
    *,
    truth: HardPartition | None = None,
    workers: int = 1,
) -> BenchRow:
    hsfc_run = fit_restarts(X, replace(hsfc_cfg, K=K), restarts, workers=workers)
    fcm_run = fit_restarts(X, replace(fcm_cfg, K=K), restarts, workers=workers)
    hsfc_labels = crisp(hsfc_run.best.memberships)
    fcm_labels = crisp(fcm_run.best.memberships)
    row = BenchRow(
        table=table,
        K=int(K),
        ss_hsfc=crisp_within_ss(X, hsfc_labels),
        ss_fcm=crisp_within_ss(X, fcm_labels),
        ari=adjusted_rand_index(hsfc_labels, fcm_labels),
        wp_hsfc=hsfc_run.best_objective_wp,
        wp_fcm=fcm_run.best_objective_wp,
        ari_hsfc_truth=adjusted_rand_index(hsfc_labels, truth) if truth is not None else None,
        ari_fcm_truth=adjusted_rand_index(fcm_labels, truth) if truth is not None else None,
    )
    logger.info(
        "bench_row_done table=%s K=%s ss_hsfc=%.6f ss_fcm=%.6f ari=%.4f",
        table,
        K,
        row.ss_hsfc,
        row.ss_fcm,
        row.ari,
    )
    return row


def bench_frame(rows: Sequence[BenchRow]) -> pd.DataFrame:
    return pd.DataFrame([row.as_dict() for row in rows], columns=list(BENCH_COLUMNS))


def write_bench(
    rows: Sequence[BenchRow], csv_path: str | Path, json_path: str | Path, meta: dict[str, Any]
) -> tuple[Path, Path]:
    csv_out = Path(csv_path)
    csv_out.parent.mkdir(parents=True, exist_ok=True)
    bench_frame(rows).to_csv(csv_out, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    payload = {
        "schema_version": SCHEMA_VERSION,
        **meta,
        "columns": list(BENCH_COLUMNS),
        "rows": [row.as_dict() for row in rows],
    }
    json_out = write_result_json(json_path, _jsonable(payload))
    return csv_out, json_out
