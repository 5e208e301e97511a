from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

TRUE_TEXT = frozenset({"1", "true", "yes", "y", "on"})
FALSE_TEXT = frozenset({"0", "false", "no", "n", "off"})


def _load_dotenv(env_path: Path | None = None) -> None:
    env_path = env_path or Path(__file__).resolve().parents[1] / ".env"
    if not env_path.exists():
        return
    for line in env_path.read_text(encoding="utf-8").splitlines():
        text = line.strip()
        if not text or text.startswith("#") or "=" not in text:
            continue
        key, value = text.split("=", 1)
        key = key.strip()
        value = value.strip().strip("'\"")
        os.environ.setdefault(key, value)


def parse_bool(value: str) -> bool:
    normalized = str(value).strip().lower()
    if normalized in TRUE_TEXT:
        return True
    if normalized in FALSE_TEXT:
        return False
    raise ValueError(f"invalid boolean: {value!r}")


def _get_env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or value.strip() == "":
        return default
    return int(value)


def _get_env_float(name: str, default: float) -> float:
    value = os.getenv(name)
    if value is None or value.strip() == "":
        return default
    return float(value)


def _get_env_bool(name: str, default: bool) -> bool:
    value = os.getenv(name)
    if value is None or value.strip() == "":
        return default
    try:
        return parse_bool(value)
    except ValueError:
        return default


def _get_env_text(name: str, default: str) -> str:
    value = os.getenv(name)
    if value is None or value.strip() == "":
        return default
    return value.strip()


@dataclass(frozen=True)
class Settings:
    log_level: str
    restarts: int
    workers: int
    seed: int
    fcm_m: float
    fcm_tol: float
    fcm_max_iters: int
    hsfc_eps: float
    hsfc_gamma0: float
    hsfc_tau0: float
    hsfc_rho1: float
    hsfc_rho2: float
    hsfc_rho3: float
    hsfc_outer_iters: int
    hsfc_eps_fixed: bool
    datagen_p: int
    datagen_separation: float

    @classmethod
    def from_env(cls) -> "Settings":
        _load_dotenv()
        return cls(
            log_level=_get_env_text("LOG_LEVEL", "INFO").upper(),
            restarts=max(1, _get_env_int("HSFC_RESTARTS", 50)),
            workers=max(1, _get_env_int("HSFC_WORKERS", 1)),
            seed=_get_env_int("HSFC_SEED", 0),
            fcm_m=_get_env_float("FCM_M", 2.0),
            fcm_tol=_get_env_float("FCM_TOL", 1e-9),
            fcm_max_iters=_get_env_int("FCM_MAX_ITERS", 300),
            hsfc_eps=_get_env_float("HSFC_EPS", 0.01),
            hsfc_gamma0=_get_env_float("HSFC_GAMMA0", 0.001),
            hsfc_tau0=_get_env_float("HSFC_TAU0", 0.001),
            hsfc_rho1=_get_env_float("HSFC_RHO1", 0.25),
            hsfc_rho2=_get_env_float("HSFC_RHO2", 0.25),
            hsfc_rho3=_get_env_float("HSFC_RHO3", 0.25),
            hsfc_outer_iters=_get_env_int("HSFC_OUTER_ITERS", 10),
            hsfc_eps_fixed=_get_env_bool("HSFC_EPS_FIXED", True),
            datagen_p=_get_env_int("DATAGEN_P", 2),
            datagen_separation=_get_env_float("DATAGEN_SEPARATION", 10.0),
        )
