"""Experiment configuration: parsing, validation and content digest.

A config is a JSON object with sections ``kernel``, ``decomposition``,
``run`` and ``analysis``. Everything is validated (and the kernel built)
before any sampling starts. The digest is the SHA-256 of the canonical
JSON of the normalized config, so defaults and overrides are part of it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .cftp import DEFAULT_HORIZON
from .decomposition import DISCRETE, HYBRID
from .errors import InvalidParams
from .kernels import BKKernel, Kernel, kernel_from_dict

SCHEMA_VERSION = 1
FUNCTIONAL_PRESETS = ("mean", "indicator")
MAX_SEED = 2**64 - 1

_SECTIONS = {"kernel", "decomposition", "run", "analysis", "schema"}


def _int(section: str, name: str, value: Any, lo: int, hi: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidParams(f"{section}.{name} must be an integer")
    if value < lo or (hi is not None and value > hi):
        bound = f">= {lo}" if hi is None else f"in [{lo}, {hi}]"
        raise InvalidParams(f"{section}.{name} must be {bound}")
    return value


def _keys(section: str, d: Any, allowed: set[str]) -> dict:
    if not isinstance(d, dict):
        raise InvalidParams(f"{section} must be an object")
    extra = set(d) - allowed
    if extra:
        raise InvalidParams(f"unknown keys in {section}: {sorted(extra)}")
    return d


@dataclass(frozen=True)
class DecompositionConfig:
    mode: str | None = None
    K: int = 8
    J: int | None = None


@dataclass(frozen=True)
class RunConfig:
    n: int = 100
    replicas: int = 1000
    horizon_limit: int = DEFAULT_HORIZON
    seed: int = 0


@dataclass(frozen=True)
class AnalysisConfig:
    eps: tuple[float, ...] = (0.05,)
    functional: str = "mean"
    block: int = 4
    alpha: float = 0.5


@dataclass(frozen=True)
class ExperimentConfig:
    kernel: dict
    decomposition: DecompositionConfig = field(default_factory=DecompositionConfig)
    run: RunConfig = field(default_factory=RunConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)

    @classmethod
    def from_dict(cls, d: Any) -> "ExperimentConfig":
        d = _keys("config", d, _SECTIONS)
        if d.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise InvalidParams(f"unsupported config schema {d.get('schema')!r}")
        if "kernel" not in d:
            raise InvalidParams("config needs a kernel section")

        dd = _keys("decomposition", d.get("decomposition", {}), {"mode", "K", "J"})
        mode = dd.get("mode")
        if mode not in (None, DISCRETE, HYBRID):
            raise InvalidParams(f"decomposition.mode must be {DISCRETE!r} or {HYBRID!r}")
        J = dd.get("J")
        dec = DecompositionConfig(
            mode, _int("decomposition", "K", dd.get("K", 8), 0, 16),
            None if J is None else _int("decomposition", "J", J, 1),
        )

        rd = _keys("run", d.get("run", {}), {"n", "replicas", "horizon_limit", "seed"})
        run = RunConfig(
            _int("run", "n", rd.get("n", 100), 1),
            _int("run", "replicas", rd.get("replicas", 1000), 1),
            _int("run", "horizon_limit", rd.get("horizon_limit", DEFAULT_HORIZON), 1),
            _int("run", "seed", rd.get("seed", 0), 0, MAX_SEED),
        )

        ad = _keys("analysis", d.get("analysis", {}), {"eps", "functional", "block", "alpha"})
        eps = ad.get("eps", [0.05])
        if isinstance(eps, (int, float)) and not isinstance(eps, bool):
            eps = [eps]
        if (not isinstance(eps, list) or not eps
                or any(isinstance(e, bool) or not isinstance(e, (int, float)) or e <= 0 for e in eps)):
            raise InvalidParams("analysis.eps must be a nonempty list of positive numbers")
        functional = ad.get("functional", "mean")
        if functional not in FUNCTIONAL_PRESETS:
            raise InvalidParams(f"analysis.functional must be one of {FUNCTIONAL_PRESETS}")
        alpha = ad.get("alpha", 0.5)
        if isinstance(alpha, bool) or not isinstance(alpha, (int, float)) or alpha <= 0:
            raise InvalidParams("analysis.alpha must be a positive number")
        analysis = AnalysisConfig(tuple(float(e) for e in eps), functional,
                                  _int("analysis", "block", ad.get("block", 4), 0, 12), float(alpha))

        cfg = cls(dict(d["kernel"]) if isinstance(d["kernel"], dict) else d["kernel"], dec, run, analysis)
        cfg.build_kernel()
        if dec.mode == DISCRETE and cfg.kernel.get("family") != "bk":
            raise InvalidParams("discrete decomposition is only available for the bk family")
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InvalidParams(f"cannot read config {path}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidParams(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def with_overrides(self, seed: int | None = None, horizon: int | None = None) -> "ExperimentConfig":
        run = self.run
        if seed is not None:
            run = replace(run, seed=_int("run", "seed", seed, 0, MAX_SEED))
        if horizon is not None:
            run = replace(run, horizon_limit=_int("run", "horizon_limit", horizon, 1))
        return replace(self, run=run)

    def build_kernel(self) -> Kernel:
        k = kernel_from_dict(self.kernel)
        if self.decomposition.J is not None and isinstance(k, BKKernel):
            k = BKKernel(k.eps, k.r, k.m, self.decomposition.J)
        return k

    def normalized(self) -> dict:
        """Canonical dict form: the kernel as rebuilt, all defaults explicit."""
        return {
            "schema": SCHEMA_VERSION,
            "kernel": _jsonable(self.build_kernel().to_dict()),
            "decomposition": {"mode": self.decomposition.mode, "K": self.decomposition.K,
                              "J": self.decomposition.J},
            "run": {"n": self.run.n, "replicas": self.run.replicas,
                    "horizon_limit": self.run.horizon_limit, "seed": self.run.seed},
            "analysis": {"eps": list(self.analysis.eps), "functional": self.analysis.functional,
                         "block": self.analysis.block, "alpha": self.analysis.alpha},
        }

    def digest(self) -> str:
        return config_digest(self.normalized())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _jsonable(obj.tolist())
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"), allow_nan=True)


def config_digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()
