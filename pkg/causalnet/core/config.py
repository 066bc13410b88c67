"""Pipeline configuration: defaults < TOML file < environment < flags."""

from __future__ import annotations

import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from dotenv import load_dotenv

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib  # type: ignore[no-redef]

from .corpus import DEFAULT_EPOCH, parse_epoch
from .cug import DEFAULT_REPLICATES, DEFAULT_TESTS, Conditioning
from .errors import ConfigError
from .features import CUM_WINDOWS, ModelFormula
from .graph import STRATIFIERS
from .stats import STATISTICS

load_dotenv()

logger = logging.getLogger(__name__)

FORMATS = ("json", "md", "csv")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")
DEFAULT_OUTPUT_DIR = "causalnet-out"

# subcommands that read the corpus file
_NEEDS_CORPUS = {"extract", "network", "regress", "report", "all"}
_STOCHASTIC = {"cug", "synth", "all"}

# TOML section -> keys it may hold, flattened onto the flag names
_SECTIONS = {
    "cug": {"replicates": "replicates", "seed": "seed", "workers": "workers", "tests": "cug_tests"},
    "pca": {
        "components": "components",
        "centered": "centered_scores",
        "scale_loadings": "scale_loadings",
        "stratify": "stratify",
    },
    "regression": {
        "formula": "formula",
        "originals_only": "originals_only",
        "cum_window": "cum_window",
        "cause_reference": "cause_reference",
        "effect_reference": "effect_reference",
    },
}
_TOP_LEVEL = {
    "corpus",
    "lexicon",
    "out",
    "seed",
    "epoch",
    "replicates",
    "workers",
    "stratify",
    "components",
    "originals_only",
    "cum_window",
    "format",
    "log_level",
    "sample_uncoded",
    "messages",
}
_ENV = {
    "CAUSALNET_OUTPUT_DIR": "out",
    "CAUSALNET_SEED": "seed",
    "CAUSALNET_LOG_LEVEL": "log_level",
    "CAUSALNET_WORKERS": "workers",
}


@dataclass
class CugConfig:
    replicates: int = DEFAULT_REPLICATES
    seed: Optional[int] = None
    tests: Tuple[Tuple[str, Conditioning], ...] = DEFAULT_TESTS
    workers: int = 1

    @property
    def statistics(self) -> List[str]:
        return [name for name, _ in self.tests]

    @property
    def conditionings(self) -> List[Conditioning]:
        return [cond for _, cond in self.tests]


@dataclass
class PcaConfig:
    components: int = 2
    stratify: str = "role"
    centered_scores: bool = False
    scale_loadings: bool = False


@dataclass
class RegressionConfig:
    formula: str = "all"
    cause_reference: Optional[str] = None
    effect_reference: Optional[str] = None
    cum_window: str = "before"
    originals_only: bool = True


@dataclass
class PipelineConfig:
    corpus_path: Optional[Path] = None
    lexicon_path: Optional[Path] = None
    epoch: str = DEFAULT_EPOCH
    stratifiers: Tuple[str, ...] = STRATIFIERS
    output_dir: Path = Path(DEFAULT_OUTPUT_DIR)
    log_level: str = "INFO"
    fmt: str = "json"
    sample_uncoded: int = 0
    messages: int = 3000
    cug: CugConfig = field(default_factory=CugConfig)
    pca: PcaConfig = field(default_factory=PcaConfig)
    regression: RegressionConfig = field(default_factory=RegressionConfig)

    @property
    def seed(self) -> Optional[int]:
        return self.cug.seed

    def validate(self, subcommand: str) -> "PipelineConfig":
        """Reject unusable settings before any stage does work."""
        if subcommand in _NEEDS_CORPUS:
            if self.corpus_path is None:
                raise ConfigError(f"`{subcommand}` needs --corpus")
            if not self.corpus_path.is_file():
                raise ConfigError(f"corpus file not found: {self.corpus_path}")
        if self.lexicon_path is not None and not self.lexicon_path.is_file():
            raise ConfigError(f"lexicon file not found: {self.lexicon_path}")
        if subcommand in _STOCHASTIC and self.cug.seed is None:
            raise ConfigError(f"`{subcommand}` is stochastic and needs --seed")
        if subcommand == "code" and self.sample_uncoded and self.cug.seed is None:
            raise ConfigError("--sample-uncoded needs --seed")
        try:
            parse_epoch(self.epoch)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        if self.cug.replicates < 1:
            raise ConfigError("--replicates must be at least 1")
        if self.cug.workers < 1:
            raise ConfigError("--workers must be at least 1")
        if self.pca.components < 1:
            raise ConfigError("--components must be at least 1")
        if self.pca.stratify not in STRATIFIERS:
            raise ConfigError(f"--stratify must be one of {', '.join(STRATIFIERS)}")
        if self.pca.stratify == "total" and subcommand in {"pca", "all"}:
            raise ConfigError("network PCA needs several graphs; use --stratify month or role")
        if self.regression.cum_window not in CUM_WINDOWS:
            raise ConfigError(f"--cum-window must be one of {', '.join(CUM_WINDOWS)}")
        ModelFormula.parse(self.regression.formula)
        if self.fmt not in FORMATS:
            raise ConfigError(f"--format must be one of {', '.join(FORMATS)}")
        if self.log_level.upper() not in LOG_LEVELS:
            raise ConfigError(f"--log-level must be one of {', '.join(LOG_LEVELS)}")
        if self.sample_uncoded < 0:
            raise ConfigError("--sample-uncoded must be nonnegative")
        if self.messages < 1:
            raise ConfigError("--messages must be at least 1")
        return self

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["corpus_path"] = str(self.corpus_path) if self.corpus_path else None
        out["lexicon_path"] = str(self.lexicon_path) if self.lexicon_path else None
        out["output_dir"] = str(self.output_dir)
        out["stratifiers"] = list(self.stratifiers)
        out["cug"]["tests"] = [[name, cond.value] for name, cond in self.cug.tests]
        return out


def _read_toml(path: Path) -> Dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e
    flat: Dict[str, Any] = {}
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"{path}: [{key}] must be a table")
            for sub, sub_value in value.items():
                if sub not in _SECTIONS[key]:
                    raise ConfigError(f"{path}: unknown key {key}.{sub}")
                flat[_SECTIONS[key][sub]] = sub_value
        elif key.replace("-", "_") in _TOP_LEVEL:
            flat[key.replace("-", "_")] = value
        else:
            raise ConfigError(f"{path}: unknown key {key}")
    return flat


def _read_env() -> Dict[str, Any]:
    return {name: os.environ[var] for var, name in _ENV.items() if os.getenv(var)}


def _as_int(name: str, raw: Any) -> int:
    if isinstance(raw, bool):
        raise ConfigError(f"{name} must be an integer, got {raw!r}")
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be an integer, got {raw!r}")


def _as_bool(name: str, raw: Any) -> bool:
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip().lower()
    if text in {"1", "true", "yes"}:
        return True
    if text in {"0", "false", "no"}:
        return False
    raise ConfigError(f"{name} must be a boolean, got {raw!r}")


def _as_tests(raw: Any) -> Tuple[Tuple[str, Conditioning], ...]:
    """``[["transitivity", "DyadCensus"], ...]`` or ``["transitivity|DyadCensus", ...]``."""
    tests = []
    for item in raw:
        name, cond = item.split("|", 1) if isinstance(item, str) else item
        if name not in STATISTICS:
            raise ConfigError(f"unknown CUG statistic {name!r}")
        try:
            tests.append((name, Conditioning(cond)))
        except ValueError:
            choices = ", ".join(c.value for c in Conditioning)
            raise ConfigError(f"unknown conditioning {cond!r}; choose from {choices}")
    if not tests:
        raise ConfigError("cug tests must not be empty")
    return tuple(tests)


def load_config(
    flags: Optional[Mapping[str, Any]] = None, config_path: Optional[str | Path] = None
) -> PipelineConfig:
    """Merge every configuration source; ``None`` flag values mean "not given"."""
    merged: Dict[str, Any] = {}
    if config_path is not None:
        merged.update(_read_toml(Path(config_path)))
    merged.update(_read_env())
    merged.update({k: v for k, v in (flags or {}).items() if v is not None})

    cfg = PipelineConfig()
    if "corpus" in merged:
        cfg.corpus_path = Path(merged["corpus"])
    if "lexicon" in merged:
        cfg.lexicon_path = Path(merged["lexicon"])
    if "out" in merged:
        cfg.output_dir = Path(merged["out"])
    if "epoch" in merged:
        cfg.epoch = str(merged["epoch"])
    if "log_level" in merged:
        cfg.log_level = str(merged["log_level"]).upper()
    if "format" in merged:
        cfg.fmt = str(merged["format"])
    if "sample_uncoded" in merged:
        cfg.sample_uncoded = _as_int("sample_uncoded", merged["sample_uncoded"])
    if "messages" in merged:
        cfg.messages = _as_int("messages", merged["messages"])

    if "seed" in merged:
        cfg.cug.seed = _as_int("seed", merged["seed"])
    if "replicates" in merged:
        cfg.cug.replicates = _as_int("replicates", merged["replicates"])
    if "workers" in merged:
        cfg.cug.workers = _as_int("workers", merged["workers"])
    if "cug_tests" in merged:
        cfg.cug.tests = _as_tests(merged["cug_tests"])

    if "components" in merged:
        cfg.pca.components = _as_int("components", merged["components"])
    if "stratify" in merged:
        cfg.pca.stratify = str(merged["stratify"])
    if "centered_scores" in merged:
        cfg.pca.centered_scores = _as_bool("centered", merged["centered_scores"])
    if "scale_loadings" in merged:
        cfg.pca.scale_loadings = _as_bool("scale_loadings", merged["scale_loadings"])

    reg = cfg.regression
    if "formula" in merged:
        reg.formula = str(merged["formula"])
    if "cum_window" in merged:
        reg.cum_window = str(merged["cum_window"])
    if "originals_only" in merged:
        reg.originals_only = _as_bool("originals_only", merged["originals_only"])
    if "cause_reference" in merged:
        reg.cause_reference = str(merged["cause_reference"])
    if "effect_reference" in merged:
        reg.effect_reference = str(merged["effect_reference"])
    logger.debug("configuration: %s", cfg)
    return cfg
