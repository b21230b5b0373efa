"""Run configuration: flat ``key = value`` files with bracketed sections.

Unknown sections and keys are errors, as are keys that the chosen learner
does not use. Relative paths resolve against the config file's directory.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from synergy.errors import ConfigError
from synergy.learners import ElasticNetConfig, FcnnConfig, ForestConfig, GbmConfig, GnnConfig, TreeConfig

SECTIONS = {
    "data": {"synergy", "drug_table", "cell_table", "structures", "representation", "normalize", "norm_scale"},
    "model": {
        "kind", "seed", "max_depth", "min_samples_leaf", "n_estimators", "learning_rate", "feature_fraction",
        "bootstrap", "hidden", "dropout", "epochs", "batch_size", "embed_dim", "radius", "layers", "alpha",
        "mixing", "tol", "max_sweeps", "use_bond_order",
    },
    "cv": {"folds", "seed", "std"},
    "ensemble": {"targets", "step", "rel_tol"},
    "ensemble.members": None,  # free-form: member id = prediction file
    "embed": {"model"},
}

KIND_KEYS = {
    "enet": {"alpha", "mixing", "tol", "max_sweeps"},
    "tree": {"max_depth", "min_samples_leaf"},
    "rf": {"n_estimators", "max_depth", "min_samples_leaf", "feature_fraction", "bootstrap", "seed"},
    "gbm": {"n_estimators", "learning_rate", "max_depth", "min_samples_leaf"},
    "fcnn": {"hidden", "learning_rate", "dropout", "epochs", "batch_size", "seed"},
    "gnn": {
        "hidden", "learning_rate", "dropout", "epochs", "batch_size", "seed", "embed_dim", "radius", "layers",
        "use_bond_order",
    },
}


@dataclass
class RawConfig:
    path: Path
    values: dict = field(default_factory=dict)  # (section, key) -> value text
    lines: dict = field(default_factory=dict)  # (section, key) -> line number

    def get(self, section, key, default=None):
        return self.values.get((section, key), default)

    def section(self, name):
        return {k: v for (s, k), v in self.values.items() if s == name}

    def line_of(self, section, key):
        return self.lines.get((section, key))


def parse_config_text(text: str, path=Path("<string>")) -> RawConfig:
    raw = RawConfig(Path(path))
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError("malformed section header", line=lineno)
            section = stripped[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", line=lineno)
            continue
        if "=" not in stripped:
            raise ConfigError("expected `key = value`", line=lineno)
        key, value = (p.strip() for p in stripped.split("=", 1))
        if section is None:
            raise ConfigError("key outside of any section", key, lineno)
        allowed = SECTIONS[section]
        if allowed is not None and key not in allowed:
            raise ConfigError(f"unknown key in [{section}]", key, lineno)
        if (section, key) in raw.values:
            raise ConfigError("duplicate key", key, lineno)
        raw.values[(section, key)] = value
        raw.lines[(section, key)] = lineno
    return raw


def _convert(raw, section, key, kind):
    text = raw.get(section, key)
    line = raw.line_of(section, key)
    try:
        if kind is bool:
            low = text.lower()
            if low not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError
            return low in ("true", "yes", "1")
        if kind == "hidden":
            return tuple(int(v) for v in text.replace("{", "").replace("}", "").split(","))
        return kind(text)
    except ValueError:
        raise ConfigError(f"cannot parse {text!r}", key, line) from None


@dataclass(frozen=True)
class RunConfig:
    path: Path
    kind: str = None
    model_config: object = None
    representation: str = "drug"
    synergy: Path = None
    drug_table: Path = None
    cell_table: Path = None
    structures: Path = None
    normalize: bool = True
    norm_scale: float = 0.01
    folds: int = 5
    cv_seed: int = 0
    std: str = "sample"
    ensemble_targets: Path = None
    ensemble_step: float = 0.005
    ensemble_rel_tol: float = 1e-4
    ensemble_members: tuple = ()
    embed_model: Path = None
    text: str = ""


def _model_config(raw: RawConfig, seed_override=None):
    kind = raw.get("model", "kind")
    if kind is None:
        return None, None
    if kind not in KIND_KEYS:
        raise ConfigError(f"unknown learner kind {kind!r}", "kind", raw.line_of("model", "kind"))
    present = set(raw.section("model")) - {"kind"}
    for key in sorted(present - KIND_KEYS[kind]):
        raise ConfigError(f"not used by learner kind {kind!r}", key, raw.line_of("model", key))

    def val(key, conv, default):
        return _convert(raw, "model", key, conv) if key in present else default

    seed = seed_override if seed_override is not None else val("seed", int, 0)
    try:
        if kind == "enet":
            cfg = ElasticNetConfig(
                strength=val("alpha", float, 1.0), mixing=val("mixing", float, 0.5),
                tol=val("tol", float, 1e-8), max_sweeps=val("max_sweeps", int, 10000),
            )
        elif kind == "tree":
            cfg = TreeConfig(val("max_depth", int, 6), val("min_samples_leaf", int, 1))
        elif kind == "rf":
            cfg = ForestConfig(
                n_estimators=val("n_estimators", int, 1000),
                tree=TreeConfig(val("max_depth", int, 6), val("min_samples_leaf", int, 1)),
                feature_fraction=val("feature_fraction", float, 1.0 / 3.0),
                bootstrap=val("bootstrap", bool, True), seed=seed,
            )
        elif kind == "gbm":
            cfg = GbmConfig(
                n_estimators=val("n_estimators", int, 1000), learning_rate=val("learning_rate", float, 0.05),
                tree=TreeConfig(val("max_depth", int, 6), val("min_samples_leaf", int, 1)),
            )
        else:
            head = FcnnConfig(
                hidden=val("hidden", "hidden", (3000, 1500)), learning_rate=val("learning_rate", float, 1e-4),
                dropout=val("dropout", float, 0.0), epochs=val("epochs", int, 100),
                batch_size=val("batch_size", int, 64), seed=seed,
            )
            if kind == "fcnn":
                cfg = head
            else:
                cfg = GnnConfig(
                    embed_dim=val("embed_dim", int, 25), radius=val("radius", int, 2),
                    layers=val("layers", int, 3), head=head, epochs=head.epochs, seed=seed,
                    use_bond_order=val("use_bond_order", bool, True),
                )
    except ConfigError as exc:
        if exc.line is None and exc.field is not None:
            key = "alpha" if exc.field == "strength" else exc.field
            raise ConfigError(exc.reason, key, raw.line_of("model", key)) from None
        raise
    return kind, cfg


def load_config(path, check_paths=True, seed_override=None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return build_run_config(parse_config_text(text, path), text, check_paths, seed_override)


def build_run_config(raw: RawConfig, text="", check_paths=True, seed_override=None) -> RunConfig:
    base = raw.path.parent

    def path_of(section, key):
        value = raw.get(section, key)
        if value is None:
            return None
        p = Path(value)
        p = p if p.is_absolute() else base / p
        if check_paths and not p.exists():
            raise ConfigError(f"path does not exist: {p}", key, raw.line_of(section, key))
        return p

    kind, model_config = _model_config(raw, seed_override)
    members = []
    for member_id, value in raw.section("ensemble.members").items():
        p = Path(value)
        p = p if p.is_absolute() else base / p
        if check_paths and not p.exists():
            raise ConfigError(f"path does not exist: {p}", member_id, raw.line_of("ensemble.members", member_id))
        members.append((member_id, p))

    def num(section, key, conv, default, check=None, message=""):
        if raw.get(section, key) is None:
            return default
        value = _convert(raw, section, key, conv)
        if check is not None and not check(value):
            raise ConfigError(message, key, raw.line_of(section, key))
        return value

    std = raw.get("cv", "std", "sample")
    if std not in ("sample", "population"):
        raise ConfigError("must be `sample` or `population`", "std", raw.line_of("cv", "std"))
    cv_seed = seed_override if seed_override is not None else num("cv", "seed", int, 0)
    return RunConfig(
        path=raw.path,
        kind=kind,
        model_config=model_config,
        representation=raw.get("data", "representation", "drug"),
        synergy=path_of("data", "synergy"),
        drug_table=path_of("data", "drug_table"),
        cell_table=path_of("data", "cell_table"),
        structures=path_of("data", "structures"),
        normalize=num("data", "normalize", bool, True),
        norm_scale=num("data", "norm_scale", float, 0.01, lambda v: v > 0, "must be > 0"),
        folds=num("cv", "folds", int, 5, lambda v: v >= 2, "must be >= 2"),
        cv_seed=cv_seed,
        std=std,
        ensemble_targets=path_of("ensemble", "targets"),
        ensemble_step=num("ensemble", "step", float, 0.005, lambda v: 0 < v <= 1, "must lie in (0, 1]"),
        ensemble_rel_tol=num("ensemble", "rel_tol", float, 1e-4, lambda v: v >= 0, "must be >= 0"),
        ensemble_members=tuple(members),
        embed_model=path_of("embed", "model"),
        text=text,
    )
