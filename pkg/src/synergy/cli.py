"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 validation failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from synergy import __version__
from synergy.config import RunConfig, load_config
from synergy.dataio import (
    RepresentationTable,
    TanhNormalizer,
    apply_normalizer,
    assemble_pairs,
    fit_tanh_normalizer,
    load_representation_table,
    load_synergy_triples,
    write_representation_table,
)
from synergy.ensemble import (
    BaseLearnerEntry,
    greedy_forward_ensemble,
    read_predictions,
    write_ensemble,
    write_predictions,
)
from synergy.errors import ConfigError, SynergyError
from synergy.evaluation import Pipeline, cross_validate, make_folds
from synergy.learners import GNN, build_learner, load_model, save_model
from synergy.molgraph import load_structures, parse_structure
from synergy.report import render_svg, sample_rows

EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION = 0, 1, 2


class UsageError(Exception):
    """Validation failure detected outside the config parser (exit 2)."""


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(out_dir, command, cfg: RunConfig | None, inputs, outputs, extra=None):
    manifest = {
        "command": command,
        "toolkit_version": __version__,
        "config": cfg.text if cfg is not None else None,
        "inputs": {str(p): _sha256(p) for p in inputs if p is not None},
        "outputs": {Path(p).name: _sha256(p) for p in outputs},
    }
    if extra:
        manifest.update(extra)
    (Path(out_dir) / f"manifest_{command}.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _require(cfg: RunConfig, *names):
    for name in names:
        if getattr(cfg, name) is None:
            section = "model" if name == "kind" else ("data" if name != "embed_model" else "embed")
            raise ConfigError(f"required for this command (section [{section}])", name)


def _load_structures(path):
    graphs = {}
    for drug_id, text in load_structures(path).items():
        try:
            graphs[drug_id] = parse_structure(text)
        except (SynergyError, ValueError) as exc:
            raise SynergyError(f"cannot parse structure of drug {drug_id!r}: {exc}") from None
    return graphs


def _load_inputs(cfg: RunConfig):
    instances = load_synergy_triples(cfg.synergy)
    cells = load_representation_table(cfg.cell_table, "cell_line")
    return instances, cells


def _pipeline(cfg: RunConfig):
    if cfg.kind == "gnn":
        _require(cfg, "structures")
        return Pipeline("gnn", cfg.model_config, structures=_load_structures(cfg.structures))
    _require(cfg, "drug_table")
    table = load_representation_table(cfg.drug_table, cfg.representation)
    return Pipeline(cfg.kind, cfg.model_config, table, cfg.normalize, cfg.norm_scale)


def cmd_cv(cfg: RunConfig, out: Path, threads: int):
    _require(cfg, "kind", "synergy", "cell_table")
    instances, cells = _load_inputs(cfg)
    pipeline = _pipeline(cfg)
    plan = make_folds(instances, cfg.folds, cfg.cv_seed)
    report = cross_validate(pipeline, instances, cells, plan, n_jobs=threads, std_kind=cfg.std)
    out.mkdir(parents=True, exist_ok=True)
    files = [out / "report.csv", out / "predictions.csv", out / "targets.csv", out / "folds.csv"]
    report.write(files[0])
    write_predictions(report.predictions, files[1])
    write_predictions(report.targets, files[2], column="target")
    files[3].write_text(
        "row_id,fold\n" + "".join(f"{i},{f}\n" for i, f in enumerate(report.row_folds)), encoding="utf-8"
    )
    _write_manifest(out, "cv", cfg, [cfg.path, cfg.synergy, cfg.drug_table, cfg.cell_table, cfg.structures], files,
                    {"seeds": {"cv": cfg.cv_seed, "model": getattr(cfg.model_config, "seed", None)}})
    print(report.summary())
    return EXIT_OK


def _write_normalizer(norm: TanhNormalizer, path):
    cols = ",".join(f"f{j + 1}" for j in range(norm.dim))
    lines = [f"stat,{cols}", "mean," + ",".join(repr(float(v)) for v in norm.means),
             "std," + ",".join(repr(float(v)) for v in norm.stds), f"scale,{norm.scale!r}"]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_normalizer(path) -> TanhNormalizer:
    rows = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines()[1:]:
        cells = line.split(",")
        rows[cells[0]] = [float(v) for v in cells[1:]]
    return TanhNormalizer(np.array(rows["mean"]), np.array(rows["std"]), rows["scale"][0])


def cmd_train(cfg: RunConfig, out: Path, threads: int):
    _require(cfg, "kind", "synergy", "cell_table")
    instances, cells = _load_inputs(cfg)
    pipeline = _pipeline(cfg)
    out.mkdir(parents=True, exist_ok=True)
    outputs = [out / "model.bin"]
    if cfg.kind == "gnn":
        pairs = [(pipeline.structures[i.drug_a], pipeline.structures[i.drug_b]) for i in instances]
        pairs += [(b, a) for a, b in pairs]
        c = cells.rows(i.cell_line for i in instances)
        y = np.array([i.score for i in instances] * 2)
        model = GNN(cfg.model_config).fit(pairs, np.vstack([c, c]), y)
    else:
        table = pipeline.drug_table
        if cfg.normalize:
            norm = fit_tanh_normalizer(table, {d for i in instances for d in (i.drug_a, i.drug_b)}, cfg.norm_scale)
            table = apply_normalizer(norm, table)
            _write_normalizer(norm, out / "normalizer.csv")
            outputs.append(out / "normalizer.csv")
        ds = assemble_pairs(instances, table, cells)
        model = build_learner(cfg.kind, cfg.model_config, n_jobs=threads).fit(ds.features, ds.targets)
    save_model(model, outputs[0])
    _write_manifest(out, "train", cfg, [cfg.path, cfg.synergy, cfg.drug_table, cfg.cell_table, cfg.structures],
                    outputs)
    return EXIT_OK


def cmd_predict(cfg: RunConfig, out: Path, model_path):
    _require(cfg, "synergy", "cell_table")
    if model_path is None:
        raise UsageError("predict requires --model")
    model = load_model(model_path)
    instances, cells = _load_inputs(cfg)
    if model.kind == "gnn":
        _require(cfg, "structures")
        graphs = _load_structures(cfg.structures)
        pairs = [(graphs[i.drug_a], graphs[i.drug_b]) for i in instances]
        pairs += [(b, a) for a, b in pairs]
        c = cells.rows(i.cell_line for i in instances)
        pred = model.predict(pairs, np.vstack([c, c]))
    else:
        _require(cfg, "drug_table")
        table = load_representation_table(cfg.drug_table, cfg.representation)
        norm_path = Path(model_path).with_name("normalizer.csv")
        if cfg.normalize and norm_path.exists():
            table = apply_normalizer(_read_normalizer(norm_path), table)
        pred = model.predict(assemble_pairs(instances, table, cells).features)
    out.mkdir(parents=True, exist_ok=True)
    write_predictions(pred, out / "predictions.csv")
    _write_manifest(out, "predict", cfg, [cfg.path, model_path, cfg.synergy, cfg.drug_table, cfg.cell_table],
                    [out / "predictions.csv"])
    return EXIT_OK


def cmd_ensemble(cfg: RunConfig, out: Path):
    if not cfg.ensemble_members:
        raise ConfigError("at least one member is required", "ensemble.members")
    if cfg.ensemble_targets is None:
        raise ConfigError("required for ensemble", "targets")
    y = read_predictions(cfg.ensemble_targets)
    entries = []
    for member_id, path in cfg.ensemble_members:
        pred = read_predictions(path)
        if len(pred) != len(y):
            raise SynergyError(f"member {member_id!r} has {len(pred)} rows but targets have {len(y)}")
        entries.append(BaseLearnerEntry(member_id, pred))
    model = greedy_forward_ensemble(entries, y, cfg.ensemble_step, cfg.ensemble_rel_tol)
    out.mkdir(parents=True, exist_ok=True)
    write_ensemble(model, out / "ensemble.txt")
    _write_manifest(out, "ensemble", cfg, [cfg.path, cfg.ensemble_targets, *(p for _, p in cfg.ensemble_members)],
                    [out / "ensemble.txt"])
    for m, w in zip(model.member_ids, model.weights):
        print(f"{m} {w:.6g}")
    print(f"validation MSE {model.val_mse:.6g}")
    return EXIT_OK


def cmd_embed(cfg: RunConfig, out: Path, model_path):
    model_path = model_path or cfg.embed_model
    if model_path is None:
        raise UsageError("embed requires --model or [embed] model")
    _require(cfg, "structures")
    model = load_model(model_path)
    if model.kind != "gnn":
        raise SynergyError(f"model kind {model.kind!r} cannot produce graph embeddings")
    graphs = _load_structures(cfg.structures)
    ids = sorted(graphs)
    table = RepresentationTable("GNNR", tuple(ids), np.array([model.embed(graphs[i]) for i in ids]))
    out.mkdir(parents=True, exist_ok=True)
    write_representation_table(table, out / "gnnr.csv")
    _write_manifest(out, "embed", cfg, [cfg.path, model_path, cfg.structures], [out / "gnnr.csv"])
    return EXIT_OK


def cmd_report(args, out: Path):
    if args.predictions is None or args.targets is None:
        raise UsageError("report requires --predictions and --targets")
    pred = read_predictions(args.predictions)
    y = read_predictions(args.targets)
    if len(pred) != len(y):
        raise SynergyError(f"{len(pred)} predictions vs {len(y)} targets")
    if args.n < 1:
        raise UsageError("empty plot: --n must be >= 1")
    if args.n > len(y):
        raise UsageError(f"--n {args.n} exceeds the {len(y)} available rows")
    rows = sample_rows(len(y), args.n, args.seed if args.seed is not None else 0)
    title = args.title or f"Targets vs estimates ({args.n} samples)"
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.svg"
    path.write_text(render_svg(y[rows], pred[rows], title), encoding="utf-8")
    _write_manifest(out, "report", None, [args.predictions, args.targets], [path],
                    {"seed": args.seed if args.seed is not None else 0, "n": args.n})
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="run configuration file")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--seed", type=int, default=None, help="override model and CV seeds")
    common.add_argument("--threads", type=int, default=1, help="worker threads across folds/trees")

    parser = argparse.ArgumentParser(prog="synergy", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("cv", parents=[common], help="cross-validate one representation-learner pipeline")
    sub.add_parser("train", parents=[common], help="fit a model on all instances")
    p = sub.add_parser("predict", parents=[common], help="predict with a saved model")
    p.add_argument("--model", type=Path)
    sub.add_parser("ensemble", parents=[common], help="greedy weighted ensemble of prediction files")
    p = sub.add_parser("embed", parents=[common], help="export GNNR vectors from a trained GNN")
    p.add_argument("--model", type=Path)
    p = sub.add_parser("report", parents=[common], help="SVG of targets vs estimates")
    p.add_argument("--predictions", type=Path)
    p.add_argument("--targets", type=Path)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--title", default=None)
    sub.add_parser("validate", parents=[common], help="check a configuration file")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        if args.command == "report":
            return cmd_report(args, args.out)
        if args.config is None:
            raise UsageError(f"{args.command} requires --config")
        cfg = load_config(args.config, seed_override=args.seed)
        if args.command == "validate":
            print(f"{args.config}: ok")
            return EXIT_OK
        if args.command == "cv":
            return cmd_cv(cfg, args.out, args.threads)
        if args.command == "train":
            return cmd_train(cfg, args.out, args.threads)
        if args.command == "predict":
            return cmd_predict(cfg, args.out, args.model)
        if args.command == "ensemble":
            return cmd_ensemble(cfg, args.out)
        if args.command == "embed":
            return cmd_embed(cfg, args.out, args.model)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SynergyError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
