"""Command-line driver: ``gen``, ``extract``, ``train``, ``eval`` and ``bench``.

Every run reads one TOML/JSON config (or the manifest of an earlier run,
which re-executes it with the recorded config and seed) and writes its
outputs atomically plus a ``manifest.json`` listing content hashes.

Exit codes: 0 success, 1 failed acceptance criteria or unexpected error,
2 configuration, 3 I/O, 4 data, 5 fairness gate.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import pandas as pd

from . import __version__
from ._io import atomic_path, atomic_write_text, sha256_file
from .domain import SENSORS, DailyFeatureMatrix, label_name, labels_from_gpa, read_labels_csv
from .errors import ConfigError, DataError, DomainError, LeakageError, LineageError

log = logging.getLogger("earlyrisk.cli")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO, EXIT_DATA, EXIT_FAIRNESS = 0, 1, 2, 3, 4, 5
MANIFEST_VERSION = 1
APPROACHES = ("lr", "cnn", "mtl", "zero-rule", "one-rule-svm")
PATH_KEYS = {
    "extract": (("cohort",), ("places",)),
    "train": (("cohort", "dir"), ("cohort", "features"), ("cohort_b", "dir"), ("cohort_b", "features")),
    "eval": (("predictions",), ("labels",), ("model",), ("importance",)),
}


class FairnessGateError(Exception):
    pass


# ---------------------------------------------------------------------------
# config and manifest


def _schema(command):
    return json.loads(resources.files("earlyrisk.schemas").joinpath(f"{command}.schema.json").read_text())


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _read_config_file(path: Path) -> dict:
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    text = path.read_text()
    try:
        if path.suffix.lower() == ".json":
            return json.loads(text)
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _resolve_paths(command, cfg, base: Path):
    for keys in PATH_KEYS.get(command, ()):
        node = cfg
        for k in keys[:-1]:
            node = node.get(k) if isinstance(node, dict) else None
        if isinstance(node, dict) and isinstance(node.get(keys[-1]), str):
            node[keys[-1]] = str((base / node[keys[-1]]).resolve())
    return cfg


def load_config(command, path, seed=None) -> tuple[dict, dict | None]:
    """Validated config with absolute paths; second item is the source manifest, if any."""
    path = Path(path) if path else None
    if path is None:
        if command != "bench":
            raise ConfigError(f"{command} needs --config")
        cfg, manifest = {}, None
    else:
        raw = _read_config_file(path)
        manifest = raw if "manifest_version" in raw else None
        if manifest is not None:
            if manifest.get("command") != command:
                raise ConfigError(f"manifest was written by {manifest.get('command')!r}, not {command!r}")
            cfg = json.loads(json.dumps(manifest["config"]))
        else:
            cfg = _resolve_paths(command, raw, path.parent)
    if seed is not None:
        cfg["seed"] = int(seed)
    if command == "gen":
        cfg.setdefault("seed", cfg.get("cohort", {}).get("seed", 0))
        cfg.get("cohort", {}).pop("seed", None)
    cfg.setdefault("seed", 0)
    try:
        jsonschema.Draft202012Validator(_schema(command)).validate(cfg)
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigError(f"invalid {command} config at {where}: {exc.message}") from exc
    return cfg, manifest


class Run:
    """Collects outputs, timings and flags for the manifest of one command."""

    def __init__(self, command, cfg, out: Path):
        self.command, self.cfg, self.out = command, cfg, out
        self.inputs, self.outputs, self.timings, self.leakage, self.notes = {}, [], {}, [], []
        out.mkdir(parents=True, exist_ok=True)

    def stage(self, name):
        run = self

        class _Timer:
            def __enter__(self):
                self.t = time.perf_counter()

            def __exit__(self, *exc):
                run.timings[name] = round(time.perf_counter() - self.t, 4)
        return _Timer()

    def add_input(self, path):
        p = Path(path)
        if p.is_dir():
            for f in sorted(p.iterdir()):
                if f.is_file() and f.name != "manifest.json":
                    self.inputs[str(f)] = sha256_file(f)
        else:
            self.inputs[str(p)] = sha256_file(p)

    def path(self, rel) -> Path:
        self.outputs.append(rel)
        return self.out / rel

    def write_text(self, rel, text):
        atomic_write_text(self.path(rel), text)

    def write_json(self, rel, obj):
        self.write_text(rel, json.dumps(obj, indent=1, sort_keys=True, allow_nan=False, default=_json_default) + "\n")

    def write_csv(self, rel, df: pd.DataFrame):
        with atomic_path(self.path(rel)) as tmp:
            df.to_csv(tmp, index=False, lineterminator="\n")

    def manifest(self) -> dict:
        h = config_hash(self.cfg)
        return {
            "manifest_version": MANIFEST_VERSION,
            "package_version": __version__,
            "command": self.command,
            "run_id": f"{self.command}-{h[:12]}",
            "config": self.cfg,
            "config_hash": h,
            "seed": self.cfg.get("seed", 0),
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": {rel: sha256_file(self.out / rel) for rel in sorted(set(self.outputs))},
            "stage_timings": self.timings,
            "leakage_flags": self.leakage,
            "notes": self.notes,
        }

    def finish(self):
        m = self.manifest()
        atomic_write_text(self.out / "manifest.json", json.dumps(m, indent=1, sort_keys=True) + "\n")
        return m


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return None if np.isnan(o) else float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _clean(obj):
    """Replace NaN/inf floats so the JSON stays strict."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if np.isnan(v) else ("inf" if v == np.inf else ("-inf" if v == -np.inf else v))
    return obj


# ---------------------------------------------------------------------------
# gen


def cmd_gen(cfg, out: Path, jobs=1) -> Run:
    from .synth import CohortConfig, generate_cohort, generate_cohort_pair, write_cohort
    run = Run("gen", cfg, out)
    cdict = dict(cfg.get("cohort", {}))
    cdict["seed"] = cfg["seed"]
    conf_a = CohortConfig.from_dict(cdict)
    pair = cfg.get("pair")
    with run.stage("generate"):
        if pair is None:
            cohorts = {"": generate_cohort(conf_a)}
        else:
            bdict = {**cdict, "id_prefix": conf_a.id_prefix + "B", **pair.get("cohort_b", {})}
            bdict["seed"] = cfg["seed"] + int(pair.get("seed_offset", 1000))
            a, b = generate_cohort_pair(conf_a, CohortConfig.from_dict(bdict), float(pair.get("shift", 0.0)))
            cohorts = {"A": a, "B": b}
    with run.stage("write"):
        for sub, c in cohorts.items():
            include = sub != "B" or bool(pair.get("include_current_labels_b", True))
            for p in write_cohort(c, out / sub if sub else out, include_current_labels=include):
                run.outputs.append(str(p.relative_to(out)))
    return run


# ---------------------------------------------------------------------------
# extract


def cmd_extract(cfg, out: Path, jobs=1) -> Run:
    from .features.extract import ExtractConfig, extract_cohort
    from .features.places import PlaceMap
    from .synth import read_cohort
    run = Run("extract", cfg, out)
    cdir = Path(cfg["cohort"])
    run.add_input(cdir)
    with run.stage("read"):
        cohort = read_cohort(cdir)
    place_map = PlaceMap.load(cfg["places"]) if cfg.get("places") else cohort.place_map
    if cfg.get("places"):
        run.add_input(cfg["places"])
    ecfg = ExtractConfig(**cfg.get("extract", {}), n_jobs=jobs)
    empty = sum(1 for p in cohort.participants for s in SENSORS if len(cohort.streams.get(p, {}).get(s, ())) == 0)
    if empty:
        run.notes.append(f"{empty} participant-sensor streams were empty; their features are masked")
        log.warning(run.notes[-1])
    with run.stage("extract"):
        daily = extract_cohort(cohort.streams, place_map, cohort.schedules, cohort.days, ecfg)
    with run.stage("write"):
        run.write_csv("daily_features.csv", daily.to_long())
        run.write_json("features.json", {"participants": list(daily.participants),
                                         "days": [d.isoformat() for d in daily.days],
                                         "features": list(daily.features),
                                         "empty_streams": empty})
    return run


# ---------------------------------------------------------------------------
# train


def _cohort_meta(cdir: Path):
    meta = json.loads((cdir / "ground_truth.json").read_text())
    return meta["config"]


def load_cohort_data(ref: dict, seal=False, run: Run | None = None):
    """CohortData from a gen directory plus an extract directory."""
    from .pipelines.data import make_cohort_data
    from .synth import CohortConfig
    cdir, fdir = Path(ref["dir"]), Path(ref["features"])
    if run is not None:
        for f in ("labels.csv", "self_report.csv", "ground_truth.json"):
            run.add_input(cdir / f)
        run.add_input(fdir / "daily_features.csv")
        run.add_input(fdir / "features.json")
    labels, traits = read_labels_csv(cdir / "labels.csv")
    sr = pd.read_csv(cdir / "self_report.csv", dtype={"participant_id": str, "sr_service_provider": object})
    fmeta = json.loads((fdir / "features.json").read_text())
    days = CohortConfig.from_dict(_cohort_meta(cdir)).days
    from .domain import date_of
    long = pd.read_csv(fdir / "daily_features.csv", dtype={"participant_id": str, "date": str, "feature": str})
    daily = DailyFeatureMatrix.from_long(long, fmeta["participants"], [date_of(d) for d in days], fmeta["features"])
    cid = ref.get("id") or cdir.name
    if not seal and np.isnan(labels.gpa_current).any():
        raise DataError(f"cohort {cid!r} has no current labels to train on")
    return make_cohort_data(cid, daily, labels, sr, traits, seal=seal)


def _lr_config(cfg):
    from .learners.logistic import LrConfig
    from .pipelines.lr import LrPipelineConfig
    c = dict(cfg.get("lr", {}))
    lr = LrConfig(**{k: c.pop(k) for k in ("lam", "tol", "max_iter") if k in c})
    if "cfs_grid" in c:
        c["cfs_grid"] = tuple(c["cfs_grid"])
    return LrPipelineConfig(**c, lr=lr, seed=cfg["seed"])


def _train_config(cfg, **defaults):
    from .learners.cnn import TrainConfig
    c = dict(cfg.get("cnn", {}))
    keys = ("epochs", "batch_size", "learning_rate", "patience")
    return TrainConfig(**{**defaults, **{k: c[k] for k in keys if k in c}}), c


def _predictions_frame(pids, y_true, pred, prob, fold):
    return pd.DataFrame({
        "participant_id": list(pids),
        "true_label": ["" if t is None else label_name(t) for t in y_true],
        "pred_label": [label_name(p) for p in pred],
        "prob_low": np.round(np.asarray(prob, dtype=float), 12),
        "fold": list(fold),
    })


def _bundle(approach, lineage, models, leakage=(), extra=None):
    from .learners.persist import FORMAT_VERSION, model_to_dict
    return {"format_version": FORMAT_VERSION, "approach": approach, "lineage": lineage.to_dict(),
            "leakage_flags": list(leakage),
            "models": [{**meta, "model": model_to_dict(m)} for meta, m in models], **(extra or {})}


def _loo_baseline(data, approach):
    """Leave-one-out 0R / 1R on one labelled cohort."""
    from .learners.baselines import one_rule_svm_fit, zero_rule
    pids = data.participants
    order = sorted(range(len(pids)), key=lambda i: pids[i])
    y = np.asarray(data.current_labels().values)
    prior = data.gpa_prior
    prob = np.zeros(len(pids))
    pred = np.zeros(len(pids), dtype=int)
    fold = np.zeros(len(pids), dtype=int)
    models = []
    for k, i in enumerate(order):
        tr = np.array([j for j in order if j != i])
        zr = zero_rule(y[tr])
        m = zr
        if approach == "one-rule-svm":
            ok = tr[~np.isnan(prior[tr])]
            if not np.isnan(prior[i]) and len(np.unique(y[ok])) == 2:
                m = one_rule_svm_fit(prior[ok], y[ok])
                pred[i] = m.predict(prior[i:i + 1])[0]
                prob[i] = m.predict_proba(prior[i:i + 1])[0]
                fold[i] = k
                models.append(({"fold": k}, m))
                continue
        pred[i] = zr.predict(n=1)[0]
        prob[i] = zr.predict_proba(n=1)[0]
        fold[i] = k
        models.append(({"fold": k}, zr))
    return pred, prob, fold, models


def cmd_train(cfg, out: Path, jobs=1) -> Run:
    from .seal import Lineage
    approach = cfg["approach"]
    if approach == "mtl" and "cohort_b" not in cfg:
        raise ConfigError("approach mtl needs a cohort_b section (the evaluation cohort)")
    run = Run("train", cfg, out)
    with run.stage("load"):
        data = load_cohort_data(cfg["cohort"], run=run)
        data_b = load_cohort_data(cfg["cohort_b"], seal=True, run=run) if "cohort_b" in cfg else None
    if data_b is not None:
        return _train_transfer(cfg, run, data, data_b, approach, jobs)

    y = np.asarray(data.current_labels().values)
    pos = {p: i for i, p in enumerate(data.participants)}
    lineage = Lineage(frozenset({data.cohort_id}))
    if approach == "lr":
        from .eval.importance import importance_ranking, selected_features_table
        from .pipelines.lr import run_lr_pipeline
        conf = dataclasses.replace(_lr_config(cfg), n_jobs=jobs)
        with run.stage("fit"):
            res = run_lr_pipeline(data, conf)
        pids, prob, pred, fold = res.predictions()
        run.leakage.extend(res.leakage)
        fold_log = {"approach": approach, "leakage": res.leakage, "folds": [f.to_log() for f in res.folds]}
        run.write_csv("selected_features.csv", selected_features_table(res.folds))
        run.write_csv("importance.csv", importance_ranking(res.folds))
        models = []
        for f in res.folds:
            idx = [res.feature_names.index(n) for n in f.selected]
            stats = {k: np.asarray(f.stats[k])[idx] for k in ("impute", "mean", "sd")}
            models.append(({"fold": f.fold, "features": f.selected, **stats}, f.model))
        run.write_json("model.json", _clean(_bundle(approach, lineage, models, run.leakage)))
        run.write_csv("predictions.csv", _predictions_frame(pids, [y[pos[p]] for p in pids], pred, prob, fold))
    elif approach == "cnn":
        from .pipelines.cnn import CnnPipelineConfig, run_cnn_pipeline
        tc, c = _train_config(cfg)
        extra = {k: (tuple(c[k]) if k == "lr_grid" else c[k])
                 for k in ("lr_grid", "n_repeats", "n_folds", "test_fraction", "arch") if k in c}
        conf = CnnPipelineConfig(train=tc, seed=cfg["seed"], n_jobs=jobs, **extra)
        with run.stage("fit"):
            res = run_cnn_pipeline(data, conf)
        frames, hist, models = [], [], []
        for r in res.repeats:
            frames.append(_predictions_frame(r.test_ids, [y[pos[p]] for p in r.test_ids], r.pred, r.prob_low,
                                             [r.repeat] * len(r.test_ids)))
            h = r.history
            hist.append(pd.DataFrame({"repeat": r.repeat, "epoch": h.epoch, "train_loss": h.train_loss,
                                      "val_loss": h.val_loss}))
            models.append(({"repeat": r.repeat}, r.model))
        run.write_csv("predictions.csv", pd.concat(frames, ignore_index=True))
        run.write_csv("loss_history.csv", pd.concat(hist, ignore_index=True))
        run.write_json("model.json", _clean(_bundle(approach, lineage, models)))
        fold_log = {"approach": approach, "repeats": [r.to_log() for r in res.repeats],
                    "mean_metrics": res.mean_metrics()}
    else:
        with run.stage("fit"):
            pred, prob, fold, models = _loo_baseline(data, approach)
        pids = data.participants
        run.write_csv("predictions.csv", _predictions_frame(pids, y, pred, prob, fold))
        run.write_json("model.json", _clean(_bundle(approach, lineage, models)))
        fold_log = {"approach": approach, "folds": len(pids)}
    run.write_json("fold_log.json", _clean(fold_log))
    return run


def _train_transfer(cfg, run, data_a, data_b, approach, jobs):
    from .pipelines import mtl as tr
    tc, _ = _train_config(cfg, learning_rate=1e-3)
    c = dict(cfg.get("transfer", {}))
    arch = dict(cfg.get("cnn", {}).get("arch", {}))
    conf = tr.TransferConfig(train=tc, arch=arch, seed=cfg["seed"], **c)
    with run.stage("fit"):
        if approach == "mtl":
            res = tr.run_mtl_pipeline(data_a, data_b, conf)
        elif approach == "cnn":
            res = tr.run_cnn_transfer(data_a, data_b, conf)
        elif approach == "lr":
            res = tr.run_lr_transfer(data_a, data_b, _lr_config(cfg), c.get("val_fraction", 0.2))
            run.leakage.append("cfs_cutoff_tuned_on_training_cohort_slice")
        elif approach == "zero-rule":
            res = tr.run_zero_rule_transfer(data_a, data_b)
        else:
            res = tr.run_one_rule_transfer(data_a, data_b)
    if data_b.sealed.opened:
        raise LeakageError(f"sealed labels of {data_b.cohort_id!r} were opened during training")
    run.notes.extend(res.notes)
    n = len(res.participants)
    run.write_csv("predictions.csv", _predictions_frame(res.participants, [None] * n, res.pred, res.prob_low,
                                                        [0] * n))
    run.write_json("model.json", _clean(_bundle(approach, res.lineage, [({}, res.model)], run.leakage,
                                                {"evaluation_cohort": data_b.cohort_id})))
    if res.history is not None:
        h = res.history
        run.write_csv("loss_history.csv", pd.DataFrame({"epoch": h.epoch, "train_loss": h.train_loss,
                                                        "val_loss": h.val_loss}))
    run.write_json("fold_log.json", _clean({
        "approach": approach, "training_cohort": data_a.cohort_id, "evaluation_cohort": data_b.cohort_id,
        "lineage": res.lineage.to_dict(), "seal_opened": data_b.sealed.opened, "notes": res.notes}))
    return run


# ---------------------------------------------------------------------------
# eval


def _parse_label_col(values):
    from .domain import parse_label
    return np.array([parse_label(v) for v in values], dtype=int)


def cmd_eval(cfg, out: Path, jobs=1, gate=False) -> Run:
    from .eval.report import build_report, summary_markdown, validate_report
    from .seal import Lineage
    run = Run("eval", cfg, out)
    run.add_input(cfg["predictions"])
    lab_path = Path(cfg["labels"])
    if lab_path.is_dir():
        lab_path = lab_path / "labels.csv"
    run.add_input(lab_path)
    cohort_id = cfg.get("cohort_id") or lab_path.parent.name
    bundle = None
    if cfg.get("model"):
        run.add_input(cfg["model"])
        bundle = json.loads(Path(cfg["model"]).read_text())
        target = bundle.get("evaluation_cohort")
        if target is not None:
            # cross-cohort model: its lineage must exclude the scored cohort
            Lineage.from_dict(bundle.get("lineage", {})).check_can_score(cohort_id)
            if target != cohort_id:
                raise DataError(f"model predicts cohort {target!r}, labels belong to {cohort_id!r}")
    try:
        pr = pd.read_csv(cfg["predictions"], dtype={"participant_id": str, "true_label": str, "pred_label": str},
                         keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"unparseable predictions file: {exc}") from exc
    need = ["participant_id", "pred_label", "prob_low"]
    if any(c not in pr.columns for c in need):
        raise DataError(f"predictions need columns {need}", line=1)
    labels, traits = read_labels_csv(lab_path)
    pos = {p: i for i, p in enumerate(labels.participants)}
    unknown = [p for p in pr.participant_id if p not in pos]
    if unknown:
        raise DataError(f"predictions for participants without labels: {unknown[:5]}")
    idx = np.array([pos[p] for p in pr.participant_id], dtype=int)
    gpa = labels.gpa_current[idx]
    if np.isnan(gpa).any():
        raise DataError("current labels missing for some predicted participants")
    try:
        y_pred = _parse_label_col(pr.pred_label)
    except (DomainError, ValueError) as exc:
        raise DataError(f"bad pred_label value: {exc}") from exc
    prob = pd.to_numeric(pr.prob_low, errors="coerce").to_numpy(dtype=float)
    y_true = labels_from_gpa(gpa)
    prior = labels_from_gpa(labels.gpa_prior[idx])
    groups = {t: np.asarray(v)[idx] for t, v in traits.values.items()}
    with run.stage("evaluate"):
        rep = build_report(y_true, y_pred, None if np.isnan(prob).any() else prob, groups, prior,
                           cfg.get("approach", ""), cohort_id, importance_path=cfg.get("importance"),
                           ratio_pair=cfg.get("ratio_pair", "tpr_fnr"))
        if bundle is not None:
            rep["leakage_flags"] = list(bundle.get("leakage_flags", []))
        validate_report(rep)
    run.write_json("report.json", rep)
    run.write_text("summary.md", summary_markdown(rep))
    bad = [f for f in rep["fairness"] if f["reason"] is None and not f["reasonable"]]
    run.notes.append(f"{len(bad)} defined fairness records outside the reasonable range")
    if gate and bad:
        run.finish()
        raise FairnessGateError(f"{len(bad)} fairness records outside the reasonable range, e.g. "
                                f"{bad[0]['trait']}/{bad[0]['metric']}")
    return run


# ---------------------------------------------------------------------------
# bench


def cmd_bench(cfg, out: Path, jobs=1) -> Run:
    from . import acceptance
    run = Run("bench", cfg, out)
    scale = cfg.get("scale", "quick")
    ids = cfg.get("criteria") or acceptance.default_criteria(scale)
    results = []
    for cid in sorted(ids):
        if cid == 12:
            run.notes.append("criterion 12 checks bench itself and is run by the test suite")
            continue
        with run.stage(f"criterion_{cid:02d}"):
            results.append(acceptance.run_criterion(cid, scale=scale, seed=cfg["seed"], n_jobs=jobs))
        log.info(results[-1].line())
    run.write_json("results.json", _clean({"scale": scale,
                                           "results": [r.to_dict(timing=False) for r in results]}))
    run.write_text("results.txt", "".join(r.line(timing=False) + "\n" for r in results))
    run.passed = all(r.passed for r in results)
    return run


# ---------------------------------------------------------------------------
# entry point

COMMANDS = {"gen": cmd_gen, "extract": cmd_extract, "train": cmd_train, "eval": cmd_eval, "bench": cmd_bench}


def build_parser():
    ap = argparse.ArgumentParser(prog="earlyrisk", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML/JSON config, or a manifest.json to re-execute")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--jobs", type=int, default=1, help="parallel folds/repeats/participants")
        if name == "eval":
            p.add_argument("--gate-fairness", action="store_true",
                           help="exit 5 when a fairness record is outside the reasonable range")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not logging.getLogger().handlers:
        import os
        logging.basicConfig(level=os.environ.get("ERL_LOG", "WARNING").upper(),
                            format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg, source = load_config(args.command, args.config, args.seed)
        out = Path(args.out)
        kw = {"gate": args.gate_fairness} if args.command == "eval" else {}
        run = COMMANDS[args.command](cfg, out, args.jobs, **kw)
        if source is not None:
            run.notes.append(f"re-executed from manifest {source.get('run_id')}")
        m = run.finish()
        if source is not None and source.get("outputs") != m["outputs"]:
            diff = sorted(k for k in set(source["outputs"]) | set(m["outputs"])
                          if source["outputs"].get(k) != m["outputs"].get(k))
            log.warning("re-execution changed output hashes: %s", diff)
        print(f"{args.command}: wrote {len(m['outputs'])} files to {out}")
        if args.command == "bench" and not getattr(run, "passed", True):
            print("bench: some acceptance criteria failed", file=sys.stderr)
            return EXIT_FAIL
        return EXIT_OK
    except (ConfigError, jsonschema.SchemaError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FairnessGateError as exc:
        print(f"fairness gate: {exc}", file=sys.stderr)
        return EXIT_FAIRNESS
    except (DataError, DomainError, LeakageError, LineageError) as exc:
        line = getattr(exc, "line", None)
        print(f"data error{'' if line is None else f' (line {line})'}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
