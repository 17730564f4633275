"""Versioned JSON persistence: shapes plus one little-endian float64 blob."""
from __future__ import annotations

import base64
import json

import numpy as np

from ..errors import DataError
from ..seal import Lineage
from .baselines import OneRuleSvm, ZeroRule
from .cnn import Cnn1dModel, CnnArch
from .logistic import LogisticModel, LrConfig
from .mtl import MtlModel

FORMAT_VERSION = 1


def pack(arrays: dict) -> dict:
    names = sorted(arrays)
    flat = np.concatenate([np.asarray(arrays[k], dtype="<f8").ravel() for k in names]) if names else np.zeros(0)
    return {
        "names": names,
        "shapes": [list(np.shape(arrays[k])) for k in names],
        "blob": base64.b64encode(flat.astype("<f8").tobytes()).decode("ascii"),
    }


def unpack(d: dict) -> dict:
    flat = np.frombuffer(base64.b64decode(d["blob"]), dtype="<f8")
    out, pos = {}, 0
    for name, shape in zip(d["names"], d["shapes"]):
        size = int(np.prod(shape)) if shape else 1
        out[name] = flat[pos:pos + size].reshape(shape).astype(float)
        pos += size
    if pos != flat.size:
        raise DataError("parameter blob length does not match the declared shapes")
    return out


def model_to_dict(model, meta=None) -> dict:
    d = {"format_version": FORMAT_VERSION, "meta": dict(meta or {})}
    if isinstance(model, LogisticModel):
        d.update(kind="logistic", config=vars(model.config).copy(), n_iter=model.n_iter,
                 params=pack({"weights": model.weights, "bias": np.array(model.bias)}))
    elif isinstance(model, ZeroRule):
        d.update(kind="zero_rule", label=int(model.label), params=pack({}))
    elif isinstance(model, OneRuleSvm):
        d.update(kind="one_rule_svm", objective=model.objective, n_iter=model.n_iter,
                 params=pack({"w": np.array(model.w), "b": np.array(model.b)}))
    elif isinstance(model, MtlModel):
        d.update(kind="mtl_cnn", arch=vars(model.arch).copy(), loss_weights=list(model.loss_weights),
                 lineage=model.lineage.to_dict(), params=pack(model.params()))
    elif isinstance(model, Cnn1dModel):
        d.update(kind="cnn", arch=vars(model.arch).copy(), params=pack(model.params))
    else:
        raise TypeError(f"cannot persist {type(model).__name__}")
    return d


def model_from_dict(d: dict):
    if d.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unsupported model format version {d.get('format_version')!r}")
    p = unpack(d["params"])
    kind = d["kind"]
    if kind == "logistic":
        return LogisticModel(p["weights"], float(p["bias"]), LrConfig(**d["config"]), int(d["n_iter"]))
    if kind == "zero_rule":
        return ZeroRule(int(d["label"]))
    if kind == "one_rule_svm":
        return OneRuleSvm(float(p["w"]), float(p["b"]), float(d["objective"]), int(d["n_iter"]))
    if kind == "cnn":
        arch = CnnArch(**d["arch"])
        return Cnn1dModel(arch, {k: p[k] for k in ("conv_w", "conv_b")},
                          {k: p[k] for k in ("d1_w", "d1_b", "out_w", "out_b")})
    if kind == "mtl_cnn":
        arch = CnnArch(**d["arch"])
        trunk = {k.split(".", 1)[1]: v for k, v in p.items() if k.startswith("trunk.")}
        heads = {}
        for k, v in p.items():
            task, name = k.split(".", 1)
            if task != "trunk":
                heads.setdefault(task, {})[name] = v
        return MtlModel(arch, trunk, heads, tuple(d["loss_weights"]), Lineage.from_dict(d["lineage"]))
    raise DataError(f"unknown model kind {kind!r}")


def save_model(model, path, meta=None):
    from .._io import atomic_write_text
    atomic_write_text(path, json.dumps(model_to_dict(model, meta), indent=1, sort_keys=True))


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))
