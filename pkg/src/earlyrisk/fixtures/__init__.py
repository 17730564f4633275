"""Hand-traced golden cases for the feature extractors.

Each case names an extractor, its inputs and the expected outputs worked
out by hand; ``"nan"`` marks an expected missing value.
"""
from __future__ import annotations

import json
import math
from importlib import resources

import numpy as np

from ..features.change import behavioral_change
from ..features.highlevel import ClassBlock, class_attendance, party_mask
from ..features.location import dwell_entropy, infer_home
from ..features.lowlevel import screen_features, sleep_features, step_features


def load_golden() -> list:
    return json.loads(resources.files(__name__).joinpath("golden_features.json").read_text())


def _arr(x, dtype=None):
    return np.asarray(x, dtype=dtype)


def evaluate(case) -> dict:
    """Run one case and return the actual values for its expected keys."""
    fn, a = case["function"], case["args"]
    if fn == "step_features":
        return step_features(_arr(a["t"], np.int64), _arr(a["steps"], float), a["lo"], a["hi"])
    if fn == "screen_features":
        return screen_features(_arr(a["t"], np.int64), _arr(a["events"], object), a["lo"], a["hi"])
    if fn == "sleep_features":
        return sleep_features(_arr(a["t"], np.int64), _arr(a["status"], object), a["lo"], a["hi"])
    if fn == "infer_home":
        h = infer_home(a["t"], a["lat"], a["lon"])
        return {"home": None if h is None else {"nights": list(h.nights), "lat": h.lat, "lon": h.lon}}
    if fn == "class_attendance":
        pct, att = class_attendance(_arr(a["loc_t"], np.int64), _arr(a["loc_building"], object),
                                    ClassBlock(*a["block"]), a["day"])
        return {"pct": pct, "attended": bool(att)}
    if fn == "party_mask":
        return {"count": int(party_mask(_arr(a["t"], np.int64), _arr(a["labels"], object), a["frat_resident"]).sum())}
    if fn == "dwell_entropy":
        h, hn = dwell_entropy(a["dwell"])
        return {"entropy": h, "norm_entropy": hn}
    if fn == "behavioral_change":
        r = behavioral_change(a["values"])
        return {k: getattr(r, k) for k in ("first_half_slope", "second_half_slope", "slope_all", "breakpoint_day",
                                           "slope_before", "slope_after")}
    raise KeyError(f"unknown fixture function {fn!r}")


def _same(exp, act, tol):
    if isinstance(exp, dict):
        return isinstance(act, dict) and all(_same(v, act.get(k), tol) for k, v in exp.items())
    if isinstance(exp, list):
        return len(exp) == len(act) and all(_same(e, x, tol) for e, x in zip(exp, act))
    if exp is None or isinstance(exp, bool):
        return act is exp or act == exp
    if exp == "nan":
        return act is not None and isinstance(act, float) and math.isnan(act)
    return act is not None and not (isinstance(act, float) and math.isnan(act)) and abs(act - exp) <= tol


def check(case, tol=1e-9):
    """(passed, {key: (expected, actual)} for mismatches)."""
    act = evaluate(case)
    bad = {k: (v, act.get(k)) for k, v in case["expected"].items() if not _same(v, act.get(k), tol)}
    return not bad, bad
