"""Feature-importance ranking summed across LR folds."""
from __future__ import annotations

from collections import defaultdict

import numpy as np
import pandas as pd


def importance_ranking(folds) -> pd.DataFrame:
    """Sum of per-fold importances for every feature selected at least once.

    Columns: ``feature, score, n_folds, mean_coef, impact``. ``impact`` is the
    sign of the association with GPA: the LR scores the Low class, so a
    negative mean coefficient is a positive (``+``) association. Sorted by
    score, descending, then by name.
    """
    score = defaultdict(float)
    count = defaultdict(int)
    coef = defaultdict(list)
    for f in folds:
        for name, imp, c in zip(f.selected, f.importance, f.coef):
            score[name] += float(imp)
            count[name] += 1
            coef[name].append(float(c))
    rows = []
    for name in score:
        mc = float(np.mean(coef[name]))
        rows.append((name, score[name], count[name], mc, "+" if mc < 0 else ("-" if mc > 0 else "0")))
    df = pd.DataFrame(rows, columns=["feature", "score", "n_folds", "mean_coef", "impact"])
    if df.empty:
        return df
    df["_neg"] = -df["score"]
    df = df.sort_values(["_neg", "feature"], kind="mergesort").drop(columns="_neg").reset_index(drop=True)
    df.insert(0, "rank", np.arange(1, len(df) + 1))
    return df


def selected_features_table(folds) -> pd.DataFrame:
    """Long table ``fold, feature, importance`` of every fold's selection."""
    rows = [(f.fold, n, float(i)) for f in folds for n, i in zip(f.selected, f.importance)]
    return pd.DataFrame(rows, columns=["fold", "feature", "importance"])
