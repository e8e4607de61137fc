"""Link disaster and attack events to news articles, score the links, and
regress media attention on country factors.

Structured results come back as plain dicts and lists; matrices are NumPy
arrays.
"""

import json as _json
import os as _os

from . import _fame
from ._fame import FameError, parse_answer, question, set_log_level, shannon_entropy, version, vif

__all__ = [
    "FameError",
    "agreement",
    "forward_aic",
    "ols",
    "parse_answer",
    "phase_one",
    "question",
    "run_pipeline",
    "score",
    "set_log_level",
    "shannon_entropy",
    "version",
    "vif",
]


def _paths(v):
    return [_os.fspath(p) for p in ([v] if isinstance(v, (str, _os.PathLike)) else v)]


def run_pipeline(events, corpus, lexicons, client, model="", labels=None, **options):
    """Ingest, match, filter, rank, and (with labels) evaluate.

    Extra keyword options mirror the `fame run` flags, e.g. scope,
    window_days, variant, indeterminate, cache, top_k, jobs, seed.
    """
    cfg = {
        "events": _os.fspath(events),
        "corpus": _paths(corpus),
        "lexicons": _paths(lexicons),
        "client": client,
        "model": model,
    }
    if labels is not None:
        cfg["labels"] = _os.fspath(labels)
    cfg.update(options)
    return _json.loads(_fame.run_pipeline(_json.dumps(cfg)))


def phase_one(events, corpus, lexicons, scope="title_plus_body", window_days=7, window_before_days=0, jobs=1):
    """Phase-one links: event id -> {"phase1": [...], "phase2": None}."""
    return _json.loads(
        _fame.phase_one(_os.fspath(events), _os.fspath(corpus), _paths(lexicons), scope, window_days,
                        window_before_days, jobs))


def score(predictions, labels, strict=False, method="fame"):
    """Per-event and macro precision, recall, and F1 (x100)."""
    return _json.loads(_fame.score(dict(predictions), _os.fspath(labels), strict, method))


def agreement(labels):
    """Percent agreement and Cohen's kappa for a two-annotator labels file."""
    return _json.loads(_fame.agreement(_os.fspath(labels)))


def ols(X, y, names):
    """Least squares with an intercept; returns coefficients and fit stats."""
    return _fame.ols(X, y, list(names))


def forward_aic(X, y, names, always_in=()):
    """Greedy forward selection on AIC."""
    return _json.loads(_fame.forward_aic(X, y, list(names), list(always_in)))
