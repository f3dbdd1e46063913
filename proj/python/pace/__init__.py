"""Certified compression of tree ensembles.

Models are plain dicts in the ``pace-model`` JSON format (see docs/model_schema.md).
"""

import json

from . import _pace
from ._pace import PaceError, correction

__all__ = [
    "PaceError",
    "certify",
    "compress",
    "correction",
    "find_witness",
    "load",
    "plausibility",
    "save",
    "scores",
    "train_baseline",
    "train_iforest",
    "vote",
]


def _text(model):
    if model is None:
        return ""
    return model if isinstance(model, str) else json.dumps(model)


def load(path):
    with open(path) as f:
        return json.load(f)


def save(model, path):
    with open(path, "w") as f:
        json.dump(model, f, indent=2)
        f.write("\n")


def vote(model, rows):
    return _pace.vote(_text(model), [list(map(float, r)) for r in rows])


def scores(model, rows):
    return _pace.scores(_text(model), [list(map(float, r)) for r in rows])


def plausibility(iforest, rows):
    return _pace.plausibility(_text(iforest), [list(map(float, r)) for r in rows])


def train_baseline(x, y, n_labels, edges, kind="bagged", n_estimators=10, max_depth=2, seed=0):
    return json.loads(_pace.train_baseline(x, list(y), n_labels, edges, kind, n_estimators, max_depth, seed))


def train_iforest(x, n_trees=100, subsample=256, seed=0, snap_edges=()):
    return json.loads(_pace.train_iforest(x, n_trees, subsample, seed, list(snap_edges)))


def compress(train, model, iforest=None, edges=(), verify_global=False, **options):
    """Run both phases; returns the report dict, with the compressed ensemble under "model".

    Options mirror the CLI flags: eta, delta_raw / delta_scaled / delta_frac, mode,
    pricer, gen_depth, max_new, scale_digits, seed, time_limit, threads,
    l0_node_budget, l0_time_limit.
    """
    report = _pace.compress(train, _text(model), _text(iforest), json.dumps(options), list(edges), verify_global)
    return json.loads(report)


def certify(original, compressed, iforest=None, eta=0.0, delta_raw=0.0, digits=9):
    return _pace.certify(_text(original), _text(compressed), _text(iforest), eta, delta_raw, digits)


def find_witness(original, current, iforest=None, eta=0.0, delta_raw=0.0, y_orig=0, y_alt=1, digits=9,
                 exhaustive=False):
    return _pace.find_witness(_text(original), _text(current), _text(iforest), eta, delta_raw, y_orig, y_alt,
                              digits, exhaustive)
