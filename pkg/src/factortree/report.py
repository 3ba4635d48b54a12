"""JSON reports and model-spec files.

Floats are written with Python's shortest round-trip representation, so
reloading a report reproduces every number bit for bit. Tree edges are
1-based in files and 0-based in memory.
"""

import json
import math
import os
import tempfile

import numpy as np

from .copula import family_from_name
from .data import CutpointSet
from .errors import DomainError
from .estimate import FitResult, params_to_taus
from .model import ModelSpec, ParamVector

SCHEMA_VERSION = 1


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json_atomic(obj, path):
    """Write ``obj`` as JSON; the target only appears once fully written."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(_clean(obj), fh, indent=2, allow_nan=False)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


# ------------------------------------------------------------------ spec files

def spec_to_dict(spec):
    out = {"p": spec.p}
    if spec.p >= 1:
        out["families_f1"] = [f.label for f in spec.families_f1]
    if spec.p == 2:
        out["families_f2"] = [f.label for f in spec.families_f2]
        out["fixed_f2"] = None if spec.fixed_f2 is None else spec.fixed_f2 + 1
    if spec.has_tree:
        out["tree"] = [[j + 1, k + 1] for j, k in spec.tree]
        out["families_tree"] = [f.label for f in spec.families_tree]
    return out


def spec_from_dict(obj, d):
    """Model spec from a declarative mapping.

    Accepted keys: ``p``; ``f1``/``f2``/``tree_family`` (one family per
    tree) or the per-link lists ``families_f1``/``families_f2``/
    ``families_tree``; ``tree`` as a list of 1-based pairs; ``fixed_f2``
    (1-based).
    """
    if "p" not in obj:
        raise DomainError("model spec needs 'p'")
    p = int(obj["p"])
    f1 = obj.get("families_f1", obj.get("f1", "bvn")) if p >= 1 else None
    f2 = obj.get("families_f2", obj.get("f2", f1 if isinstance(f1, str) else "bvn")) if p == 2 else None
    tree = obj.get("tree")
    if isinstance(tree, str):
        tree = None
    if tree is not None:
        tree = [(int(a) - 1, int(b) - 1) for a, b in tree]
    ft = obj.get("families_tree", obj.get("tree_family", "bvn")) if tree is not None else None
    fixed = obj.get("fixed_f2")
    fixed = None if fixed is None else int(fixed) - 1
    if fixed is not None and f2 is not None and not isinstance(f2, str):
        f2 = [("bvn" if i == fixed else f) for i, f in enumerate(f2)]
    return ModelSpec(d, p, families_f1=f1, families_f2=f2, tree=tree, families_tree=ft,
                     fixed_f2=fixed)


def tree_source(obj):
    """``"polychoric"``, ``"partial"``, ``"explicit"`` or ``None`` from a spec mapping."""
    tree = obj.get("tree")
    if tree is None:
        return None
    if isinstance(tree, str):
        if tree not in ("polychoric", "partial"):
            raise DomainError(f"unknown tree source {tree!r}")
        return tree
    return "explicit"


# ---------------------------------------------------------------- fit reports

def _groups(pv):
    return {k: v for k, v in pv.to_dict().items() if v is not None}


def fit_to_dict(fit, item_names=None):
    out = {
        "spec": spec_to_dict(fit.spec),
        "cutpoints": fit.cut.to_lists(),
        "theta": _groups(fit.params),
        "tau": _groups(fit.taus),
        "loglik": fit.loglik,
        "aic": fit.aic,
        "n_params": fit.n_params,
        "n": fit.n,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "message": fit.message,
    }
    if item_names is not None:
        out["item_names"] = list(item_names)
    if fit.se is not None:
        out["standard_errors"] = {
            "method": fit.se.method,
            "hessian_positive_definite": fit.se.positive_definite,
            "theta": _groups(fit.se.se_theta),
            "tau": _groups(fit.se.se_tau),
        }
    return out


def fit_from_dict(obj):
    """Rebuild a :class:`FitResult` (without standard errors) from a report."""
    model = obj.get("model", obj)
    cut = CutpointSet.from_lists(model["cutpoints"])
    spec = spec_from_dict(model["spec"], cut.d)
    th = model["theta"]
    params = ParamVector(th.get("theta1"), th.get("theta2"), th.get("delta")).validate(spec)
    return FitResult(spec=spec, params=params, taus=params_to_taus(spec, params),
                     loglik=float(model["loglik"]), n_params=int(model["n_params"]),
                     n=int(model["n"]), converged=bool(model["converged"]),
                     iterations=int(model["iterations"]), message=model.get("message", ""),
                     cut=cut)


def family_list(names):
    return [family_from_name(n) for n in names]
