"""Versioned JSON serialization for trained classifiers.

Floats are written with Python's shortest round-trip representation, so a
serialized model reloads bit-identically and classifies identically.
"""

from __future__ import annotations

import json

import numpy as np

from .basis import BasisSystem
from .classifiers import (
    CentroidModel,
    LogisticModel,
    Method,
    PLSDAModel,
    TrainedBayesModel,
)
from .copula import CopulaModel
from .density import MarginalEstimate
from .errors import DataError
from .fdata import Grid

__all__ = ["model_to_dict", "model_from_dict", "save_model", "load_model"]

FORMAT_VERSION = 1


def _arr(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def _basis_to_dict(basis: BasisSystem) -> dict:
    out = {
        "kind": basis.kind,
        "grid": _arr(basis.grid.points),
        "functions": _arr(basis.functions),
        "mean": _arr(basis.mean),
        "truncated": basis.truncated,
    }
    if basis.eigenvalues is not None:
        out["eigenvalues"] = _arr(basis.eigenvalues)
    if basis.pls_loadings is not None:
        out["pls_loadings"] = _arr(basis.pls_loadings)
        out["pls_dcoef"] = _arr(basis.pls_dcoef)
    return out


def _basis_from_dict(d: dict) -> BasisSystem:
    return BasisSystem(
        d["kind"],
        Grid(np.array(d["grid"])),
        np.array(d["functions"], dtype=float),
        np.array(d["mean"], dtype=float),
        eigenvalues=np.array(d["eigenvalues"], dtype=float) if "eigenvalues" in d else None,
        pls_loadings=np.array(d["pls_loadings"], dtype=float) if "pls_loadings" in d else None,
        pls_dcoef=np.array(d["pls_dcoef"], dtype=float) if "pls_dcoef" in d else None,
        truncated=d.get("truncated", False),
    )


def _copula_to_dict(model: CopulaModel) -> dict:
    return {
        "family": model.family,
        "corr": _arr(model.corr),
        "corr_inverse": _arr(model.corr_inverse),
        "log_det": model.log_det,
        "tail_index": model.tail_index,
        "tail_at_boundary": model.tail_at_boundary,
    }


def _copula_from_dict(d: dict) -> CopulaModel:
    return CopulaModel(
        d["family"],
        np.array(d["corr"], dtype=float),
        d["tail_index"],
        np.array(d["corr_inverse"], dtype=float),
        d["log_det"],
        d.get("tail_at_boundary", False),
    )


def model_to_dict(model) -> dict:
    """Serialize any trained model to a JSON-compatible dictionary."""
    if isinstance(model, TrainedBayesModel):
        body = {
            "type": "bayes",
            "method": model.method.value,
            "basis": _basis_to_dict(model.basis),
            "priors": _arr(model.priors),
            "marginals": [
                [
                    {
                        "sample": _arr(m.sample),
                        "bandwidth": m.bandwidth,
                        "sd": m.sd,
                        "silverman_fallback": m.silverman_fallback,
                    }
                    for m in group
                ]
                for group in model.marginals
            ],
            "copulas": [_copula_to_dict(c) for c in model.copulas],
        }
    elif isinstance(model, CentroidModel):
        body = {
            "type": "centroid",
            "method": Method.CEN.value,
            "grid": _arr(model.grid.points),
            "psi": _arr(model.psi),
            "proj_mean0": model.proj_mean0,
            "proj_mean1": model.proj_mean1,
            "n_components": model.n_components,
        }
    elif isinstance(model, PLSDAModel):
        body = {
            "type": "plsda",
            "method": Method.PLSDA.value,
            "basis": _basis_to_dict(model.basis),
            "class_means": _arr(model.class_means),
            "cov_inverse": _arr(model.cov_inverse),
            "priors": _arr(model.priors),
            "ridged": model.ridged,
        }
    elif isinstance(model, LogisticModel):
        body = {
            "type": "logistic",
            "method": Method.LOGISTIC.value,
            "basis": _basis_to_dict(model.basis),
            "coef": _arr(model.coef),
            "capped": model.capped,
            "converged": model.converged,
        }
    else:
        raise DataError(f"cannot serialize model of type {type(model).__name__}")
    body["format_version"] = FORMAT_VERSION
    return body


def model_from_dict(d: dict):
    """Rebuild a trained model from :func:`model_to_dict` output."""
    version = d.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported model format version {version!r}")
    kind = d.get("type")
    if kind == "bayes":
        marginals = tuple(
            tuple(
                MarginalEstimate(
                    np.array(m["sample"], dtype=float),
                    m["bandwidth"],
                    m["sd"],
                    m.get("silverman_fallback", False),
                )
                for m in group
            )
            for group in d["marginals"]
        )
        return TrainedBayesModel(
            Method(d["method"]),
            _basis_from_dict(d["basis"]),
            np.array(d["priors"], dtype=float),
            marginals,
            tuple(_copula_from_dict(c) for c in d["copulas"]),
        )
    if kind == "centroid":
        return CentroidModel(
            Grid(np.array(d["grid"])),
            np.array(d["psi"], dtype=float),
            d["proj_mean0"],
            d["proj_mean1"],
            d["n_components"],
        )
    if kind == "plsda":
        return PLSDAModel(
            _basis_from_dict(d["basis"]),
            np.array(d["class_means"], dtype=float),
            np.array(d["cov_inverse"], dtype=float),
            np.array(d["priors"], dtype=float),
            d.get("ridged", False),
        )
    if kind == "logistic":
        return LogisticModel(
            _basis_from_dict(d["basis"]),
            np.array(d["coef"], dtype=float),
            d.get("capped", False),
            d.get("converged", True),
        )
    raise DataError(f"unknown model type {kind!r}")


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
