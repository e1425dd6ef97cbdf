"""From-scratch classifiers with a shared probability-output contract.

Every model exposes ``classes`` (sorted labels), ``predict_proba(X)``
returning rows of non-negative probabilities summing to 1, ``predict(X)``
taking the argmax with ties to the lowest class id, and a versioned JSON
round trip via save_model/load_model that reloads to bit-identical
predictions.
"""

from __future__ import annotations

import json

from .cart import CartModel, Tree, cart_train
from .forest import RfModel, rf_as_cart, rf_train
from .knn import KnnModel, knn_train
from .svm import PairSvm, SmoConvergenceError, SvmModel, svm_train

from ..util import atomic_write_text

MODEL_FORMAT_VERSION = 1

_KINDS = {"knn": KnnModel, "cart": CartModel, "rf": RfModel, "svm": SvmModel}

AnyModel = KnnModel | CartModel | RfModel | SvmModel


def model_to_jsonable(model: AnyModel) -> dict:
    payload = model.to_dict()
    if payload.get("kind") not in _KINDS:
        raise ValueError(f"unknown model kind {payload.get('kind')!r}")
    return {"format_version": MODEL_FORMAT_VERSION, "model": payload}


def model_from_jsonable(payload: dict) -> AnyModel:
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    body = payload["model"]
    kind = body.get("kind")
    if kind not in _KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    return _KINDS[kind].from_dict(body)


def save_model(model: AnyModel, path) -> None:
    atomic_write_text(path, json.dumps(model_to_jsonable(model), sort_keys=True) + "\n")


def load_model(path) -> AnyModel:
    with open(path, "r") as handle:
        return model_from_jsonable(json.load(handle))


__all__ = [
    "CartModel", "KnnModel", "PairSvm", "RfModel", "SmoConvergenceError",
    "SvmModel", "Tree", "cart_train", "knn_train", "load_model",
    "model_from_jsonable", "model_to_jsonable", "rf_as_cart", "rf_train",
    "save_model", "svm_train",
]
