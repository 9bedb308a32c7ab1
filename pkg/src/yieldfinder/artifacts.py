"""Model persistence and the uniform prediction wrapper.

Artifacts are deterministic JSON: no timestamps, sorted keys, floats in
shortest round-trip form. Retraining on the same dataset with the same
seed writes byte-identical files, which makes drift visible in version
control.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import NoScorableListings, ValidationError
from .forest import Forest, Leaf, Split, TreeNode, forest_predict
from .ingest import listing_to_record
from .model import ForestConfig, KernelKind, KernelSpec, Listing, ModelSpec, SvrConfig
from .regression import OlsFit, encode, missing_features, ols_predict
from .svr import SvrModel, svr_predict

_FORMAT = "yieldfinder-model"
_VERSION = 1


def dataset_fingerprint(listings: Sequence[Listing]) -> str:
    """Order-sensitive sha256 over the canonical serialized listings."""
    digest = hashlib.sha256()
    for listing in listings:
        record = json.dumps(listing_to_record(listing), ensure_ascii=False, separators=(",", ":"))
        digest.update(record.encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


@dataclass(frozen=True)
class Scaler:
    """Column-wise standardization frozen from the training split."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Scaler":
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        return cls(mean=mean, scale=np.where(scale > 0, scale, 1.0))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale


@dataclass(frozen=True)
class TrainedModel:
    """One fitted rent model plus everything needed to score listings."""

    kind: str  # "ols" | "forest" | "svr"
    spec: ModelSpec
    artifact: OlsFit | Forest | SvrModel
    scaler: Scaler | None = None
    metadata: dict = field(default_factory=dict)

    def predict_matrix(self, features: np.ndarray) -> np.ndarray:
        """Predict from a plain feature matrix (no intercept column)."""
        X = np.asarray(features, dtype=float)
        if self.scaler is not None:
            X = self.scaler.transform(X)
        if self.kind == "ols":
            with_intercept = np.hstack([np.ones((X.shape[0], 1)), X])
            return ols_predict(self.artifact, with_intercept)
        if self.kind == "forest":
            return forest_predict(self.artifact, X)
        return svr_predict(self.artifact, X)


def predict_listings(model: TrainedModel, listings: Sequence[Listing]) -> tuple[list[str], np.ndarray, list[str]]:
    """Score listings; returns (ids, predictions, skipped ids).

    A listing missing any feature of the model's spec is skipped, not
    guessed at.
    """
    skipped = [l.id for l in listings if missing_features(l, model.spec)]
    usable = [l for l in listings if not missing_features(l, model.spec)]
    if not usable:
        raise NoScorableListings(f"no listing has the full spec {int(model.spec)} feature set")
    encoded = encode(usable, model.spec, add_intercept=False)
    return list(encoded.ids), model.predict_matrix(encoded.X), skipped


# --- JSON encoding ----------------------------------------------------------


def _tree_to_flat(root: TreeNode) -> list[dict]:
    """Preorder flattening; children referenced by list position."""
    nodes: list[dict] = []
    stack = [(root, None, None)]
    while stack:
        node, parent_pos, side = stack.pop()
        position = len(nodes)
        if isinstance(node, Leaf):
            nodes.append({"kind": "leaf", "prediction": node.prediction, "n": node.n_samples})
        else:
            nodes.append(
                {
                    "kind": "split",
                    "feature": node.feature,
                    "threshold": node.threshold,
                    "n": node.n_samples,
                    "left": None,
                    "right": None,
                }
            )
            stack.append((node.right, position, "right"))
            stack.append((node.left, position, "left"))
        if parent_pos is not None:
            nodes[parent_pos][side] = position
    return nodes


def _tree_from_flat(nodes: list[dict]) -> TreeNode:
    built: list[TreeNode | None] = [None] * len(nodes)
    for position in range(len(nodes) - 1, -1, -1):
        raw = nodes[position]
        if raw["kind"] == "leaf":
            built[position] = Leaf(prediction=raw["prediction"], n_samples=raw["n"])
        else:
            left = built[raw["left"]]
            right = built[raw["right"]]
            built[position] = Split(
                feature=raw["feature"],
                threshold=raw["threshold"],
                n_samples=raw["n"],
                left=left,
                right=right,
            )
    root = built[0]
    assert root is not None
    return root


def _kernel_to_dict(kernel: KernelSpec) -> dict:
    return {"kind": kernel.kind.value, "gamma": kernel.gamma, "degree": kernel.degree, "coef0": kernel.coef0}


def _kernel_from_dict(raw: dict) -> KernelSpec:
    return KernelSpec(kind=KernelKind(raw["kind"]), gamma=raw["gamma"], degree=raw["degree"], coef0=raw["coef0"])


def _payload_of(model: TrainedModel) -> dict:
    artifact = model.artifact
    if model.kind == "ols":
        assert isinstance(artifact, OlsFit)
        return {
            "feature_names": list(artifact.feature_names),
            "coefficients": artifact.coefficients.tolist(),
            "standard_errors": artifact.standard_errors.tolist(),
            "t_stats": artifact.t_stats.tolist(),
            "r_squared": artifact.r_squared,
            "adj_r_squared": artifact.adj_r_squared,
            "n_observations": artifact.n_observations,
            "residual_variance": artifact.residual_variance,
        }
    if model.kind == "forest":
        assert isinstance(artifact, Forest)
        return {
            "config": {
                "n_trees": artifact.config.n_trees,
                "mtry": artifact.config.mtry,
                "min_leaf": artifact.config.min_leaf,
                "bootstrap": artifact.config.bootstrap,
                "seed": artifact.config.seed,
            },
            "mtry": artifact.mtry,
            "n_features": artifact.n_features,
            "feature_names": list(artifact.feature_names) if artifact.feature_names else None,
            "trees": [_tree_to_flat(tree) for tree in artifact.trees],
        }
    assert isinstance(artifact, SvrModel)
    return {
        "support_vectors": artifact.support_vectors.tolist(),
        "dual_coefficients": artifact.dual_coefficients.tolist(),
        "bias": artifact.bias,
        "config": {
            "kernel": _kernel_to_dict(artifact.config.kernel),
            "cost": artifact.config.cost,
            "epsilon": artifact.config.epsilon,
            "tolerance": artifact.config.tolerance,
            "max_iterations": artifact.config.max_iterations,
            "cache_rows": artifact.config.cache_rows,
        },
        "n_features": artifact.n_features,
        "feature_names": list(artifact.feature_names) if artifact.feature_names else None,
        "n_iterations": artifact.n_iterations,
        "converged": artifact.converged,
        "dual_objective": artifact.dual_objective,
    }


def _artifact_from_payload(kind: str, spec: ModelSpec, payload: dict):
    if kind == "ols":
        return OlsFit(
            feature_names=tuple(payload["feature_names"]),
            coefficients=np.asarray(payload["coefficients"], dtype=float),
            standard_errors=np.asarray(payload["standard_errors"], dtype=float),
            t_stats=np.asarray(payload["t_stats"], dtype=float),
            r_squared=payload["r_squared"],
            adj_r_squared=payload["adj_r_squared"],
            n_observations=payload["n_observations"],
            residual_variance=payload["residual_variance"],
            spec=spec,
        )
    if kind == "forest":
        raw_config = payload["config"]
        return Forest(
            trees=tuple(_tree_from_flat(nodes) for nodes in payload["trees"]),
            config=ForestConfig(
                n_trees=raw_config["n_trees"],
                mtry=raw_config["mtry"],
                min_leaf=raw_config["min_leaf"],
                bootstrap=raw_config["bootstrap"],
                seed=raw_config["seed"],
            ),
            mtry=payload["mtry"],
            n_features=payload["n_features"],
            feature_names=tuple(payload["feature_names"]) if payload.get("feature_names") else None,
            spec=spec,
        )
    if kind == "svr":
        raw_config = payload["config"]
        support = np.asarray(payload["support_vectors"], dtype=float)
        if support.size == 0:
            support = support.reshape(0, payload["n_features"])
        return SvrModel(
            support_vectors=support,
            dual_coefficients=np.asarray(payload["dual_coefficients"], dtype=float),
            bias=payload["bias"],
            config=SvrConfig(
                kernel=_kernel_from_dict(raw_config["kernel"]),
                cost=raw_config["cost"],
                epsilon=raw_config["epsilon"],
                tolerance=raw_config["tolerance"],
                max_iterations=raw_config["max_iterations"],
                cache_rows=raw_config["cache_rows"],
            ),
            n_features=payload["n_features"],
            n_iterations=payload["n_iterations"],
            converged=payload["converged"],
            dual_objective=payload["dual_objective"],
            feature_names=tuple(payload["feature_names"]) if payload.get("feature_names") else None,
            spec=spec,
        )
    raise ValidationError(f"unknown model kind: {kind!r}")


def model_to_bytes(model: TrainedModel) -> bytes:
    envelope = {
        "format": _FORMAT,
        "version": _VERSION,
        "kind": model.kind,
        "spec": int(model.spec),
        "scaler": None
        if model.scaler is None
        else {"mean": model.scaler.mean.tolist(), "scale": model.scaler.scale.tolist()},
        "metadata": model.metadata,
        "payload": _payload_of(model),
    }
    return json.dumps(envelope, ensure_ascii=False, sort_keys=True, separators=(",", ":")).encode("utf-8")


def model_from_bytes(data: bytes) -> TrainedModel:
    try:
        envelope = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"not a model artifact: {exc}") from exc
    if not isinstance(envelope, dict) or envelope.get("format") != _FORMAT:
        raise ValidationError("not a model artifact")
    if envelope.get("version") != _VERSION:
        raise ValidationError(f"unsupported artifact version: {envelope.get('version')!r}")
    kind = envelope["kind"]
    spec = ModelSpec(envelope["spec"])
    scaler = None
    if envelope.get("scaler") is not None:
        scaler = Scaler(
            mean=np.asarray(envelope["scaler"]["mean"], dtype=float),
            scale=np.asarray(envelope["scaler"]["scale"], dtype=float),
        )
    return TrainedModel(
        kind=kind,
        spec=spec,
        artifact=_artifact_from_payload(kind, spec, envelope["payload"]),
        scaler=scaler,
        metadata=envelope.get("metadata", {}),
    )


def save_model(model: TrainedModel, path: Path | str) -> None:
    Path(path).write_bytes(model_to_bytes(model))


def load_model(path: Path | str) -> TrainedModel:
    return model_from_bytes(Path(path).read_bytes())
