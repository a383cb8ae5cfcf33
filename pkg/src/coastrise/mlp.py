"""Transition-potential network: a small feed-forward perceptron trained by
backpropagation with momentum.

The default geometry is 6 inputs (driver variables), 7 hidden neurons and a
2-way output (transition vs persistence), sigmoid activation on both layers.
The learning rate decays linearly from ``lr_start`` to ``lr_end`` over the
iteration budget; training is full-batch so runs are reproducible bit for
bit from a seed.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError

OUTPUT_TRANSITION = 0
OUTPUT_PERSISTENCE = 1


def skill(accuracy: float, k_classes: int) -> float:
    """Chance-corrected accuracy: (A - 1/k) / (1 - 1/k)."""
    if k_classes < 2:
        raise ValueError("need at least two outcome classes")
    if not 0.0 <= accuracy <= 1.0:
        raise ValueError(f"accuracy must be in [0, 1], got {accuracy}")
    chance = 1.0 / k_classes
    return (accuracy - chance) / (1.0 - chance)


@dataclass(frozen=True)
class MlpHyperparams:
    lr_start: float = 0.01
    lr_end: float = 0.0005
    momentum: float = 0.5
    sigmoid_c: float = 1.0
    max_iter: int = 10000
    target_rms: float = 0.01
    samples_per_class: int = 6014
    hidden_dim: int = 7

    def to_dict(self) -> dict:
        return {
            "lr_start": self.lr_start,
            "lr_end": self.lr_end,
            "momentum": self.momentum,
            "sigmoid_c": self.sigmoid_c,
            "max_iter": self.max_iter,
            "target_rms": self.target_rms,
            "samples_per_class": self.samples_per_class,
            "hidden_dim": self.hidden_dim,
        }


@dataclass
class TrainingSet:
    """Balanced, normalized samples split into disjoint train/test halves.

    ``y_*`` are one-hot rows ordered (transition, persistence); features are
    min-max normalized to [0, 1] with the stats kept for later projection.
    """

    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    norm_min: np.ndarray
    norm_max: np.ndarray
    variable_names: tuple
    train_cells: np.ndarray = None  # (n, 2) row/col, for audit
    test_cells: np.ndarray = None


def normalize(features: np.ndarray, norm_min, norm_max, clamp: bool = False):
    span = np.where(norm_max > norm_min, norm_max - norm_min, 1.0)
    out = (features - norm_min) / span
    if clamp:
        out = np.clip(out, 0.0, 1.0)
    return out


@dataclass
class MlpModel:
    """Trained weights plus everything needed to reuse or audit them."""

    w_hidden: np.ndarray  # (input_dim, hidden_dim)
    b_hidden: np.ndarray
    w_out: np.ndarray  # (hidden_dim, 2)
    b_out: np.ndarray
    norm_min: np.ndarray
    norm_max: np.ndarray
    variable_names: tuple
    hyperparams: MlpHyperparams
    train_rms_history: list = field(default_factory=list)
    test_rms_history: list = field(default_factory=list)
    accuracy: float = float("nan")
    skill_measure: float = float("nan")
    # skill of per-class recall on the test half (transition, persistence)
    class_skill: dict = field(default_factory=dict)

    @property
    def input_dim(self) -> int:
        return self.w_hidden.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.w_hidden.shape[1]

    @property
    def output_dim(self) -> int:
        return self.w_out.shape[1]

    def _sigmoid(self, z):
        return 1.0 / (1.0 + np.exp(-self.hyperparams.sigmoid_c * z))

    def forward(self, x: np.ndarray):
        """Activations of (hidden, output) for normalized inputs."""
        hidden = self._sigmoid(x @ self.w_hidden + self.b_hidden)
        out = self._sigmoid(hidden @ self.w_out + self.b_out)
        return hidden, out

    def predict(self, x: np.ndarray) -> np.ndarray:
        _, out = self.forward(x)
        return np.argmax(out, axis=1)

    def transition_potential(self, features_raw: np.ndarray) -> np.ndarray:
        """Transition-neuron activation for raw (unnormalized) features,
        clamped into the [0, 1] training range first."""
        x = normalize(features_raw, self.norm_min, self.norm_max, clamp=True)
        _, out = self.forward(x)
        return out[:, OUTPUT_TRANSITION]

    def rms(self, x: np.ndarray, y: np.ndarray) -> float:
        _, out = self.forward(x)
        return float(np.sqrt(np.mean((out - y) ** 2)))

    def accuracy_on(self, x: np.ndarray, y: np.ndarray) -> float:
        pred = self.predict(x)
        truth = np.argmax(y, axis=1)
        return float(np.mean(pred == truth))

    def save(self, path) -> None:
        doc = {
            "input_dim": self.input_dim,
            "hidden_dim": self.hidden_dim,
            "output_dim": self.output_dim,
            "variable_names": list(self.variable_names),
            "normalization": {
                "min": self.norm_min.tolist(),
                "max": self.norm_max.tolist(),
            },
            "weights": {
                "w_hidden": self.w_hidden.tolist(),
                "b_hidden": self.b_hidden.tolist(),
                "w_out": self.w_out.tolist(),
                "b_out": self.b_out.tolist(),
            },
            "hyperparams": self.hyperparams.to_dict(),
            "train_rms_history": self.train_rms_history,
            "test_rms_history": self.test_rms_history,
            "accuracy": self.accuracy,
            "skill_measure": self.skill_measure,
            "class_skill": self.class_skill,
        }
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "MlpModel":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        hp = MlpHyperparams(**doc["hyperparams"])
        return cls(
            w_hidden=np.array(doc["weights"]["w_hidden"], dtype=np.float64),
            b_hidden=np.array(doc["weights"]["b_hidden"], dtype=np.float64),
            w_out=np.array(doc["weights"]["w_out"], dtype=np.float64),
            b_out=np.array(doc["weights"]["b_out"], dtype=np.float64),
            norm_min=np.array(doc["normalization"]["min"], dtype=np.float64),
            norm_max=np.array(doc["normalization"]["max"], dtype=np.float64),
            variable_names=tuple(doc["variable_names"]),
            hyperparams=hp,
            train_rms_history=list(doc["train_rms_history"]),
            test_rms_history=list(doc["test_rms_history"]),
            accuracy=doc["accuracy"],
            skill_measure=doc["skill_measure"],
            class_skill=dict(doc.get("class_skill", {})),
        )


def init_model(
    input_dim: int,
    hyperparams: MlpHyperparams,
    variable_names=None,
    norm_min=None,
    norm_max=None,
    seed: int = 0,
    output_dim: int = 2,
) -> MlpModel:
    rng = np.random.default_rng(seed)
    hidden = hyperparams.hidden_dim
    names = tuple(variable_names or (f"var_{i + 1}" for i in range(input_dim)))
    return MlpModel(
        w_hidden=rng.uniform(-0.5, 0.5, size=(input_dim, hidden)),
        b_hidden=rng.uniform(-0.5, 0.5, size=hidden),
        w_out=rng.uniform(-0.5, 0.5, size=(hidden, output_dim)),
        b_out=rng.uniform(-0.5, 0.5, size=output_dim),
        norm_min=np.zeros(input_dim) if norm_min is None else np.asarray(norm_min),
        norm_max=np.ones(input_dim) if norm_max is None else np.asarray(norm_max),
        variable_names=names,
        hyperparams=hyperparams,
    )


def loss(model: MlpModel, x: np.ndarray, y: np.ndarray) -> float:
    """Mean squared error over samples and output neurons."""
    _, out = model.forward(x)
    return float(np.mean((out - y) ** 2))


def gradients(model: MlpModel, x: np.ndarray, y: np.ndarray):
    """Analytic gradients of the mean-squared-error loss.

    Returns (dw_hidden, db_hidden, dw_out, db_out); sigmoid derivative picks
    up the sigmoid constant c: da/dz = c * a * (1 - a).
    """
    c = model.hyperparams.sigmoid_c
    n, out_dim = x.shape[0], model.output_dim
    hidden, out = model.forward(x)

    d_out = (2.0 / (n * out_dim)) * (out - y) * c * out * (1.0 - out)
    dw_out = hidden.T @ d_out
    db_out = d_out.sum(axis=0)

    d_hidden = (d_out @ model.w_out.T) * c * hidden * (1.0 - hidden)
    dw_hidden = x.T @ d_hidden
    db_hidden = d_hidden.sum(axis=0)
    return dw_hidden, db_hidden, dw_out, db_out


def train_mlp(ts: TrainingSet, hyperparams: MlpHyperparams = None, seed: int = 0) -> MlpModel:
    """Full-batch gradient descent with momentum and a linear LR ramp.

    Stops at ``max_iter`` iterations or when the training RMS reaches
    ``target_rms``.  Per-iteration train and test RMS are recorded; the
    final accuracy and skill are measured on the held-out test half.
    """
    hp = hyperparams or MlpHyperparams()
    model = init_model(
        ts.x_train.shape[1],
        hp,
        variable_names=ts.variable_names,
        norm_min=ts.norm_min,
        norm_max=ts.norm_max,
        seed=seed,
    )
    velocity = [
        np.zeros_like(model.w_hidden),
        np.zeros_like(model.b_hidden),
        np.zeros_like(model.w_out),
        np.zeros_like(model.b_out),
    ]
    params = ["w_hidden", "b_hidden", "w_out", "b_out"]

    denom = max(hp.max_iter - 1, 1)
    for it in range(hp.max_iter):
        lr = hp.lr_start + (hp.lr_end - hp.lr_start) * (it / denom)
        grads = gradients(model, ts.x_train, ts.y_train)
        for i, name in enumerate(params):
            velocity[i] = hp.momentum * velocity[i] - lr * grads[i]
            setattr(model, name, getattr(model, name) + velocity[i])

        train_rms = model.rms(ts.x_train, ts.y_train)
        test_rms = model.rms(ts.x_test, ts.y_test)
        if not np.isfinite(train_rms):
            raise DivergenceError(
                f"training diverged at iteration {it}; lower lr_start (was {hp.lr_start})"
            )
        model.train_rms_history.append(train_rms)
        model.test_rms_history.append(test_rms)
        if train_rms <= hp.target_rms:
            break

    model.accuracy = model.accuracy_on(ts.x_test, ts.y_test)
    model.skill_measure = skill(model.accuracy, model.output_dim)

    # per-outcome breakdown: the skill formula applied to per-class recall
    pred = model.predict(ts.x_test)
    truth = np.argmax(ts.y_test, axis=1)
    names = {OUTPUT_TRANSITION: "transition", OUTPUT_PERSISTENCE: "persistence"}
    for idx, name in names.items():
        members = truth == idx
        if members.any():
            recall = float(np.mean(pred[members] == idx))
            model.class_skill[name] = skill(recall, model.output_dim)
    return model
