"""Feed-forward network mapping modulation index to switching angles.

Plain numpy: tanh hidden layers, linear output, mean-squared-error loss on
normalized targets, full-batch gradient descent with hand-written
backpropagation.
"""
from dataclasses import dataclass, replace
import math

import numpy as np

from .errors import DomainError, ExtrapolationError
from .harmonics import HALF_PI, SwitchingAngleSet
from .solver import EPS_ANGLE

ACTIVATION = "tanh"
DEFAULT_EPOCHS = 1000
DEFAULT_LR = 0.1
DEFAULT_HIDDEN = (16,)

# Settings used for the angle surrogate shipped by the CLI. The smaller
# defaults above cannot resolve the branch ends of the {5,7,11} solution set
# to sub-degree accuracy.
SURROGATE_HIDDEN = (32, 32)
SURROGATE_EPOCHS = 200_000
SURROGATE_LR = 0.5
SURROGATE_SCALING = "range"

# Tolerance on the training-range check, absorbs decimal round trips of m.
_RANGE_SLACK = 1e-12
_ORDER_GAP = 1e-9


@dataclass
class MlpModel:
    layer_sizes: tuple
    weights: list
    biases: list
    activation: str = ACTIVATION
    input_norm: tuple = (0.0, 1.0)
    output_norm: tuple = None
    train_range: tuple = None
    seed: int = 0

    def __post_init__(self):
        self.layer_sizes = tuple(int(n) for n in self.layer_sizes)
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise DomainError("weights/biases do not match layer_sizes")
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_sizes[l + 1], self.layer_sizes[l])
            if np.shape(W) != shape or np.shape(b) != (shape[0],):
                raise DomainError(f"layer {l} has shape {np.shape(W)}, expected {shape}")
        if self.input_norm[1] == 0:
            raise DomainError("input normalization scale must be nonzero")
        if self.output_norm is None:
            n_out = self.layer_sizes[-1]
            self.output_norm = ((0.0,) * n_out, (HALF_PI,) * n_out)
        if any(sc == 0 for sc in self.output_norm[1]):
            raise DomainError("output normalization scales must be nonzero")

    @property
    def n_out(self):
        return self.layer_sizes[-1]

    def copy(self):
        return replace(self, weights=[W.copy() for W in self.weights],
                       biases=[b.copy() for b in self.biases])

    def to_dict(self):
        return {
            "layer_sizes": list(self.layer_sizes),
            "activation": self.activation,
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "input_norm": list(self.input_norm),
            "output_norm": [list(self.output_norm[0]), list(self.output_norm[1])],
            "train_range": None if self.train_range is None else list(self.train_range),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(
                layer_sizes=tuple(d["layer_sizes"]),
                weights=[np.array(W, dtype=np.float64).reshape(len(W), -1) for W in d["weights"]],
                biases=[np.array(b, dtype=np.float64) for b in d["biases"]],
                activation=d.get("activation", ACTIVATION),
                input_norm=tuple(d["input_norm"]),
                output_norm=(tuple(d["output_norm"][0]), tuple(d["output_norm"][1])),
                train_range=None if d.get("train_range") is None else tuple(d["train_range"]),
                seed=int(d.get("seed", 0)),
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise DomainError(f"malformed model document: {exc}") from exc


@dataclass
class TrainingDataset:
    m: np.ndarray
    angles: np.ndarray  # radians, (rows, s)

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=np.float64).ravel()
        self.angles = np.atleast_2d(np.asarray(self.angles, dtype=np.float64))
        if self.angles.shape[0] != self.m.shape[0]:
            raise DomainError("one angle row per modulation index is required")
        if np.unique(self.m).size != self.m.size:
            raise DomainError("modulation indices must be distinct")

    def __len__(self):
        return self.m.shape[0]

    @property
    def s(self):
        return self.angles.shape[1]

    @classmethod
    def from_table(cls, table, rows=None):
        rows = table.converged_rows() if rows is None else [r for r in rows if r.ok]
        m = [r.m for r in rows]
        ang = [r.angles_rad() for r in rows]
        return cls(np.array(m), np.array(ang).reshape(len(rows), table.s))


def holdout_split(table, every=5):
    """Withhold every ``every``-th table row; unconverged rows go nowhere."""
    train = [r for i, r in enumerate(table.rows) if i % every != every - 1]
    held = [r for i, r in enumerate(table.rows) if i % every == every - 1]
    return TrainingDataset.from_table(table, train), TrainingDataset.from_table(table, held)


def init_mlp(layer_sizes, seed=0):
    """Glorot-uniform weights, zero biases."""
    layer_sizes = tuple(int(n) for n in layer_sizes)
    if len(layer_sizes) < 2 or any(n < 1 for n in layer_sizes):
        raise DomainError("need at least two layers, each of size >= 1")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        lim = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-lim, lim, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(layer_sizes, weights, biases, seed=int(seed))


def _forward_all(model, X):
    acts = [X]
    last = len(model.weights) - 1
    for l, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = acts[-1] @ W.T + b
        acts.append(z if l == last else np.tanh(z))
    return acts


def _as_batch(model, x):
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.layer_sizes[0]:
        raise DomainError(f"input has {X.shape[1]} features, network expects {model.layer_sizes[0]}")
    return X, single


def forward(model, x):
    """Network output for normalized input ``x`` (a vector or a batch of rows)."""
    X, single = _as_batch(model, x)
    out = _forward_all(model, X)[-1]
    return out[0] if single else out


def mse(model, X, Y):
    out = _forward_all(model, np.atleast_2d(X))[-1]
    return float(np.mean((out - Y) ** 2))


def backprop(model, X, Y):
    """Loss and its gradients for the mean of squared errors over all outputs."""
    acts = _forward_all(model, X)
    diff = acts[-1] - Y
    loss = float(np.mean(diff * diff))
    delta = 2.0 * diff / diff.size
    gW = [None] * len(model.weights)
    gb = [None] * len(model.weights)
    for l in range(len(model.weights) - 1, -1, -1):
        gW[l] = delta.T @ acts[l]
        gb[l] = delta.sum(axis=0)
        if l:
            delta = (delta @ model.weights[l]) * (1.0 - acts[l] ** 2)
    return loss, gW, gb


def normalize_inputs(model, m):
    off, sc = model.input_norm
    return ((np.asarray(m, dtype=np.float64) - off) / sc).reshape(-1, 1)


def normalize_targets(model, angles):
    off, sc = (np.asarray(v) for v in model.output_norm)
    return (np.asarray(angles, dtype=np.float64) - off) / sc


def denormalize_outputs(model, out):
    off, sc = (np.asarray(v) for v in model.output_norm)
    return np.asarray(out) * sc + off


def fit_normalization(model, dataset, target_scaling="half_pi"):
    """Map the dataset's m-range onto [-1, 1] and record it as the training range.

    ``target_scaling="half_pi"`` divides every angle by pi/2;
    ``"range"`` maps each output's observed range onto [-1, 1].
    """
    lo, hi = float(dataset.m.min()), float(dataset.m.max())
    half = 0.5 * (hi - lo) if hi > lo else 1.0
    model.input_norm = (0.5 * (lo + hi), half)
    model.train_range = (lo, hi)
    if target_scaling == "half_pi":
        model.output_norm = ((0.0,) * model.n_out, (HALF_PI,) * model.n_out)
    elif target_scaling == "range":
        amin, amax = dataset.angles.min(axis=0), dataset.angles.max(axis=0)
        sc = np.where(amax > amin, 0.5 * (amax - amin), HALF_PI)
        model.output_norm = (tuple(float(v) for v in 0.5 * (amin + amax)),
                             tuple(float(v) for v in sc))
    else:
        raise DomainError(f"unknown target scaling {target_scaling!r}")
    return model


def train(model, dataset, epochs=DEFAULT_EPOCHS, learning_rate=DEFAULT_LR, target_scaling="half_pi"):
    """Full-batch gradient descent on normalized MSE.

    Returns a trained copy and the loss history (``epochs + 1`` entries, the
    first being the loss before any update). The input model is untouched.
    """
    if not learning_rate > 0:
        raise DomainError("learning_rate must be positive")
    if epochs < 0:
        raise DomainError("epochs must be >= 0")
    if len(dataset) == 0:
        raise DomainError("dataset is empty")
    if dataset.s != model.n_out:
        raise DomainError(f"dataset has {dataset.s} angles, network outputs {model.n_out}")
    model = fit_normalization(model.copy(), dataset, target_scaling)
    X = normalize_inputs(model, dataset.m)
    Y = normalize_targets(model, dataset.angles)
    history = []
    for _ in range(epochs):
        loss, gW, gb = backprop(model, X, Y)
        history.append(loss)
        for W, b, dW, db in zip(model.weights, model.biases, gW, gb):
            W -= learning_rate * dW
            b -= learning_rate * db
    history.append(mse(model, X, Y))
    return model, np.array(history)


def _flat_params(model):
    for W, b in zip(model.weights, model.biases):
        yield W
        yield b


def gradient_check(model, sample, epsilon=1e-5):
    """Worst relative gap between backprop and central differences.

    ``sample`` is (normalized input vector, normalized target vector).
    """
    x, y = sample
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    _, gW, gb = backprop(model, X, Y)
    analytic = [g for pair in zip(gW, gb) for g in pair]
    probe = model.copy()
    worst = 0.0
    for param, grad in zip(_flat_params(probe), analytic):
        flat, gflat = param.reshape(-1), grad.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + epsilon
            up = mse(probe, X, Y)
            flat[i] = keep - epsilon
            down = mse(probe, X, Y)
            flat[i] = keep
            fd = (up - down) / (2.0 * epsilon)
            scale = max(abs(fd), abs(gflat[i]))
            if scale > 0.0:
                worst = max(worst, abs(fd - gflat[i]) / scale)
    return worst


def _enforce_order(theta):
    lo, hi = EPS_ANGLE, HALF_PI - EPS_ANGLE
    t = np.clip(np.sort(theta), lo, hi)
    for k in range(1, t.size):
        t[k] = max(t[k], t[k - 1] + _ORDER_GAP)
    t[-1] = min(t[-1], hi)
    for k in range(t.size - 2, -1, -1):
        t[k] = min(t[k], t[k + 1] - _ORDER_GAP)
    return t


def predict_angles(model, m):
    """Switching angles for modulation index ``m`` (inside the training range)."""
    if model.train_range is None:
        raise DomainError("model has not been trained")
    lo, hi = model.train_range
    if not (lo - _RANGE_SLACK <= m <= hi + _RANGE_SLACK):
        raise ExtrapolationError(f"m={m} lies outside the training range [{lo}, {hi}]")
    out = forward(model, normalize_inputs(model, m)[0])
    return SwitchingAngleSet(tuple(_enforce_order(denormalize_outputs(model, out))))


def surrogate_layers(s, hidden=SURROGATE_HIDDEN):
    return (1, *hidden, s)
