"""Feature-based neural ranking network and its backpropagation trainer.

The network scores one vertex at a time from its criterion-margin feature
vector: every hidden neuron owns a single weight and bias and reads a single
feature, the output neuron is fully connected over the hidden activations,
and both layers use the logistic sigmoid. Because the model dimension
depends only on the feature count, one trained model applies to meshes of
any vertex count.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import VertexDescriptors
from .errors import ModelFormatError, TrainingError
from .ranking import (DEFAULT_CRITERIA, StabilityRanking, criterion_margins,
                      rank_vertices)

_MAGIC = "OSVETA-FNN"
_VERSION = 1

# Robust z-scores are clipped to +/- this many scale units before being
# rescaled into [0, 1]; keeps the sigmoid out of its flat tails.
_CLIP = 5.0
_MAD_TO_SIGMA = 1.4826


def sigmoid(x: float) -> float:
    """Logistic function 1 / (1 + e^-x), overflow-safe at both tails."""
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass
class FnnModel:
    """One-weight-one-bias hidden neurons plus a fully connected output neuron."""

    hidden_w: list
    hidden_b: list
    out_w: list
    out_b: float
    eta: float = 0.1

    @property
    def n_inputs(self) -> int:
        return len(self.hidden_w)

    def copy(self) -> "FnnModel":
        return FnnModel(hidden_w=list(self.hidden_w), hidden_b=list(self.hidden_b),
                        out_w=list(self.out_w), out_b=self.out_b, eta=self.eta)


def initial_model(seed: int, eta: float = 0.1, criteria=DEFAULT_CRITERIA) -> FnnModel:
    """Fresh model: hidden weights seeded from the criterion weights, output
    weights uniform in [-0.5, 0.5], all biases zero."""
    rng = np.random.default_rng([int(seed), 0x0F])
    n = len(criteria)
    return FnnModel(hidden_w=[c.weight for c in criteria],
                    hidden_b=[0.0] * n,
                    out_w=[float(w) for w in rng.uniform(-0.5, 0.5, size=n)],
                    out_b=0.0, eta=eta)


def forward(model: FnnModel, inputs) -> tuple:
    """(hidden activations, output score) for one feature vector."""
    if len(inputs) != model.n_inputs:
        raise ValueError(f"expected {model.n_inputs} inputs, got {len(inputs)}")
    hidden = [sigmoid(w * x + b)
              for w, b, x in zip(model.hidden_w, model.hidden_b, inputs)]
    net = model.out_b + sum(w * h for w, h in zip(model.out_w, hidden))
    return hidden, sigmoid(net)


@dataclass(frozen=True)
class TrainingSample:
    """Normalized feature vector plus a target stability in [0, 1]."""

    inputs: tuple
    target: float


@dataclass
class GradientStep:
    """Per-parameter update deltas, already scaled by the learning rate."""

    d_hidden_w: list
    d_hidden_b: list
    d_out_w: list
    d_out_b: float


def gradients(model: FnnModel, sample: TrainingSample) -> GradientStep:
    """Backpropagation deltas for one sample.

    delta_k = (t - o) * g'(net_out); output weights move by eta * delta_k * h_j.
    delta_j = delta_k * w_kj * g'(net_j); hidden weights move by eta * delta_j * x_j.
    Biases behave as weights on a constant unit input.
    """
    hidden, out = forward(model, sample.inputs)
    delta_k = (sample.target - out) * out * (1.0 - out)
    eta = model.eta
    d_out_w = [eta * delta_k * h for h in hidden]
    d_out_b = eta * delta_k
    d_hidden_w = []
    d_hidden_b = []
    for j, (h, x) in enumerate(zip(hidden, sample.inputs)):
        delta_j = delta_k * model.out_w[j] * h * (1.0 - h)
        d_hidden_w.append(eta * delta_j * x)
        d_hidden_b.append(eta * delta_j)
    return GradientStep(d_hidden_w=d_hidden_w, d_hidden_b=d_hidden_b,
                        d_out_w=d_out_w, d_out_b=d_out_b)


def apply_step(model: FnnModel, step: GradientStep) -> None:
    for j in range(model.n_inputs):
        model.hidden_w[j] += step.d_hidden_w[j]
        model.hidden_b[j] += step.d_hidden_b[j]
        model.out_w[j] += step.d_out_w[j]
    model.out_b += step.d_out_b


@dataclass
class TrainingReport:
    """Mean per-sample loss for each epoch, the trained model, and the seed."""

    losses: list
    model: FnnModel
    seed: int
    epochs: int = field(init=False)

    def __post_init__(self):
        self.epochs = len(self.losses)


def train(model: FnnModel, samples, epochs: int, seed: int) -> TrainingReport:
    """Stochastic per-sample training in seeded shuffled order.

    The input model is not mutated. Deterministic for a fixed
    (model, samples, epochs, seed); raises TrainingError on non-finite loss.
    """
    if not samples:
        raise ValueError("training needs at least one sample")
    work = model.copy()
    rng = np.random.default_rng([int(seed), 0x7E])
    losses = []
    n = len(samples)
    for epoch in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for i in order:
            sample = samples[int(i)]
            _, out = forward(work, sample.inputs)
            total += 0.5 * (sample.target - out) ** 2
            apply_step(work, gradients(work, sample))
        mean_loss = total / n
        if not math.isfinite(mean_loss):
            raise TrainingError("training diverged (non-finite loss)", epoch=epoch + 1)
        losses.append(mean_loss)
    return TrainingReport(losses=losses, model=work, seed=int(seed))


# ---------------------------------------------------------------------------
# Feature construction
# ---------------------------------------------------------------------------

def feature_matrix(desc: VertexDescriptors, criteria=DEFAULT_CRITERIA) -> np.ndarray:
    """Per-mesh normalized criterion margins, the network's input rows.

    Each margin column is robust-z-scored over the rankable vertices
    (median/MAD, falling back to the standard deviation on degenerate MAD),
    clipped to +/- _CLIP and rescaled into [0, 1].
    """
    margins = criterion_margins(desc, criteria)
    rankable = desc.rankable()
    ref = margins[rankable] if len(rankable) else margins
    out = np.empty_like(margins)
    for k in range(margins.shape[1]):
        col = margins[:, k]
        med = float(np.median(ref[:, k])) if len(ref) else 0.0
        scale = _MAD_TO_SIGMA * float(np.median(np.abs(ref[:, k] - med))) if len(ref) else 0.0
        if scale == 0.0:
            scale = float(np.std(ref[:, k])) if len(ref) else 0.0
        if scale == 0.0:
            z = np.zeros_like(col)
        else:
            z = np.clip((col - med) / scale, -_CLIP, _CLIP)
        out[:, k] = (z + _CLIP) / (2.0 * _CLIP)
    return out


def make_samples(desc: VertexDescriptors, targets, criteria=DEFAULT_CRITERIA):
    """TrainingSamples for every rankable vertex, targets aligned by index."""
    features = feature_matrix(desc, criteria)
    return [TrainingSample(inputs=tuple(features[v]), target=float(targets[v]))
            for v in desc.rankable()]


def rank_neuro(model: FnnModel, desc: VertexDescriptors,
               criteria=DEFAULT_CRITERIA) -> StabilityRanking:
    """Score every rankable vertex with the network and sort descending."""
    features = feature_matrix(desc, criteria)
    scores = np.zeros(len(desc))
    rankable = desc.rankable()
    for v in rankable:
        _, scores[v] = forward(model, tuple(features[v]))
    excluded = np.flatnonzero(desc.flags != 0)
    if len(excluded):
        scores[excluded] = -1.0
    return rank_vertices(scores, excluded=excluded)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def dumps_model(model: FnnModel) -> str:
    def row(name, values):
        return name + " " + " ".join(f"{v:.17g}" for v in values)

    lines = [f"{_MAGIC} {_VERSION}",
             str(model.n_inputs),
             f"eta {model.eta:.17g}",
             row("hidden_w", model.hidden_w),
             row("hidden_b", model.hidden_b),
             row("out_w", model.out_w),
             f"out_b {model.out_b:.17g}"]
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> FnnModel:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 7:
        raise ModelFormatError(f"model file truncated ({len(lines)} lines)")
    head = lines[0].split()
    if len(head) != 2 or head[0] != _MAGIC:
        raise ModelFormatError(f"bad magic line {lines[0]!r}")
    if int(head[1]) != _VERSION:
        raise ModelFormatError(f"unsupported model version {head[1]}")
    try:
        n = int(lines[1])
    except ValueError:
        raise ModelFormatError(f"bad descriptor count {lines[1]!r}") from None

    fields = {}
    for ln in lines[2:]:
        parts = ln.split()
        fields[parts[0]] = [float(p) for p in parts[1:]]
    try:
        model = FnnModel(hidden_w=fields["hidden_w"], hidden_b=fields["hidden_b"],
                         out_w=fields["out_w"], out_b=fields["out_b"][0],
                         eta=fields["eta"][0])
    except (KeyError, IndexError, ValueError) as exc:
        raise ModelFormatError(f"missing or malformed field: {exc}") from None
    for name in ("hidden_w", "hidden_b", "out_w"):
        if len(fields[name]) != n:
            raise ModelFormatError(
                f"{name} has {len(fields[name])} values, header says {n}")
    return model


def dumps_samples(samples) -> str:
    """CSV export of a training set: feature columns then the target."""
    if not samples:
        return "target\n"
    n = len(samples[0].inputs)
    header = ",".join(f"f{k}" for k in range(n)) + ",target"
    lines = [header]
    for s in samples:
        lines.append(",".join(f"{v:.17g}" for v in s.inputs) + f",{s.target:.17g}")
    return "\n".join(lines) + "\n"


def loads_samples(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    samples = []
    for ln in lines[1:]:
        vals = [float(p) for p in ln.split(",")]
        samples.append(TrainingSample(inputs=tuple(vals[:-1]), target=vals[-1]))
    return samples
