"""Small multilayer perceptron used as reward predictor and as the
retrainable spatial scheduling inference.

Plain numpy: rectified-linear hidden layers, identity output, full-batch
gradient descent on mean squared error, central-difference gradient
verification, bit-exact weight transfer between identical architectures
and a commit gate that only adopts a retrained network when its held-out
validation metric does not degrade.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .models import AppModel, ContextEvent, PlatformModel
from .priorities import InferenceAdapter, PriorityAssignment, b_level


class DimensionMismatchError(ValueError):
    """Input/target size does not match the network architecture."""


class ArchitectureMismatchError(ValueError):
    """Weight transfer between networks with different layer sizes."""


class EmptyValidationSetError(ValueError):
    """The commit gate needs at least one held-out scenario."""


class NonFiniteLossError(FloatingPointError):
    """Training diverged to a non-finite loss."""


@dataclass
class Mlp:
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]  # per layer, shape (fan_in, fan_out)
    biases: list[np.ndarray]

    @classmethod
    def initialize(cls, layer_sizes, seed: int | None = None) -> "Mlp":
        """Seeded init, uniform in +-1/sqrt(fan_in) per layer."""
        sizes = tuple(int(n) for n in layer_sizes)
        if len(sizes) < 2 or any(n < 1 for n in sizes):
            raise DimensionMismatchError(f"bad layer sizes {sizes}")
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(sizes, weights, biases)

    @classmethod
    def zeros(cls, layer_sizes) -> "Mlp":
        sizes = tuple(int(n) for n in layer_sizes)
        return cls(sizes,
                   [np.zeros((a, b)) for a, b in zip(sizes, sizes[1:])],
                   [np.zeros(b) for b in sizes[1:]])

    def copy(self) -> "Mlp":
        return Mlp(self.layer_sizes,
                   [w.copy() for w in self.weights],
                   [b.copy() for b in self.biases])

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]


def _forward_batch(net: Mlp, X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Returns outputs and per-layer post-activations (inputs first)."""
    acts = [X]
    h = X
    last = len(net.weights) - 1
    for i, (W, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ W + b
        h = z if i == last else np.maximum(0.0, z)
        acts.append(h)
    return h, acts


def forward(net: Mlp, x) -> np.ndarray:
    """Single forward pass; rectifier hidden layers, identity output."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.input_size,):
        raise DimensionMismatchError(
            f"input has shape {x.shape}, expected ({net.input_size},)")
    out, _ = _forward_batch(net, x[None, :])
    return out[0]


def _as_batches(net: Mlp, samples) -> tuple[np.ndarray, np.ndarray]:
    if not samples:
        raise DimensionMismatchError("no training samples")
    X = np.asarray([np.asarray(x, dtype=float) for x, _ in samples])
    T = np.asarray([np.atleast_1d(np.asarray(t, dtype=float))
                    for _, t in samples])
    if X.shape[1] != net.input_size or T.shape[1] != net.output_size:
        raise DimensionMismatchError(
            f"samples of shape {X.shape[1]}->{T.shape[1]} do not fit "
            f"network {net.input_size}->{net.output_size}")
    return X, T


def mse_loss(net: Mlp, samples) -> float:
    X, T = _as_batches(net, samples)
    out, _ = _forward_batch(net, X)
    return float(np.mean((out - T) ** 2))


def _gradients(net: Mlp, X: np.ndarray, T: np.ndarray):
    out, acts = _forward_batch(net, X)
    n, d = T.shape
    delta = 2.0 * (out - T) / (n * d)  # d(mean sq err)/d(out)
    grads_w, grads_b = [], []
    for i in range(len(net.weights) - 1, -1, -1):
        a_in = acts[i]
        grads_w.append(a_in.T @ delta)
        grads_b.append(delta.sum(axis=0))
        if i > 0:
            delta = (delta @ net.weights[i].T) * (acts[i] > 0)
    return list(reversed(grads_w)), list(reversed(grads_b))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    iterations: int = 100

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")


@dataclass
class TrainResult:
    net: Mlp
    losses: list[float]


def train(net: Mlp, samples, cfg: TrainConfig) -> TrainResult:
    """Full-batch gradient descent on mean squared error.

    Returns a new network; the input parameters are untouched.  The loss
    before each update is recorded per iteration; a non-finite loss aborts
    with diagnostics.
    """
    X, T = _as_batches(net, samples)
    out = net.copy()
    losses: list[float] = []
    for it in range(cfg.iterations):
        pred, _ = _forward_batch(out, X)
        loss = float(np.mean((pred - T) ** 2))
        if not np.isfinite(loss):
            raise NonFiniteLossError(
                f"loss became non-finite at iteration {it} "
                f"(learning_rate={cfg.learning_rate}, samples={len(samples)})")
        losses.append(loss)
        gw, gb = _gradients(out, X, T)
        for W, b, dW, db in zip(out.weights, out.biases, gw, gb):
            W -= cfg.learning_rate * dW
            b -= cfg.learning_rate * db
    return TrainResult(net=out, losses=losses)


def gradient_check(net: Mlp, sample, h: float | None = None) -> float:
    """Max relative error between analytic and central-difference gradients.

    Perturbation defaults to 1e-5 scaled to each parameter's magnitude.
    """
    x, t = sample
    X = np.asarray(x, dtype=float)[None, :]
    T = np.atleast_1d(np.asarray(t, dtype=float))[None, :]
    gw, gb = _gradients(net, X, T)
    analytic = np.concatenate([g.ravel() for g in gw + gb])
    work = net.copy()
    params = work.weights + work.biases
    numeric = np.empty_like(analytic)
    k = 0
    for arr in params:
        flat = arr.ravel()
        for i in range(flat.size):
            orig = flat[i]
            step = (h if h is not None else 1e-5 * max(1.0, abs(orig)))
            flat[i] = orig + step
            up = mse_loss(work, [(x, t)])
            flat[i] = orig - step
            down = mse_loss(work, [(x, t)])
            flat[i] = orig
            numeric[k] = (up - down) / (2 * step)
            k += 1
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-12)
    rel = np.abs(analytic - numeric) / denom
    rel[(analytic == 0.0) & (numeric == 0.0)] = 0.0
    return float(rel.max())


def transfer_weights(source: Mlp, target: Mlp) -> Mlp:
    """Copy parameters into a network of identical architecture, bit-exact."""
    if tuple(source.layer_sizes) != tuple(target.layer_sizes):
        raise ArchitectureMismatchError(
            f"cannot transfer {source.layer_sizes} -> {target.layer_sizes}")
    return source.copy()


# ---------------------------------------------------------------------------
# Binary parameter serialization
# ---------------------------------------------------------------------------

_MAGIC = b"TTNN"
_VERSION = 1


def weights_to_bytes(net: Mlp) -> bytes:
    """Versioned flat layout: header with layer sizes, then row-major
    weights and biases per layer as little-endian 64-bit floats."""
    parts = [_MAGIC, struct.pack("<II", _VERSION, len(net.layer_sizes))]
    parts.append(struct.pack(f"<{len(net.layer_sizes)}I", *net.layer_sizes))
    for W, b in zip(net.weights, net.biases):
        parts.append(np.ascontiguousarray(W, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(parts)


def weights_from_bytes(data: bytes) -> Mlp:
    if data[:4] != _MAGIC:
        raise ValueError("bad magic in weight blob")
    version, n = struct.unpack_from("<II", data, 4)
    if version != _VERSION:
        raise ValueError(f"unsupported weight-blob version {version}")
    sizes = struct.unpack_from(f"<{n}I", data, 12)
    off = 12 + 4 * n
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        count = fan_in * fan_out
        W = np.frombuffer(data, dtype="<f8", count=count, offset=off)
        off += 8 * count
        b = np.frombuffer(data, dtype="<f8", count=fan_out, offset=off)
        off += 8 * fan_out
        weights.append(W.reshape(fan_in, fan_out).copy())
        biases.append(b.copy())
    return Mlp(tuple(sizes), weights, biases)


def save_weights(net: Mlp, path) -> None:
    with open(path, "wb") as f:
        f.write(weights_to_bytes(net))


def load_weights(path) -> Mlp:
    with open(path, "rb") as f:
        return weights_from_bytes(f.read())


# ---------------------------------------------------------------------------
# Context features and the neural spatial inference
# ---------------------------------------------------------------------------

class FeatureDimensionError(ValueError):
    """Scenario does not fit the fixed feature-vector dimensions."""


@dataclass(frozen=True)
class FeatureSpec:
    """Fixed maximum sizes the feature vector is padded to.

    ``include_levels`` appends the normalized bottom-level of every task,
    giving a structure-aware encoding for the spatial inference; the plain
    layout stays the default for contextual-bandit features.
    """

    max_tasks: int = 32
    max_es: int = 8
    include_levels: bool = False

    @property
    def length(self) -> int:
        n = self.max_tasks + 2 * self.max_es + 5
        if self.include_levels:
            n += self.max_tasks
        return n

    @property
    def head_size(self) -> int:
        """Output size of a spatial-inference head: one score per
        (task slot, end-system slot) pair."""
        return self.max_tasks * self.max_es


def build_context_features(
    am: AppModel,
    pm: PlatformModel,
    event: ContextEvent | None = None,
    es_loads: dict[int, int] | None = None,
    spec: FeatureSpec = FeatureSpec(),
) -> np.ndarray:
    """Flat scenario encoding in [0, 1].

    Concatenates the normalized wcet vector (task-id order, zero-padded),
    per-end-system availability bits, per-end-system normalized load, and
    the decoded context-event fields scaled to [0, 1] (zeros if no event).
    With ``spec.include_levels`` set, the normalized bottom-level vector
    follows.
    """
    task_ids = sorted(am.tasks)
    es_ids = sorted(pm.end_systems)
    if len(task_ids) > spec.max_tasks or len(es_ids) > spec.max_es:
        raise FeatureDimensionError(
            f"{len(task_ids)} tasks / {len(es_ids)} end systems exceed "
            f"feature spec {spec.max_tasks}/{spec.max_es}")
    feats = np.zeros(spec.length)
    wmax = max((am.tasks[t].wcet for t in task_ids), default=1)
    for i, t in enumerate(task_ids):
        feats[i] = am.tasks[t].wcet / wmax
    off = spec.max_tasks
    for i, es in enumerate(es_ids):
        feats[off + i] = 1.0 if pm.end_systems[es] else 0.0
    off += spec.max_es
    if es_loads:
        lmax = max(es_loads.values()) or 1
        for i, es in enumerate(es_ids):
            feats[off + i] = es_loads.get(es, 0) / lmax
    off += spec.max_es
    if event is not None:
        feats[off:off + 5] = (event.kind / 7.0, event.value / 7.0,
                              event.affected_task / 1023.0,
                              event.timestamp / 1023.0, event.hw_id / 63.0)
    off += 5
    if spec.include_levels:
        levels = b_level(am)
        lmax = max(levels.values(), default=1) or 1
        for i, t in enumerate(task_ids):
            feats[off + i] = levels[t] / lmax
    return feats


class NeuralSpatialAdapter(InferenceAdapter):
    """Spatial inference backed by an Mlp scoring (task, end-system) pairs.

    The network maps the context feature vector to one score per pair over
    the fixed maximum sizes; each task goes to its highest-scoring
    available end system (ties toward the lowest id).  Temporal priorities
    stay with the bottom-level ranking.
    """

    def __init__(self, net: Mlp, spec: FeatureSpec = FeatureSpec()):
        if net.input_size != spec.length or net.output_size != spec.head_size:
            raise ArchitectureMismatchError(
                f"network {net.layer_sizes} does not match feature spec "
                f"({spec.length} -> {spec.head_size})")
        self.net = net
        self.spec = spec

    def infer(self, am, pm, cm_window=()):
        event = cm_window[-1] if cm_window else None
        feats = build_context_features(am, pm, event, spec=self.spec)
        scores = forward(self.net, feats).reshape(
            self.spec.max_tasks, self.spec.max_es)
        es_ids = sorted(pm.end_systems)
        avail_cols = [i for i, es in enumerate(es_ids) if pm.end_systems[es]]
        if not avail_cols:
            raise FeatureDimensionError("no available end system to score")
        spatial: dict[int, int] = {}
        for row, tid in enumerate(sorted(am.tasks)):
            col = max(avail_cols, key=lambda c: (scores[row, c], -c))
            spatial[tid] = es_ids[col]
        temporal = {t: float(v) for t, v in b_level(am).items()}
        return PriorityAssignment(temporal=temporal, spatial=spatial)


@dataclass
class CommitDecision:
    committed: bool
    chosen: Mlp
    candidate_metric: float
    incumbent_metric: float


def commit_if_improved(candidate: Mlp, incumbent: Mlp, validation_set,
                       spec: FeatureSpec = FeatureSpec()) -> CommitDecision:
    """Adopt the candidate only if it does not degrade held-out quality.

    The validation metric is the mean makespan obtained by reconstructing
    each held-out scenario with the network as spatial inference; the
    candidate is committed when its metric is <= the incumbent's (ties go
    to the candidate).  The validation scenarios must never have been part
    of the training set.
    """
    from .reconstruction import reconstruct  # local import, avoids cycle

    if not validation_set:
        raise EmptyValidationSetError("validation set is empty")

    def metric(net: Mlp) -> float:
        adapter = NeuralSpatialAdapter(net, spec)
        total = 0.0
        for am, pm in validation_set:
            pri = adapter.infer(am, pm)
            pri.validate(am, pm)
            total += reconstruct(am, pm, pri).makespan
        return total / len(validation_set)

    cand_metric = metric(candidate)
    inc_metric = metric(incumbent)
    committed = cand_metric <= inc_metric
    return CommitDecision(
        committed=committed,
        chosen=candidate.copy() if committed else incumbent.copy(),
        candidate_metric=cand_metric,
        incumbent_metric=inc_metric,
    )
