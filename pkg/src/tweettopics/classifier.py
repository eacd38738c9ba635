"""Multi-label head: batch norm -> dropout -> linear -> per-label sigmoid.

The output bias is initialized to ln(pos/neg) per label so that a zero-weight
model starts at label prevalence, which stabilizes early training on
imbalanced data. Snapshots serialize to a single self-describing binary file
with bit-exact round-trips.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .features import ExtractorConfig, FeatureVector
from .labels import N_TOPICS, TOPICS, LabelStats, TopicLabels

BN_EPS = 1e-5
BN_MOMENTUM = 0.99
DROPOUT_RATE = 0.5

SNAPSHOT_MAGIC = b"TTSNAP01"
SNAPSHOT_FORMAT_VERSION = 1

# Array order in the snapshot payload; all little-endian float64.
_ARRAY_ORDER = ("bn_gamma", "bn_beta", "bn_running_mean", "bn_running_var", "W", "b", "threshold")


def init_bias(stats: LabelStats) -> np.ndarray:
    """Per-label output bias b[k] = ln(pos[k]/neg[k]).

    With zero weights, sigmoid(b[k]) is exactly the label prevalence.
    Raises on zero counts; apply add-one smoothing (LabelStats.smoothed)
    and retry when a label has no positives or no negatives.
    """
    pos = np.asarray(stats.pos, dtype=np.float64)
    neg = np.asarray(stats.neg, dtype=np.float64)
    if np.any(pos == 0) or np.any(neg == 0):
        bad = [TOPICS[k] if k < len(TOPICS) else str(k)
               for k in np.flatnonzero((pos == 0) | (neg == 0))]
        raise ValueError(
            f"zero positive or negative count for {bad}; "
            "apply add-one label smoothing (LabelStats.smoothed) before init_bias"
        )
    return np.log(pos / neg)


@dataclass(frozen=True)
class ModelSnapshot:
    """Immutable trained model: extractor config + BN stats + linear head."""

    extractor: ExtractorConfig
    bn_gamma: np.ndarray
    bn_beta: np.ndarray
    bn_running_mean: np.ndarray
    bn_running_var: np.ndarray
    W: np.ndarray
    b: np.ndarray
    threshold: np.ndarray
    version: str = "v0"
    trained_on: str = ""

    def __post_init__(self):
        d = self.extractor.dim
        k = self.W.shape[1]
        shapes = {
            "bn_gamma": (d,), "bn_beta": (d,), "bn_running_mean": (d,),
            "bn_running_var": (d,), "W": (d, k), "b": (k,), "threshold": (k,),
        }
        for name, want in shapes.items():
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if arr.shape != want:
                raise ValueError(f"{name}: expected shape {want}, got {arr.shape}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if np.any(self.bn_running_var <= 0):
            raise ValueError("bn_running_var entries must be > 0")
        if np.any((self.threshold <= 0) | (self.threshold >= 1)):
            raise ValueError("thresholds must lie in (0, 1)")

    @property
    def dim(self) -> int:
        return self.extractor.dim

    @property
    def n_labels(self) -> int:
        return self.W.shape[1]

    @classmethod
    def initial(cls, extractor: ExtractorConfig, bias: np.ndarray,
                n_labels: int = N_TOPICS, version: str = "v0",
                trained_on: str = "") -> "ModelSnapshot":
        """Zero-weight snapshot with identity BN and the given output bias."""
        d = extractor.dim
        bias = np.asarray(bias, dtype=np.float64)
        if bias.shape != (n_labels,):
            raise ValueError(f"bias must have shape ({n_labels},)")
        return cls(
            extractor=extractor,
            bn_gamma=np.ones(d),
            bn_beta=np.zeros(d),
            bn_running_mean=np.zeros(d),
            bn_running_var=np.ones(d),
            W=np.zeros((d, n_labels)),
            b=bias.copy(),
            threshold=np.full(n_labels, 0.5),
            version=version,
            trained_on=trained_on,
        )

    def with_version(self, version: str, trained_on: str | None = None) -> "ModelSnapshot":
        return replace(self, version=version,
                       trained_on=self.trained_on if trained_on is None else trained_on)


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_from_logits(z: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy over all (sample, label) cells, from logits."""
    per_cell = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    return float(np.mean(per_cell))


def densify(xs: list[FeatureVector], dim: int) -> np.ndarray:
    """Stack sparse vectors into a dense (B, dim) float64 matrix."""
    X = np.zeros((len(xs), dim))
    for i, x in enumerate(xs):
        if x.dim != dim:
            raise ValueError(f"feature dim {x.dim} does not match model dim {dim}")
        if x.entries:
            idx = np.fromiter(x.entries.keys(), dtype=np.int64, count=len(x.entries))
            val = np.fromiter(x.entries.values(), dtype=np.float64, count=len(x.entries))
            X[i, idx] = val
    return X


def forward_infer(X: np.ndarray, snap: ModelSnapshot) -> np.ndarray:
    """Inference probabilities: running BN statistics, no dropout."""
    xhat = (X - snap.bn_running_mean) / np.sqrt(snap.bn_running_var + BN_EPS)
    h = snap.bn_gamma * xhat + snap.bn_beta
    return sigmoid(h @ snap.W + snap.b)


@dataclass
class TrainForwardCache:
    """Intermediates needed for the analytic backward pass."""

    xhat: np.ndarray
    masked: np.ndarray
    logits: np.ndarray
    probs: np.ndarray
    batch_mean: np.ndarray
    batch_var: np.ndarray


def sample_dropout_mask(shape: tuple[int, int], rng: np.random.Generator,
                        rate: float = DROPOUT_RATE) -> np.ndarray:
    """Bernoulli keep mask scaled by 1/(1-rate)."""
    return (rng.random(shape) >= rate).astype(np.float64) / (1.0 - rate)


def forward_train(X: np.ndarray, gamma: np.ndarray, beta: np.ndarray,
                  W: np.ndarray, b: np.ndarray,
                  dropout_mask: np.ndarray) -> TrainForwardCache:
    """Training-mode forward: batch BN statistics, explicit dropout mask.

    The mask is applied as given (an all-ones mask disables dropout); use
    sample_dropout_mask for the standard scaled Bernoulli mask.
    """
    batch_mean = X.mean(axis=0)
    batch_var = X.var(axis=0)  # biased, standard for BN
    xhat = (X - batch_mean) / np.sqrt(batch_var + BN_EPS)
    h = gamma * xhat + beta
    masked = h * dropout_mask
    logits = masked @ W + b
    return TrainForwardCache(
        xhat=xhat, masked=masked, logits=logits, probs=sigmoid(logits),
        batch_mean=batch_mean, batch_var=batch_var,
    )


def backward(cache: TrainForwardCache, Y: np.ndarray, W: np.ndarray,
             dropout_mask: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of mean BCE w.r.t. W, b, bn_gamma, bn_beta.

    Batch statistics depend only on the inputs, so parameter gradients do
    not require the BN input backward.
    """
    B, K = cache.logits.shape
    dz = (cache.probs - Y) / (B * K)
    dW = cache.masked.T @ dz
    db = dz.sum(axis=0)
    dmasked = dz @ W.T
    dh = dmasked * dropout_mask
    dgamma = (dh * cache.xhat).sum(axis=0)
    dbeta = dh.sum(axis=0)
    return {"W": dW, "b": db, "bn_gamma": dgamma, "bn_beta": dbeta}


def forward(x: FeatureVector, snap: ModelSnapshot) -> np.ndarray:
    """Single-example inference probabilities."""
    return forward_infer(densify([x], snap.dim), snap)[0]


def predict(x: FeatureVector, snap: ModelSnapshot) -> TopicLabels:
    """Threshold inference probabilities; ties (p == threshold) count positive."""
    probs = forward(x, snap)
    return TopicLabels(tuple(bool(p >= t) for p, t in zip(probs, snap.threshold)))


def predict_batch(xs: list[FeatureVector], snap: ModelSnapshot) -> list[TopicLabels]:
    probs = forward_infer(densify(xs, snap.dim), snap)
    return [
        TopicLabels(tuple(bool(p >= t) for p, t in zip(row, snap.threshold)))
        for row in probs
    ]


def snapshot_to_bytes(snap: ModelSnapshot) -> bytes:
    """Serialize: magic, length-prefixed JSON header, raw little-endian float64 arrays."""
    header = {
        "format_version": SNAPSHOT_FORMAT_VERSION,
        "extractor": snap.extractor.to_dict(),
        "dim": snap.dim,
        "n_labels": snap.n_labels,
        "topics": list(TOPICS) if snap.n_labels == N_TOPICS else None,
        "bn_eps": BN_EPS,
        "bn_momentum": BN_MOMENTUM,
        "dropout_rate": DROPOUT_RATE,
        "version": snap.version,
        "trained_on": snap.trained_on,
        "arrays": list(_ARRAY_ORDER),
    }
    header_bytes = json.dumps(header, ensure_ascii=False).encode("utf-8")
    parts = [SNAPSHOT_MAGIC, struct.pack("<I", len(header_bytes)), header_bytes]
    for name in _ARRAY_ORDER:
        parts.append(np.ascontiguousarray(getattr(snap, name), dtype="<f8").tobytes())
    return b"".join(parts)


def save_snapshot(snap: ModelSnapshot, path: str | Path) -> None:
    Path(path).write_bytes(snapshot_to_bytes(snap))


def snapshot_from_bytes(data: bytes) -> ModelSnapshot:
    if data[: len(SNAPSHOT_MAGIC)] != SNAPSHOT_MAGIC:
        raise ValueError("not a model snapshot (bad magic)")
    off = len(SNAPSHOT_MAGIC)
    (header_len,) = struct.unpack_from("<I", data, off)
    off += 4
    header = json.loads(data[off : off + header_len].decode("utf-8"))
    off += header_len
    if header["format_version"] != SNAPSHOT_FORMAT_VERSION:
        raise ValueError(f"unsupported snapshot format version {header['format_version']}")
    d, k = header["dim"], header["n_labels"]
    sizes = {
        "bn_gamma": d, "bn_beta": d, "bn_running_mean": d, "bn_running_var": d,
        "W": d * k, "b": k, "threshold": k,
    }
    arrays = {}
    for name in header["arrays"]:
        count = sizes[name]
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=off).copy()
        off += count * 8
        arrays[name] = arr.reshape((d, k)) if name == "W" else arr
    return ModelSnapshot(
        extractor=ExtractorConfig.from_dict(header["extractor"]),
        version=header["version"],
        trained_on=header["trained_on"],
        **arrays,
    )


def load_snapshot(path: str | Path) -> ModelSnapshot:
    return snapshot_from_bytes(Path(path).read_bytes())
