"""Small tanh MLPs with hand-rolled reverse-mode gradients, Adam, and checkpoint IO.

Everything is float64 numpy. Networks are deliberately minimal: affine
layers with tanh hidden activations and a linear output, which is all the
actors and critics here need.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0

CHECKPOINT_MAGIC = b"MODRL1\n"


def orthogonal(rows: int, cols: int, rng: np.random.Generator, gain: float = 1.0) -> np.ndarray:
    """Orthogonal weight matrix via QR of a Gaussian draw."""
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))  # fix QR sign ambiguity for determinism
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


class Mlp:
    """Feed-forward net: tanh hidden layers, linear output.

    ``forward`` caches activations so ``backward`` can produce exact
    gradients for every weight/bias plus the input.
    """

    def __init__(self, layer_sizes: list[int], rng: np.random.Generator,
                 final_scale: float = 1.0):
        if len(layer_sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.layer_sizes = list(layer_sizes)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        n_layers = len(layer_sizes) - 1
        for i in range(n_layers):
            gain = final_scale if i == n_layers - 1 else 1.0
            self.weights.append(orthogonal(layer_sizes[i + 1], layer_sizes[i], rng, gain))
            self.biases.append(np.zeros(layer_sizes[i + 1]))
        self._cache: list[np.ndarray] | None = None

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def forward(self, x: np.ndarray, cache: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        a = x.reshape(1, -1) if squeeze else x
        if a.shape[1] != self.in_dim:
            raise ValueError(f"input dim {a.shape[1]} != expected {self.in_dim}")
        activations = [a]
        n_layers = len(self.weights)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w.T + b
            a = z if i == n_layers - 1 else np.tanh(z)
            activations.append(a)
        self._cache = activations if cache else None
        return a[0] if squeeze else a

    def __call__(self, x: np.ndarray, cache: bool = False) -> np.ndarray:
        return self.forward(x, cache=cache)

    def backward(self, dout: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        """Gradients of a scalar loss given dL/d(output).

        Returns (parameter gradients in ``parameters()`` order, dL/d(input)).
        Requires a preceding ``forward(..., cache=True)``.
        """
        if self._cache is None:
            raise RuntimeError("backward called without a cached forward pass")
        acts = self._cache
        delta = np.asarray(dout, dtype=float)
        if delta.ndim == 1:
            delta = delta.reshape(1, -1)
        grads_w: list[np.ndarray] = [None] * len(self.weights)
        grads_b: list[np.ndarray] = [None] * len(self.biases)
        for i in range(len(self.weights) - 1, -1, -1):
            a_prev = acts[i]
            grads_w[i] = delta.T @ a_prev
            grads_b[i] = delta.sum(axis=0)
            dx = delta @ self.weights[i]
            if i > 0:
                dx = dx * (1.0 - acts[i] ** 2)  # tanh'
            delta = dx
        grads = []
        for gw, gb in zip(grads_w, grads_b):
            grads.append(gw)
            grads.append(gb)
        return grads, delta

    def copy(self) -> "Mlp":
        clone = Mlp.__new__(Mlp)
        clone.layer_sizes = list(self.layer_sizes)
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        clone._cache = None
        return clone


class Adam:
    """Bias-corrected Adam over a fixed list of parameter arrays (updated in place)."""

    def __init__(self, params: list[np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._params = params
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        if len(grads) != len(self._params):
            raise ValueError("gradient list does not match parameter list")
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for p, g, m, v in zip(self._params, grads, self.m, self.v):
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def clamp_log_std(log_std: np.ndarray) -> np.ndarray:
    np.clip(log_std, LOG_STD_MIN, LOG_STD_MAX, out=log_std)
    return log_std


# --- checkpoint serialization -------------------------------------------------
#
# Layout: magic line, one JSON header line (kind, metadata, array manifest),
# then the raw row-major float64 little-endian bytes of each array in
# manifest order. Self-describing enough to load from any language.

def save_checkpoint(path: str | Path, kind: str, arrays: dict[str, np.ndarray],
                    meta: dict | None = None) -> None:
    path = Path(path)
    manifest = [{"name": k, "shape": list(v.shape)} for k, v in arrays.items()]
    header = {
        "format": "modrl-checkpoint",
        "version": 1,
        "kind": kind,
        "dtype": "<f8",
        "arrays": manifest,
        "meta": meta or {},
    }
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for v in arrays.values():
            fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())


class CheckpointFormatError(ValueError):
    pass


def load_checkpoint(path: str | Path) -> tuple[str, dict[str, np.ndarray], dict]:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointFormatError(f"{path}: bad magic, not a modrl checkpoint")
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise CheckpointFormatError(f"{path}: unreadable header") from exc
        if header.get("version") != 1:
            raise CheckpointFormatError(f"{path}: unsupported format version {header.get('version')}")
        arrays: dict[str, np.ndarray] = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise CheckpointFormatError(f"{path}: truncated array {entry['name']}")
            arrays[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return header["kind"], arrays, header.get("meta", {})
