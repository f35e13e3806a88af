"""Reference forward pass of the convolutional network.

Layer k maps n_k patch vectors of length d_k * p_k through convolution with
p_{k+1} filters, elementwise nonlinearity, pooling across patch positions,
and extraction of n_{k+1} windows of d_{k+1} consecutive positions. The
prediction layer is a plain inner product with the flattened final state.
Index overruns q+l in hidden-layer extraction wrap circularly by default;
"valid" restricts to windows that fit, shrinking n_{k+1}. Used to generate
target functions; there is no training here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .activations import ActivationSpec, activation, evaluate
from .errors import StructuralError
from .image import PatchedImage

BOUNDARY_MODES = ("circular", "valid")


def next_patch_count(n_k: int, d_next: int, boundary: str) -> int:
    if boundary == "circular":
        return n_k
    if boundary == "valid":
        m = n_k - d_next + 1
        if m < 1:
            raise StructuralError(
                f"valid-mode extraction of width {d_next} impossible on {n_k} positions")
        return m
    raise ValueError(f"boundary must be one of {BOUNDARY_MODES}")


@dataclass(frozen=True)
class NetworkParams:
    """Weights and size chain of an N-layer network.

    d_sizes[k], p_sizes[k], n_sizes[k] are the patch length, filter count and
    patch count feeding layer k (0-based k < N, with p_sizes[0] = 1). weights[k]
    has shape (p_{k+1}, d_k * p_k); w_out has length n_{N-1} * p_N; each
    pooling[k] is an n_k x n_k matrix of pooling factors.
    """

    d_sizes: tuple
    p_sizes: tuple  # length N+1, p_sizes[0] = 1
    n_sizes: tuple
    weights: tuple  # N matrices
    poolings: tuple  # N matrices
    w_out: np.ndarray
    boundary: str = field(default="circular")

    def __post_init__(self):
        N = len(self.weights)
        if N < 1:
            raise StructuralError("need at least one layer")
        if not (len(self.d_sizes) == len(self.n_sizes) == N
                and len(self.p_sizes) == N + 1):
            raise StructuralError("size chains inconsistent with layer count")
        if self.boundary not in BOUNDARY_MODES:
            raise ValueError(f"boundary must be one of {BOUNDARY_MODES}")
        ws = []
        for k in range(N):
            w = np.asarray(self.weights[k], dtype=float)
            want = (self.p_sizes[k + 1], self.d_sizes[k] * self.p_sizes[k])
            if w.shape != want:
                raise StructuralError(
                    f"layer {k} weights {w.shape} != expected {want}")
            ws.append(w)
        ps = []
        for k in range(N):
            g = np.asarray(self.poolings[k], dtype=float)
            if g.shape != (self.n_sizes[k], self.n_sizes[k]):
                raise StructuralError(f"layer {k} pooling shape {g.shape} "
                                      f"!= ({self.n_sizes[k]},)*2")
            ps.append(g)
        for k in range(N - 1):
            expect = next_patch_count(self.n_sizes[k], self.d_sizes[k + 1],
                                      self.boundary)
            if self.n_sizes[k + 1] != expect:
                raise StructuralError(
                    f"n_sizes[{k + 1}]={self.n_sizes[k + 1]} inconsistent with "
                    f"{self.boundary} extraction ({expect})")
        out = np.asarray(self.w_out, dtype=float)
        if out.shape != (self.n_sizes[-1] * self.p_sizes[-1],):
            raise StructuralError(
                f"prediction weights length {out.shape} != "
                f"{self.n_sizes[-1] * self.p_sizes[-1]}")
        arrays = [*ws, *ps, out]
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise ValueError("network parameters must be finite")
        for a in arrays:
            a.flags.writeable = False
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "poolings", tuple(ps))
        object.__setattr__(self, "w_out", out)

    @property
    def num_layers(self) -> int:
        return len(self.weights)


def _extract(state: np.ndarray, width: int, boundary: str) -> np.ndarray:
    """Windows of ``width`` consecutive rows of (n_k, p) state, flattened
    row-major; one window per output patch position."""
    n_k = state.shape[0]
    count = next_patch_count(n_k, width, boundary)
    rows = []
    for q in range(count):
        idx = [(q + l) % n_k for l in range(width)] if boundary == "circular" \
            else list(range(q, q + width))
        rows.append(state[idx].reshape(-1))
    return np.asarray(rows)


def forward(params: NetworkParams, activations: list, x: PatchedImage) -> float:
    """Network output <X^N, W^N> for one patched image."""
    N = params.num_layers
    if len(activations) != N:
        raise StructuralError(f"{len(activations)} activations for {N} layers")
    if x.n != params.n_sizes[0] or x.d != params.d_sizes[0]:
        raise StructuralError(
            f"input ({x.n},{x.d}) does not match network front "
            f"({params.n_sizes[0]},{params.d_sizes[0]})")
    state = x.patches  # (n_k, d_k * p_k)
    for k in range(N):
        pre = state @ params.weights[k].T          # (n_k, p_{k+1})
        post = evaluate_activation_matrix(activations[k], pre)
        pooled = params.poolings[k] @ post          # (n_k, p_{k+1})
        if k < N - 1:
            state = _extract(pooled, params.d_sizes[k + 1], params.boundary)
        else:
            state = pooled.reshape(-1)              # d_{N+1} = n_N, one patch
    return float(np.dot(state, params.w_out))


def evaluate_activation_matrix(spec: ActivationSpec, a: np.ndarray) -> np.ndarray:
    return np.asarray(evaluate(spec, a), dtype=float)


def identity_pooling(n: int) -> np.ndarray:
    return np.eye(n)


def gaussian_pooling(n: int, width: float = 1.0) -> np.ndarray:
    """Row-normalized local averaging with weights decaying in |i - j|."""
    idx = np.arange(n)
    g = np.exp(-((idx[:, None] - idx[None, :]) ** 2) / (2.0 * width ** 2))
    return g / g.sum(axis=1, keepdims=True)


def random_params(n: int, d: int, filters, patch_sizes=(), seed=0,
                  boundary: str = "circular",
                  pooling: str = "identity") -> NetworkParams:
    """Gaussian weights for the size chain implied by filters/patch_sizes.

    filters lists p_2..p_{N+1} (so N = len(filters)); patch_sizes lists the
    hidden extraction widths d_2..d_N (length N-1). Deterministic per seed.
    """
    filters = tuple(int(p) for p in filters)
    patch_sizes = tuple(int(v) for v in patch_sizes)
    N = len(filters)
    if N < 1:
        raise StructuralError("need at least one filter count")
    if len(patch_sizes) != N - 1:
        raise StructuralError(f"need {N - 1} hidden patch sizes, got {len(patch_sizes)}")
    d_sizes = [d, *patch_sizes]
    p_sizes = [1, *filters]
    n_sizes = [n]
    for k in range(N - 1):
        n_sizes.append(next_patch_count(n_sizes[k], d_sizes[k + 1], boundary))
    rng = np.random.default_rng(seed)
    weights = [rng.standard_normal((p_sizes[k + 1], d_sizes[k] * p_sizes[k]))
               / math.sqrt(d_sizes[k] * p_sizes[k])
               for k in range(N)]
    w_out = rng.standard_normal(n_sizes[-1] * p_sizes[-1])
    make_pool = identity_pooling if pooling == "identity" else gaussian_pooling
    poolings = [make_pool(n_sizes[k]) for k in range(N)]
    return NetworkParams(tuple(d_sizes), tuple(p_sizes), tuple(n_sizes),
                         tuple(weights), tuple(poolings), w_out,
                         boundary=boundary)


def params_to_dict(params: NetworkParams) -> dict:
    return {
        "d_sizes": list(params.d_sizes),
        "p_sizes": list(params.p_sizes),
        "n_sizes": list(params.n_sizes),
        "boundary": params.boundary,
        "weights": [w.reshape(-1).tolist() for w in params.weights],
        "poolings": [g.reshape(-1).tolist() for g in params.poolings],
        "w_out": params.w_out.tolist(),
    }


def params_from_dict(doc: dict) -> NetworkParams:
    d_sizes = tuple(doc["d_sizes"])
    p_sizes = tuple(doc["p_sizes"])
    n_sizes = tuple(doc["n_sizes"])
    N = len(d_sizes)
    weights = tuple(
        np.asarray(doc["weights"][k], dtype=float).reshape(
            p_sizes[k + 1], d_sizes[k] * p_sizes[k])
        for k in range(N))
    poolings = tuple(
        np.asarray(doc["poolings"][k], dtype=float).reshape(
            n_sizes[k], n_sizes[k])
        for k in range(N))
    return NetworkParams(d_sizes, p_sizes, n_sizes, weights, poolings,
                         np.asarray(doc["w_out"], dtype=float),
                         boundary=doc.get("boundary", "circular"))


def params_to_json(params: NetworkParams) -> str:
    return json.dumps(params_to_dict(params), sort_keys=True)


def params_from_json(text: str) -> NetworkParams:
    return params_from_dict(json.loads(text))


def activation_list(names) -> list:
    return [activation(nm) if isinstance(nm, str) else nm for nm in names]
