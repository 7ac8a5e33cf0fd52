"""Neural gain schedule: an MLP from normalised flight condition to gains.

The network maps the 3-vector (|alpha|/alpha_max, M/M_max, h/h_max) through
tanh layers to the gain triplet (K_A, K_I, K_R). An optional scaling layer
``lower + (upper - lower) * sigmoid(x)`` bounds each output inside a
designer-chosen interval, which fixes gain signs and caps magnitudes.

Parameters live in one flat vector (per layer: row-major weights, then
biases) so optimisers and the adjoint machinery see a single array. Exact
Jacobians with respect to both the parameters and the input are provided.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

__all__ = [
    "GainScaling",
    "MlpSpec",
    "GainVector",
    "param_count",
    "init_params",
    "mlp_forward",
    "mlp_param_jacobian",
    "mlp_input_jacobian",
    "mlp_value_and_jacobians",
    "normalised_input",
    "save_snapshot",
    "load_snapshot",
]

# Table of characteristic maxima used to normalise the network input.
DEFAULT_INPUT_NORMALISERS = (math.pi / 6, 4.0, 11_000.0)
DEFAULT_GAIN_LOWER = (1e-3, 1e-3, 1e-3)
DEFAULT_GAIN_UPPER = (4.0, 0.2, 2.0)


class GainVector(NamedTuple):
    """Autopilot gain triplet produced by the network."""

    K_A: float
    K_I: float
    K_R: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


@dataclass(frozen=True)
class GainScaling:
    """Elementwise output bounds enforced by a sigmoid scaling layer."""

    lower: tuple[float, ...] = DEFAULT_GAIN_LOWER
    upper: tuple[float, ...] = DEFAULT_GAIN_UPPER

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or np.any(lo >= hi):
            raise ValueError("scaling requires lower < upper elementwise")


@dataclass(frozen=True)
class MlpSpec:
    """Network architecture.

    ``layer_sizes`` lists the width chain including the input dimension, so
    the default ``(3, 3, 10, 3)`` is three affine stages 3->3, 3->10, 10->3:
    tanh after every stage but the last, which stays linear (the scaling
    layer, when present, is applied after it).
    """

    layer_sizes: tuple[int, ...] = (3, 3, 10, 3)
    hidden_activation: str = "tanh"
    output_activation: str = "linear"
    scaling: Optional[GainScaling] = GainScaling()
    input_normalisers: tuple[float, float, float] = DEFAULT_INPUT_NORMALISERS

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least one affine stage")
        if any(n < 1 for n in self.layer_sizes):
            raise ValueError("layer widths must be positive")
        if self.hidden_activation != "tanh" or self.output_activation != "linear":
            raise ValueError("only tanh hidden / linear output supported")
        if any(v <= 0 for v in self.input_normalisers):
            raise ValueError("input normalisers must be positive")

    def with_hidden_width(self, width: int) -> "MlpSpec":
        """Same spec with the widest interior stage replaced (small nets for checks)."""
        sizes = list(self.layer_sizes)
        interior = sizes[1:-1]
        if not interior:
            raise ValueError("spec has no interior stage")
        idx = 1 + int(np.argmax(interior))
        sizes[idx] = width
        return MlpSpec(tuple(sizes), self.hidden_activation, self.output_activation,
                       self.scaling, self.input_normalisers)


@lru_cache(maxsize=None)
def _layout(layer_sizes: tuple[int, ...]):
    """(offset, n_out, n_in) of each weight block and bias block."""
    blocks = []
    off = 0
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        blocks.append((off, n_out, n_in))
        off += n_out * n_in + n_out
    return tuple(blocks), off


def param_count(spec: MlpSpec) -> int:
    return _layout(spec.layer_sizes)[1]


def _unpack(spec: MlpSpec, p: np.ndarray):
    blocks, total = _layout(spec.layer_sizes)
    if p.size != total:
        raise ValueError(f"parameter vector has {p.size} entries, spec needs {total}")
    out = []
    for off, n_out, n_in in blocks:
        w = p[off:off + n_out * n_in].reshape(n_out, n_in)
        b = p[off + n_out * n_in:off + n_out * n_in + n_out]
        out.append((w, b))
    return out


def init_params(spec: MlpSpec, seed: int) -> np.ndarray:
    """Glorot-uniform weights (bound sqrt(6/(n_in+n_out))), zero biases."""
    rng = np.random.default_rng(seed)
    blocks, total = _layout(spec.layer_sizes)
    p = np.zeros(total)
    for off, n_out, n_in in blocks:
        bound = math.sqrt(6.0 / (n_in + n_out))
        p[off:off + n_out * n_in] = rng.uniform(-bound, bound, n_out * n_in)
    return p


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # numerically stable on both tails
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _forward_stages(spec: MlpSpec, p: np.ndarray, u: np.ndarray):
    """Activations after each stage; returns (per-stage activations, raw output)."""
    layers = _unpack(spec, p)
    acts = [u]
    a = u
    for i, (w, b) in enumerate(layers):
        z = w @ a + b
        a = z if i == len(layers) - 1 else np.tanh(z)
        acts.append(a)
    return acts, a


def mlp_forward(spec: MlpSpec, p: np.ndarray, u: np.ndarray) -> GainVector:
    """Evaluate the network on the normalised input ``u`` (3-vector)."""
    u = np.asarray(u, dtype=float)
    p = np.asarray(p, dtype=float)
    _, raw = _forward_stages(spec, p, u)
    if spec.scaling is not None:
        lo = np.asarray(spec.scaling.lower)
        hi = np.asarray(spec.scaling.upper)
        raw = lo + (hi - lo) * _sigmoid(raw)
    return GainVector(*raw)


def mlp_value_and_jacobians(spec: MlpSpec, p: np.ndarray, u: np.ndarray):
    """One shared forward/backward sweep: (gains, d gains/dp, d gains/du).

    Shapes: gains (3,), parameter Jacobian (3, dim p), input Jacobian (3, 3).
    """
    u = np.asarray(u, dtype=float)
    p = np.asarray(p, dtype=float)
    layers = _unpack(spec, p)
    acts, raw = _forward_stages(spec, p, u)

    gains = raw
    # sens = d(gains)/d(post-activation of current stage), walked backward
    if spec.scaling is not None:
        lo = np.asarray(spec.scaling.lower)
        hi = np.asarray(spec.scaling.upper)
        s = _sigmoid(raw)
        gains = lo + (hi - lo) * s
        sens = np.diag((hi - lo) * s * (1.0 - s))
    else:
        sens = np.eye(raw.size)

    n_out_total = raw.size
    dp = np.empty((n_out_total, p.size))
    blocks, _ = _layout(spec.layer_sizes)
    for i in range(len(layers) - 1, -1, -1):
        w, _b = layers[i]
        a_prev = acts[i]
        a_here = acts[i + 1]
        if i < len(layers) - 1:
            # undo tanh: d a/d z = 1 - a^2
            sens = sens * (1.0 - a_here ** 2)
        off, n_out, n_in = blocks[i]
        # weight block: d gains/d W[j,k] = sens[:, j] * a_prev[k], row-major
        dp[:, off:off + n_out * n_in] = (
            sens[:, :, None] * a_prev[None, None, :]
        ).reshape(n_out_total, n_out * n_in)
        dp[:, off + n_out * n_in:off + n_out * n_in + n_out] = sens
        sens = sens @ w

    return gains, dp, sens  # sens is now d gains/d input


def mlp_param_jacobian(spec: MlpSpec, p: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Exact Jacobian of the gains with respect to the flat parameter vector."""
    return mlp_value_and_jacobians(spec, p, u)[1]


def mlp_input_jacobian(spec: MlpSpec, p: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Exact Jacobian of the gains with respect to the normalised input."""
    return mlp_value_and_jacobians(spec, p, u)[2]


def normalised_input(alpha: float, mach: float, h: float,
                     normalisers=DEFAULT_INPUT_NORMALISERS) -> np.ndarray:
    """(|alpha|/alpha_max, M/M_max, h/h_max) network input."""
    a_max, m_max, h_max = normalisers
    return np.array([abs(alpha) / a_max, mach / m_max, h / h_max])


# ---------------------------------------------------------------------------
# Snapshot I/O: flat parameter array plus the metadata needed to rebuild the
# spec, in one JSON document.

def save_snapshot(path, spec: MlpSpec, params: np.ndarray, seed=None, extra=None):
    doc = {
        "layer_sizes": list(spec.layer_sizes),
        "hidden_activation": spec.hidden_activation,
        "output_activation": spec.output_activation,
        "scaling": None if spec.scaling is None else {
            "lower": list(spec.scaling.lower),
            "upper": list(spec.scaling.upper),
        },
        "input_normalisers": list(spec.input_normalisers),
        "seed": seed,
        "params": [float(v) for v in np.asarray(params, dtype=float)],
    }
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_snapshot(path) -> tuple[MlpSpec, np.ndarray, dict]:
    with open(path) as fh:
        doc = json.load(fh)
    scaling = doc.get("scaling")
    spec = MlpSpec(
        layer_sizes=tuple(doc["layer_sizes"]),
        hidden_activation=doc.get("hidden_activation", "tanh"),
        output_activation=doc.get("output_activation", "linear"),
        scaling=None if scaling is None else GainScaling(
            tuple(scaling["lower"]), tuple(scaling["upper"])),
        input_normalisers=tuple(doc["input_normalisers"]),
    )
    params = np.asarray(doc["params"], dtype=float)
    if params.size != param_count(spec):
        raise ValueError("snapshot parameter count does not match its layer sizes")
    return spec, params, doc
