"""Fixed-width tanh MLP with exact input derivatives and parameter gradients.

Inputs are ``(t,)`` or ``(t, x)``.  The forward pass propagates a jet per point:
the value together with its derivatives along ``t``, along ``x`` and the second
derivative along ``x``.  Parameter gradients of any loss built from these jets are
obtained by running reverse accumulation through that jet-augmented forward pass.

Parameters live in one flat float64 vector.  Layer ``k`` stores its weight matrix
of shape ``(fan_in, fan_out)`` row-major, followed by its bias of length
``fan_out``; the layer computes ``h @ W + b``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

DERIVS = ("dt", "dx", "dxx")


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int = 1
    output_dim: int = 1
    hidden_layers: int = 5
    hidden_width: int = 10

    def __post_init__(self):
        if self.input_dim not in (1, 2):
            raise ValueError(f"input_dim must be 1 or 2, got {self.input_dim}")
        if self.output_dim not in (1, 3):
            raise ValueError(f"output_dim must be 1 or 3, got {self.output_dim}")
        if self.hidden_layers < 1 or self.hidden_width < 1:
            raise ValueError("need at least one hidden layer of width >= 1")

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        dims = [self.input_dim] + [self.hidden_width] * self.hidden_layers + [self.output_dim]
        return list(zip(dims[:-1], dims[1:]))

    @property
    def n_params(self) -> int:
        return sum(fi * fo + fo for fi, fo in self.layer_shapes)


def unpack(spec: MlpSpec, params: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Views ``(W, b)`` per layer into the flat parameter vector."""
    params = np.asarray(params)
    if params.shape != (spec.n_params,):
        raise ValueError(f"expected {spec.n_params} parameters, got shape {params.shape}")
    layers = []
    k = 0
    for fi, fo in spec.layer_shapes:
        W = params[k:k + fi * fo].reshape(fi, fo)
        k += fi * fo
        b = params[k:k + fo]
        k += fo
        layers.append((W, b))
    return layers


def init_glorot(spec: MlpSpec, seed: int) -> np.ndarray:
    """Glorot-uniform weights, zero biases.

    Draws come from numpy's Philox4x64 counter-based generator keyed by ``seed``,
    layer by layer in storage order, so a given ``(spec, seed)`` always yields the
    same bits.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    params = np.zeros(spec.n_params)
    for W, _ in unpack(spec, params):
        fi, fo = W.shape
        lim = np.sqrt(6.0 / (fi + fo))
        W[...] = rng.uniform(-lim, lim, size=(fi, fo))
    return params


@dataclass
class Jet:
    """Network outputs and requested input derivatives, each of shape (N, output_dim)."""
    value: np.ndarray
    dt: np.ndarray | None = None
    dx: np.ndarray | None = None
    dxx: np.ndarray | None = None

    def __getitem__(self, idx) -> "Jet":
        return Jet(*(None if a is None else a[idx] for a in (self.value, self.dt, self.dx, self.dxx)))


EvalJet = Jet


def _streams(want, input_dim: int) -> tuple[str, ...]:
    want = set(want)
    unknown = want - set(DERIVS)
    if unknown:
        raise ValueError(f"unknown derivative request {sorted(unknown)}")
    if input_dim == 1 and want & {"dx", "dxx"}:
        raise ValueError("x-derivatives requested from a network without x input")
    streams = []
    if "dt" in want:
        streams.append("t")
    if "dx" in want or "dxx" in want:
        streams.append("x")
    if "dxx" in want:
        streams.append("xx")
    return tuple(streams)


def _as_batch(spec: MlpSpec, inputs) -> np.ndarray:
    X = np.asarray(inputs, dtype=float)
    if X.ndim == 1 and spec.input_dim == 1:
        X = X[:, None]
    X = np.atleast_2d(X)
    if X.shape[1] != spec.input_dim:
        raise ValueError(f"input has {X.shape[1]} coordinates, network expects {spec.input_dim}")
    return X


def _forward(spec, params, X, streams):
    layers = unpack(spec, params)
    n = X.shape[0]
    h = {"v": X}
    if "t" in streams:
        h["t"] = np.zeros_like(X)
        h["t"][:, 0] = 1.0
    if "x" in streams:
        h["x"] = np.zeros_like(X)
        h["x"][:, 1] = 1.0
    if "xx" in streams:
        h["xx"] = np.zeros_like(X)
    tape = []
    last = len(layers) - 1
    for k, (W, b) in enumerate(layers):
        z = {key: arr @ W for key, arr in h.items()}
        z["v"] += b
        if k == last:
            tape.append((h, None))
            h = z
            break
        a = np.tanh(z["v"])
        s = 1.0 - a * a
        out = {"v": a}
        if "t" in z:
            out["t"] = s * z["t"]
        if "x" in z:
            out["x"] = s * z["x"]
        if "xx" in z:
            out["xx"] = s * z["xx"] - 2.0 * a * s * z["x"] ** 2
        tape.append((h, (a, s, z)))
        h = out
    assert h["v"].shape == (n, spec.output_dim)
    return h, tape


def _jet_from(h) -> Jet:
    return Jet(h["v"], h.get("t"), h.get("x"), h.get("xx"))


def evaluate(spec: MlpSpec, params: np.ndarray, inputs, want: Sequence[str] = ("dt",)) -> Jet:
    """Values and requested derivatives at one point (shape ``(input_dim,)``) or a batch ``(N, input_dim)``.

    A single point returns a jet of 1-d arrays of length ``output_dim``.
    """
    X = np.asarray(inputs, dtype=float)
    single = X.ndim == 0 or (X.ndim == 1 and X.shape[0] == spec.input_dim)
    X = _as_batch(spec, X)
    h, _ = _forward(spec, params, X, _streams(want, spec.input_dim))
    jet = _jet_from(h)
    return jet[0] if single else jet


def _backward(spec, params, tape, cot: dict[str, np.ndarray]) -> np.ndarray:
    grad = np.zeros(spec.n_params)
    gl = unpack(spec, grad)
    layers = unpack(spec, params)
    g = cot
    for k in range(len(layers) - 1, -1, -1):
        W, _ = layers[k]
        gW, gb = gl[k]
        h, act = tape[k]
        if act is not None:
            # g holds cotangents of the tanh outputs; pull back to pre-activations
            a, s, z = act
            s2 = -2.0 * a * s
            gz = {"v": g["v"] * s}
            if "t" in g:
                gz["v"] += g["t"] * s2 * z["t"]
                gz["t"] = g["t"] * s
            if "x" in g:
                gz["v"] += g["x"] * s2 * z["x"]
                gz["x"] = g["x"] * s
            if "xx" in g:
                s3 = -2.0 * s * s + 4.0 * a * a * s
                gxx = g["xx"]
                gz["v"] += gxx * (s2 * z["xx"] + s3 * z["x"] ** 2)
                gz["x"] = gz["x"] + 2.0 * gxx * s2 * z["x"]
                gz["xx"] = gxx * s
            g = gz
        for key, gk in g.items():
            gW += h[key].T @ gk
        gb += g["v"].sum(axis=0)
        if k > 0:
            g = {key: gk @ W.T for key, gk in g.items()}
    return grad


@dataclass
class JetLoss:
    """A scalar loss built from network jets at fixed point sets.

    ``requests`` lists ``(inputs, want)`` pairs.  ``fn`` receives the matching list of
    :class:`Jet` and returns ``(loss, cotangents)`` where ``cotangents`` is a list of
    jets holding d loss / d (each jet entry); ``None`` entries count as zero.
    """
    requests: list[tuple[np.ndarray, tuple[str, ...]]]
    fn: Callable[[list[Jet]], tuple[float, list[Jet]]]
    scale: float = 1.0


def _run(spec, params, loss: JetLoss, need_grad: bool):
    params = np.asarray(params, dtype=float)
    fwd = []
    for inputs, want in loss.requests:
        streams = _streams(want, spec.input_dim)
        X = _as_batch(spec, inputs)
        fwd.append((streams, *_forward(spec, params, X, streams)))
    jets = [_jet_from(h) for _, h, _ in fwd]
    value, cots = loss.fn(jets)
    value = loss.scale * float(value)
    if not need_grad:
        return value, None
    grad = np.zeros(spec.n_params)
    for (streams, h, tape), cj in zip(fwd, cots):
        if cj is None:
            continue
        cot = {"v": np.zeros_like(h["v"]) if cj.value is None else cj.value}
        for key, arr in (("t", cj.dt), ("x", cj.dx), ("xx", cj.dxx)):
            if key in streams:
                cot[key] = np.zeros_like(h[key]) if arr is None else arr
            elif arr is not None:
                raise ValueError(f"cotangent given for untracked derivative stream {key!r}")
        grad += _backward(spec, params, tape, cot)
    return value, loss.scale * grad


def loss_value(spec: MlpSpec, params: np.ndarray, loss: JetLoss) -> float:
    return _run(spec, params, loss, need_grad=False)[0]


def loss_gradient(spec: MlpSpec, params: np.ndarray, loss: JetLoss) -> tuple[float, np.ndarray]:
    """Loss value and its exact gradient with respect to the flat parameters."""
    return _run(spec, params, loss, need_grad=True)


def directional_check(value_fn: Callable[[np.ndarray], float], grad: np.ndarray, params: np.ndarray,
                      directions: int = 20, h: float = 1e-6, seed: int = 0) -> float:
    """Worst relative mismatch between ``grad . v`` and central differences of ``value_fn``.

    ``v`` runs over ``directions`` random unit vectors; a direction where both numbers
    are exactly zero counts as a match.
    """
    if h <= 0 or directions < 1:
        raise ValueError("need h > 0 and directions >= 1")
    params = np.asarray(params, dtype=float)
    rng = np.random.Generator(np.random.Philox(seed))
    worst = 0.0
    for _ in range(directions):
        v = rng.standard_normal(params.size)
        v /= np.linalg.norm(v)
        fd = (value_fn(params + h * v) - value_fn(params - h * v)) / (2 * h)
        an = float(grad @ v)
        denom = max(abs(an), abs(fd))
        if denom > 0:
            worst = max(worst, abs(fd - an) / denom)
    return worst


def grad_check(spec: MlpSpec, params: np.ndarray, loss: JetLoss,
               directions: int = 20, h: float = 1e-5, seed: int = 0) -> float:
    """Worst relative error of :func:`loss_gradient` against central differences.

    The default step balances truncation (~h^2) against rounding (~eps L / h) for
    losses of order 10-1000.
    """
    _, g = loss_gradient(spec, params, loss)
    return directional_check(lambda p: loss_value(spec, p, loss), g, params, directions, h, seed)


def save_params(path, spec: MlpSpec, params: np.ndarray, seed: int, iteration: int) -> None:
    """One JSON header line, then the parameters as little-endian float64."""
    header = {"spec": asdict(spec), "seed": int(seed), "iteration": int(iteration),
              "n_params": spec.n_params}
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        f.write(np.asarray(params, dtype="<f8").tobytes())


def load_params(path) -> tuple[MlpSpec, np.ndarray, dict]:
    raw = Path(path).read_bytes()
    line, _, body = raw.partition(b"\n")
    header = json.loads(line)
    spec = MlpSpec(**header["spec"])
    params = np.frombuffer(body, dtype="<f8").astype(float)
    if params.size != spec.n_params:
        raise ValueError(f"checkpoint holds {params.size} values, spec needs {spec.n_params}")
    return spec, params, header
