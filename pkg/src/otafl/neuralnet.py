"""Minimal differentiable-network kernel: dense and memory-cell layers.

Everything runs in 64-bit numpy on sequences shaped (T, B, F).  Dense and
activation layers apply per step; memory-cell (LSTM) layers carry hidden
state along the sequence, with an optional (T, B) validity mask that holds
state through padded steps.  A network's output is its final layer's last
step, so a dense-only stack reduces to a feedforward net on the last input.

Reverse-mode gradients are exact (verified against central finite
differences by ``grad_check``); ``backward`` also returns the gradient with
respect to the input sequence, which the actor update chains through the
critic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Activation",
    "AdamState",
    "Dense",
    "Lstm",
    "Network",
    "Trace",
    "actor_network",
    "adam_step",
    "critic_network",
    "grad_check",
    "load_container",
    "load_network",
    "network_from_state",
    "network_state",
    "save_container",
    "save_network",
    "soft_update",
]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form avoids overflow for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class Dense:
    """Affine map applied independently at every sequence step."""

    kind = "dense"

    def __init__(self, w: np.ndarray, b: np.ndarray):
        self.w = np.asarray(w, dtype=float)
        self.b = np.asarray(b, dtype=float)

    @classmethod
    def init(cls, fan_in: int, fan_out: int, rng: np.random.Generator) -> "Dense":
        bound = 1.0 / np.sqrt(fan_in)
        return cls(rng.uniform(-bound, bound, (fan_in, fan_out)), np.zeros(fan_out))

    def forward_seq(self, x: np.ndarray, mask):
        return x @ self.w + self.b, x

    def backward_seq(self, dout: np.ndarray, cache):
        x = cache
        steps, batch, fan_in = x.shape
        flat_x = x.reshape(steps * batch, fan_in)
        flat_d = dout.reshape(steps * batch, -1)
        grads = {"w": flat_x.T @ flat_d, "b": flat_d.sum(axis=0)}
        return dout @ self.w.T, grads

    def params(self) -> dict[str, np.ndarray]:
        return {"w": self.w, "b": self.b}

    def copy(self) -> "Dense":
        return Dense(self.w.copy(), self.b.copy())

    def manifest(self) -> dict:
        return {"kind": self.kind, "fan_in": self.w.shape[0], "fan_out": self.w.shape[1]}


class Activation:
    """Elementwise nonlinearity ('tanh' or 'relu'), parameter-free."""

    kind = "activation"

    def __init__(self, fn: str):
        if fn not in ("tanh", "relu"):
            raise ValueError(f"unknown activation {fn!r}")
        self.fn = fn

    def forward_seq(self, x: np.ndarray, mask):
        if self.fn == "tanh":
            y = np.tanh(x)
            return y, y
        y = np.maximum(x, 0.0)
        return y, x > 0

    def backward_seq(self, dout: np.ndarray, cache):
        if self.fn == "tanh":
            return dout * (1.0 - cache**2), {}
        return dout * cache, {}

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def copy(self) -> "Activation":
        return Activation(self.fn)

    def manifest(self) -> dict:
        return {"kind": self.kind, "fn": self.fn}


class Lstm:
    """Standard memory cell; gate order [input, forget, cell, output].

    A mask entry of 0 carries hidden and cell state through unchanged, so
    left-padded steps contribute nothing to the output or the gradients.
    """

    kind = "lstm"

    def __init__(self, wx: np.ndarray, wh: np.ndarray, b: np.ndarray):
        self.wx = np.asarray(wx, dtype=float)
        self.wh = np.asarray(wh, dtype=float)
        self.b = np.asarray(b, dtype=float)

    @classmethod
    def init(cls, fan_in: int, hidden: int, rng: np.random.Generator) -> "Lstm":
        bx, bh = 1.0 / np.sqrt(fan_in), 1.0 / np.sqrt(hidden)
        wx = rng.uniform(-bx, bx, (fan_in, 4 * hidden))
        wh = rng.uniform(-bh, bh, (hidden, 4 * hidden))
        b = np.zeros(4 * hidden)
        b[hidden : 2 * hidden] = 1.0  # open forget gate at init
        return cls(wx, wh, b)

    @property
    def hidden(self) -> int:
        return self.wh.shape[0]

    def forward_seq(self, x: np.ndarray, mask):
        steps, batch, _ = x.shape
        h_dim = self.hidden
        h = np.zeros((batch, h_dim))
        c = np.zeros((batch, h_dim))
        outs = np.empty((steps, batch, h_dim))
        gates_i = np.empty((steps, batch, h_dim))
        gates_f = np.empty((steps, batch, h_dim))
        gates_g = np.empty((steps, batch, h_dim))
        gates_o = np.empty((steps, batch, h_dim))
        h_prevs = np.empty((steps, batch, h_dim))
        c_prevs = np.empty((steps, batch, h_dim))
        tanh_cs = np.empty((steps, batch, h_dim))
        # input projection for every step in one matmul
        x_proj = (x.reshape(steps * batch, -1) @ self.wx).reshape(steps, batch, -1)
        for t in range(steps):
            h_prevs[t] = h
            c_prevs[t] = c
            z = x_proj[t] + h @ self.wh + self.b
            gi = _sigmoid(z[:, :h_dim])
            gf = _sigmoid(z[:, h_dim : 2 * h_dim])
            gg = np.tanh(z[:, 2 * h_dim : 3 * h_dim])
            go = _sigmoid(z[:, 3 * h_dim :])
            c_new = gf * c + gi * gg
            tc = np.tanh(c_new)
            h_new = go * tc
            if mask is not None:
                mt = mask[t][:, None]
                h = mt * h_new + (1.0 - mt) * h
                c = mt * c_new + (1.0 - mt) * c
            else:
                h, c = h_new, c_new
            gates_i[t], gates_f[t], gates_g[t], gates_o[t] = gi, gf, gg, go
            tanh_cs[t] = tc
            outs[t] = h
        cache = (x, gates_i, gates_f, gates_g, gates_o, h_prevs, c_prevs, tanh_cs, mask)
        return outs, cache

    def backward_seq(self, dout: np.ndarray, cache):
        x, gi, gf, gg, go, h_prevs, c_prevs, tanh_cs, mask = cache
        steps, batch, _ = x.shape
        dwh = np.zeros_like(self.wh)
        dz_all = np.empty((steps, batch, self.b.size))
        dh_carry = np.zeros_like(dout[0])
        dc_carry = np.zeros_like(dout[0])
        for t in range(steps - 1, -1, -1):
            dh_total = dout[t] + dh_carry
            dc_total = dc_carry
            if mask is not None:
                mt = mask[t][:, None]
                dh_new = mt * dh_total
                dc_new = mt * dc_total
                dh_skip = (1.0 - mt) * dh_total
                dc_skip = (1.0 - mt) * dc_total
            else:
                dh_new, dc_new = dh_total, dc_total
                dh_skip = dc_skip = 0.0
            do = dh_new * tanh_cs[t]
            dc_inner = dc_new + dh_new * go[t] * (1.0 - tanh_cs[t] ** 2)
            dzi = dc_inner * gg[t] * gi[t] * (1.0 - gi[t])
            dzf = dc_inner * c_prevs[t] * gf[t] * (1.0 - gf[t])
            dzg = dc_inner * gi[t] * (1.0 - gg[t] ** 2)
            dzo = do * go[t] * (1.0 - go[t])
            dz = np.concatenate([dzi, dzf, dzg, dzo], axis=1)
            dz_all[t] = dz
            dwh += h_prevs[t].T @ dz
            dh_carry = dz @ self.wh.T + dh_skip
            dc_carry = dc_inner * gf[t] + dc_skip
        dz_flat = dz_all.reshape(steps * batch, -1)
        dwx = x.reshape(steps * batch, -1).T @ dz_flat
        db = dz_flat.sum(axis=0)
        dx = (dz_flat @ self.wx.T).reshape(x.shape)
        return dx, {"wx": dwx, "wh": dwh, "b": db}

    def params(self) -> dict[str, np.ndarray]:
        return {"wx": self.wx, "wh": self.wh, "b": self.b}

    def copy(self) -> "Lstm":
        return Lstm(self.wx.copy(), self.wh.copy(), self.b.copy())

    def manifest(self) -> dict:
        return {"kind": self.kind, "fan_in": self.wx.shape[0], "hidden": self.hidden}


@dataclass
class Trace:
    """Forward-pass caches needed by backward, bound to the output shape."""

    caches: list
    out_shape: tuple[int, ...]


class Network:
    """Ordered layer stack over (T, B, F) sequences; output is the last step."""

    def __init__(self, layers):
        self.layers = list(layers)

    def forward(self, seq: np.ndarray, mask: np.ndarray | None = None):
        x = np.asarray(seq, dtype=float)
        if x.ndim != 3 or x.shape[0] == 0:
            raise ValueError("input must be a nonempty (T, B, F) sequence")
        if mask is not None:
            mask = np.asarray(mask, dtype=float)
            if mask.shape != x.shape[:2]:
                raise ValueError("mask must have shape (T, B)")
        caches = []
        for layer in self.layers:
            x, cache = layer.forward_seq(x, mask)
            caches.append(cache)
        return x[-1], Trace(caches=caches, out_shape=x.shape)

    def backward(self, trace: Trace, dout: np.ndarray):
        dout = np.asarray(dout, dtype=float)
        if dout.shape != trace.out_shape[1:]:
            raise ValueError("output gradient does not match the trace")
        dx = np.zeros(trace.out_shape)
        dx[-1] = dout
        grads: list[dict[str, np.ndarray]] = [{} for _ in self.layers]
        for idx in range(len(self.layers) - 1, -1, -1):
            dx, grads[idx] = self.layers[idx].backward_seq(dx, trace.caches[idx])
        return grads, dx

    def params_flat(self) -> list[np.ndarray]:
        flat = []
        for layer in self.layers:
            for name in sorted(layer.params()):
                flat.append(layer.params()[name])
        return flat

    def grads_flat(self, grads: list[dict[str, np.ndarray]]) -> list[np.ndarray]:
        flat = []
        for layer_grads, layer in zip(grads, self.layers):
            for name in sorted(layer.params()):
                flat.append(layer_grads[name])
        return flat

    def n_params(self) -> int:
        return sum(p.size for p in self.params_flat())

    def copy(self) -> "Network":
        return Network([layer.copy() for layer in self.layers])


# Final-layer weights start near zero so early actions sit mid-range and the
# head's gradients stay healthy; the usual stabilizer for deterministic
# policy-gradient training.
HEAD_INIT_SCALE = 0.05


def _small_head(fan_in: int, fan_out: int, rng: np.random.Generator) -> Dense:
    head = Dense.init(fan_in, fan_out, rng)
    head.w *= HEAD_INIT_SCALE
    return head


def actor_network(
    input_dim: int,
    action_dim: int,
    recurrent: bool,
    hidden: int,
    rng: np.random.Generator,
) -> Network:
    """Policy net: trunk (memory cell or two dense blocks) plus a tanh head."""
    if recurrent:
        layers = [Lstm.init(input_dim, hidden, rng)]
    else:
        layers = [Dense.init(input_dim, hidden, rng), Activation("relu")]
    layers += [
        Dense.init(hidden, hidden, rng),
        Activation("relu"),
        _small_head(hidden, action_dim, rng),
        Activation("tanh"),
    ]
    return Network(layers)


def critic_network(
    input_dim: int, recurrent: bool, hidden: int, rng: np.random.Generator
) -> Network:
    """Value net on per-step (state, action) inputs with a scalar linear head."""
    if recurrent:
        layers = [Lstm.init(input_dim, hidden, rng)]
    else:
        layers = [Dense.init(input_dim, hidden, rng), Activation("relu")]
    layers += [
        Dense.init(hidden, hidden, rng),
        Activation("relu"),
        _small_head(hidden, 1, rng),
    ]
    return Network(layers)


@dataclass
class AdamState:
    """Bias-corrected Adam accumulators for one network's flat parameter list."""

    step_size: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    count: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_network(cls, net: Network, step_size: float, **kwargs) -> "AdamState":
        state = cls(step_size=step_size, **kwargs)
        state.m = [np.zeros_like(p) for p in net.params_flat()]
        state.v = [np.zeros_like(p) for p in net.params_flat()]
        return state


def adam_step(
    params: list[np.ndarray], grads: list[np.ndarray], state: AdamState
) -> None:
    """One in-place Adam update; moments and step counter advance in ``state``."""
    if len(params) != len(state.m) or len(params) != len(grads):
        raise ValueError("parameter/gradient/state length mismatch")
    state.count += 1
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1**state.count
    bias2 = 1.0 - b2**state.count
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g**2
        p -= state.step_size * (m / bias1) / (np.sqrt(v / bias2) + state.eps)


def soft_update(target: Network, online: Network, tau: float) -> None:
    """Blend target parameters toward online ones: t <- tau*o + (1-tau)*t."""
    if not 0 <= tau <= 1:
        raise ValueError("tau must lie in [0, 1]")
    t_params, o_params = target.params_flat(), online.params_flat()
    if len(t_params) != len(o_params):
        raise ValueError("network shapes do not match")
    for t, o in zip(t_params, o_params):
        if t.shape != o.shape:
            raise ValueError("network shapes do not match")
        t *= 1.0 - tau
        t += tau * o


def grad_check(
    net: Network,
    seq: np.ndarray,
    rng: np.random.Generator,
    eps: float = 1e-5,
    mask: np.ndarray | None = None,
) -> float:
    """Max relative error of backward vs central differences over all parameters.

    The scalar objective is a fixed random projection of the network output.
    Refuses networks beyond 10^4 parameters; the sweep is quadratic-ish in
    size and meant for audit-scale models.
    """
    if net.n_params() > 10_000:
        raise ValueError("grad_check is limited to networks with <= 1e4 parameters")
    out, trace = net.forward(seq, mask)
    proj = rng.standard_normal(out.shape)
    grads, _ = net.backward(trace, proj)
    flat_grads = net.grads_flat(grads)

    def objective() -> float:
        value, _ = net.forward(seq, mask)
        return float(np.sum(value * proj))

    worst = 0.0
    for p, g in zip(net.params_flat(), flat_grads):
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + eps
            up = objective()
            p[idx] = orig - eps
            down = objective()
            p[idx] = orig
            numeric = (up - down) / (2.0 * eps)
            analytic = g[idx]
            rel = abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))
            worst = max(worst, rel)
    return worst


_LAYER_KINDS = {"dense": Dense, "lstm": Lstm, "activation": Activation}


def network_state(net: Network, prefix: str = "net") -> dict[str, np.ndarray]:
    """Flat name->array mapping for serialization."""
    arrays = {}
    for i, layer in enumerate(net.layers):
        for name, arr in layer.params().items():
            arrays[f"{prefix}.{i}.{name}"] = arr
    return arrays


def network_from_state(
    manifest: list[dict], arrays: dict[str, np.ndarray], prefix: str = "net"
) -> Network:
    layers = []
    for i, entry in enumerate(manifest):
        kind = entry["kind"]
        if kind == "dense":
            layers.append(Dense(arrays[f"{prefix}.{i}.w"], arrays[f"{prefix}.{i}.b"]))
        elif kind == "lstm":
            layers.append(
                Lstm(
                    arrays[f"{prefix}.{i}.wx"],
                    arrays[f"{prefix}.{i}.wh"],
                    arrays[f"{prefix}.{i}.b"],
                )
            )
        elif kind == "activation":
            layers.append(Activation(entry["fn"]))
        else:
            raise ValueError(f"unknown layer kind {kind!r}")
    return Network(layers)


def save_container(path, arrays: dict[str, np.ndarray], manifest: dict) -> None:
    """Write arrays plus a JSON shape manifest to one .npz file (64-bit exact)."""
    np.savez(path, __manifest__=np.array(json.dumps(manifest)), **arrays)


def load_container(path) -> tuple[dict[str, np.ndarray], dict]:
    with np.load(path, allow_pickle=False) as data:
        manifest = json.loads(str(data["__manifest__"]))
        arrays = {key: data[key] for key in data.files if key != "__manifest__"}
    return arrays, manifest


def save_network(path, net: Network) -> None:
    manifest = {"layers": [layer.manifest() for layer in net.layers]}
    save_container(path, network_state(net), manifest)


def load_network(path) -> Network:
    arrays, manifest = load_container(path)
    return network_from_state(manifest["layers"], arrays)
