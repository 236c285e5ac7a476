"""Multilayer perceptrons and the Adam optimizer on top of the autodiff tape.

Networks are 2-4 linear layers with tanh on hidden layers and an identity
output layer. Weights start uniform in +-1/sqrt(fan_in), biases at zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


@dataclass(frozen=True)
class MlpSpec:
    """Shape of one MLP: 1-3 hidden layers means 2-4 linear layers total."""

    input_dim: int
    output_dim: int
    hidden_sizes: tuple[int, ...] = (64, 64)

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("dims must be >= 1")
        # 0 hidden layers = a bare linear map (handy for sanity checks)
        if len(self.hidden_sizes) > 3:
            raise ValueError("hidden_sizes must have at most 3 entries")
        if any(h < 1 for h in self.hidden_sizes):
            raise ValueError("hidden sizes must be >= 1")
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden_sizes, self.output_dim]
        return list(zip(dims[:-1], dims[1:]))


class ParamStore:
    """Named parameter arrays plus per-array Adam moments and a step counter.

    Shapes are fixed at registration; values update in place. A store is
    owned by exactly one training loop at a time.
    """

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise ValueError(f"parameter {name!r} already registered")
        t = Tensor(np.array(value, dtype=np.float64))
        self._params[name] = t
        self._m[name] = np.zeros_like(t.value)
        self._v[name] = np.zeros_like(t.value)
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self) -> list[str]:
        return list(self._params)

    def values(self) -> dict[str, np.ndarray]:
        return {k: t.value.copy() for k, t in self._params.items()}

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        for name, arr in values.items():
            if name not in self._params:
                raise KeyError(f"unknown parameter {name!r}")
            tgt = self._params[name].value
            if tgt.shape != arr.shape:
                raise ValueError(f"shape mismatch for {name!r}: {tgt.shape} vs {arr.shape}")
            tgt[...] = arr

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def grad_of(self, name: str) -> np.ndarray:
        """Gradient of the last backward pass; zeros if the parameter never
        entered the graph."""
        t = self._params[name]
        return np.zeros_like(t.value) if t.grad is None else t.grad

    def gradients(self) -> dict[str, np.ndarray]:
        return {name: self.grad_of(name) for name in self._params}

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(t.value)) for t in self._params.values())


def init_mlp(store: ParamStore, prefix: str, spec: MlpSpec, rng: np.random.Generator) -> None:
    """Register one MLP's weights/biases under ``prefix``."""
    for k, (fan_in, fan_out) in enumerate(spec.layer_dims):
        bound = 1.0 / np.sqrt(fan_in)
        store.add(f"{prefix}.W{k}", rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        store.add(f"{prefix}.b{k}", np.zeros(fan_out))


def mlp_forward(store: ParamStore, prefix: str, spec: MlpSpec, x) -> Tensor:
    """Forward pass: tanh hidden layers, identity output layer.

    ``x`` is a Tensor or array of shape (batch, input_dim) or (input_dim,).
    """
    h = ad.as_tensor(x)
    if h.value.shape[-1] != spec.input_dim:
        raise ValueError(
            f"input has {h.value.shape[-1]} features, spec expects {spec.input_dim}"
        )
    n_layers = len(spec.layer_dims)
    for k in range(n_layers):
        h = ad.matmul(h, store[f"{prefix}.W{k}"]) + store[f"{prefix}.b{k}"]
        if k < n_layers - 1:
            h = ad.tanh(h)
    return h


def adam_step(
    store: ParamStore,
    grads: dict[str, np.ndarray],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> list[str]:
    """Standard Adam update with bias correction.

    Arrays whose gradient is non-finite are skipped (and returned) so one bad
    batch cannot poison the parameters; the step counter still advances once.
    """
    store.step_count += 1
    t = store.step_count
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    skipped: list[str] = []
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            skipped.append(name)
            continue
        m = store._m[name]
        v = store._v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        store._params[name].value -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return skipped
