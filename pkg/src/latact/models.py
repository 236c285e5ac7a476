"""The five latent-action embedding models: PCA, AE, VAE, cAE, cVAE.

All models share one interface. The encoder embeds a (state, action) pair
into a d-dimensional latent code; the decoder expands a latent code back
into a full joint-velocity action, optionally conditioned on the current
state (cAE/cVAE). Variational kinds carry a diagonal-Gaussian head and a
KL penalty toward the standard normal. PCA is the linear baseline: the
top-d principal directions of the centered action matrix.

Network inputs are z-score normalized with training-set statistics stored
on the model, so a trained model is self-contained. An orthogonal
alignment transform (identity until set, see :mod:`latact.align`) is
applied to latent codes before decoding.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .arm import JointState, JointVelocityAction
from .autodiff import Tensor, backward
from .datagen import DemoDataset
from .errors import (
    ArchitectureError,
    DimensionError,
    FormatError,
    NotFiniteError,
    VersionError,
)
from .nn import MlpSpec, ParamStore, adam_step, init_mlp, mlp_forward

MODEL_MAGIC = b"LATACT-MD\0"
MODEL_VERSION = 1


class ModelKind(str, enum.Enum):
    PCA = "pca"
    AE = "ae"
    VAE = "vae"
    CAE = "cae"
    CVAE = "cvae"

    @property
    def conditioned(self) -> bool:
        return self in (ModelKind.CAE, ModelKind.CVAE)

    @property
    def variational(self) -> bool:
        return self in (ModelKind.VAE, ModelKind.CVAE)


@dataclass(frozen=True)
class ModelConfig:
    kind: ModelKind
    latent_dim: int
    hidden_sizes: tuple[int, ...] = (64, 64)
    learning_rate: float = 1e-2
    kl_weight: float = 0.1
    epochs: int = 200
    batch_size: int = 64
    seed: int = 0
    # whether non-conditioned encoders also see the state (conditioned kinds
    # always do). Off by default: an (s,a) encoder lets an unconditioned
    # decoder smuggle state through the bottleneck, which collapses the
    # conditioned/unconditioned comparison the models exist to make
    encoder_sees_state: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if self.kind.variational and not 0 < self.kl_weight < 1:
            raise ValueError("kl_weight must be in (0, 1) for variational kinds")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")

    def to_json_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["kind"] = self.kind.value
        d["hidden_sizes"] = list(self.hidden_sizes)
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["hidden_sizes"] = tuple(d["hidden_sizes"])
        return cls(**d)


@dataclass(frozen=True)
class LatentAction:
    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.ndim != 1 or not np.all(np.isfinite(z)):
            raise NotFiniteError("latent action must be a finite vector")
        object.__setattr__(self, "z", z)


@dataclass(frozen=True)
class LatentDistribution:
    """Latent code distribution (mu, sigma).

    Deterministic model kinds report sigma identically zero as the
    zero-variance sentinel; variational kinds always have sigma > 0.
    """

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        std = np.asarray(self.std, dtype=float)
        if mean.shape != std.shape or mean.ndim != 1:
            raise DimensionError("mean/std must be vectors of equal length")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(std)) and np.all(std >= 0)):
            raise NotFiniteError("latent distribution must be finite with std >= 0")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)


@dataclass
class Normalization:
    state_mean: np.ndarray
    state_std: np.ndarray
    action_mean: np.ndarray
    action_std: np.ndarray

    @classmethod
    def fit(cls, states: np.ndarray, actions: np.ndarray) -> "Normalization":
        def stats(x):
            mean = x.mean(axis=0)
            std = x.std(axis=0)
            std[std < 1e-12] = 1.0  # zero-variance dimensions pass through
            return mean, std

        sm, ss = stats(states)
        am, as_ = stats(actions)
        return cls(sm, ss, am, as_)

    def norm_state(self, s):
        return (s - self.state_mean) / self.state_std

    def norm_action(self, a):
        return (a - self.action_mean) / self.action_std

    def denorm_action(self, a):
        return a * self.action_std + self.action_mean


def gaussian_kl(mean: np.ndarray, std: np.ndarray) -> float:
    """KL( N(mean, diag std^2) || N(0, I) ), closed form."""
    var = std**2
    return float(0.5 * np.sum(var + mean**2 - 1.0) - np.sum(np.log(std)))


class TrainedModel:
    """A trained embedding: parameters, normalization, alignment, history."""

    def __init__(
        self,
        config: ModelConfig,
        n: int,
        normalization: Normalization,
        store: ParamStore | None = None,
        pca_mean: np.ndarray | None = None,
        pca_components: np.ndarray | None = None,
        pca_code_scale: np.ndarray | None = None,
        loss_history: list[float] | None = None,
        trained_on: str = "",
    ):
        self.config = config
        self.n = n  # state dim == action dim of the plant
        self.normalization = normalization
        self.store = store
        self.pca_mean = pca_mean
        self.pca_components = pca_components  # (m, d), orthonormal columns
        # code standard deviations: z = +-1 spans one sigma of training codes
        self.pca_code_scale = pca_code_scale
        self.loss_history = loss_history or []
        self.training_warnings: list[str] = []
        self.trained_on = trained_on
        self.alignment = np.eye(config.latent_dim)

    @property
    def kind(self) -> ModelKind:
        return self.config.kind

    @property
    def latent_dim(self) -> int:
        return self.config.latent_dim

    def encoder_input_dim(self) -> int:
        sees_state = self.config.encoder_sees_state or self.kind.conditioned
        return (self.n if sees_state else 0) + self.n

    def mlp_specs(self) -> dict[str, MlpSpec]:
        d = self.latent_dim
        enc_out = 2 * d if self.kind.variational else d
        dec_in = d + (self.n if self.kind.conditioned else 0)
        return {
            "enc": MlpSpec(self.encoder_input_dim(), enc_out, self.config.hidden_sizes),
            "dec": MlpSpec(dec_in, self.n, self.config.hidden_sizes),
        }

    def set_alignment(self, matrix: np.ndarray) -> None:
        from .align import require_orthogonal  # local import to avoid a cycle

        self.alignment = require_orthogonal(matrix, self.latent_dim)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def _train_pca(config, dataset) -> TrainedModel:
    actions = dataset.actions
    mean = actions.mean(axis=0)
    centered = actions - mean
    cov = centered.T @ centered / len(actions)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][: config.latent_dim]
    components = evecs[:, order]
    # deterministic sign: largest-magnitude entry of each component positive
    for j in range(components.shape[1]):
        k = np.argmax(np.abs(components[:, j]))
        if components[k, j] < 0:
            components[:, j] = -components[:, j]
    recon = (centered @ components) @ components.T + mean
    mse = float(np.mean(np.sum((recon - actions) ** 2, axis=1)))
    model = TrainedModel(
        config,
        n=dataset.spec.geometry.n,
        normalization=Normalization.fit(dataset.states, dataset.actions),
        pca_mean=mean,
        pca_components=components,
        pca_code_scale=np.maximum((centered @ components).std(axis=0), 1e-9),
        loss_history=[mse],
        trained_on=dataset.spec.task_kind.value,
    )
    return model


def train(config: ModelConfig, dataset: DemoDataset) -> TrainedModel:
    """Fit one embedding model on a demonstration dataset.

    Non-PCA kinds minimize per-sample ||a - a_hat||^2 (plus kl_weight * KL
    for variational kinds) with Adam over shuffled minibatches; everything
    is seeded, so identical configs reproduce bitwise-identical parameters.
    """
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    m = dataset.spec.geometry.n
    if config.latent_dim >= m:
        raise DimensionError(f"latent_dim {config.latent_dim} must be < action dim {m}")

    if config.kind is ModelKind.PCA:
        return _train_pca(config, dataset)

    norm = Normalization.fit(dataset.states, dataset.actions)
    model = TrainedModel(
        config,
        n=m,
        normalization=norm,
        store=ParamStore(),
        trained_on=dataset.spec.task_kind.value,
    )
    rng = np.random.default_rng(config.seed)
    specs = model.mlp_specs()
    init_mlp(model.store, "enc", specs["enc"], rng)
    init_mlp(model.store, "dec", specs["dec"], rng)

    S = norm.norm_state(dataset.states)
    A = norm.norm_action(dataset.actions)
    N = len(dataset)
    d = config.latent_dim
    store = model.store

    for epoch in range(config.epochs):
        perm = rng.permutation(N)
        epoch_loss = 0.0
        for lo in range(0, N, config.batch_size):
            idx = perm[lo : lo + config.batch_size]
            noise = rng.standard_normal((len(idx), d)) if config.kind.variational else None
            store.zero_grad()
            loss = _batch_loss(model, S[idx], A[idx], noise)
            backward(loss)
            skipped = adam_step(store, store.gradients(), config.learning_rate)
            if skipped:
                model.training_warnings.append(
                    f"epoch {epoch}: non-finite gradient, skipped {skipped}"
                )
            epoch_loss += float(loss.value) * len(idx)
        model.loss_history.append(epoch_loss / N)
    if not config.kind.variational:
        _standardize_latent(model, dataset)
    return model


def _standardize_latent(model: TrainedModel, dataset: DemoDataset) -> None:
    """Reparameterize AE/cAE weights so training codes have zero mean and
    unit variance per latent dimension.

    Deterministic encoders have no pressure toward any particular code
    scale, so "z in [-1, +1]" would otherwise crop an arbitrary slice of
    the latent space. This folds the affine fix into the encoder output
    layer and decoder input layer exactly: encode(s,a) -> decode stays
    bit-for-bit the same map, but the joystick box now spans one code
    sigma. Variational kinds are left alone (the KL term already pins
    their scale).
    """
    mu, _ = encode_batch(model, dataset.states, dataset.actions)
    m = mu.mean(axis=0)
    s = np.maximum(mu.std(axis=0), 1e-9)
    d = model.latent_dim
    store = model.store
    enc_last = len(model.mlp_specs()["enc"].layer_dims) - 1
    w_enc = store[f"enc.W{enc_last}"].value
    b_enc = store[f"enc.b{enc_last}"].value
    w_enc[:, :d] /= s[None, :]
    b_enc[:d] = (b_enc[:d] - m) / s
    w_dec = store["dec.W0"].value
    b_dec = store["dec.b0"].value
    b_dec += m @ w_dec[:d, :]
    w_dec[:d, :] *= s[:, None]


def _batch_loss(model: TrainedModel, S, A, noise) -> Tensor:
    """Training loss graph for one normalized minibatch."""
    config = model.config
    specs = model.mlp_specs()
    d = config.latent_dim
    s_t = Tensor(S)
    a_t = Tensor(A)
    enc_in = ad.concat([s_t, a_t]) if model.encoder_input_dim() > model.n else a_t
    head = mlp_forward(model.store, "enc", specs["enc"], enc_in)
    kl = None
    if config.kind.variational:
        mu = ad.slice_last(head, 0, d)
        log_sigma = ad.slice_last(head, d, 2 * d)
        sigma = ad.exp(log_sigma)
        z = mu + sigma * Tensor(noise)
        kl_per = (
            ad.tsum(ad.square(sigma), axis=1)
            + ad.tsum(ad.square(mu), axis=1)
            - ad.tsum(log_sigma, axis=1) * 2.0
            - float(d)
        ) * 0.5
        kl = ad.tmean(kl_per)
    else:
        z = head
    dec_in = ad.concat([z, s_t]) if config.kind.conditioned else z
    a_hat = mlp_forward(model.store, "dec", specs["dec"], dec_in)
    recon = ad.tmean(ad.tsum(ad.square(a_hat - a_t), axis=1))
    return recon if kl is None else recon + kl * config.kl_weight


# ---------------------------------------------------------------------------
# encode / decode
# ---------------------------------------------------------------------------


def encode_batch(model: TrainedModel, states: np.ndarray, actions: np.ndarray):
    """Vectorized encoder: (B,n),(B,n) -> (mu (B,d), sigma (B,d))."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    actions = np.atleast_2d(np.asarray(actions, dtype=float))
    if states.shape[1] != model.n or actions.shape[1] != model.n:
        raise DimensionError(
            f"encode expects width {model.n}, got {states.shape[1]}/{actions.shape[1]}"
        )
    d = model.latent_dim
    if model.kind is ModelKind.PCA:
        mu = (actions - model.pca_mean) @ model.pca_components / model.pca_code_scale
        return mu, np.zeros_like(mu)
    norm = model.normalization
    S = norm.norm_state(states)
    A = norm.norm_action(actions)
    enc_in = np.concatenate([S, A], axis=1) if model.encoder_input_dim() > model.n else A
    head = mlp_forward(model.store, "enc", model.mlp_specs()["enc"], Tensor(enc_in)).value
    if model.kind.variational:
        return head[:, :d], np.exp(head[:, d:])
    return head, np.zeros_like(head)


def decode_batch(
    model: TrainedModel, zs: np.ndarray, states: np.ndarray, apply_alignment: bool = True
) -> np.ndarray:
    """Vectorized decoder: (B,d),(B,n) -> raw actions (B,n).

    The stored alignment transform is applied to z first (unless probing the
    raw decoder); unconditioned kinds ignore the state entirely.
    """
    zs = np.atleast_2d(np.asarray(zs, dtype=float))
    if not np.all(np.isfinite(zs)):
        raise NotFiniteError("latent actions must be finite")
    if zs.shape[1] != model.latent_dim:
        raise DimensionError(f"z has width {zs.shape[1]}, model has d={model.latent_dim}")
    if apply_alignment:
        zs = zs @ model.alignment.T
    if model.kind is ModelKind.PCA:
        return (zs * model.pca_code_scale) @ model.pca_components.T + model.pca_mean
    norm = model.normalization
    if model.kind.conditioned:
        states = np.atleast_2d(np.asarray(states, dtype=float))
        if states.shape[1] != model.n:
            raise DimensionError(f"state has width {states.shape[1]}, expected {model.n}")
        if states.shape[0] == 1 and zs.shape[0] > 1:
            states = np.broadcast_to(states, (zs.shape[0], model.n))
        dec_in = np.concatenate([zs, norm.norm_state(states)], axis=1)
    else:
        dec_in = zs
    out = mlp_forward(model.store, "dec", model.mlp_specs()["dec"], Tensor(dec_in)).value
    return norm.denorm_action(out)


def encode(model: TrainedModel, state: JointState, action: JointVelocityAction) -> LatentDistribution:
    """Embed one behavior sample; deterministic (sampling is not part of encode)."""
    mu, sigma = encode_batch(model, state.angles[None, :], action.velocities[None, :])
    return LatentDistribution(mu[0], sigma[0])


def decode(model: TrainedModel, z: LatentAction | np.ndarray, state: JointState) -> JointVelocityAction:
    """Expand one latent action into a joint-velocity action."""
    zv = z.z if isinstance(z, LatentAction) else np.asarray(z, dtype=float)
    out = decode_batch(model, zv[None, :], state.angles[None, :])
    return JointVelocityAction(out[0])


def reconstruction_mse(model: TrainedModel, states: np.ndarray, actions: np.ndarray) -> float:
    """Mean ||a - decode(encode(s,a).mu, s)||^2 in raw action units.

    Encoded codes live in the model's native latent frame, so the round trip
    bypasses the joystick alignment transform.
    """
    mu, _ = encode_batch(model, states, actions)
    a_hat = decode_batch(model, mu, states, apply_alignment=False)
    return float(np.mean(np.sum((a_hat - actions) ** 2, axis=1)))


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def save_model(model: TrainedModel, path) -> None:
    meta = {
        "config": model.config.to_json_dict(),
        "n": model.n,
        "normalization": {
            "state_mean": model.normalization.state_mean.tolist(),
            "state_std": model.normalization.state_std.tolist(),
            "action_mean": model.normalization.action_mean.tolist(),
            "action_std": model.normalization.action_std.tolist(),
        },
        "alignment": model.alignment.tolist(),
        "loss_history": model.loss_history,
        "trained_on": model.trained_on,
    }
    blocks: dict[str, np.ndarray] = {}
    if model.kind is ModelKind.PCA:
        blocks["pca.mean"] = model.pca_mean
        blocks["pca.components"] = model.pca_components
        blocks["pca.code_scale"] = model.pca_code_scale
    else:
        blocks.update(model.store.values())
    payload = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack("<H", MODEL_VERSION))
        f.write(struct.pack("<I", len(payload)))
        f.write(payload)
        f.write(struct.pack("<I", len(blocks)))
        for name in sorted(blocks):
            arr = np.ascontiguousarray(blocks[name], dtype="<f8")
            enc = name.encode()
            f.write(struct.pack("<H", len(enc)))
            f.write(enc)
            f.write(struct.pack("<B", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.tobytes())


def _read_exact(f, count, what):
    buf = f.read(count)
    if len(buf) != count:
        raise FormatError(f"truncated model file while reading {what}")
    return buf


def load_model(path, expect_n: int | None = None) -> TrainedModel:
    with open(path, "rb") as f:
        if f.read(len(MODEL_MAGIC)) != MODEL_MAGIC:
            raise FormatError(f"{path} is not a latact model (bad magic)")
        (version,) = struct.unpack("<H", _read_exact(f, 2, "version"))
        if version != MODEL_VERSION:
            raise VersionError(f"unsupported model version {version}")
        (meta_len,) = struct.unpack("<I", _read_exact(f, 4, "metadata length"))
        meta = json.loads(_read_exact(f, meta_len, "metadata"))
        (n_blocks,) = struct.unpack("<I", _read_exact(f, 4, "block count"))
        blocks = {}
        for _ in range(n_blocks):
            (name_len,) = struct.unpack("<H", _read_exact(f, 2, "block name length"))
            name = _read_exact(f, name_len, "block name").decode()
            (ndim,) = struct.unpack("<B", _read_exact(f, 1, "block rank"))
            shape = struct.unpack(f"<{ndim}I", _read_exact(f, 4 * ndim, "block shape"))
            size = int(np.prod(shape)) if ndim else 1
            blocks[name] = np.frombuffer(
                _read_exact(f, size * 8, f"block {name}"), dtype="<f8"
            ).reshape(shape).copy()
        if f.read(1):
            raise FormatError("trailing bytes after model payload")

    config = ModelConfig.from_json_dict(meta["config"])
    n = int(meta["n"])
    if expect_n is not None and n != expect_n:
        raise DimensionError(f"model has n={n}, expected n={expect_n}")
    nm = meta["normalization"]
    norm = Normalization(
        np.asarray(nm["state_mean"], dtype=float),
        np.asarray(nm["state_std"], dtype=float),
        np.asarray(nm["action_mean"], dtype=float),
        np.asarray(nm["action_std"], dtype=float),
    )
    model = TrainedModel(
        config,
        n=n,
        normalization=norm,
        loss_history=list(meta.get("loss_history", [])),
        trained_on=meta.get("trained_on", ""),
    )
    if config.kind is ModelKind.PCA:
        try:
            model.pca_mean = blocks.pop("pca.mean")
            model.pca_components = blocks.pop("pca.components")
            model.pca_code_scale = blocks.pop("pca.code_scale")
        except KeyError as exc:
            raise ArchitectureError(f"PCA model file missing block {exc}") from exc
        if model.pca_components.shape != (n, config.latent_dim):
            raise ArchitectureError(
                f"component block {model.pca_components.shape} does not match "
                f"(n={n}, d={config.latent_dim})"
            )
    else:
        store = ParamStore()
        specs = model.mlp_specs()
        for prefix in ("enc", "dec"):
            for k, (fan_in, fan_out) in enumerate(specs[prefix].layer_dims):
                for suffix, shape in ((f"W{k}", (fan_in, fan_out)), (f"b{k}", (fan_out,))):
                    name = f"{prefix}.{suffix}"
                    if name not in blocks:
                        raise ArchitectureError(f"model file missing parameter {name}")
                    if blocks[name].shape != shape:
                        raise ArchitectureError(
                            f"parameter {name} has shape {blocks[name].shape}, config implies {shape}"
                        )
                    store.add(name, blocks.pop(name))
        if blocks:
            raise ArchitectureError(f"model file has unexpected blocks {sorted(blocks)}")
        model.store = store
    model.alignment = np.asarray(meta["alignment"], dtype=float)
    return model
