"""Evaluate controllability, consistency, and disentanglement on small
datasets (the full-scale numbers live in the acceptance suite)."""

from latact.datagen import TaskSpec, generate
from latact.metrics import (
    MetricConfig,
    consistency_scalability,
    controllability,
    disentanglement_angle,
    sample_state_pairs,
)
from latact.models import ModelConfig, ModelKind, train

config = MetricConfig(controllability_pairs=30, horizon_cap=60, consistency_states=10)

sine = generate(TaskSpec.defaults("sine", seed=0, target_pair_count=4000))
train_ds, test_ds = sine.split_trajectories(0.2, seed=0)
pairs = sample_state_pairs(test_ds, 30, 0)
pca = train(ModelConfig(ModelKind.PCA, 1), train_ds)
cvae = train(ModelConfig(ModelKind.CVAE, 1, epochs=60, seed=0), train_ds)
pca_err = controllability(pca, test_ds, config, state_pairs=pairs)
cvae_err = controllability(cvae, test_ds, config, state_pairs=pairs)
print(f"sine controllability: PCA {pca_err:.4f}, cVAE {cvae_err:.4f} "
      f"({100 * cvae_err / pca_err:.0f}% of PCA)")
print(f"sine consistency R^2: PCA {consistency_scalability(pca, test_ds, config):.3f}, "
      f"cVAE {consistency_scalability(cvae, test_ds, config):.3f}")

circle = generate(TaskSpec.defaults("circle", seed=0, target_pair_count=4000))
ctrain, ctest = circle.split_trajectories(0.2, seed=0)
for kind in ("ae", "cvae"):
    model = train(ModelConfig(ModelKind(kind), 2, epochs=60, seed=0), ctrain)
    mean, sd, _ = disentanglement_angle(model, ctest, config)
    print(f"circle {kind} axis angle: {mean:.0f} +- {sd:.0f} degrees (ideal 90)")
