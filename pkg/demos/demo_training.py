"""Train the five embedding models on a small Sine dataset and compare
reconstruction error (percent of the PCA baseline)."""

from latact.datagen import TaskSpec, generate
from latact.models import ModelConfig, ModelKind, reconstruction_mse, train

dataset = generate(TaskSpec.defaults("sine", seed=0, target_pair_count=4000))
train_ds, test_ds = dataset.split_trajectories(0.2, seed=0)

pca = train(ModelConfig(ModelKind.PCA, 1), train_ds)
baseline = reconstruction_mse(pca, test_ds.states, test_ds.actions)
print(f"PCA test MSE {baseline:.5f} (100%)")

for kind in ("ae", "vae", "cae", "cvae"):
    model = train(ModelConfig(ModelKind(kind), 1, epochs=60, seed=0), train_ds)
    mse = reconstruction_mse(model, test_ds.states, test_ds.actions)
    print(f"{kind:5s} test MSE {mse:.5f} ({100 * mse / baseline:.1f}% of PCA), "
          f"loss {model.loss_history[0]:.3f} -> {model.loss_history[-1]:.4f}")
