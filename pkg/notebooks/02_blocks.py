# %% [markdown]
# # Block networks over frozen bases
#
# Two small bases are trained on crs_ncrs and ang_crs. A BA-0-10-10 block
# then learns blt_srp from their hidden activations. Three thousand examples
# is far too few for these tasks, so expect errors near chance.

# %%
import numpy as np

from blocknet.block import BaseModel, BlockSpec, block_param_count, compose, train_block
from blocknet.dataset import build_dataset
from blocknet.network import evaluate, mlp, param_count
from blocknet.training import TrainConfig, train

cfg = TrainConfig(max_epochs=15, patience=5)

# %%
bases = []
for k, task in enumerate(["crs_ncrs", "ang_crs"]):
    ds = build_dataset(task, 3000, seed=k)
    net, log = train(mlp((40, 20, 10), seed=k), ds.features(), ds.labels, cfg)
    print(task, "best val error", log.best_val_error_pct)
    bases.append(BaseModel(net, task))

# %% [markdown]
# Parameter counts follow from the wiring alone. Layer 2 reads the bases'
# first hidden layers. Layer 3 reads block layer 2 plus the bases' second
# hidden layers.

# %%
spec = BlockSpec(0, 10, 10)
bn = compose(bases, spec, seed=3)
print({k: l.weights.shape for k, l in bn.trainable_layers().items()})
print(block_param_count(spec, 2, (40, 20, 10)), "block parameters vs", param_count(bases[0].network), "per base")

# %%
train_set = build_dataset("blt_srp", 3000, seed=10)
test_set = build_dataset("blt_srp", 2000, seed=11)
before = bn.base_digests()
bn, log = train_block(bn, train_set.features(), train_set.labels, cfg)
print("block test error", evaluate(bn, test_set.features(), test_set.labels))
print("bases unchanged:", bn.base_digests() == before)

# %%
scratch, _ = train(mlp((40, 20, 10), seed=3), train_set.features(), train_set.labels, cfg)
print("scratch test error", evaluate(scratch, test_set.features(), test_set.labels))
