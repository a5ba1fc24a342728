# %% [markdown]
# # Tables and the base-count sweep
#
# The harness caches datasets and runs in a workspace directory. This runs a
# tiny version of Table 3 and the sweep. Use `blocknet table --id 3` for the
# desk-scale version (scale 0.1). At this size every network sits near 50%
# error, so only the plumbing is on show here.

# %%
import tempfile

from blocknet import harness
from blocknet.training import TrainConfig

ws = harness.Workspace(tempfile.mkdtemp(), master_seed=0, test_size=500)
quick = TrainConfig(max_epochs=8, patience=3)

# %%
table = harness.run_table(3, 0.005, ws, repetitions=2, train_config=quick)
for row in table.rows:
    cells = "  ".join(f"{a} {row.cells[a].cell()}{' *' if row.flag(a) else ''}" for a in table.archs)
    print(f"{row.task:12s} {cells}  scratch {row.scratch.cell()}")

# %%
sweep = harness.run_fig3_sweep([1, 3, 5], 3, 0.005, ws, repetitions=2, train_config=quick)
sweep.points()

# %%
paths = harness.emit_report(sweep, f"{ws.root}/fig3.csv")
print(open(paths[1]).read())
