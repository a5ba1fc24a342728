# %% [markdown]
# # Stimuli
#
# Each task draws exact segment geometry first and renders it afterwards.
# The geometry is what the oracle checks, so a bad image can always be traced
# back to a bad spec.

# %%
import numpy as np

from blocknet.rng import Xoshiro256
from blocknet.stimuli import TASKS, gen_spec, rasterize, verify_spec

rng = Xoshiro256(7)

# %%
def show(img, width=32):
    ramp = " .:-=+*#%@"
    rows = np.asarray(img).reshape(width, width)
    for row in rows:
        print("".join(ramp[min(int(v * len(ramp)), len(ramp) - 1)] for v in row))

# %% [markdown]
# A blunt angle, white on a dark background.

# %%
spec = gen_spec("blt_srp", 0, rng)
while spec.polarity != 0:
    spec = gen_spec("blt_srp", 0, rng)
print(spec.metadata)
show(rasterize(spec, rng))

# %% [markdown]
# The same task with a distractor line, black on light.

# %%
spec = gen_spec("blt_srp_ln", 1, rng)
while spec.polarity != 1:
    spec = gen_spec("blt_srp_ln", 1, rng)
print(len(spec.segments), "segments, angle", round(spec.metadata["angle"], 1))
show(rasterize(spec, rng))

# %% [markdown]
# Every generated spec should pass the oracle. A hand-broken one should not.

# %%
counts = {}
for task in TASKS:
    ok = sum(verify_spec(gen_spec(task, label, rng))[0] for label in (0, 1) for _ in range(500))
    counts[task] = ok
counts

# %%
from dataclasses import replace

from blocknet.geometry import seg

bad = replace(spec, segments=(seg(10, 10, 25, 10), seg(10, 10, 10, 25), spec.segments[-1]))
verify_spec(bad)
