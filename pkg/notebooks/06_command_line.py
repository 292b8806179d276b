# %% [markdown]
# # Command-line workflow
#
# The same computations are available from the shell. This script writes a
# small data set to a temporary directory and drives the `ellreg` command.

# %%
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

tmp = Path(tempfile.mkdtemp())
rng = np.random.default_rng(0)
X = rng.standard_normal((40, 5))
y = X @ np.array([1.0, 0.1, -0.1, 0.0, 2.0]) + rng.standard_normal(40)
np.savetxt(tmp / "x.csv", X, delimiter=",")
np.savetxt(tmp / "y.csv", y[:, None], delimiter=",")
np.savetxt(tmp / "H.csv", np.hstack([np.zeros((3, 1)), np.eye(3), np.zeros((3, 1))]), delimiter=",")
np.savetxt(tmp / "h.csv", np.zeros((1, 3)), delimiter=",")
data = ["--x", str(tmp / "x.csv"), "--y", str(tmp / "y.csv"), "--h-matrix", str(tmp / "H.csv"), "--h-vector", str(tmp / "h.csv")]


def ellreg(*args):
    out = subprocess.run([sys.executable, "-m", "ellreg", *args], capture_output=True, text=True)
    print(out.stdout or out.stderr)


# %%
ellreg("fit", *data)

# %%
ellreg("risk", *data, "--family", "t", "--gamma", "5", "--plugin-s2", "--format", "json")

# %%
ellreg("sweep", "--grid", "0,1,4", "--reps", "5000", "--family", "t", "--gamma", "5")
