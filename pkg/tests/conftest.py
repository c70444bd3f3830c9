import os

# The workload is many small per-line eigenproblems and FFTs; letting every
# BLAS pool spawn one worker per core thrashes badly at this problem size.
# Cap the pools before numpy loads (respect explicit user overrides).
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")
