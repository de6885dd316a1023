from collections import namedtuple

# coverage criterion exponents
default_p = -30.0
default_p_tilde = 30.0

# simulated annealing
default_t0 = 10.0
default_b = 10
default_i_max = 250

# reverse logistic regression
default_tol = 1e-10
default_max_iter = 200
_MAX_STEP_HALVINGS = 60

# samplers and divergences
default_burnin = 400
default_skld_size = 3000
default_scan = "row-major"
_ENUMERATION_MAX_SITES = 20
_NEIGHBOURS_PER_SITE = 4

# spectral variance
default_window = "tukey-hanning"
_MIN_SV_ROWS = 4
_RELIABLE_SV_ROWS = 16
_PINV_RCOND = 1e-12
_SV_DIRECT_MAX_COLUMNS = 16

# stream ids used in seed derivation: (master seed, stream, grid index, slot)
STREAM_STAGE1 = 1
STREAM_STAGE2 = 2
STREAM_SKLD = 3
STREAM_ANNEALING = 4

threads_env_var = "ISF_THREADS"

SamplerConfig = namedtuple(
    "SamplerConfig",
    "stage1_size stage2_size burnin seed threads scan",
    defaults=(2000, 2000, default_burnin, 0, 1, default_scan),
)
Split = namedtuple("Split", "stage1 stage2")
