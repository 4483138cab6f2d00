"""Global constants and default tunables for the evaluation pipeline."""

# FMAT binary format
FMAT_MAGIC = b"SPFM"
FMAT_VERSION = 1
FMAT_HEADER_SIZE = 20

# Scaling applied to 16-bit PCM samples
PCM16_SCALE = 1.0 / 32768.0

# Rows below this Euclidean norm are treated as silent
ZERO_NORM_EPS = 1e-12

# kNN conversion
DEFAULT_K = 4
# Source rows per similarity block (bounds memory for large pools)
CONVERT_BLOCK_ROWS = 64

# Prosody analysis
DEFAULT_FRAME_S = 0.04
DEFAULT_HOP_S = 0.01
DEFAULT_FMIN = 60.0
DEFAULT_FMAX = 400.0
YIN_THRESHOLD = 0.15
ENERGY_FLOOR = 1e-10
VOICING_FLOOR_DB = -60.0
PAUSE_OFFSET_DB = 25.0
MIN_PAUSE_S = 0.1
# Largest relative gap between a glottal cycle and the frame F0 around it
CYCLE_TOLERANCE = 0.2

# Distortion analysis
DEGENERATE_STD = 1e-12
MI_NEIGHBORS = 3
MI_JITTER_SCALE = 1e-10

# Privacy protocol
TRIALS_PER_SPEAKER = 20
ENROLLMENTS_PER_SPEAKER = 20
MONOLOGUE_SUFFIXES = ("#a", "#b")

# Utility probe
PROBE_LEARNING_RATE = 0.1
PROBE_ITERATIONS = 500
PROBE_L2 = 1e-3
CV_FOLDS = 5
CV_SEEDS = (0, 1, 2, 3, 4)

# Synthesis
SYNTH_HARMONICS = 5
SYNTH_EDGE_S = 0.01
DEFAULT_SAMPLE_RATE = 16000

# Float formatting used by every CSV report
REPORT_FLOAT_FORMAT = "%.6f"
