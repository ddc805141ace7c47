"""
Interval method tags and the simulation grids of the coverage study.
"""

INDEX_METHODS = ["HN", "HO", "HS"]
QUANTILE_METHODS = ["IN", "IO", "IS"]
METHODS = INDEX_METHODS + QUANTILE_METHODS

METHOD_DESCRIPTIONS = {
    "HN": "naive tail-index interval at the selected k",
    "HO": "honest tail-index interval at the selected k",
    "HS": "k-snooping tail-index interval over [r_lower * k, k]",
    "IN": "naive extreme-quantile interval at the selected k",
    "IO": "honest extreme-quantile interval at the selected k",
    "IS": "k-snooping extreme-quantile interval over [r_lower * k, k]",
}

XI0_VALUES = [1.0, 0.5]
C0_VALUES = [0.0, 0.5, 1.0]
SAMPLE_SIZES = [250, 500, 1000]

FULL_GRID = [
    {"xi0": xi0, "c0": c0, "n": n}
    for xi0 in XI0_VALUES for c0 in C0_VALUES for n in SAMPLE_SIZES
]

DESK_GRID = [
    {"xi0": xi0, "c0": c0, "n": 500}
    for xi0 in XI0_VALUES for c0 in C0_VALUES
]

DEFAULT_P = 0.01
DEFAULT_R_LOWER = "1/2"
DEFAULT_BETA = 0.05
