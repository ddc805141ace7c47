"""
Reference (1 - beta/2)-quantiles of sup_{r in [r_lower, 1]} sqrt(r) G(r).
Obtained from 20,000 simulated paths of 50,000 steps each.
Rows are keyed by r_lower written as a fraction; columns follow BETAS.
"""

BETAS = [0.10, 0.05, 0.01]

R_LOWERS = ["1", "10/11", "5/6", "2/3", "1/2", "1/3", "1/4", "1/5", "1/10", "1/20", "1/50", "1/100"]

REFERENCE_QUANTILES = {
    "1": (1.64, 1.96, 2.56),
    "10/11": (1.87, 2.19, 2.76),
    "5/6": (1.95, 2.27, 2.86),
    "2/3": (2.09, 2.42, 3.01),
    "1/2": (2.22, 2.54, 3.12),
    "1/3": (2.33, 2.66, 3.23),
    "1/4": (2.41, 2.71, 3.27),
    "1/5": (2.46, 2.74, 3.34),
    "1/10": (2.58, 2.85, 3.44),
    "1/20": (2.67, 2.92, 3.51),
    "1/50": (2.75, 3.01, 3.57),
    "1/100": (2.80, 3.08, 3.61),
}

REFERENCE_N_SIMS = 20000
REFERENCE_N_STEPS = 50000

# Defaults for regenerating the table
DEFAULT_N_SIMS = 20000
DEFAULT_N_STEPS = 50000
MIN_N_SIMS = 1000
