"""Independent oracle for the terminal signal-retention coefficient of the
default noising schedule (T=1000, betas linear 1e-4 -> 0.02).

Computes prod(1 - beta_t) in log space with log1p, avoiding the cumprod the
library uses, so the two implementations can disagree.
"""

import math

T = 1000
BETA_START = 1e-4
BETA_END = 0.02

if __name__ == "__main__":
    log_ab = 0.0
    for i in range(T):
        beta = BETA_START + (BETA_END - BETA_START) * i / (T - 1)
        log_ab += math.log1p(-beta)
    ab_T = math.exp(log_ab)
    print(f"alpha_bar[T] = {ab_T!r}")
    print(f"< 1e-4: {ab_T < 1e-4}")
