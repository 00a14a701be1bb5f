"""Calibration of the state-space model on seasons simulated from its prior.

Each case draws truth from the prior, simulates 35 weeks, fits the first 25
with the reduced budget (4 chains x 10000, burn-in 2000, thin 5) and checks
whether the 95% intervals for beta and gamma cover the truth.

    python scripts/fit_synthetic.py --cases 20
"""

import argparse
import time

from peakmap.dbssm.experiments import calibration_case


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cases", type=int, default=20)
    ap.add_argument("--start", type=int, default=0)
    args = ap.parse_args()
    t0 = time.perf_counter()
    cov = [0, 0]
    worst = 0.0
    for k in range(args.start, args.start + args.cases):
        c = calibration_case(k)
        p = c.truth.params
        cov[0] += c.covers[0]
        cov[1] += c.covers[1]
        worst = max(worst, c.max_rhat)
        print(f"{k:3d} beta {p.beta:.3f} [{c.beta_ci[0]:.3f}, {c.beta_ci[1]:.3f}]"
              f"  gamma {p.gamma:.3f} [{c.gamma_ci[0]:.3f}, {c.gamma_ci[1]:.3f}]"
              f"  R-hat {c.max_rhat:.3f}  {c.seconds:.0f} s", flush=True)
    print(f"coverage beta {cov[0]}/{args.cases}, gamma {cov[1]}/{args.cases};"
          f" max R-hat {worst:.3f}; {time.perf_counter() - t0:.0f} s")


if __name__ == "__main__":
    main()
