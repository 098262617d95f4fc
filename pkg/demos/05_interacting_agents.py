"""Interacting agents: interaction strength shapes the tail exponent.

Each agent grows multiplicatively and interacts with the population mean
through redistribution and competition terms. With interactions off the
size distribution stays lognormal; with them on it develops a power-law
upper tail whose fitted exponent falls as the injected shock scale rises.
The sweep at the end reproduces that monotone response.
"""

import numpy as np

from gbmtails import HiaParams, run_hia, run_sweep

control = HiaParams(
    n_agents=1500, noise_std=0.3, drift=0.0, coupling_in=0.0,
    coupling_out=0.0, steps=300, floor=1e-6,
)
_, eff_alpha, report = run_hia(control, seed=3)
print(f"decoupled control: effective_alpha={eff_alpha:.4f} preferred={report.preferred}")

coupled = HiaParams(
    n_agents=1500, noise_std=0.5, drift=0.0, coupling_in=0.1,
    coupling_out=0.1, steps=300, floor=1e-6,
)
_, eff_alpha, report = run_hia(coupled, seed=3)
print(f"coupled run:       effective_alpha={eff_alpha:.4f} preferred={report.preferred}")

base = HiaParams(
    n_agents=1000, noise_std=0.3, drift=0.0, coupling_in=0.1,
    coupling_out=0.1, steps=300, floor=1e-6,
)
result = run_sweep(base, "noise_std", np.linspace(0.05, 0.8, 6), n_seeds=2, master_seed=7)
print(f"\nsweep over noise_std (rank correlation with fitted m1: "
      f"{result.spearman_rho:+.3f})")
print(f"{'noise_std':>10} {'eff_alpha':>10} {'m1_hat':>8} preferred")
for p in result.points:
    print(f"{p.noise_std:10.3f} {p.effective_alpha:10.3f} {p.m1_hat:8.3f} {p.preferred_model}")
