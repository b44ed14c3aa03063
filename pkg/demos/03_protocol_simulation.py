"""Does the distributed protocol reach the Gibbs prediction?

Runs the full protocol on five homogeneous nodes: every node adapts its own
multiplier from its virtual battery, with no global coordination. After a
warmup the simulated groupput is compared with T^sigma, each node's average
power draw with its budget, and the gaps between bursts are summarized.

Takes about a minute.

    python demos/03_protocol_simulation.py
"""

import numpy as np

from econcast import NetworkConfig, SimConfig, gradient_descent, latency_report, run_simulation

net = NetworkConfig.homogeneous(5, 10e-6, 500e-6, 500e-6)
sigma = 0.5
target = gradient_descent(net, sigma, keep_trace=False)
print(f"T^sigma = {target.throughput:.5f} at sigma = {sigma}")

cfg = SimConfig(net, sigma, duration=5e5, warmup=5e4, seed=1)
m = run_simulation(cfg)
print(f"simulated groupput {m.groupput:.5f} (ratio {m.groupput / target.throughput:.3f}) over {m.events:,} events")
print("power draw / budget per node:", np.round(m.per_node_energy_rate / net.rho, 4))
print("normalized multipliers:", np.round(m.final_multipliers * 500e-6, 3),
      "vs solved", np.round(target.eta * 500e-6, 3))

lat = latency_report(m)
print(f"\nlatency between bursts: mean {lat.mean:.1f} s, 99th percentile {lat.p99:.1f} s "
      f"({lat.samples} gaps)")
print(f"mean burst: {m.episode_burst_lengths.mean():.2f} packets per episode")
