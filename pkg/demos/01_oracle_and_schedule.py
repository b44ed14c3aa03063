"""How much can four energy-starved nodes broadcast, and how do they do it?

Solves the groupput oracle for four nodes that share a 1 mW radio but have
budgets of 5, 10, 50 and 100 uW, then turns the optimal time fractions into
a periodic slot schedule and checks that the schedule delivers the oracle
throughput while respecting every budget.

    python demos/01_oracle_and_schedule.py
"""

import numpy as np

from econcast import NetworkConfig, audit_schedule, build_periodic_schedule, schedule_groupput, solve_groupput_lp

net = NetworkConfig.from_arrays(np.array([5, 10, 50, 100]) * 1e-6, np.full(4, 1e-3), np.full(4, 1e-3))
sol = solve_groupput_lp(net)

print("oracle groupput:", round(sol.throughput, 6))
print("node  awake%  transmit-share%  power/budget")
for i in range(net.n):
    power = sol.alpha[i] * net.listen_cost[i] + sol.beta[i] * net.transmit_cost[i]
    print(f"{i:>4}  {sol.awake[i] * 100:6.2f}  {sol.transmit_share[i] * 100:15.1f}  {power / net.rho[i]:12.4f}")

# rich nodes spend their energy listening to the poor ones; the poorest only talk
sched = build_periodic_schedule(sol, slot_length=1e-3)
print(f"\nperiodic schedule: {sched.period} slots of 1 ms")
print("schedule groupput:", round(schedule_groupput(sched), 6))
print("audit:", audit_schedule(sched, net))
