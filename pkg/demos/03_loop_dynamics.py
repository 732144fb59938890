"""
The feedback loop behind the static model.

An exponential VGA, a true-power detector and an integrator. With a
log-law detector the loop is linear in dB, so every step settles with the
same time constant and reaches 95 % after three of them.
"""

from dataclasses import replace

from vlc_agc import agc_loop, reference_system
from vlc_agc.units import db

agc = reference_system().agc
loop = agc_loop.design_loop(agc, rise_time=1e-3)
print(f"designed tau = {agc_loop.time_constant(loop) * 1e3:.3f} ms")

for step in (3.0, -3.0, 10.0, -10.0):
    r = agc_loop.measure_step_response(loop, step, seed=1)
    print(f"step {step:+5.1f} dB: fitted tau {r.measured_tau * 1e3:.3f} ms, "
          f"t95 {r.t95 * 1e3:.3f} ms, t95/tau {r.t95 / r.measured_tau:.2f}, "
          f"settles at {r.final_db:+.3f} dBm")

print("\nsettled output over the equilibrium range")
for p in (2 * agc.lower_threshold, 1e-6, 1e-4, agc.upper_threshold / 2):
    state = agc_loop.settle(loop, p, seed=2)
    y = agc_loop.settled_output_power(loop, state, p)
    print(f"  input {db(p / 1e-3):7.2f} dBm -> output {db(y / 1e-3):+.4f} dBm")

lin = agc_loop.design_loop(agc, detector_law="linear")
doubled = replace(lin, ref_scale=2.0)
p = 1e-5
y1 = agc_loop.settled_output_power(lin, agc_loop.settle(lin, p, seed=3), p)
y2 = agc_loop.settled_output_power(doubled, agc_loop.settle(doubled, p, seed=3), p)
print(f"\nlinear detector: doubling v_ref raises the output by {db(y2 / y1):.2f} dB")
