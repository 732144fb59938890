"""
A transmitter on a rail, a receiver that tracks it.

The receiver points at where the transmitter was 0.6 s ago. At 0.25 m/s
that is a couple of degrees off and the windowed BER matches a stationary
benchmark. At 1 m/s the pointing error outgrows the 10 degree field of
view and the link drops out. The AGC loop follows the power throughout.
"""

from vlc_agc import scenario, tracking_platform
from vlc_agc.scenario import TrajectoryConfig
from vlc_agc.units import db, dbm

sp = tracking_platform()
for speed in (0.25, 1.0):
    traj = TrajectoryConfig(speed=speed, tracking_mode="lag", lag_delay=0.6)
    duration = traj.period / 2
    res = scenario.run_mobile_sim(sp, "loop", traj, duration, duration / 8, seed=0)
    bench = scenario.static_benchmark(sp, "static", res.rail_position, 200_000, seed=0,
                                      trajectory=traj)
    print(f"\n{speed} m/s, one pass along the rail")
    print("  pos [m]  p_x [dBm]  gain [dB]  BER moving   BER static")
    for k in range(res.time.size):
        print(f"  {res.rail_position[k]:7.3f}  {dbm(res.input_power[k]):9.2f}  "
              f"{db(res.applied_gain[k]):9.2f}  {res.windowed_ber[k].ber:10.3e}  "
              f"{bench['ber'][k].ber:10.3e}")
