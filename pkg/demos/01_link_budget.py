"""
Link budget of the reference receiver.

Walks from geometry to channel gain to front-end powers, then asks the
inverse question: how far away (or how far off axis) can the transmitter
be before the AGC leaves its equilibrium range?
"""

import math

from vlc_agc import agc_static, channel, frontend, reference_system
from vlc_agc.channel import ChannelGeometry
from vlc_agc.units import db, dbm

sp = reference_system()

print("distance  h          p_x [dBm]  SNR_i [dB]  AGC region")
for d in (0.25, 0.5, 1.0, 1.5, 2.0, 3.0):
    h = channel.channel_gain(sp.channel, ChannelGeometry(d))
    pw = frontend.front_end_powers(h, sp.tx, sp.det)
    print(f"{d:6.2f} m  {h:.3e}  {dbm(pw.total_power):9.2f}  {db(pw.input_snr):10.2f}  "
          f"{agc_static.region(sp.agc, pw.total_power).value}")

rep = agc_static.dynamic_range(sp.agc, sp.tx, sp.det)
d_max = channel.distance_for_gain(sp.channel, rep.gain_at_lower)
phi_max = channel.emission_angle_for_gain(sp.channel, rep.gain_at_lower, 1.0)
print(f"\nThe input drops below p_l = {dbm(rep.lower_threshold):.1f} dBm beyond {d_max:.2f} m on axis,")
print(f"or beyond {math.degrees(phi_max):.1f} deg off axis at 1 m with the receiver facing the LED.")
phi_par = channel.emission_angle_for_gain(sp.channel, rep.gain_at_lower, 1.0,
                                          channel.incidence_equals_emission)
print(f"With parallel transmitter and receiver planes the same limit is {math.degrees(phi_par):.1f} deg.")
