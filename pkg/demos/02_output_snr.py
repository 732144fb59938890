"""
What the AGC does to SNR.

In equilibrium the output SNR is (m-1) SNR_i / (m + SNR_i): it follows the
input while SNR_i << m and saturates at m - 1 above. Below p_l the VGA is
stuck at g_max and its own noise p_a eats into weak signals, which is why a
larger g_max helps at long range.
"""

import numpy as np

from vlc_agc import agc_static, channel, frontend, reference_system
from vlc_agc.units import db, from_db

print("SNR_o [dB] for each AGC index m (rows) and input SNR (columns)")
snr_i_db = np.array([0, 10, 20, 30, 40, 50, 60, 70])
print("m [dB] " + "".join(f"{x:7d}" for x in snr_i_db))
for m_db in (0, 10, 20, 30, 40):
    with np.errstate(divide="ignore"):
        row = db(agc_static.equilibrium_snr(from_db(m_db), from_db(snr_i_db)))
    print(f"{m_db:6d} " + "".join(f"{v:7.2f}" for v in row))

sp = reference_system()
d = np.array([0.5, 2.0, 8.0, 30.0])
h = channel.channel_gain_array(sp.channel, d, 0.0, 0.0)
res = agc_static.gmax_sweep(sp.tx, sp.det, [from_db(25), from_db(40)], 48.0, h)
print("\nSNR loss through the AGC, reference front end")
print("g_max   distance  SNR_i [dB]  SNR_o [dB]  loss [dB]  region")
for i in range(res["h"].size):
    loss = db(res["snr_i"][i]) - db(res["snr_o"][i])
    print(f"{db(res['g_max'][i]):4.0f} dB {d[i % d.size]:7.1f} m  {db(res['snr_i'][i]):10.2f}  "
          f"{db(res['snr_o'][i]):10.2f}  {loss:9.3f}  {res['region'][i]}")
floor = frontend.noise_floor(sp.det)
print(f"\np_a over the front-end noise floor: {db(sp.agc.agc_noise_power / floor):.1f} dB; "
      "g_max should sit well above it.")
