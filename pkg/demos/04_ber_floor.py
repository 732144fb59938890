"""
Monte Carlo BER through the settled AGC.

A small AGC index puts a floor under the BER: no input SNR gets the output
past m - 1. A large index makes the AGC invisible, and the BER matches a
receiver with no AGC at all (same seed, so the noise is shared).
"""

import warnings

from vlc_agc import waveform
from vlc_agc.agc_static import AgcStaticParams
from vlc_agc.units import db, from_db

warnings.simplefilter("ignore", RuntimeWarning)
snr_db = [0, 5, 10, 15, 20, 25, 30, 40]
n_bits = 400_000

low = AgcStaticParams(agc_noise_power=1e-3 / from_db(7.5))
high = AgcStaticParams(agc_noise_power=1e-3 / from_db(43.7))
runs = {
    "m=7.5 dB": waveform.run_ber_experiment([from_db(x) for x in snr_db], n_bits, seed=0, agc=low),
    "m=43.7 dB": waveform.run_ber_experiment([from_db(x) for x in snr_db], n_bits, seed=0, agc=high),
    "no AGC": waveform.run_ber_experiment([from_db(x) for x in snr_db], n_bits, seed=0,
                                         agc_mode="none", amp_noise_power=0.0),
}
print("SNR_i   " + "".join(f"{k:>22s}" for k in runs))
for i, s in enumerate(snr_db):
    cells = [f"{p[i].result.ber:10.2e} ({p[i].analytic_ber:8.2e})" for p in runs.values()]
    print(f"{s:4d} dB " + "".join(f"{c:>22s}" for c in cells))
print("\nmeasured BER with the prediction Q(sqrt(SNR_o)) in brackets")
print(f"floor for m = 7.5 dB: {waveform.analytic_ber_ook(low.agc_index - 1):.4e}")
print(f"SNR_o at SNR_i = 25 dB: {db(runs['m=7.5 dB'][5].snr_o):.2f} dB "
      f"against m - 1 = {db(low.agc_index - 1):.2f} dB")
