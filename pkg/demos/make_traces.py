"""Regenerate the bundled synthetic transition traces.

Six current-versus-voltage sweeps at mixing temperatures from 50 to 500
mK, all sharing one lever arm (0.1 eV/V) and one electron base
temperature (0.1 K). Each trace carries its mixing temperature as a
comment so the lever-arm fit can run straight off the files. The noise
seeds are fixed, so the files are reproducible bit for bit.

Run from the repository root:

    python demos/make_traces.py [--out src/wigglewell/data/traces]
"""

import argparse
import json
import math
from pathlib import Path

import numpy as np

from wigglewell import synthesize_transition_trace
from wigglewell.constants import BOLTZMANN_EV_PER_K

LEVER_ARM_EV_PER_V = 0.1
BASE_TEMP_K = 0.1
MIXING_TEMPS_MK = (50, 100, 200, 300, 400, 500)
AMPLITUDE = 1.0
SLOPE = 0.8
OFFSET = 0.1
NOISE_RMS = 0.01
CENTER_V = 0.001
N_POINTS = 301
HALF_SPAN_WIDTHS = 12.0
BASE_SEED = 20260815


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--out", default="src/wigglewell/data/traces", help="output directory"
    )
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    written = []
    for k, t_mk in enumerate(MIXING_TEMPS_MK):
        t_mc = t_mk * 1e-3
        electron_temp = math.hypot(t_mc, BASE_TEMP_K)
        broadening = electron_temp / LEVER_ARM_EV_PER_V
        width_v = 2.0 * BOLTZMANN_EV_PER_K * broadening
        grid = np.linspace(
            CENTER_V - HALF_SPAN_WIDTHS * width_v,
            CENTER_V + HALF_SPAN_WIDTHS * width_v,
            N_POINTS,
        )
        trace = synthesize_transition_trace(
            grid,
            amplitude=AMPLITUDE,
            center_v=CENTER_V,
            broadening_kv_per_ev=broadening,
            slope=SLOPE,
            offset=OFFSET,
            noise_rms=NOISE_RMS,
            seed=BASE_SEED + k,
            mixing_temp_k=t_mc,
        )
        name = f"trace_{t_mk:03d}mK.csv"
        trace.to_csv(out / name)
        written.append(name)
        print(f"wrote {out / name}  (T_MC {t_mc} K, broadening {broadening:.4f} K V/eV)")

    truth = {
        "lever_arm_ev_per_v": LEVER_ARM_EV_PER_V,
        "base_temp_k": BASE_TEMP_K,
        "amplitude": AMPLITUDE,
        "slope": SLOPE,
        "offset": OFFSET,
        "center_v": CENTER_V,
        "noise_rms": NOISE_RMS,
        "base_seed": BASE_SEED,
        "mixing_temps_mk": list(MIXING_TEMPS_MK),
        "files": written,
    }
    with open(out / "truth.json", "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2)
        fh.write("\n")
    print(f"wrote {out / 'truth.json'}")


if __name__ == "__main__":
    main()
