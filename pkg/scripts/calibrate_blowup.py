"""Search for blow-up data used by the committed unstable fixtures.

For each (epsilon, amp) candidate, integrate a = -1, b = c = 0, u0 = amp sin x
without shear at 64² and 128², and keep the first pair that blows up on both
grids with detection times within 20%. Then check the same data under a cos(y)
shear of each candidate amplitude in the rescaled form.

    python3 scripts/calibrate_blowup.py
"""

import argparse

from chshear import PhysicalParams, SimState, StepController, TorusGrid, integrate, shear_profile
from chshear.experiments import SingleMode, make_initial_data
from chshear.operators import Form


def blowup_time(eps, amp, n, t_end=1.0):
    grid = TorusGrid(n, n)
    u0 = make_initial_data(SingleMode((1, 0), amp), grid)
    p = PhysicalParams(eps, 1.0, a=-1.0, form=Form.ORIGINAL)
    ctrl = StepController()
    traj = integrate(SimState(0.0, u0), t_end, ctrl, p, shear_profile("none", grid),
                     output_interval=float("inf"), accumulate=False)
    return traj.status.value, traj.t_detect


def suppressed(eps, amp, A, n=64, t_end=100.0):
    grid = TorusGrid(n, n)
    u0 = make_initial_data(SingleMode((1, 0), amp), grid)
    p = PhysicalParams.from_amplitude(eps, A, a=-1.0, form=Form.RESCALED)
    traj = integrate(SimState(0.0, u0), t_end, StepController(), p, shear_profile("cos", grid),
                     output_interval=float("inf"), accumulate=False)
    return traj.status.value, traj.records[-1].l2 / traj.records[0].l2


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-2, 1e-1, 1.0])
    ap.add_argument("--amps", type=float, nargs="+", default=[1.0, 2.0, 4.0])
    ap.add_argument("--shear-amplitudes", type=float, nargs="+", default=[1e2, 1e3, 1e4])
    args = ap.parse_args()

    chosen = None
    for eps in args.eps:
        for amp in args.amps:
            s64, t64 = blowup_time(eps, amp, 64)
            s128, t128 = blowup_time(eps, amp, 128)
            rel = abs(t64 - t128) / t128 if t64 and t128 else float("nan")
            print(f"eps={eps:g} amp={amp:g}: 64² {s64} t={t64}  128² {s128} t={t128}  rel={rel:.3g}")
            if chosen is None and s64 == s128 == "BlowUp" and rel < 0.2:
                chosen = (eps, amp)
    if chosen is None:
        print("no candidate blows up consistently")
        return
    eps, amp = chosen
    print(f"chosen: eps={eps:g} amp={amp:g}")
    for A in args.shear_amplitudes:
        status, ratio = suppressed(eps, amp, A)
        print(f"  shear A={A:g}: {status}, final/initial L2 = {ratio:.3g}")


if __name__ == "__main__":
    main()
