"""Kramers-Kronig residual and absorption sign for a control setting."""
import argparse

import numpy as np

from ramanmem import CESIUM_D1, ControlField, kramers_kronig_real, susceptibility


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--detuning", type=float, default=0.0)
    p.add_argument("--rabi", type=float, default=15.0)
    p.add_argument("--half-span", type=float, default=6000.0, help="half width of the integration grid")
    p.add_argument("--points", type=int, default=1_200_001)
    args = p.parse_args()
    ctl = ControlField.for_atom(CESIUM_D1, args.detuning, args.rabi)
    grid = np.linspace(-args.half_span, args.half_span, args.points)
    for model in ("full", "lambda", "bare"):
        chi = susceptibility(CESIUM_D1, ctl, grid, model=model)
        pts = grid[(grid > -30) & (grid < 290)][::500]
        kk = kramers_kronig_real(grid, chi.imag, pts)
        ref = susceptibility(CESIUM_D1, ctl, pts, model=model).real
        res = np.max(np.abs(kk - ref)) / np.max(np.abs(ref))
        print(f"{model:7s} KK residual {res:.2e}   min chi'' {chi.imag.min():.2e}")


if __name__ == "__main__":
    main()
