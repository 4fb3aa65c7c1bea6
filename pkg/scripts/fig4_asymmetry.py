"""AT component near the control detuning for delta = -50 and +50, full against Lambda."""
import numpy as np

from _common import parser, pyplot, read_csv, run
from ramanmem import CESIUM_D1, ControlField, dispersion_swing, find_at_resonances, scan_spectrum


def main():
    args = parser(__doc__, "fig4").parse_args()
    _, out = run("fig4", args)
    curves = {}
    for det in (-50, 50):
        for model in ("full", "lambda"):
            curves[det, model] = read_csv(out / f"spectrum_D{det:+g}_{model}.csv")
        ctl = ControlField.for_atom(CESIUM_D1, det, 15.0)
        line = {}
        for model in ("full", "lambda"):
            sp = scan_spectrum(CESIUM_D1, ctl, curves[det, model]["delta_bar_gamma"], model=model)
            peak = min(find_at_resonances(sp), key=lambda r: abs(r.center - det))
            line[model] = (peak.height, dispersion_swing(sp, peak.center))
        h = line["full"][0] / line["lambda"][0]
        s = line["full"][1] / line["lambda"][1]
        print(f"delta={det:+d}: peak height ratio {h:.7f}, dispersion swing ratio {s:.7f} (full/lambda)")
    if args.no_plot:
        return
    plt = pyplot()
    fig, axes = plt.subplots(2, 2, sharex="col", figsize=(9, 6))
    for col, det in enumerate((-50, 50)):
        for model, style in (("full", "-"), ("lambda", "--")):
            d = curves[det, model]
            x = np.asarray(d["delta_bar_gamma"]) - det
            axes[0, col].plot(x, d["chi_im"], style, label=model)
            axes[1, col].plot(x, d["chi_re"], style)
        axes[0, col].set_title(f"control detuning {det:+d} gamma")
        axes[1, col].set_xlabel("probe detuning - control detuning (gamma)")
    axes[0, 0].set_ylabel("chi''")
    axes[1, 0].set_ylabel("chi'")
    axes[0, 0].legend()
    fig.tight_layout()
    fig.savefig(out / "fig4.png", dpi=150)
    print(f"wrote {out / 'fig4.png'}")


if __name__ == "__main__":
    main()
