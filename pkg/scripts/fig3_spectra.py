"""Absorption and dispersion for the full, Lambda and bare models (resonant control)."""
from _common import parser, pyplot, read_csv, run


def main():
    args = parser(__doc__, "fig3").parse_args()
    scalars, out = run("fig3", args)
    print(f"AT resonance {scalars['at_center']:.4f}, EIT shift {scalars['eit_shift']:.4f}, "
          f"residual absorption {scalars['residual_absorption']:.3e}")
    if args.no_plot:
        return
    plt = pyplot()
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    for model in ("full", "lambda", "bare"):
        d = read_csv(out / f"spectrum_{model}.csv")
        ax1.plot(d["delta_bar_gamma"], d["chi_im"], label=model, lw=1)
        ax2.plot(d["delta_bar_gamma"], d["chi_re"], lw=1)
    ax1.set_ylabel("chi''")
    ax2.set_ylabel("chi'")
    ax2.set_xlabel("probe detuning (gamma)")
    ax1.legend()
    fig.tight_layout()
    fig.savefig(out / "fig3.png", dpi=150)
    print(f"wrote {out / 'fig3.png'}")


if __name__ == "__main__":
    main()
