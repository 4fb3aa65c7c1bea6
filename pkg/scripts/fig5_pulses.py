"""Transmitted signal pulses for the three carriers of the comb."""
from _common import parser, pyplot, read_csv, run, sidecar


def main():
    args = parser(__doc__, "fig5").parse_args()
    scalars, out = run("fig5", args)
    modes = sidecar(out / "summary.json")["scalars"]
    for q in (-1, 0, 1):
        t = f"q{q:+d}"
        if f"delay_{t}" in modes:
            print(f"mode {q:+d}: delay {scalars[f'delay_{t}']:.3f}, transmission {scalars[f'transmission_{t}']:.3f}, "
                  f"tail {scalars[f'tail_{t}']:.3f}")
    if args.no_plot:
        return
    plt = pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    d = read_csv(out / "waveform_input.csv")
    ax.plot(d["t_gamma"], d["abs2"], "k:", label="input")
    for q in (-1, 0, 1):
        path = out / f"waveform_q{q:+d}.csv"
        if path.exists():
            d = read_csv(path)
            ax.plot(d["t_gamma"], d["abs2"], label=f"mode {q:+d}")
    ax.set_xlim(-5, 60)
    ax.set_xlabel("t (1/gamma)")
    ax.set_ylabel("|alpha_out|^2")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "fig5.png", dpi=150)
    print(f"wrote {out / 'fig5.png'}")


if __name__ == "__main__":
    main()
