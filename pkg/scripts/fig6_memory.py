"""Write, store and read back the three carriers; spin waves and retrieved pulses."""
from _common import parser, pyplot, read_csv, run


def main():
    args = parser(__doc__, "fig6").parse_args()
    scalars, out = run("fig6", args)
    for key in sorted(scalars):
        print(f"{key:28s} {scalars[key]:.4f}")
    if args.no_plot:
        return
    plt = pyplot()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for q in (-1, 0, 1):
        t = f"q{q:+d}"
        if not (out / f"sigma_{t}.csv").exists():
            continue
        s = read_csv(out / f"sigma_{t}.csv")
        ax1.plot(s["zeta"], s["abs2"], label=f"mode {q:+d}")
        r = out / f"retrieved_{t}_backward.csv"
        if r.exists():
            d = read_csv(r)
            ax2.plot(d["t_gamma"], d["abs2"], label=f"mode {q:+d}")
    ax1.set_xlabel("z / L")
    ax1.set_ylabel("|sigma|^2")
    ax1.set_yscale("log")
    ax2.set_xlim(0, 40)
    ax2.set_xlabel("t after read-out (1/gamma)")
    ax2.set_ylabel("retrieved |alpha|^2 (backward)")
    ax1.legend()
    fig.tight_layout()
    fig.savefig(out / "fig6.png", dpi=150)
    print(f"wrote {out / 'fig6.png'}")


if __name__ == "__main__":
    main()
