"""Series 2: recover unseen inlet temperatures from cavity temperature fields.

Same protocol as the velocity series but over the five-temperature training
grid. The advected scalar is affine in its inlet value, so this series is
the easier of the two; it mainly exercises the wider training set.
"""

from __future__ import annotations

import argparse
import io
import sys
import time
from contextlib import redirect_stdout
from pathlib import Path

from romga import cli


def run_cli(argv: list[str]) -> str:
    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = cli.main(argv)
    if code != 0:
        sys.stderr.write(buffer.getvalue())
        raise SystemExit(code)
    return buffer.getvalue().strip()


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--workdir", default="series2_runs", help="artifact directory")
    parser.add_argument("--targets", default="7.5,17.5,22.5")
    parser.add_argument("--pop", type=int, default=20)
    parser.add_argument("--gens", type=int, default=30)
    parser.add_argument("--seed", type=int, default=3)
    parser.add_argument("--q", type=int, default=30)
    args = parser.parse_args()

    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    targets = [tok.strip() for tok in args.targets.split(",") if tok.strip()]

    print("generating training and target runs")
    run_cli(["datagen", "--preset", "series2-temperature",
             "--target", ",".join(targets), "--out", str(workdir)])
    rom = workdir / "db.rom1"
    print(run_cli(["compress", "--snapshots", str(workdir / "manifest.txt"),
                   "--q", str(args.q), "--out", str(rom)]))

    print()
    print(f"{'theta*':>7} {'recovered':>10} {'miss %':>7} {'genes':>12}"
          f" {'max L2 %':>9} {'time s':>7}")
    for value in targets:
        start = time.perf_counter()
        line = run_cli([
            "optimize", "--rom", str(rom),
            "--target", str(workdir / f"target_{value}.snp1"),
            "--pop", str(args.pop), "--gens", str(args.gens), "--seed", str(args.seed),
            "--out", str(workdir / f"history_{value}.csv"),
        ])
        elapsed = time.perf_counter() - start
        fields = dict(tok.split("=") for tok in line.split())

        pred = workdir / f"pred_{value}.snp1"
        run_cli(["predict", "--rom", str(rom), "--delta", fields["delta"],
                 "--ne-x", fields["ne_x"], "--ne-t", fields["ne_t"],
                 "--m", fields["m"], "--out", str(pred)])
        report_dir = workdir / f"report_{value}"
        report_dir.mkdir(exist_ok=True)
        run_cli(["report", "--predicted", str(pred),
                 "--target", str(workdir / f"target_{value}.snp1"),
                 "--out", str(report_dir)])
        series = (report_dir / "error_series.csv").read_text(encoding="utf-8")
        worst = max(float(r.split(",")[1]) for r in series.splitlines()[1:])

        recovered = float(fields["delta"])
        truth = float(value)
        genes = f"{fields['ne_t']}/{fields['ne_x']}/{fields['m']}"
        print(f"{truth:7.2f} {recovered:10.3f}"
              f" {100 * abs(recovered - truth) / truth:7.2f} {genes:>12}"
              f" {worst:9.3f} {elapsed:7.1f}")
    print(f"\nartifacts in {workdir}/")


if __name__ == "__main__":
    main()
