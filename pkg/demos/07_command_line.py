"""
Driving the sweep from the command line
=======================================

The ``twobit`` command wraps the library: ``run`` executes a configured sweep
and writes CSVs, ``plot`` turns them into SVG figures, ``tomography`` and
``tradeoff`` write their own tables. This script calls the same entry point
in process and writes into ./demo_output.
"""

from pathlib import Path

from twobit import cli

out = Path("demo_output")
cli.main(["run", "--config", "formate_ideal", "--out-dir", str(out / "ideal")])
for figure in cli.FIGURES:
    cli.main(["plot", "--results", str(out / "ideal"), "--figure", figure])
cli.main(["tomography", "--stage", "rho3", "--out-dir", str(out / "tomo")])
cli.main(["tradeoff", "--out-dir", str(out / "tradeoff")])

fits = cli.read_csv(out / "ideal" / "fits.csv")
print("\n mode     t_d(ms)   eps      F_eps    F_delta")
for r in fits:
    print(f" {r['mode']:8s} {r['t_d'] * 1e3:6.1f}  {r['eps']:.4f}  {r['F_eps']:.4f}  {r['F_delta']:.4f}")

# A bad config is reported with exit status 2 rather than a traceback.
bad = out / "bad.json"
bad.write_text('{"system": {"J": -5}}')
print("\nexit status for a bad config:", cli.main(["run", "--config", str(bad), "--out-dir", str(out / "bad")]))
