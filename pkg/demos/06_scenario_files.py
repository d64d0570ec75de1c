"""Scenario files: the batch interface behind the orbitkit CLI.

Run:  python3 demos/06_scenario_files.py      (writes demo_scenario.out/)

Equivalent shell usage:
    orbitkit check demo.okit
    orbitkit run demo.okit --out demo_scenario.out --seed 42
"""

from pathlib import Path

from orbitkit.cli import run_scenario
from orbitkit.scenario import parse_scenario

TEXT = """\
version 1
family {
  builtin grushin {
    radius 9
  }
}
lb {
  order 2
}
defaults {
  tol 1e-09
  seed 42
}
command verdict {
  point 0 0
  k-max 3
}
command bracket-chain {
  point 0 1
  k-max 2
}
command orbit-sample {
  point 0 0
  budget 500
  max-word-len 8
  exploration-radius 1.0
  out grushin_cloud.txt
  spot-check on
}
"""

scenario = parse_scenario(TEXT)
print("scenario validates; canonical form round-trips byte-identically:",
      scenario.emit() == parse_scenario(scenario.emit()).emit())

out = Path("demo_scenario.out")
code = run_scenario(scenario, out)
print(f"exit code {code}; wrote:")
for p in sorted(out.iterdir()):
    print(f"  {p}")
print()
print((out / "report-01-verdict.txt").read_text())
