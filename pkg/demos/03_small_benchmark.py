"""
A small paired benchmark
========================

"""

# Every estimator sees the same simulated datasets.  Errors are summarised by
# their median over replications, as in the full study; this run is a scaled
# down version that finishes in a few minutes.
import tempfile
from pathlib import Path

from robust_bayes.bench import ExperimentPlan, emit_report, run_benchmark

plan = ExperimentPlan(n_list=(200,), kappa_list=(0.1, 0.3, 0.5), replications=5,
                      gibbs_iterations=(500, 1000), seed=1)
print("columns:", plan.columns)

result = run_benchmark(plan, progress=lambda cell: print(
    f"  kappa={cell[0].kappa:g} replication {cell[0].replication} done"))

out = Path(tempfile.mkdtemp(prefix="rb_report_"))
emit_report(result, out)
print((out / "errors.txt").read_text())
print((out / "times.txt").read_text())
print("failed fits:", result.failures() or "none")
print("report written to", out)
