"""A small convergence study comparing sparse recovery with Monte Carlo.

Prints the median relative errors of the mean and standard deviation for
each sample count. Runs in well under a minute.
"""
import tempfile

from hilbertcs.harness import ExperimentConfig, emit_report, run_experiment, summarize

config = ExperimentConfig(d=6, p=2, K=31, sdof_schedule=[15, 30, 60], trials=4, seed=1,
                          reference_factor=20, output_dir=tempfile.mkdtemp())
result = run_experiment(config)
print(f"reference: {result.reference.method}, m_ref={result.reference.m_ref}")
for row in summarize(result.records):
    print(f"{row['method']:>4} m={row['sdof']:>3}: mean {row['median_rel_err_mean']:.2e}, "
          f"std {row['median_rel_err_std']:.2e}")
paths = emit_report(result.records, config.output_dir, config)
print("written:", ", ".join(str(p) for p in paths.values()))
