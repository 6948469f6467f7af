# %% [markdown]
# # Scoring a handful of sampled proofs
#
# Four sampled proofs of the same small claim are scored at the statement,
# edge, graph and answer levels. Three of them agree; the fourth takes a
# wrong step and ends on a different answer. The low scores should single it out.

# %%
from pathlib import Path

from scv import full_report, parse_trace_set, verify

DATA = Path(__file__).resolve().parent / "data"
traces = parse_trace_set((DATA / "theorem.json").read_bytes())
print(f"{traces.k} traces for: {traces.query}")

# %% [markdown]
# Statement scores are the fraction of traces that contain a member of each
# equivalence class. Statements below the flag threshold are candidate
# hallucinations.

# %%
report = full_report(traces)
for rep, score in sorted(report.per_statement.items(), key=lambda kv: kv[1]):
    text = report.alignment.representative_statement(rep).text
    mark = "  <- flagged" if rep in report.flagged else ""
    print(f"{score:.2f}  {text}{mark}")

# %% [markdown]
# Graph agreement (psi), answer agreement (phi) and their blend (lambda).

# %%
print(f"psi={report.global_:.3f} phi={report.entropy:.3f} lambda={report.combined:.3f}")
for t in traces.traces:
    print(t.trace_id, f"mean statement score {report.mean_atomic(t):.2f}")

# %% [markdown]
# `verify` adds the block for the declared domain. For proofs this combines
# structural consistency with a step-soundness check.

# %%
summary, _ = verify(traces)
print({k: round(v, 3) if isinstance(v, float) else v for k, v in summary["theorem"].items() if k != "steps"})
