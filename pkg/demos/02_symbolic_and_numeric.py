# %% [markdown]
# # Symbolic and numeric answers
#
# Expression answers are compared by tree edit distance and by algebraic
# equivalence. Numeric answers are scored by their relative dispersion.

# %%
from scv.numeric import sc_numerical
from scv.symbolic import algebraic_equivalence, parse_expr, tree_edit_distance

pairs = [
    ("x^2+2x+1", "(x+1)^2"),
    ("(a-b)(c-d)", "ac-ad-bc-bd"),
    ("(x^2-1)/(x-1)", "x+1"),
    ("(x^2-1)/(x-1)", "x"),
]
for a, b in pairs:
    ea, eb = parse_expr(a), parse_expr(b)
    print(f"{a:>16} vs {b:<12} ted={tree_edit_distance(ea, eb):2d}  {algebraic_equivalence(ea, eb).value}")

# %% [markdown]
# The quotient agrees with `x+1` everywhere except at `x=1`, where it is
# undefined, hence the domain caveat. Against plain `x` the two sides differ
# at every admissible point.

# %%
for values in ([9.0, 9.0, 8.999999, 9.2], [9.0, 9.0, 9.0], [-1.0, 3.0]):
    s = sc_numerical(values)
    print(values, f"mu={s.mean:.4f} sigma={s.std:.4f} score={s.score:.4f}")
