"""|K|(t) for the Broughton family: constant away from 0, a jump at 0."""

from levelcurv.curv import detect_discontinuities, profile
from levelcurv.families import builtin

fam = builtin("broughton")
prof = profile(fam, -1.0, 1.0, 41, ball_radius=50.0)
jumps = detect_discontinuities(prof, k_sigma=5.0, fam=fam)

for t, A, flag in zip(prof.tgrid, prof.absK, (prof.flag_text(i) for i in range(len(prof)))):
    bar = "#" * int(round(4 * A))
    print(f"t={t:+.2f}  |K|={A:7.4f}  {flag:22s} {bar}")
print("confirmed jumps:", jumps)

calm = profile(fam, 0.5, 1.5, 21, ball_radius=50.0)
print("jumps on [0.5, 1.5]:", detect_discontinuities(calm, fam=fam))
