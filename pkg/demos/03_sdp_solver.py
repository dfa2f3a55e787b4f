"""Direct use of the dense primal-dual interior-point SDP solver.

Solves  min y1 + y2  s.t.  [[y1, 1], [1, y2]] >= 0.

The constraint forces y1*y2 >= 1 with y1, y2 > 0, so by AM-GM the optimum
is 2 at y = (1, 1).  We also export the problem in SDPA sparse format.
"""

import numpy as np

from momentsos import LmiBlock, SdpProblem, SolveOptions, export_sdpa, solve

F0 = np.array([[0.0, 1.0], [1.0, 0.0]])
E11 = np.diag([1.0, 0.0])
E22 = np.diag([0.0, 1.0])
block = LmiBlock(F0, [0, 1], np.array([E11, E22]))
prob = SdpProblem(c=[1.0, 1.0], A=np.zeros((0, 2)), b=[], blocks=[block])

sol = solve(prob, SolveOptions(tol_gap=1e-10))
print(f"status     : {sol.status}")
print(f"objective  : {sol.primal_obj:.12f}   (analytic optimum: 2)")
print(f"y          : {np.round(sol.y, 9)}")
print(f"iterations : {sol.iterations}")
print(f"residuals  : primal {sol.residuals[0]:.1e}, "
      f"dual {sol.residuals[1]:.1e}, gap {sol.residuals[2]:.1e}")

print("\nSDPA sparse export:")
print(export_sdpa(prob))
