"""
Population optima and their worst-group errors
==============================================

Four Gaussian groups (class y, domain d) with a parallelogram of means.
The minority groups (0,T) and (1,S) each carry prior pi0.  We compare the
squared-loss optimum of plain risk minimisation with downsampling,
upweighting and mixup.
"""
import numpy as np

from wgelab import DS, MU, SRM, UW, group_errors, optimal_model, reference_model, wge
from wgelab.model import mahalanobis_norms

m = reference_model()
norms = mahalanobis_norms(m)
print(f"|dd|^2 = {norms.norm_dd_sq:g}, |dc|^2 = {norms.norm_dc_sq:g}, cross term = {norms.cross:.1e}")

# The optimal linear model for each method, and its error on every group
for method in (SRM, DS, UW, MU(1.0)):
    theta = optimal_model(m, method)
    errs = group_errors(theta, m)
    cells = "  ".join(f"{g}: {e:.5f}" for g, e in errs.items())
    print(f"{method.label:6s} w={np.round(theta.w, 4)}  b={theta.b:.4f}  {cells}  WGE={wge(theta, m):.5f}")

# Plain risk minimisation leans on the spurious direction when pi0 is small
for pi0 in (1 / 256, 1 / 64, 1 / 16, 1 / 4):
    mp = m.with_pi0(pi0)
    print(f"pi0={pi0:.4f}  WGE SRM={wge(optimal_model(mp, SRM), mp):.4f}  DS={wge(optimal_model(mp, DS), mp):.4f}")
