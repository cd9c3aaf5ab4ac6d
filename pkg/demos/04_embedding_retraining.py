"""
Retraining a last layer on saved embeddings
===========================================

The same workflow as with features from a frozen network: write a CSV of
embeddings, refit a linear head with each method, report worst-group
error on held-out rows.  Then add an l1 penalty and watch the lasso fit
return to the unpenalised one as lambda shrinks.
"""
import sys
import tempfile
from pathlib import Path

import numpy as np

from wgelab import fit_lasso, fit_uw, reference_model, sample_dataset
from wgelab.cli import main
from wgelab.io import write_embeddings

m = reference_model()
path = Path(tempfile.mkdtemp()) / "embeddings.csv"
write_embeddings(sample_dataset(m, 50_000, 1), path)

# The CLI prints a table of mean +- std worst-group error over repeats
main(["fit", str(path), "--repeats", "5", "--lambda", "0.001"], stdout=sys.stdout)

# Distance of the UW-weighted lasso to the plain UW fit along a penalty path
ds = sample_dataset(m, 50_000, 2)
plain = fit_uw(ds).model
for lam in (1e-2, 1e-3, 1e-4, 1e-5, 0.0):
    est = fit_lasso(ds, lam, "uw").model
    print(f"lambda={lam:<8g} |theta - theta_UW| = {np.linalg.norm(est.theta - plain.theta):.3e}  w={np.round(est.w, 4)}")
