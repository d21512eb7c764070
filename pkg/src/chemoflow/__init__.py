"""chemoflow: two-scale numerical laboratory for subdiffusive chemotaxis
in an incompressible moving fluid.

Subpackages
-----------
specfun      Wright / Mainardi / Mittag-Leffler / Beta evaluation.
fracops      L1 discretization of the fractional time derivative.
fields       2D MAC grid, field containers, discrete operators, snapshot IO.
ctrw         Microscale lattice Monte-Carlo engine with heavy-tailed waits.
ks_macro     Macroscale fractional chemotaxis pair solver.
ns_fluid     Incompressible flow via Chorin projection on the MAC grid.
mild_verify  Spectral operator calculus, Picard iteration, existence window.
harness      Config parsing, coupled runs, monitors, experiment recipes, CLI.
"""

__version__ = "0.1.0"
