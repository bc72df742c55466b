"""
Variational quantum solver for the 1D Bratu problem, with classical references.

Modules
=======
qsim          -- statevector simulator (rotations, CNOT, <Z>)
ansatz        -- feature map, layered circuit, parameter-shift gradients
pde           -- trial function, residual, cost and its gradient
optim         -- Adam, training loop, initialisation, multi-start
continuation  -- predictor-corrector sweeps and the bifurcation diagram
classical     -- finite-difference Newton, pseudo arc-length, closed form
cli           -- command-line front end and file output
"""

__version__ = "0.1.0"
