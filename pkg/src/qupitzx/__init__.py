"""qupitzx: an exact rewriting engine for the qupit stabiliser ZX-calculus.

The package is organised as a small library:

- `modp`: arithmetic and quadratic-residue predicates in Z_p.
- `cyclo`: the exact cyclotomic field Q(i, omega_p) and matrices over it.
- `diagram`: open multigraphs of spiders with typed edges, JSON/DOT I/O.
- `interp`: the exact matrix semantics, scalars, and the CPM (doubled)
  semantics for diagrams with discards.
- `rules`: the sound rewrite-rule catalogue and the scalar-tracking
  rewrite engine, plus randomised soundness checking.
- `graphstate`: Z_p-weighted graphs, graph states, local scaling and
  local complementation at graph and diagram level.
- `normalize`: single-qupit Clifford normal forms, GS+LC / rGS+LC
  reduction, scalar normal forms and the equality decision procedure.
- `relsem`: the affine co-isotropic relation semantics.
- `cli`: a command-line front end over diagram files.
"""

from .modp import Prime, Zp, prime
from .cyclo import Cyclo, CycloMatrix

__all__ = ["Prime", "Zp", "prime", "Cyclo", "CycloMatrix"]

__version__ = "0.1.0"
