from faircut.solvers.auxcut import AuxCut
from faircut.solvers.demfair import DemFair
from faircut.solvers.indfair import IndFair
from faircut.solvers.sbmincc import SBMinCC
