from .backends import ENGINES, SolverEngine, get_engine, register_engine
from .bnb import solve_mip
from .lpformat import to_lp_text, write_lp
from .model import BINARY, CONTINUOUS, INTEGER, LpModel, MipModel, Relation, SolveResult, Status
from .simplex import solve_lp

__all__ = [
    "BINARY", "CONTINUOUS", "INTEGER", "ENGINES", "LpModel", "MipModel", "Relation",
    "SolveResult", "SolverEngine", "Status", "get_engine", "register_engine",
    "solve_lp", "solve_mip", "to_lp_text", "write_lp",
]
