"""Linear-time gathering of closed robot chains on the grid, simulated in FSYNC."""
from .chain import (ClosedChain, LocalView, Position, apply_moves, build_chain,
                    local_view, turn_sequence)
from .generators import random_loop, rectangle, staircase
from .scheduler import (Constants, GatheringReport, SimState, constants_profile,
                        run_to_gathering, step_phase)

__version__ = "0.1.0"

__all__ = ["ClosedChain", "Constants", "GatheringReport", "LocalView", "Position", "SimState",
           "apply_moves", "build_chain", "constants_profile", "local_view", "random_loop",
           "rectangle", "run_to_gathering", "staircase", "step_phase", "turn_sequence",
           "__version__"]
