from .instance import Tier, Site, Instance, Walk, CollectionEvent
from .results import SolveStatus, SearchLimits, SearchNode, Solution, KmstSolution, SimReport
from .reductions import SingleCostInstance, DtspInstance, DtspSolution
from .experiment import AcoParams, GeneratorConfig, ExperimentConfig, SolverOptions

__all__ = [
    'Tier', 'Site', 'Instance', 'Walk', 'CollectionEvent',
    'SolveStatus', 'SearchLimits', 'SearchNode', 'Solution', 'KmstSolution', 'SimReport',
    'SingleCostInstance', 'DtspInstance', 'DtspSolution',
    'AcoParams', 'GeneratorConfig', 'ExperimentConfig', 'SolverOptions',
]
