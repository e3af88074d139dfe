from ._core import (
    BranchPoint,
    ConfigError,
    SlowFastSystem,
    SmallBranchPoint,
    SolverError,
    branch_sweep,
    first_integral,
    hausdorff_to_singular,
    hopf_by_eigenvalues,
    hopf_mu,
    layer_eigenvalues,
    periodic_orbit,
    reconstruct_cycle,
    run_cli,
    shilnikov,
    singular_mu,
    slow_manifold,
    solve_connection,
    solve_small_branch,
)

__all__ = [
    "BranchPoint",
    "ConfigError",
    "SlowFastSystem",
    "SmallBranchPoint",
    "SolverError",
    "branch_sweep",
    "first_integral",
    "hausdorff_to_singular",
    "hopf_by_eigenvalues",
    "hopf_mu",
    "layer_eigenvalues",
    "periodic_orbit",
    "reconstruct_cycle",
    "run_cli",
    "shilnikov",
    "singular_mu",
    "slow_manifold",
    "solve_connection",
    "solve_small_branch",
]
