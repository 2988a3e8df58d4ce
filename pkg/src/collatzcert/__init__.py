"""Lower bound certificates for 3x+1 total stopping times.

Exhaustive pruned-tree search over residue classes proves that infinitely
many integers have trajectories with a prescribed fraction of odd steps;
this package searches for, verifies, and exploits those certificates.
"""

from .certify import (
    Certificate,
    CertificateEntry,
    SweepState,
    Unclosed,
    Violation,
    load_certificate,
    max_alpha_at_level,
    parse_certificate,
    replay_path,
    save_certificate,
    search,
    verify,
    witnesses,
)
from .engine import CheckpointState, load_checkpoint, run, save_checkpoint, stats
from .numth import (
    Residue,
    TrajectoryReport,
    codeword_display,
    codeword_from_display,
    codeword_to_residue,
    inverse_t,
    inverse_t_star_residue,
    t_map,
    trajectory,
)
from .tree import (
    TreeReport,
    count_structures,
    grow_critical,
    grow_integer_tree,
    grow_residue_tree,
    structure_signature,
)

__version__ = "0.1.0"
