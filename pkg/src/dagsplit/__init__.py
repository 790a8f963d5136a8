"""Delay-optimal model splitting for split learning on DAG-shaped networks."""
from .blockwise import abstract_blocks, blockwise_split, intra_block_test
from .delay import NetParams, Partition, training_delay
from .graph import build_split_dag, restructure
from .maxflow import FlowNetwork, max_flow, min_cut
from .oracle import oracle_optimal
from .profile import BlockAnnotation, LayerProfile, ModelProfile, load_profile, validate_profile
from .splitter import SplitDecision, brute_force_linear, optimal_split

__version__ = "0.1.0"
