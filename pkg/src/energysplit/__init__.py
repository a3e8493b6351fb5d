"""Grow small dense networks by energy-aware splitting steepest descent."""
from .data import Dataset, load_csv, synth
from .energy import CostedIndex, SelectionResult, select_exact, select_fractional, split_cost
from .grow import GrowthConfig, StageRecord, Terminated, grow_stage, run
from .linalg import EigenPair, SymMatrix, matvec, sym_eig_min
from .net import (Network, NeuronRef, TrainHyper, apply_split, flops, forward, init_network,
                  loss_and_grads, train_to_plateau)
from .rayleigh import RayleighConfig, rayleigh_descent, rayleigh_quotient
from .splitmat import SplitIndex, splitting_index_exact, splitting_matrix, splitting_matvec

__version__ = "0.1.0"
