"""Kernel Stein tests for assessing graph generators from a single observed graph."""

from .archive import read_archive, write_archive
from .estimator import ConditionalEstimate, criticize, fit
from .graph import Graph, read_edge_list, write_edge_list
from .kernel import KernelSpec, parse_kernel
from .models import ErgmSpec, bernoulli_sample, check_regime, enumerate_distribution, glauber_sample
from .sources import BernoulliSource, ErgmSource
from .stein import agrasst_resampled, gkss_full
from .testing import TestReport, run_agrasst_test, select_batches

__version__ = "0.1.0"

__all__ = [
    "BernoulliSource",
    "ConditionalEstimate",
    "ErgmSource",
    "ErgmSpec",
    "Graph",
    "KernelSpec",
    "TestReport",
    "agrasst_resampled",
    "bernoulli_sample",
    "check_regime",
    "criticize",
    "enumerate_distribution",
    "fit",
    "gkss_full",
    "glauber_sample",
    "parse_kernel",
    "read_archive",
    "read_edge_list",
    "run_agrasst_test",
    "select_batches",
    "write_archive",
    "write_edge_list",
]
