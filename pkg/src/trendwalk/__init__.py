"""Trend sampling with a membership-accept Metropolis-Hastings random walk.

Three candidate generators (Brownian, Illusion spiral, Reservoir) drive a
walk over trending topics collected from a trend source; diagnostics cover
run statistics and the Geweke convergence test.
"""
from ._validation import InvalidInputError, NotFoundError, SourceError
from .diagnostics import (
    CampaignSummary,
    GewekeDiagnostic,
    GewekeResult,
    RunReport,
    degree_chain,
    difference_of_means_z,
    geweke_trace,
    geweke_z,
    summarize,
)
from .generators import (
    BrownianGenerator,
    IllusionGenerator,
    ReservoirGenerator,
    brownian_next,
    illusion_next,
    make_generator,
    mh_acceptance,
    mh_step,
    reservoir_next,
    reservoir_sample,
)
from .graph import EdgeOutcome, GMLParseError, TrendGraph, node_degree, read_gml, write_gml
from .source import (
    COUNTRY_DIRECTORY,
    CountryRef,
    LiveSource,
    ReplaySource,
    SyntheticSource,
    TrendRecord,
    WorldSpec,
    build_graph,
    collect_records,
    scan_woeids,
    select_countries,
)
from .walk import MHRWSampler, Outcome, SampleTrace, WalkConfig, duplicate_count, run_walk, unique_trends

__version__ = "0.1.0"
