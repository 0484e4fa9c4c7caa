"""Multilayer knowledge diffusion and competence simulator."""

from .competence import CompetenceMatrix, competence_value, expertise_level, organizational_competence
from .domain import KnowledgeDomain, build_domain
from .engine import AgentProfile, EngineParams, ScheduledEvent, Simulation, StepReport
from .network import MultilayerNetwork, build_network, generate_watts_strogatz

__version__ = "0.1.0"

__all__ = [
    "AgentProfile",
    "CompetenceMatrix",
    "EngineParams",
    "KnowledgeDomain",
    "MultilayerNetwork",
    "ScheduledEvent",
    "Simulation",
    "StepReport",
    "build_domain",
    "build_network",
    "competence_value",
    "expertise_level",
    "generate_watts_strogatz",
    "organizational_competence",
]
