"""Mining association rules that are statistically significant under the independence null."""

from .measures import ContingencyTable, JointDistribution, MeasureReport, UndefinedMeasure, measure_report
from .miner import MineConfig, MiningResult, Rule, mine, score_rule
from .relation import AttributeId, Event, Literal, LoadError, Relation, read_relation
from .significance import SignificanceConfig, assess, t_statistic

__version__ = "0.1.0"

__all__ = [
    "AttributeId", "ContingencyTable", "Event", "JointDistribution", "Literal", "LoadError",
    "MeasureReport", "MineConfig", "MiningResult", "Relation", "Rule", "SignificanceConfig",
    "UndefinedMeasure", "assess", "measure_report", "mine", "read_relation", "score_rule", "t_statistic",
]
