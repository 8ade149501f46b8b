"""
PeriodicMetrics - 模型文件读写
JSON 模型与单位球的严格解析（未知字段一律拒绝）
"""

import json
from pathlib import Path
from typing import List, Union

from pydantic import BaseModel, ConfigDict, Field, StrictInt, StrictStr, ValidationError, field_validator

from .errors import ModelError
from .exact import fraction_str, to_fraction
from .periodic_model import Edge, QuotientGraph
from .stable_geometry import StableBall

# ---------------------------------------------------------------------------
# Pydantic models
# ---------------------------------------------------------------------------


def _rational_string(value: str) -> str:
    to_fraction(value)
    return value


class EdgeModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    tail: StrictStr = Field(alias="from")
    head: StrictStr = Field(alias="to")
    length: StrictStr
    voltage: List[StrictInt]

    @field_validator("length")
    @classmethod
    def _check_length(cls, value: str) -> str:
        return _rational_string(value)


class ModelFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rank: StrictInt
    base: StrictStr
    vertices: List[StrictStr]
    edges: List[EdgeModel]


class BallFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rank: StrictInt
    vertices: List[List[StrictStr]]

    @field_validator("vertices")
    @classmethod
    def _check_vertices(cls, value: List[List[str]]) -> List[List[str]]:
        for row in value:
            for entry in row:
                _rational_string(entry)
        return value


# ---------------------------------------------------------------------------
# 商图
# ---------------------------------------------------------------------------

def parse_model(text: str) -> QuotientGraph:
    """
    解析模型 JSON

    Raises:
        ModelError: JSON 语法错误、未知字段、非 p/q 长度
    """
    try:
        data = ModelFile.model_validate_json(text)
    except ValidationError as e:
        raise ModelError(f"模型文件不合法: {e}") from e
    edges = tuple(Edge(e.tail, e.head, to_fraction(e.length), tuple(e.voltage)) for e in data.edges)
    return QuotientGraph(data.rank, tuple(data.vertices), edges, data.base)


def load_model(path: Union[str, Path]) -> QuotientGraph:
    path = Path(path)
    if not path.exists():
        raise ModelError(f"模型文件不存在: {path}")
    return parse_model(path.read_text(encoding="utf-8"))


def model_to_dict(g: QuotientGraph) -> dict:
    return ModelFile(
        rank=g.rank,
        base=g.base_vertex,
        vertices=list(g.vertices),
        edges=[
            EdgeModel(tail=e.tail, head=e.head, length=fraction_str(e.length), voltage=list(e.voltage))
            for e in g.edges
        ],
    ).model_dump(by_alias=True)


def dump_model(g: QuotientGraph) -> str:
    """确定性的 JSON 输出（同一模型逐字节相同）"""
    return json.dumps(model_to_dict(g), indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# 单位球
# ---------------------------------------------------------------------------

def parse_ball(text: str) -> StableBall:
    try:
        data = BallFile.model_validate_json(text)
    except ValidationError as e:
        raise ModelError(f"单位球文件不合法: {e}") from e
    points = [tuple(to_fraction(x) for x in row) for row in data.vertices]
    return StableBall.from_points(points, data.rank)


def dump_ball(ball: StableBall) -> str:
    data = BallFile(rank=ball.rank, vertices=[[fraction_str(x) for x in v] for v in ball.vertices])
    return json.dumps(data.model_dump(), indent=2) + "\n"
