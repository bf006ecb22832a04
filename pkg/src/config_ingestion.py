"""Config Ingestion Module - Loads and validates JSON network files"""

import json
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveInt, ValidationError, model_validator
from rich.console import Console

from src.errors import ConfigError
from src.network_model import (Channel, DiscreteChannel, GaussianChannel, Message, MessageLabel, NetworkTopology,
                               validate_topology)

console = Console(stderr=True)


class MessageModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str = Field(min_length=1)
    delta: Optional[List[PositiveInt]] = None
    nabla: Optional[List[PositiveInt]] = None


class DiscreteChannelModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["discrete"]
    input_alphabets: List[PositiveInt] = Field(min_length=1)
    output_alphabets: List[PositiveInt] = Field(min_length=1)
    transition: List = Field(description="nested array, inputs then outputs, row-major")

    @model_validator(mode="after")
    def check_transition(self):
        try:
            tensor = np.asarray(self.transition, dtype=float)
        except ValueError:
            raise ValueError("transition is not a rectangular numeric array")
        channel = DiscreteChannel(tuple(self.input_alphabets), tuple(self.output_alphabets), tensor)
        problems = channel.slice_problems()
        if problems:
            raise ValueError("; ".join(problems[:5]))
        return self

    def build(self) -> DiscreteChannel:
        return DiscreteChannel(tuple(self.input_alphabets), tuple(self.output_alphabets),
                               np.asarray(self.transition, dtype=float))


class GaussianChannelModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["gaussian"]
    gains: List[List[float]] = Field(min_length=1)
    powers: List[NonNegativeFloat] = Field(min_length=1)

    @model_validator(mode="after")
    def check_gains(self):
        widths = {len(row) for row in self.gains}
        if len(widths) != 1:
            raise ValueError("gain rows have different lengths")
        if widths.pop() != len(self.powers):
            raise ValueError(f"gain rows need one entry per transmitter ({len(self.powers)} powers)")
        if not np.all(np.isfinite(self.gains)):
            raise ValueError("gains must be finite")
        return self

    def build(self) -> GaussianChannel:
        return GaussianChannel(np.asarray(self.gains, dtype=float), np.asarray(self.powers, dtype=float))


ChannelModel = Annotated[Union[DiscreteChannelModel, GaussianChannelModel], Field(discriminator="kind")]


class NetworkFile(BaseModel):
    """Network document: topology, optional knowledge/demand sets and the channel"""

    model_config = ConfigDict(extra="forbid")

    name: Optional[str] = None
    transmitters: PositiveInt
    receivers: PositiveInt
    messages: List[MessageModel] = Field(min_length=1)
    knowledge: Optional[Dict[str, List[str]]] = None
    demands: Optional[Dict[str, List[str]]] = None
    channel: Optional[ChannelModel] = None


def _holders(table: Optional[Dict[str, List[str]]], message_id: str, what: str) -> List[int]:
    if table is None:
        raise ConfigError(f"message {message_id} has no {what} and the file gives no table to rebuild it from")
    out = []
    for key, ids in table.items():
        try:
            index = int(key)
        except ValueError:
            raise ConfigError(f"'{key}' is not a node index")
        if message_id in ids:
            out.append(index)
    return sorted(out)


class NetworkIngester:
    """Loads a network file into a topology and a channel"""

    def __init__(self, path: str, quiet: bool = False):
        """
        Initialize network ingester

        Args:
            path: Path to the JSON network file
            quiet: Suppress console output
        """
        self.path = Path(path)
        self.quiet = quiet
        self.document: Optional[NetworkFile] = None

    def read(self) -> NetworkFile:
        if not self.path.is_file():
            raise ConfigError(f"network file not found: {self.path}")
        try:
            raw = json.loads(self.path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed JSON in {self.path.name}: {e}")
        try:
            self.document = NetworkFile.model_validate(raw)
        except ValidationError as e:
            details = [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]
            raise ConfigError(f"schema error in {self.path.name}", details)
        return self.document

    def topology(self) -> NetworkTopology:
        doc = self.document or self.read()
        messages = []
        for m in doc.messages:
            delta = m.delta if m.delta is not None else _holders(doc.knowledge, m.id, "delta")
            nabla = m.nabla if m.nabla is not None else _holders(doc.demands, m.id, "nabla")
            messages.append(Message(m.id, MessageLabel.of(delta, nabla)))
        return NetworkTopology(doc.transmitters, doc.receivers, tuple(messages))

    def load(self) -> Tuple[NetworkTopology, Optional[Channel]]:
        topology = self.topology()
        channel = self.document.channel.build() if self.document.channel is not None else None
        result = validate_topology(topology, channel)
        if not result.ok:
            raise ConfigError(f"network {self.path.name} fails validation", result.violations)
        if not self.quiet:
            kind = channel.kind if channel is not None else "no"
            console.print(f"[green]✓[/green] Loaded {self.path.name} ({topology.k1} transmitters, "
                          f"{topology.k2} receivers, {len(topology.messages)} messages, {kind} channel)")
        return topology, channel


def parse_config(path: str, quiet: bool = True) -> Tuple[NetworkTopology, Optional[Channel]]:
    return NetworkIngester(path, quiet).load()


def dump_network(topology: NetworkTopology, channel: Optional[Channel] = None) -> Dict:
    """JSON document of a parsed network; parsing it back yields the same network"""
    doc = {
        "transmitters": topology.k1,
        "receivers": topology.k2,
        "messages": [
            {"id": m.id, "delta": sorted(m.label.delta), "nabla": sorted(m.label.nabla)}
            for m in topology.messages
        ],
    }
    if isinstance(channel, DiscreteChannel):
        doc["channel"] = {
            "kind": "discrete",
            "input_alphabets": list(channel.input_alphabets),
            "output_alphabets": list(channel.output_alphabets),
            "transition": channel.transition.tolist(),
        }
    elif isinstance(channel, GaussianChannel):
        doc["channel"] = {"kind": "gaussian", "gains": channel.gains.tolist(), "powers": channel.powers.tolist()}
    return doc
