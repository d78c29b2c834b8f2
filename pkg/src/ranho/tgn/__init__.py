from .encoder import EncoderConfig, NodeReplay, StepReplay, TemporalGraphEncoder
from .events import (KIND_BS, KIND_UE, EdgeEvent, NodeEvent, SchemaError,
                     build_events, dump_events, load_events)

__all__ = [
    "TemporalGraphEncoder", "EncoderConfig", "StepReplay", "NodeReplay",
    "EdgeEvent", "NodeEvent", "SchemaError", "build_events", "dump_events",
    "load_events", "KIND_UE", "KIND_BS",
]
