"""Neural cellular automata for exact algorithmic tasks.

Train a tiny shared local kernel on single-step rule transitions, run
quantized relax-and-project inference to a fixed point, and compile the
learned rule into a verified lookup table.
"""

from sead._sead import (  # noqa: F401
    ContractViolation,
    Model,
    NotConvergedError,
    RuleTable,
    SeadError,
    __version__,
    decode,
    encode,
    gen_input,
    global_oracle,
    load,
    load_table,
    oracle_rollout,
    oracle_steps,
    tasks,
    train,
)

__all__ = [
    "ContractViolation",
    "Model",
    "NotConvergedError",
    "RuleTable",
    "SeadError",
    "decode",
    "encode",
    "gen_input",
    "global_oracle",
    "load",
    "load_table",
    "oracle_rollout",
    "oracle_steps",
    "tasks",
    "train",
]
