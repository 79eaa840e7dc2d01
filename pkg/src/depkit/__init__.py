"""depkit: a dependency-parsing toolkit with three decoding paradigms
(sequence-labelling brackets, maximum spanning arborescence, left-to-right
transitions) and a speed/energy Pareto benchmark harness."""

from .bench import (
    EnergyReading,
    MeterConfig,
    ParetoPoint,
    RunRecord,
    SpeedReport,
    build_fronts,
    emit_report,
    macro_average,
    measure_speed,
    meter_energy,
    pareto_front,
)
from .bracket import (
    BracketLabel,
    DecodeResult,
    decode,
    encode,
    label_vocabulary,
    parse_bracket,
)
from .conllu import (
    Sentence,
    Token,
    TreebankStats,
    parse_conllu,
    read_conllu_file,
    treebank_stats,
    write_conllu,
    write_conllu_file,
)
from .errors import (
    AlignmentError,
    ConlluParseError,
    DepkitError,
    MeterError,
    ModelFormatError,
    TreeValidationError,
)
from .evaluate import EvalResult, round_half_up, score
from .model import (
    LinearModel,
    TrainConfig,
    TrainReport,
    load_model,
    parse_corpus,
    parse_sentence,
    save_model,
    train,
)
from .mst import ScoreTable, assign_labels, cle_decode
from .transition import (
    L2RState,
    greedy_parse,
    initial_state,
    oracle_head,
    step,
    valid_heads,
)
from .tree import (
    DepTree,
    TreeValidity,
    Violation,
    enumerate_trees,
    is_projective_arc,
    validate,
)

__version__ = "0.1.0"
