"""Package containing the evaluation of trained checkpoints and the comparison of
aggregators over seeds, with its tables and diagrams."""
from .evaluationservice import EvaluationService, evaluate, restore_model
from .comparisonservice import ComparisonService, Cell, compare, ablation_cells, \
    TABLE_COLUMNS, ABLATION_TOKENS, ABLATION_POOLINGS, ABLATION_TOKENIZERS
from .diagramgenerator import make_comparison_diagram, make_token_count_diagram
