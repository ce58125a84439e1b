"""Package containing the aggregators fusing visual and textual tokens, the shared
classification head and the complete text-guided classifier."""
from modalitytokenizer import ContractError
from .attention import MultiHeadAttention, mha
from .blocks import CoAttentionBlock, CrossAttentionBlock, SelfAttentionBlock, \
    co_attention_block, CROSS_ORDERS
from .aggregator import AggregatorConfig, Aggregator, FusionOutput, aggregate, pool_tokens, \
    KINDS, VISION_ONLY_KINDS, DEFAULT_DEPTH, DEFAULT_HEADS
from .classifier import ClassificationHead, classify
from .model import ModelConfig, TextGuidedClassifier
