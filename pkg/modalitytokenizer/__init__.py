"""Package containing the tokenizers projecting both modalities onto a shared token space."""
from .tokenizer import TokenizerConfig, ModalityTokenizer, VisualTokenizer, EmbeddingTokenizer, \
    TextTokenizer, ContractError, VARIANTS, visual_tokens, embedding_tokens, text_tokens
