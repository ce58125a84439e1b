"""Module containing the closed report Vocabulary and the encoding of report text into token ids."""
import re
import numpy

from .metadatarecord import categorical_domains

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_ID = 0
UNK_ID = 1

NUMERALS = [str(digit) for digit in range(10)]

# Letters runs, single digits, or single punctuation marks
_TOKEN = re.compile(r"\d|[a-z]+|[^\sa-z\d]")


def tokenize_text(text):
    """Lowercase a text and split it into words, single digits and punctuation marks."""
    return _TOKEN.findall(text.lower())


class Vocabulary:
    """Bijection between report tokens and integer ids; ids 0 and 1 are PAD and UNK.

    Attributes:
        id_to_token (list): Token of every id.
        token_to_id (dict): Id of every token.
    """

    def __init__(self, tokens):
        self.id_to_token = [PAD_TOKEN, UNK_TOKEN] + list(tokens)
        self.token_to_id = {token: index for index, token in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise ValueError("Vocabulary tokens must be unique")

    def __len__(self):
        return len(self.id_to_token)

    def __contains__(self, token):
        return token in self.token_to_id

    def id_of(self, token):
        return self.token_to_id.get(token, UNK_ID)

    def token_of(self, index):
        return self.id_to_token[index]

    def decode(self, ids):
        """Join the tokens of the non-PAD ids."""
        return " ".join(self.id_to_token[index] for index in ids if index != PAD_ID)


def build_vocab(template_lexicon, domains):
    """Build the vocabulary covering every token a report can contain.

    Args:
        template_lexicon (iterable): The fixed texts of the template (slots removed).
        domains (dict): name -> iterable of values, every value being tokenized like report
            text (numbers split into digits).

    Returns:
        Vocabulary: Ids assigned in sorted token order after the reserved ones.
    """
    tokens = set()
    for text in template_lexicon:
        tokens.update(tokenize_text(text))
    for values in domains.values():
        for value in values:
            tokens.update(tokenize_text(str(value)))
    tokens.discard(PAD_TOKEN)
    tokens.discard(UNK_TOKEN)
    return Vocabulary(sorted(tokens))


def report_vocabulary(renderer):
    """Vocabulary closed over the reports of a renderer: template words, categorical values
    and the ten digits every number is written with."""
    domains = dict(categorical_domains(), numerals=NUMERALS)
    return build_vocab(renderer.lexicon(), domains)


def encode_text(text, vocab, max_len):
    """Encode a text into a fixed-length id sequence.

    Args:
        text (str): The report.
        vocab (Vocabulary): The vocabulary; unknown tokens map to UNK.
        max_len (int): The sequence length L (>= 1); longer texts lose their tail.

    Returns:
        ndarray: The L int64 ids, PAD-filled.
        int: The number of non-PAD positions.
    """
    if max_len < 1:
        raise ValueError("max_len must be at least 1, got " + str(max_len))
    ids = [vocab.id_of(token) for token in tokenize_text(text)][:max_len]
    encoded = numpy.full(max_len, PAD_ID, dtype=numpy.int64)
    encoded[:len(ids)] = ids
    return encoded, len(ids)
