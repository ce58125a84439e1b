"""Package containing the conversion of tabular exam metadata into synthetic reports
and the encoding of those reports over a closed vocabulary."""
from .metadatarecord import MetadataRecord, MetadataValidationError, METADATA_COLUMNS, \
    categorical_domains, slot_formats, read_metadata_csv, write_metadata_csv, records_from_frame
from .reportrenderer import ReportRenderer, render_report
from .vocabulary import Vocabulary, build_vocab, report_vocabulary, encode_text, tokenize_text, \
    PAD_ID, UNK_ID
