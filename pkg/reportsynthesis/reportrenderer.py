"""Module containing the ReportRenderer class turning exam metadata into short synthetic reports."""
import re
from pathlib import Path

from .metadatarecord import slot_formats

TEMPLATE_PATH = Path(__file__).parent / "resources" / "report_template.txt"

_SLOT = re.compile(r"\{(\w+)\}")


class ReportRenderer:
    """Fill the fixed sentence skeletons of the report template with metadata values.

    The template file holds one ``name: skeleton`` line per sentence; ``{field}`` slots are
    replaced by the phrase of the slot format of that field, chosen by whether the field is
    present or missing. The output depends on the record only.

    Attributes:
        sentences (list): (name, skeleton) pairs in template order.
        formats (dict): The slot phrases per field, "default" applying to fields not listed.
        include_birads (bool): Whether the "birads" sentence is rendered.
    """

    def __init__(self, template_path=TEMPLATE_PATH, include_birads=True):
        """Initializer.

        Args:
            template_path (str or Path): The template file.
            include_birads (bool): Whether the BI-RADS sentence is part of the report.

        Raises:
            OSError: If the template cannot be read.
            ValueError: If a template line is not of the form "name: skeleton".
        """
        self.sentences = []
        with open(template_path, 'r') as template_file:
            for line in template_file:
                line = line.strip()
                if not line:
                    continue
                name, separator, skeleton = line.partition(":")
                if not separator or not skeleton.strip():
                    raise ValueError("Malformed template line: " + repr(line))
                self.sentences.append((name.strip(), skeleton.strip()))
        self.formats = slot_formats()
        self.include_birads = include_birads

    def slot_phrase(self, field, value):
        """Return the words a slot renders for a field value (None = missing)."""
        phrases = self.formats.get(field, self.formats["default"])
        if value is None:
            return phrases["missing"]
        return phrases["present"].format(value=str(value).lower())

    def render(self, record):
        """Render the report of one record.

        Args:
            record (MetadataRecord): A validated record.

        Returns:
            str: The lowercase report, words separated by single spaces.
        """
        sentences = []
        for name, skeleton in self.sentences:
            if name == "birads" and not self.include_birads:
                continue
            sentences.append(_SLOT.sub(lambda match: self.slot_phrase(
                match.group(1), getattr(record, match.group(1))), skeleton))
        return " ".join(" ".join(sentences).lower().split())

    def lexicon(self):
        """Return the fixed text of the template and of the slot phrases, slots removed.

        Returns:
            list: Strings whose tokens every report may contain besides field values.
        """
        texts = [_SLOT.sub(" ", skeleton) for _, skeleton in self.sentences]
        for phrases in self.formats.values():
            texts.extend(_SLOT.sub(" ", phrase) for phrase in phrases.values())
        return texts


_DEFAULT_RENDERERS = {}


def render_report(record, include_birads=True):
    """Render a record with the packaged template.

    Raises:
        MetadataValidationError: If the record holds an out-of-domain value.
    """
    record.validate()
    if include_birads not in _DEFAULT_RENDERERS:
        _DEFAULT_RENDERERS[include_birads] = ReportRenderer(include_birads=include_birads)
    return _DEFAULT_RENDERERS[include_birads].render(record)
