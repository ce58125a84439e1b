"""Module containing the MetadataRecord class, the categorical domains of the exam metadata
and the reading and writing of the metadata CSV file."""
import functools
import json
from dataclasses import dataclass, fields, asdict
from pathlib import Path
from typing import Optional
import numpy
import pandas

DOMAINS_PATH = Path(__file__).parent / "resources" / "categorical_domains.json"

METADATA_COLUMNS = ["exam_id", "image_id", "age", "nationality", "device_manufacturer",
                    "device_model", "institution", "exam_year", "breast_density", "birads",
                    "label_malignancy", "label_calcification"]

INTEGER_RANGES = {"age": (18, 120), "exam_year": (1990, 2100), "birads": (0, 6)}


class MetadataValidationError(ValueError):
    """Raised when a metadata field holds a value outside its domain.

    Attributes:
        field (str): The name of the offending field.
    """

    def __init__(self, field, message):
        super().__init__(field + ": " + message)
        self.field = field


@functools.lru_cache(maxsize=None)
def _load_resource(path=DOMAINS_PATH):
    with open(path, 'r') as domains_file:
        return json.load(domains_file)


def categorical_domains():
    """Return the closed value sets of the categorical fields.

    Returns:
        dict: field name -> list of admissible values.
    """
    return {name: list(values) for name, values in _load_resource()["domains"].items()}


def slot_formats():
    """Return the phrases each report slot renders when its field is present or missing.

    Returns:
        dict: field name (or "default") -> {"present": str, "missing": str}.
    """
    return {name: dict(phrases) for name, phrases in _load_resource()["slot_formats"].items()}


@dataclass(frozen=True)
class MetadataRecord:
    """Tabular covariates of one exam image; None is the missing marker of every field."""
    age: Optional[int] = None
    nationality: Optional[str] = None
    device_manufacturer: Optional[str] = None
    device_model: Optional[str] = None
    institution: Optional[str] = None
    exam_year: Optional[int] = None
    breast_density: Optional[str] = None
    birads: Optional[int] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        """Check every present field against its domain.

        Raises:
            MetadataValidationError: Naming the first field found outside its domain.
        """
        domains = categorical_domains()
        for field in fields(self):
            value = getattr(self, field.name)
            if value is None:
                continue

            if field.name in INTEGER_RANGES:
                if isinstance(value, bool) or not isinstance(value, (int, numpy.integer)):
                    raise MetadataValidationError(field.name, "expected an integer, got " +
                                                  repr(value))
                low, high = INTEGER_RANGES[field.name]
                if not low <= value <= high:
                    raise MetadataValidationError(field.name, str(value) + " outside [" +
                                                  str(low) + ", " + str(high) + "]")
            elif not isinstance(value, str) or value == "":
                raise MetadataValidationError(field.name, "expected a non-empty string, got " +
                                              repr(value))
            elif value not in domains[field.name]:
                raise MetadataValidationError(field.name, repr(value) + " is not one of " +
                                              str(domains[field.name]))

    def missing_fields(self):
        return [field.name for field in fields(self) if getattr(self, field.name) is None]

    def to_row(self):
        """Serialize as CSV cells: integers in decimal, missing as the empty string."""
        return {name: "" if value is None else str(value) for name, value in asdict(self).items()}

    @classmethod
    def from_row(cls, row):
        """Parse the metadata cells of one CSV row (empty cell = missing).

        Args:
            row (Mapping): Column name -> cell text.

        Returns:
            MetadataRecord: The validated record.

        Raises:
            MetadataValidationError: If a cell is not parsable or outside its domain.
        """
        values = {}
        for field in fields(cls):
            cell = row.get(field.name, "")
            cell = "" if cell is None or (isinstance(cell, float) and numpy.isnan(cell)) \
                else str(cell).strip()
            if cell == "":
                values[field.name] = None
            elif field.name in INTEGER_RANGES:
                try:
                    values[field.name] = int(cell)
                except ValueError as error:
                    raise MetadataValidationError(field.name, "not an integer: " +
                                                  repr(cell)) from error
            else:
                values[field.name] = cell
        return cls(**values)


def write_metadata_csv(path, rows):
    """Write the metadata CSV with the fixed header.

    Args:
        path (str or Path): The destination file.
        rows (list): One dict per image holding exam_id, image_id, the record cells and labels.

    Raises:
        OSError: If the file cannot be written.
    """
    frame = pandas.DataFrame(rows, columns=METADATA_COLUMNS)
    frame.to_csv(path, index=False, lineterminator="\n")


def read_metadata_csv(path):
    """Read a metadata CSV into a dataframe of text cells, keeping empty cells empty.

    Raises:
        OSError: If the file cannot be opened.
        ValueError: If a header column is missing.
    """
    frame = pandas.read_csv(path, dtype=str, keep_default_na=False)
    missing = [column for column in METADATA_COLUMNS if column not in frame.columns]
    if missing:
        raise ValueError("Metadata file " + str(path) + " lacks the columns " + str(missing))
    return frame


def records_from_frame(frame):
    """Build the MetadataRecord of every row of a metadata dataframe."""
    return [MetadataRecord.from_row(row) for row in frame.to_dict(orient="records")]
