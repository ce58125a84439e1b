"""Module containing the layered JSON configuration shared by the pipeline services,
and the canonical hash embedded in every output."""
import hashlib
import json
import jsonschema


class Configuration:
    """A flat JSON document built from packaged defaults and optional overlays,
    checked against a JSON schema once every layer is applied.

    Attributes:
        configuration_path (str): The packaged default document; unused when built from `field`.
        schema_path (str): The JSON schema every merged document must satisfy.
        field (dict): The merged document.
    """

    def parse_configuration(self):
        """Read the default document into self.field.

        Raises:
            OSError: If the file cannot be opened.
            JSONDecodeError: If the file is not valid JSON.
        """
        with open(self.configuration_path, "r", encoding="utf-8") as defaults:
            self.field = json.load(defaults)

    def override(self, overrides_path):
        """Replace top-level keys with the ones of a user document (no deep merge).

        Raises:
            OSError: If the file cannot be opened.
            JSONDecodeError: If the file is not valid JSON.
            ValidationError: If the document is not a JSON object.
        """
        with open(overrides_path, "r", encoding="utf-8") as user_file:
            document = json.load(user_file)

        if not isinstance(document, dict):
            raise jsonschema.ValidationError(str(overrides_path) + " does not hold a JSON object")
        self.field.update(document)

    def validate_configuration(self):
        """Check self.field against the schema.

        Raises:
            OSError: If the schema cannot be opened.
            JSONDecodeError: If the schema is not valid JSON.
            ValidationError: If the document violates the schema.
            SchemaError: If the schema itself is malformed.
        """
        with open(self.schema_path, "r", encoding="utf-8") as schema_file:
            schema = json.load(schema_file)

        jsonschema.validate(self.field, schema)

    def __init__(self, configuration_path, schema_path, overrides_path=None, field=None,
                 overrides=None):
        """Initializer; layers apply in order defaults (or field), user file, overrides.

        Args:
            configuration_path (str): The packaged default document.
            schema_path (str): The JSON schema.
            overrides_path (str): Optional user document.
            field (dict): Optional in-memory document replacing the defaults.
            overrides (dict): Optional keys set last (command-line flags).

        Raises:
            OSError, JSONDecodeError, ValidationError, SchemaError: See the methods above.
        """
        self.configuration_path = configuration_path
        self.schema_path = schema_path

        if field is not None:
            self.field = dict(field)
        else:
            self.parse_configuration()
        if overrides_path is not None:
            self.override(overrides_path)
        if overrides:
            self.field.update(overrides)

        self.validate_configuration()


def canonical_json(document):
    """Serialize a JSON document with sorted keys and compact separators."""
    return json.dumps(document, sort_keys=True, separators=(",", ":"))


def configuration_hash(document, version="", ignored_keys=()):
    """SHA-256 hex digest of the canonical JSON of a configuration followed by a version string.

    Args:
        document (dict): The configuration.
        version (str): Appended to the canonical JSON before hashing.
        ignored_keys (iterable): Top-level keys left out, e.g. where inputs and outputs live.
    """
    kept = {key: value for key, value in document.items() if key not in set(ignored_keys)}
    return hashlib.sha256((canonical_json(kept) + version).encode("utf-8")).hexdigest()
