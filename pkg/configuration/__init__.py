"""Package containing the Configuration class for a generic service in the pipeline
and the logging configuration shared by the services."""
from .configuration import Configuration, canonical_json, configuration_hash
from .loggingconfiguration import LoggingConfiguration, initialize_logger, \
    use_logging_configuration, active_logging_configuration
