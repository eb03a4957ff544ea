"""Exception types shared across the package."""


class CalkitError(Exception):
    """Base class for package errors."""


class SchemaError(CalkitError, ValueError):
    """A file or payload does not match its declared schema."""


class TrainingError(CalkitError, ValueError):
    """The learner cannot be trained from the given examples."""


class RunFormatError(CalkitError, ValueError):
    """A TREC run file or run entry list violates the format invariants."""


class LeaseConflictError(CalkitError):
    """A judgment was submitted for a document leased to another assessor."""


class UnknownTopicError(CalkitError, KeyError):
    """No session exists for the requested topic."""
