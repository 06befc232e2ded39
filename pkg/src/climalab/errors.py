"""Common exception base for the service layer.

Every module defines its own specific exceptions; they all derive from
ClimalabError so the HTTP layer can map them to error responses uniformly.
"""


class ClimalabError(Exception):
    """Base class for all climalab exceptions."""

    #: HTTP status the API layer should use when this error escapes a handler.
    http_status = 400

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.__class__.__name__)
        self.details = details


class BackendFailure(ClimalabError):
    """A model call failed (timeout, missing fixture, unknown backend)."""

    http_status = 502
