"""
errors.py
Exception hierarchy shared by the lemmed modules
"""


class LemmedError(Exception):
    """Base class for every error raised on purpose by lemmed."""


class CorpusFormatError(LemmedError, ValueError):
    """Malformed corpus input, located by 1-based line number."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        prefix = ""
        if source is not None or line is not None:
            prefix = f"{source or '<input>'}:{line if line is not None else '?'}: "
        super().__init__(prefix + message)


class VocabMismatchError(LemmedError, ValueError):
    pass


class CheckpointError(LemmedError, IOError):
    pass


class MisalignedCorporaError(LemmedError, ValueError):
    """Predicted and gold corpora disagree in shape or surface forms."""

    def __init__(self, message, sentence_index=None, token_index=None):
        self.sentence_index = sentence_index
        self.token_index = token_index
        super().__init__(message)


class NonFiniteError(LemmedError, FloatingPointError):

    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message)


class ConfigError(LemmedError, ValueError):
    pass
