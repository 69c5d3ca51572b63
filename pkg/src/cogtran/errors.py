"""Exception types raised across the package.

Every error derives from :class:`CogtranError` so the CLI can catch one base
class and report the concrete class name.
"""


class CogtranError(ValueError):
    pass


# phonology
class EmptyForm(CogtranError):
    pass


class BadToken(CogtranError):
    pass


# alignment
class EmptySequence(CogtranError):
    pass


class DegenerateMatrix(CogtranError):
    pass


class DuplicateLanguage(CogtranError):
    pass


# trimming
class TooFewRows(CogtranError):
    pass


class EmptyToken(CogtranError):
    pass


# encoding
class EmptyCorpus(CogtranError):
    pass


class UnknownLanguageToken(CogtranError):
    pass


# model
class WidthExceeded(CogtranError):
    pass


class NoSupervisedPositions(CogtranError):
    pass


# training
class TooFewWords(CogtranError):
    pass


class VocabMismatch(CogtranError):
    pass


class TooFewCognateSets(CogtranError):
    pass


# metrics
class BothEmpty(CogtranError):
    pass


# dataio
class MalformedHeader(CogtranError):
    pass


class RowWidthMismatch(CogtranError):
    pass


class EmptyDataset(CogtranError):
    pass


class ProportionOutOfRange(CogtranError):
    pass


class FetchError(CogtranError):
    pass
